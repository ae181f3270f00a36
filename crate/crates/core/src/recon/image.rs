use crate::error::{Error, Result};

/// Row-major 2-D signal; 1-D signals use a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("empty image shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty image shape");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut img = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                img.data[r * cols + c] = f(r, c);
            }
        }
        img
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(self.shape(), other.shape()));
        }
        Ok(())
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// `10 log10(peak^2 size / ||reference - estimate||^2)`; `+inf` when equal.
pub fn psnr(reference: &Image, estimate: &Image, peak: f64) -> Result<f64> {
    reference.check_shape(estimate)?;
    if !(peak > 0.0 && peak.is_finite()) {
        return Err(Error::InvalidArgument(format!("peak must be > 0, got {peak}")));
    }
    let err = reference.sub(estimate).norm_sq();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak * reference.len() as f64 / err).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        let r = Image::zeros(1, 4);
        assert_eq!(psnr(&r, &r, 1.0).unwrap(), f64::INFINITY);
        let e = Image::new(1, 4, vec![0.1; 4]).unwrap();
        assert!((psnr(&r, &e, 1.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(
            psnr(&r, &Image::zeros(2, 2), 1.0),
            Err(Error::ShapeMismatch(..))
        ));
    }

    #[test]
    fn psnr_permutation_invariant() {
        let a = Image::new(1, 5, vec![0.1, 0.5, -0.2, 0.9, 0.0]).unwrap();
        let b = Image::new(1, 5, vec![0.0, 0.4, 0.1, 1.0, 0.3]).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let pa = Image::new(1, 5, perm.iter().map(|&i| a.data()[i]).collect()).unwrap();
        let pb = Image::new(1, 5, perm.iter().map(|&i| b.data()[i]).collect()).unwrap();
        let (x, y) = (psnr(&a, &b, 1.0).unwrap(), psnr(&pa, &pb, 1.0).unwrap());
        assert!((x - y).abs() < 1e-12);
    }

    #[test]
    fn construction_checks() {
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(0, 2, vec![]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
    }
}
