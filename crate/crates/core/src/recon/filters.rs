use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::image::Image;
use crate::error::{Error, Result};

/// Tolerance when checking a declared norm bound against power iteration.
pub const NORM_CHECK_TOL: f64 = 1e-6;
const POWER_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Circular,
    /// Half-sample symmetric extension.
    Reflective,
}

impl Boundary {
    fn index(self, i: isize, n: usize) -> usize {
        let n = n as isize;
        match self {
            Boundary::Circular => i.rem_euclid(n) as usize,
            Boundary::Reflective => {
                let p = i.rem_euclid(2 * n);
                (if p >= n { 2 * n - 1 - p } else { p }) as usize
            }
        }
    }
}

/// Small correlation kernel anchored at `(rows / 2, cols / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    taps: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, taps: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || taps.len() != rows * cols {
            return Err(Error::InvalidFilterBank(format!(
                "kernel {rows}x{cols} needs {} taps, got {}",
                rows * cols,
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("kernel taps"));
        }
        Ok(Self { rows, cols, taps })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn l1_norm(&self) -> f64 {
        self.taps.iter().map(|t| t.abs()).sum()
    }

    pub fn apply(&self, x: &Image, boundary: Boundary) -> Image {
        let (nr, nc) = x.shape();
        let (ar, ac) = ((self.rows / 2) as isize, (self.cols / 2) as isize);
        let mut out = Image::zeros(nr, nc);
        let od = out.data_mut();
        for r in 0..nr {
            for c in 0..nc {
                let mut acc = 0.0;
                for a in 0..self.rows {
                    let rr = boundary.index(r as isize + a as isize - ar, nr);
                    for b in 0..self.cols {
                        let cc = boundary.index(c as isize + b as isize - ac, nc);
                        acc += self.taps[a * self.cols + b] * x.get(rr, cc);
                    }
                }
                od[r * nc + c] = acc;
            }
        }
        out
    }

    pub fn adjoint(&self, u: &Image, boundary: Boundary) -> Image {
        let (nr, nc) = u.shape();
        let (ar, ac) = ((self.rows / 2) as isize, (self.cols / 2) as isize);
        let mut out = Image::zeros(nr, nc);
        let od = out.data_mut();
        for r in 0..nr {
            for c in 0..nc {
                let v = u.get(r, c);
                if v == 0.0 {
                    continue;
                }
                for a in 0..self.rows {
                    let rr = boundary.index(r as isize + a as isize - ar, nr);
                    for b in 0..self.cols {
                        let cc = boundary.index(c as isize + b as isize - ac, nc);
                        od[rr * nc + cc] += self.taps[a * self.cols + b] * v;
                    }
                }
            }
        }
        out
    }
}

/// Stacked analysis operator `W = [W_1; ...; W_I]` with a declared bound on
/// its spectral norm, checked by power iteration on a probe shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    filters: Vec<Kernel>,
    boundary: Boundary,
    spectral_norm_bound: f64,
}

impl FilterBank {
    pub fn new(filters: Vec<Kernel>, boundary: Boundary, spectral_norm_bound: f64) -> Result<Self> {
        if filters.is_empty() {
            return Err(Error::InvalidFilterBank("no filters".into()));
        }
        if !(spectral_norm_bound > 0.0 && spectral_norm_bound.is_finite()) {
            return Err(Error::InvalidFilterBank(format!(
                "spectral norm bound must be positive, got {spectral_norm_bound}"
            )));
        }
        let bank = Self {
            filters,
            boundary,
            spectral_norm_bound,
        };
        let estimate = bank.estimate_norm(bank.probe_shape());
        if estimate > spectral_norm_bound + NORM_CHECK_TOL {
            return Err(Error::InvalidFilterBank(format!(
                "declared norm bound {spectral_norm_bound} below power-iteration estimate {estimate}"
            )));
        }
        Ok(bank)
    }

    /// `[-1, 1]` along columns and rows, scaled to unit norm.
    pub fn finite_differences_2d() -> Self {
        let s = 1.0 / 8f64.sqrt();
        let h = Kernel::new(1, 2, vec![-s, s]).unwrap();
        let v = Kernel::new(2, 1, vec![-s, s]).unwrap();
        Self::analytic(vec![h, v])
    }

    /// `[-1, 1]` scaled to unit norm.
    pub fn finite_differences_1d() -> Self {
        let k = Kernel::new(1, 2, vec![-0.5, 0.5]).unwrap();
        Self::analytic(vec![k])
    }

    /// The eight non-constant 3x3 DCT-II atoms scaled to unit norm.
    pub fn dct3x3() -> Self {
        let basis = |k: usize, n: usize| -> f64 {
            let c = if k == 0 { (1.0f64 / 3.0).sqrt() } else { (2.0f64 / 3.0).sqrt() };
            c * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / 6.0).cos()
        };
        let mut filters = Vec::new();
        for p in 0..3 {
            for q in 0..3 {
                if p == 0 && q == 0 {
                    continue;
                }
                let taps = (0..9).map(|i| basis(p, i / 3) * basis(q, i % 3) / 3.0).collect();
                filters.push(Kernel::new(3, 3, taps).unwrap());
            }
        }
        Self::analytic(filters)
    }

    pub fn identity() -> Self {
        Self::analytic(vec![Kernel::new(1, 1, vec![1.0]).unwrap()])
    }

    /// Built-in circular banks with a known unit norm; skips the power check.
    fn analytic(filters: Vec<Kernel>) -> Self {
        Self {
            filters,
            boundary: Boundary::Circular,
            spectral_norm_bound: 1.0,
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.filters.clone(), boundary, self.spectral_norm_bound)
    }

    pub fn filters(&self) -> &[Kernel] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spectral_norm_bound(&self) -> f64 {
        self.spectral_norm_bound
    }

    fn probe_shape(&self) -> (usize, usize) {
        if self.filters.iter().all(|k| k.rows == 1) {
            (1, 48)
        } else {
            (24, 24)
        }
    }

    pub fn apply_channel(&self, i: usize, x: &Image) -> Image {
        self.filters[i].apply(x, self.boundary)
    }

    pub fn adjoint_channel(&self, i: usize, u: &Image) -> Image {
        self.filters[i].adjoint(u, self.boundary)
    }

    pub fn apply(&self, x: &Image) -> Vec<Image> {
        (0..self.len()).map(|i| self.apply_channel(i, x)).collect()
    }

    /// `sum_i W_i^T u_i`
    pub fn adjoint(&self, u: &[Image]) -> Image {
        let mut out = self.adjoint_channel(0, &u[0]);
        for (i, ui) in u.iter().enumerate().skip(1) {
            out.axpy(1.0, &self.adjoint_channel(i, ui));
        }
        out
    }

    /// Power-iteration estimate of `||W||` on images of the given shape.
    pub fn estimate_norm(&self, shape: (usize, usize)) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (r, c) = shape;
        let mut v = Image::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0));
        let mut est = 0.0;
        for _ in 0..POWER_ITERS {
            let n = v.norm_sq().sqrt();
            if n == 0.0 {
                return 0.0;
            }
            v.scale(1.0 / n);
            let w = self.adjoint(&self.apply(&v));
            est = v.dot(&w).max(0.0).sqrt();
            v = w;
        }
        est
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_image(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Image {
        Image::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn adjoint_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for bank in [
            FilterBank::finite_differences_2d(),
            FilterBank::dct3x3(),
            FilterBank::finite_differences_1d(),
        ] {
            for boundary in [Boundary::Circular, Boundary::Reflective] {
                for &(r, c) in &[(7, 9), (1, 13), (2, 2)] {
                    let x = random_image(&mut rng, r, c);
                    for (i, k) in bank.filters().iter().enumerate() {
                        let u = random_image(&mut rng, r, c);
                        let lhs = k.apply(&x, boundary).dot(&u);
                        let rhs = x.dot(&k.adjoint(&u, boundary));
                        assert!((lhs - rhs).abs() < 1e-10, "filter {i} {boundary:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn builtin_norms() {
        // circular finite differences reach the bound at the Nyquist frequency
        let fd = FilterBank::finite_differences_2d();
        assert!((fd.estimate_norm((8, 8)) - 1.0).abs() < 1e-9);
        let fd1 = FilterBank::finite_differences_1d();
        assert!((fd1.estimate_norm((1, 16)) - 1.0).abs() < 1e-9);
        let dct = FilterBank::dct3x3();
        assert!(dct.estimate_norm((12, 12)) <= 1.0 + NORM_CHECK_TOL);
        assert!(dct.estimate_norm((12, 12)) > 0.99);
    }

    #[test]
    fn dct_atoms_are_orthonormal_up_to_scale() {
        let dct = FilterBank::dct3x3();
        for (i, a) in dct.filters().iter().enumerate() {
            let s: f64 = a.taps().iter().sum();
            assert!(s.abs() < 1e-12, "atom {i} has nonzero mean");
            for (j, b) in dct.filters().iter().enumerate() {
                let d: f64 = a.taps().iter().zip(b.taps()).map(|(x, y)| x * y).sum();
                let want = if i == j { 1.0 / 9.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn understated_bound_is_rejected() {
        let k = Kernel::new(1, 2, vec![-1.0, 1.0]).unwrap();
        assert!(matches!(
            FilterBank::new(vec![k.clone()], Boundary::Circular, 1.0),
            Err(Error::InvalidFilterBank(_))
        ));
        assert!(FilterBank::new(vec![k], Boundary::Circular, 2.0).is_ok());
    }

    #[test]
    fn reflective_index() {
        let b = Boundary::Reflective;
        assert_eq!(b.index(-1, 4), 0);
        assert_eq!(b.index(-2, 4), 1);
        assert_eq!(b.index(4, 4), 3);
        assert_eq!(b.index(5, 4), 2);
        assert_eq!(Boundary::Circular.index(-1, 4), 3);
    }
}
