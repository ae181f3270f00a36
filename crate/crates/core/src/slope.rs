//! Divided differences on a nonuniform grid, the mean-preserving slope
//! clipping projector, and slope-based classification of splines.

use crate::error::{Error, Result};
use crate::pwl::{Grid, NodalSpline, SlopeVector};

/// Box `[s_min, s_max]` on the slopes; either side may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeBounds {
    s_min: f64,
    s_max: f64,
}

impl SlopeBounds {
    pub fn new(s_min: f64, s_max: f64) -> Result<Self> {
        if s_min.is_nan() || s_max.is_nan() || !(s_min < s_max) {
            return Err(Error::InvalidBounds(s_min, s_max));
        }
        if s_min == f64::INFINITY || s_max == f64::NEG_INFINITY {
            return Err(Error::InvalidBounds(s_min, s_max));
        }
        Ok(Self { s_min, s_max })
    }

    pub fn unbounded() -> Self {
        Self {
            s_min: f64::NEG_INFINITY,
            s_max: f64::INFINITY,
        }
    }

    /// `[0, +inf)`: nondecreasing.
    pub fn monotone() -> Self {
        Self {
            s_min: 0.0,
            s_max: f64::INFINITY,
        }
    }

    /// `[0, 1]`: firmly non-expansive.
    pub fn firmly_nonexpansive() -> Self {
        Self {
            s_min: 0.0,
            s_max: 1.0,
        }
    }

    /// `[-1, 1]`.
    pub fn one_lipschitz() -> Self {
        Self {
            s_min: -1.0,
            s_max: 1.0,
        }
    }

    /// `[-rho, +inf)`: rho-weakly increasing.
    pub fn weakly_monotone(rho: f64) -> Result<Self> {
        Self::new(-rho, f64::INFINITY)
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn contains(&self, s: f64) -> bool {
        self.s_min <= s && s <= self.s_max
    }

    pub fn clip(&self, s: f64) -> f64 {
        s.clamp(self.s_min, self.s_max)
    }

    /// Largest amount by which any slope leaves the box.
    pub fn violation(&self, slopes: &[f64]) -> f64 {
        slopes
            .iter()
            .map(|&s| (self.s_min - s).max(s - self.s_max).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Matrix-free divided-difference operator `D_t` and its zero-sum right inverse.
#[derive(Debug, Clone, Copy)]
pub struct DividedDifference<'a> {
    grid: &'a Grid,
}

impl<'a> DividedDifference<'a> {
    pub fn new(grid: &'a Grid) -> Self {
        Self { grid }
    }

    pub fn apply(&self, f: &[f64]) -> Result<SlopeVector> {
        let n = self.grid.len();
        if f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: f.len(),
            });
        }
        let seg: Vec<f64> = (0..n - 1)
            .map(|k| (f[k + 1] - f[k]) / self.grid.spacing(k))
            .collect();
        SlopeVector::from_segments(&seg)
    }

    /// `f` with `D_t f == s` and `sum(f) == 0`.
    pub fn apply_right_inverse(&self, s: &SlopeVector) -> Result<Vec<f64>> {
        let n = self.grid.len();
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.len(),
            });
        }
        let sv = s.as_slice();
        if sv[0] != sv[1] {
            return Err(Error::InconsistentSlopeHead(sv[0], sv[1]));
        }
        Ok(integrate_zero_mean(self.grid, &sv[1..]))
    }
}

/// Cumulative sum of `seg[k] * h_k` shifted to zero mean.
pub(crate) fn integrate_zero_mean(grid: &Grid, seg: &[f64]) -> Vec<f64> {
    let mut f = Vec::with_capacity(grid.len());
    f.push(0.0);
    for (k, &s) in seg.iter().enumerate() {
        f.push(f[k] + s * grid.spacing(k));
    }
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    f.iter_mut().for_each(|v| *v -= mean);
    f
}

/// Clips the slopes into `bounds` and rebuilds the nodal values with the
/// original mean. Feasible inputs are returned unchanged.
pub fn project_slopes(spline: &NodalSpline, bounds: &SlopeBounds) -> NodalSpline {
    let seg = spline.segment_slopes();
    if seg.iter().all(|&s| bounds.contains(s)) {
        return spline.clone();
    }
    let clipped: Vec<f64> = seg.iter().map(|&s| bounds.clip(s)).collect();
    let mean = spline.values().iter().sum::<f64>() / spline.len() as f64;
    let mut f = integrate_zero_mean(spline.grid(), &clipped);
    f.iter_mut().for_each(|v| *v += mean);
    spline
        .with_values(f)
        .expect("projected values are finite and sized to the grid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityClass {
    pub nondecreasing: bool,
    pub firmly_nonexpansive: bool,
    pub one_lipschitz: bool,
    pub rho_strong: Option<f64>,
    pub rho_weak: Option<f64>,
}

impl MonotonicityClass {
    pub fn from_slope_range(s_min: f64, s_max: f64) -> Self {
        Self {
            nondecreasing: s_min >= 0.0,
            firmly_nonexpansive: s_min >= 0.0 && s_max <= 1.0,
            one_lipschitz: s_min >= -1.0 && s_max <= 1.0,
            rho_strong: (s_min > 0.0).then_some(s_min),
            rho_weak: (s_min < 0.0).then_some(-s_min),
        }
    }
}

pub fn classify(spline: &NodalSpline) -> MonotonicityClass {
    let (lo, hi) = spline.slope_range();
    MonotonicityClass::from_slope_range(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid3() -> Grid {
        Grid::new(vec![0.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn bounds_validation() {
        assert!(SlopeBounds::new(1.0, 1.0).is_err());
        assert!(SlopeBounds::new(2.0, 1.0).is_err());
        assert!(SlopeBounds::new(f64::NAN, 1.0).is_err());
        assert!(SlopeBounds::new(f64::NEG_INFINITY, f64::INFINITY).is_ok());
        assert!(SlopeBounds::new(f64::INFINITY, f64::INFINITY).is_err());
    }

    #[test]
    fn divided_difference_examples() {
        let g = grid3();
        let d = DividedDifference::new(&g);
        assert_eq!(d.apply(&[1.0, 1.0, 1.0]).unwrap().as_slice(), &[0.0; 3]);
        assert_eq!(d.apply(&[0.0, 2.0, 1.0]).unwrap().as_slice(), &[2.0, 2.0, -1.0]);
        assert!(matches!(
            d.apply(&[0.0, 1.0]),
            Err(Error::LengthMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn right_inverse_examples() {
        let g = grid3();
        let d = DividedDifference::new(&g);
        let z = d.apply_right_inverse(&SlopeVector::new(vec![0.0; 3]).unwrap()).unwrap();
        assert_eq!(z, vec![0.0; 3]);
        let f = d.apply_right_inverse(&SlopeVector::new(vec![1.0; 3]).unwrap()).unwrap();
        assert_eq!(f, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn projection_example() {
        let sp = NodalSpline::new(grid3(), vec![0.0, 2.0, 1.0]).unwrap();
        let p = project_slopes(&sp, &SlopeBounds::firmly_nonexpansive());
        let want = [1.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0];
        for (a, b) in p.values().iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn projection_fixed_points() {
        let st = NodalSpline::new(
            Grid::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap(),
            vec![-1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        assert_eq!(project_slopes(&st, &SlopeBounds::firmly_nonexpansive()), st);
        let wild = NodalSpline::new(grid3(), vec![5.0, -3.0, 8.0]).unwrap();
        assert_eq!(project_slopes(&wild, &SlopeBounds::unbounded()), wild);
    }

    #[test]
    fn classify_examples() {
        let st = NodalSpline::new(
            Grid::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap(),
            vec![-1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let c = classify(&st);
        assert!(c.nondecreasing && c.firmly_nonexpansive && c.one_lipschitz);
        assert_eq!((c.rho_strong, c.rho_weak), (None, None));

        let two_x = NodalSpline::from_fn(grid3(), |x| 2.0 * x).unwrap();
        let c = classify(&two_x);
        assert!(c.nondecreasing && !c.firmly_nonexpansive && !c.one_lipschitz);
        assert_eq!(c.rho_strong, Some(2.0));

        let wk = NodalSpline::new(grid3(), vec![0.0, -0.5, 0.5]).unwrap();
        let c = classify(&wk);
        assert_eq!(c.rho_weak, Some(0.5));
        assert!(c.one_lipschitz && !c.nondecreasing);
    }
}
