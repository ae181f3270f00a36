//! Nonuniform linear splines in nodal form, their ReLU expansion, and general
//! piecewise-linear curves (possibly with jumps) described by ordered points.
//!
//! A [`NodalSpline`] stores values `f_n` at grid nodes `t_n`. The basis is the
//! interpolating one: triangles inside the grid and one-sided linear functions
//! at both ends, so the spline extends linearly beyond `[t_0, t_{N-1}]` and at
//! most two basis functions are active at any point.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Pruning threshold for zero ReLU weights in [`NodalSpline::to_relu_form`].
pub const RELU_PRUNE_TOL: f64 = 1e-12;

/// Collinearity tolerance used when reducing a curve to its minimal point set.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Strictly increasing spline nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    t: Vec<f64>,
}

impl Grid {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(Error::TooShort(t.len()));
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid"));
        }
        for (i, w) in t.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::NonMonotoneGrid {
                    index: i + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        Ok(Self { t })
    }

    /// `n` nodes evenly spaced on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooShort(n));
        }
        let h = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + h * i as f64).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> f64 {
        self.t[0]
    }

    pub fn last(&self) -> f64 {
        self.t[self.t.len() - 1]
    }

    /// `t_{k+1} - t_k`.
    pub fn spacing(&self, k: usize) -> f64 {
        self.t[k + 1] - self.t[k]
    }

    /// Index `k` of the partition cell containing `x`: `(-inf, t_1)` for 0,
    /// `[t_k, t_{k+1})` inside, `[t_{N-2}, +inf)` for the last cell.
    pub fn interval(&self, x: f64) -> usize {
        let p = self.t.partition_point(|&t| t <= x);
        p.saturating_sub(1).min(self.t.len() - 2)
    }

    /// The two active basis functions at `x`: `(k, phi_k(x), phi_{k+1}(x))`.
    pub fn active(&self, x: f64) -> (usize, f64, f64) {
        let k = self.interval(x);
        let h = self.spacing(k);
        let right = (x - self.t[k]) / h;
        let left = (self.t[k + 1] - x) / h;
        (k, left, right)
    }

    /// Value of the `n`-th (0-based) interpolating basis function at `x`.
    pub fn basis(&self, n: usize, x: f64) -> Result<f64> {
        if n >= self.t.len() {
            return Err(Error::IndexOutOfRange {
                index: n,
                len: self.t.len(),
            });
        }
        let (k, left, right) = self.active(x);
        Ok(if n == k {
            left
        } else if n == k + 1 {
            right
        } else {
            0.0
        })
    }
}

/// Slopes of a nodal spline, one per node, with the head repeated (`s[0] == s[1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeVector(Vec<f64>);

impl SlopeVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.len() < 2 {
            return Err(Error::TooShort(s.len()));
        }
        if s[0] != s[1] {
            return Err(Error::InconsistentSlopeHead(s[0], s[1]));
        }
        Ok(Self(s))
    }

    /// Builds the full vector from the `N - 1` segment slopes.
    pub fn from_segments(seg: &[f64]) -> Result<Self> {
        if seg.is_empty() {
            return Err(Error::TooShort(1));
        }
        let mut s = Vec::with_capacity(seg.len() + 1);
        s.push(seg[0]);
        s.extend_from_slice(seg);
        Ok(Self(s))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Segment slopes without the duplicated head.
    pub fn segments(&self) -> &[f64] {
        &self.0[1..]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `b0 + b1 x + sum_k a_k (x - tau_k)_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReluForm {
    pub b0: f64,
    pub b1: f64,
    pub knots: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReluForm {
    pub fn new(b0: f64, b1: f64, knots: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if knots.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: knots.len(),
                got: weights.len(),
            });
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "ReLU knots must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            b0,
            b1,
            knots,
            weights,
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.knots
            .iter()
            .zip(&self.weights)
            .fold(self.b0 + self.b1 * x, |acc, (&tau, &a)| {
                acc + a * (x - tau).max(0.0)
            })
    }

    pub fn l1_norm(&self) -> f64 {
        self.weights.iter().map(|a| a.abs()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodalSpline {
    grid: Grid,
    values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl NodalSpline {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("nodal values"));
        }
        Ok(Self {
            grid,
            values,
            meta: BTreeMap::new(),
        })
    }

    /// Samples `g` at the grid nodes.
    pub fn from_fn(grid: Grid, g: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| g(t)).collect();
        Self::new(grid, values)
    }

    pub fn identity(grid: Grid) -> Self {
        let values = grid.nodes().to_vec();
        Self {
            grid,
            values,
            meta: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.grid.clone(), values)?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (k, left, right) = self.grid.active(x);
        left * self.values[k] + right * self.values[k + 1]
    }

    /// Slope of the segment active at `x` (right-continuous at nodes).
    pub fn local_slope(&self, x: f64) -> f64 {
        let k = self.grid.interval(x);
        (self.values[k + 1] - self.values[k]) / self.grid.spacing(k)
    }

    pub fn segment_slopes(&self) -> Vec<f64> {
        let t = self.grid.nodes();
        self.values
            .windows(2)
            .zip(t.windows(2))
            .map(|(f, t)| (f[1] - f[0]) / (t[1] - t[0]))
            .collect()
    }

    pub fn slopes(&self) -> SlopeVector {
        SlopeVector::from_segments(&self.segment_slopes()).expect("grid has at least 2 nodes")
    }

    /// Rebuilds nodal values from slopes by cumulative summation from `f1`.
    pub fn from_slopes(grid: Grid, s: &SlopeVector, f1: f64) -> Result<Self> {
        if s.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: s.len(),
            });
        }
        let sv = s.as_slice();
        if sv[0] != sv[1] {
            return Err(Error::InconsistentSlopeHead(sv[0], sv[1]));
        }
        let mut values = Vec::with_capacity(grid.len());
        values.push(f1);
        for n in 1..grid.len() {
            values.push(values[n - 1] + sv[n] * grid.spacing(n - 1));
        }
        Self::new(grid, values)
    }

    /// Second-order total variation: sum of absolute slope jumps.
    pub fn tv2(&self) -> f64 {
        self.segment_slopes()
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .sum()
    }

    pub fn slope_range(&self) -> (f64, f64) {
        let s = self.slopes();
        (s.min(), s.max())
    }

    pub fn lipschitz(&self) -> f64 {
        let (lo, hi) = self.slope_range();
        lo.abs().max(hi.abs())
    }

    pub fn is_affine(&self) -> bool {
        self.tv2() == 0.0
    }

    pub fn to_relu_form(&self) -> ReluForm {
        let s = self.segment_slopes();
        let t = self.grid.nodes();
        let b1 = s[0];
        let b0 = self.values[0] - b1 * t[0];
        let mut knots = Vec::new();
        let mut weights = Vec::new();
        for k in 1..s.len() {
            let a = s[k] - s[k - 1];
            if a.abs() >= RELU_PRUNE_TOL {
                knots.push(t[k]);
                weights.push(a);
            }
        }
        ReluForm {
            b0,
            b1,
            knots,
            weights,
        }
    }

    /// Nodal form of a ReLU expansion on the grid `(tau_1 - pad, tau.., tau_K + pad)`.
    pub fn from_relu_form(r: &ReluForm, pad: f64) -> Result<Self> {
        if !(pad > 0.0) {
            return Err(Error::InvalidArgument(format!("pad must be > 0, got {pad}")));
        }
        let mut t = Vec::with_capacity(r.knots.len() + 2);
        match (r.knots.first(), r.knots.last()) {
            (Some(&lo), Some(&hi)) => {
                t.push(lo - pad);
                t.extend_from_slice(&r.knots);
                t.push(hi + pad);
            }
            _ => {
                t.push(-pad);
                t.push(pad);
            }
        }
        let grid = Grid::new(t)?;
        Self::from_fn(grid, |x| r.eval(x))
    }

    /// Point set `{(t_n, f_n)}`.
    pub fn to_curve(&self) -> PwlCurve {
        PwlCurve {
            points: self
                .grid
                .nodes()
                .iter()
                .copied()
                .zip(self.values.iter().copied())
                .collect(),
        }
    }
}

/// Canonical interpolator of a jump-free ordered point set.
pub fn canonical_interpolant(points: &PwlCurve) -> Result<NodalSpline> {
    let pts = points.points();
    if pts.len() < 2 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::JumpNotAllowed(w[0].0));
    }
    let grid = Grid::new(pts.iter().map(|p| p.0).collect())?;
    NodalSpline::new(grid, pts.iter().map(|p| p.1).collect())
}

/// Ordered points `(x_n, y_n)` with `x` nondecreasing. A repeated abscissa
/// marks a jump; the graph connects successive points and extends the two
/// boundary segments to infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlCurve {
    points: Vec<(f64, f64)>,
}

impl PwlCurve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::NonFinite("curve points"));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0 < w[0].0 {
                return Err(Error::UnorderedPoints(i + 1));
            }
            if w[1].0 == w[0].0 && w[1].1 == w[0].1 {
                return Err(Error::DuplicatePoint(i + 1));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_jumps(&self) -> bool {
        self.points.windows(2).any(|w| w[0].0 == w[1].0)
    }

    /// Linear interpolation; at a jump abscissa the upper (later) branch is
    /// returned. A vertical boundary segment extrapolates as a constant.
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.points;
        let n = p.len();
        let line = |a: (f64, f64), b: (f64, f64), outer: f64| {
            if a.0 == b.0 {
                outer
            } else {
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        };
        if x < p[0].0 {
            return line(p[0], p[1], p[0].1);
        }
        // last index with x_i <= x
        let i = p.partition_point(|q| q.0 <= x) - 1;
        if i >= n - 1 {
            if x == p[n - 1].0 {
                return p[n - 1].1;
            }
            return line(p[n - 2], p[n - 1], p[n - 1].1);
        }
        line(p[i], p[i + 1], p[i].1)
    }

    /// Finite segment slopes (jumps skipped).
    pub fn slopes(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .filter(|w| w[1].0 > w[0].0)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect()
    }

    pub fn slope_range(&self) -> (f64, f64) {
        let s = self.slopes();
        (
            s.iter().copied().fold(f64::INFINITY, f64::min),
            s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    fn is_redundant(prev: (f64, f64), cur: (f64, f64), next: (f64, f64)) -> bool {
        if !(prev.0 < cur.0 && cur.0 < next.0) {
            return false;
        }
        let left = (cur.1 - prev.1) / (cur.0 - prev.0);
        let right = (next.1 - cur.1) / (next.0 - cur.0);
        (left - right).abs() <= COLLINEAR_TOL
    }

    /// True when every interior point is a knot point or a jump point.
    pub fn is_minimal(&self) -> bool {
        self.points
            .windows(3)
            .all(|w| !Self::is_redundant(w[0], w[1], w[2]))
    }

    /// Drops interior points lying on the line through their neighbours.
    pub fn minimized(&self) -> Self {
        let p = &self.points;
        let mut out = vec![p[0]];
        for i in 1..p.len() - 1 {
            let last = *out.last().unwrap();
            if !Self::is_redundant(last, p[i], p[i + 1]) {
                out.push(p[i]);
            }
        }
        out.push(p[p.len() - 1]);
        Self { points: out }
    }

    /// Swaps coordinates of a nondecreasing curve: flat runs become jumps and
    /// jumps become flat runs.
    pub fn invert_monotone(&self) -> Result<Self> {
        if let Some(i) = self.points.windows(2).position(|w| w[1].1 < w[0].1) {
            return Err(Error::NotMonotone(i + 1));
        }
        Ok(Self {
            points: self.points.iter().map(|&(x, y)| (y, x)).collect(),
        })
    }

    /// Applies `(x, y) -> map(x, y)` to every point and revalidates.
    pub fn map_points(&self, map: impl Fn(f64, f64) -> (f64, f64)) -> Result<Self> {
        Self::new(self.points.iter().map(|&(x, y)| map(x, y)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn soft_threshold() -> NodalSpline {
        NodalSpline::new(
            Grid::new(vec![-2.0, -1.0, 1.0, 2.0]).unwrap(),
            vec![-1.0, 0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    fn spline(t: &[f64], f: &[f64]) -> NodalSpline {
        NodalSpline::new(Grid::new(t.to_vec()).unwrap(), f.to_vec()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(vec![-2.0, -1.0, 1.0, 4.0, 5.0, 9.0, 9.5]).is_ok());
        assert!(matches!(
            Grid::new(vec![0.0, 0.0, 1.0]),
            Err(Error::NonMonotoneGrid { index: 1, .. })
        ));
        assert!(matches!(Grid::new(vec![1.0]), Err(Error::TooShort(1))));
        assert_eq!(Grid::new(vec![0.0, 1.0]).unwrap().len(), 2);
    }

    #[test]
    fn basis_values() {
        let g = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.basis(1, 0.5).unwrap(), 0.5);
        assert_eq!(g.basis(0, -1.0).unwrap(), 2.0);
        let g = Grid::new(vec![-2.0, -1.0, 1.0, 4.0, 5.0, 9.0, 9.5]).unwrap();
        assert_eq!(g.basis(3, 1.0).unwrap(), 0.0);
        assert_eq!(g.basis(3, 4.0).unwrap(), 1.0);
        assert!(matches!(
            g.basis(7, 0.0),
            Err(Error::IndexOutOfRange { index: 7, len: 7 })
        ));
    }

    #[test]
    fn spline_eval_examples() {
        let st = soft_threshold();
        assert_eq!(st.eval(0.0), 0.0);
        assert_eq!(st.eval(1.5), 0.5);
        assert_eq!(st.eval(-3.0), -2.0);
    }

    #[test]
    fn slopes_and_inverse() {
        let sp = spline(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]);
        assert_eq!(sp.slopes().as_slice(), &[2.0, 2.0, -1.0]);
        assert_eq!(soft_threshold().slopes().as_slice(), &[1.0, 1.0, 0.0, 1.0]);
        let g = Grid::new(vec![0.0, 1.0, 2.0]).unwrap();
        let id = NodalSpline::from_slopes(g.clone(), &SlopeVector::new(vec![1.0; 3]).unwrap(), 0.0)
            .unwrap();
        assert_eq!(id.values(), &[0.0, 1.0, 2.0]);
        let back = NodalSpline::from_slopes(g, &sp.slopes(), 0.0).unwrap();
        assert_eq!(back.values(), sp.values());
        assert!(matches!(
            SlopeVector::new(vec![1.0, 2.0, 3.0]),
            Err(Error::InconsistentSlopeHead(..))
        ));
    }

    #[test]
    fn affine_slopes_constant() {
        let g = Grid::new(vec![-3.0, -0.5, 0.25, 2.0, 7.0]).unwrap();
        let sp = NodalSpline::from_fn(g, |t| 3.0 + 2.0 * t).unwrap();
        for s in sp.slopes().as_slice() {
            assert_abs_diff_eq!(*s, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn tv2_examples() {
        assert_eq!(soft_threshold().tv2(), 2.0);
        assert_eq!(spline(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]).tv2(), 2.0);
        assert_eq!(spline(&[0.0, 1.0, 3.0], &[1.0, 3.0, 7.0]).tv2(), 0.0);
    }

    #[test]
    fn slope_range_examples() {
        assert_eq!(soft_threshold().slope_range(), (0.0, 1.0));
        assert_eq!(spline(&[0.0, 1.0], &[0.0, 1.0]).slope_range(), (1.0, 1.0));
        assert_eq!(spline(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]).slope_range(), (-1.0, 2.0));
        assert_eq!(spline(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]).lipschitz(), 2.0);
    }

    #[test]
    fn relu_form_examples() {
        let relu = spline(&[-1.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).to_relu_form();
        assert_eq!(relu, ReluForm::new(0.0, 0.0, vec![0.0], vec![1.0]).unwrap());
        let st = soft_threshold().to_relu_form();
        assert_eq!(
            st,
            ReluForm::new(1.0, 1.0, vec![-1.0, 1.0], vec![-1.0, 1.0]).unwrap()
        );
        let aff = spline(&[0.0, 1.0, 2.0, 4.0], &[3.0, 5.0, 7.0, 11.0]).to_relu_form();
        assert_eq!((aff.b0, aff.b1), (3.0, 2.0));
        assert!(aff.knots.is_empty() && aff.weights.is_empty());
    }

    #[test]
    fn from_relu_form_grid_and_values() {
        let r = ReluForm::new(1.0, 1.0, vec![-1.0, 1.0], vec![-1.0, 1.0]).unwrap();
        let sp = NodalSpline::from_relu_form(&r, 1.0).unwrap();
        assert_eq!(sp.grid().nodes(), &[-2.0, -1.0, 1.0, 2.0]);
        assert_eq!(sp.values(), &[-1.0, 0.0, 0.0, 1.0]);
        let flat = ReluForm::new(2.0, 0.5, vec![], vec![]).unwrap();
        let sp = NodalSpline::from_relu_form(&flat, 1.0).unwrap();
        assert_eq!(sp.grid().nodes(), &[-1.0, 1.0]);
        assert!(NodalSpline::from_relu_form(&flat, 0.0).is_err());
    }

    #[test]
    fn canonical_interpolant_examples() {
        let hat = canonical_interpolant(
            &PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(hat.tv2(), 2.0);
        let line = canonical_interpolant(&PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap())
            .unwrap();
        assert_eq!(line.tv2(), 0.0);
        let col = canonical_interpolant(
            &PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(col.slope_range(), (1.0, 1.0));
        let jump = PwlCurve::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert!(matches!(
            canonical_interpolant(&jump),
            Err(Error::JumpNotAllowed(_))
        ));
    }

    #[test]
    fn curve_jump_convention() {
        let sign = PwlCurve::new(vec![(-1.0, -1.0), (0.0, -1.0), (0.0, 1.0), (1.0, 1.0)]).unwrap();
        assert_eq!(sign.eval(0.0), 1.0);
        assert_eq!(sign.eval(0.5), 1.0);
        assert_eq!(sign.eval(-0.5), -1.0);
        assert_eq!(sign.eval(-7.0), -1.0);
        assert_eq!(sign.eval(3.0), 1.0);
    }

    #[test]
    fn curve_extrapolation() {
        let c = PwlCurve::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        assert_eq!(c.eval(-1.0), -2.0);
        assert_eq!(c.eval(4.0), 5.0);
        assert_eq!(c.eval(2.0), 3.0);
        let vertical = PwlCurve::new(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 2.0)]).unwrap();
        assert_eq!(vertical.eval(-1.0), 0.0);
    }

    #[test]
    fn curve_validation() {
        assert!(matches!(
            PwlCurve::new(vec![(1.0, 0.0), (0.0, 1.0)]),
            Err(Error::UnorderedPoints(1))
        ));
        assert!(matches!(
            PwlCurve::new(vec![(0.0, 1.0), (0.0, 1.0)]),
            Err(Error::DuplicatePoint(1))
        ));
        assert!(matches!(
            PwlCurve::new(vec![(0.0, 1.0)]),
            Err(Error::TooFewPoints(1))
        ));
    }

    #[test]
    fn invert_examples() {
        let id = PwlCurve::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(id.invert_monotone().unwrap(), id);
        let st = PwlCurve::new(vec![(-2.0, -1.0), (-1.0, 0.0), (1.0, 0.0), (2.0, 1.0)]).unwrap();
        let inv = st.invert_monotone().unwrap();
        assert_eq!(
            inv.points(),
            &[(-1.0, -2.0), (0.0, -1.0), (0.0, 1.0), (1.0, 2.0)]
        );
        let inc = PwlCurve::new(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 3.0)]).unwrap();
        assert_eq!(inc.invert_monotone().unwrap().invert_monotone().unwrap(), inc);
        let dec = PwlCurve::new(vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(dec.invert_monotone(), Err(Error::NotMonotone(1))));
    }

    #[test]
    fn minimization() {
        let c = PwlCurve::new(vec![
            (0.0, 0.0),
            (1.0, 1.0),
            (2.0, 2.0),
            (3.0, 2.0),
            (3.0, 4.0),
            (4.0, 5.0),
        ])
        .unwrap();
        assert!(!c.is_minimal());
        let m = c.minimized();
        assert_eq!(
            m.points(),
            &[(0.0, 0.0), (2.0, 2.0), (3.0, 2.0), (3.0, 4.0), (4.0, 5.0)]
        );
        assert!(m.is_minimal());
        for x in [-1.0, 0.5, 1.5, 2.5, 3.0, 3.5, 6.0] {
            assert_eq!(m.eval(x), c.eval(x));
        }
    }
}
