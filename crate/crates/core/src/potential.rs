//! Scalar potentials whose derivative or proximal map is a given linear spline.
//!
//! A potential is continuous and piecewise quadratic. It is stored as
//! breakpoints plus one `(c, b, a)` triple per cell, meaning
//! `c + b y + (a / 2) y^2`, normalized so that `phi(0) == 0`.
//!
//! * [`potential_from_derivative`]: `phi' = spline`.
//! * [`potential_from_prox`]: `prox_phi = spline`, obtained by inverting the
//!   (nondecreasing) spline graph and subtracting the identity.
//! * [`reweight_prox`]: the prox of `lambda * phi` as a point-set map.

use crate::error::{Error, Result};
use crate::pwl::{NodalSpline, PwlCurve};
use crate::slope::classify;

/// Tolerance for continuity and convexity checks on deserialized potentials.
pub const POTENTIAL_CHECK_TOL: f64 = 1e-9;

/// Default search-grid step of [`numeric_prox_oracle`].
pub const DEFAULT_ORACLE_STEP: f64 = 1e-4;

/// `c + b y + (a / 2) y^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPiece {
    pub c: f64,
    pub b: f64,
    pub a: f64,
}

impl QuadPiece {
    pub fn eval(&self, y: f64) -> f64 {
        self.c + y * (self.b + 0.5 * self.a * y)
    }

    pub fn derivative(&self, y: f64) -> f64 {
        self.b + self.a * y
    }

    fn scaled(&self, lambda: f64) -> Self {
        Self {
            c: lambda * self.c,
            b: lambda * self.b,
            a: lambda * self.a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Convexity {
    Convex,
    /// `rho`-weakly convex: `phi + rho/2 |.|^2` is convex.
    Weak(f64),
    /// `rho`-strongly convex.
    Strong(f64),
}

impl Convexity {
    pub fn rho_weak(&self) -> f64 {
        match *self {
            Convexity::Weak(r) => r,
            _ => 0.0,
        }
    }

    /// Lower bound on `phi''` implied by the class.
    pub fn curvature_floor(&self) -> f64 {
        match *self {
            Convexity::Convex => 0.0,
            Convexity::Weak(r) => -r,
            Convexity::Strong(r) => r,
        }
    }

    fn scaled(&self, lambda: f64) -> Self {
        match *self {
            Convexity::Convex => Convexity::Convex,
            Convexity::Weak(r) => Convexity::Weak(lambda * r),
            Convexity::Strong(r) => Convexity::Strong(lambda * r),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwQuadPotential {
    breakpoints: Vec<f64>,
    pieces: Vec<QuadPiece>,
    derivative: PwlCurve,
    convexity: Convexity,
}

impl PwQuadPotential {
    /// Validated construction from stored pieces (e.g. from JSON). The
    /// derivative curve is rebuilt from the pieces.
    pub fn from_parts(
        breakpoints: Vec<f64>,
        pieces: Vec<QuadPiece>,
        convexity: Convexity,
    ) -> Result<Self> {
        if pieces.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidPotential(format!(
                "{} breakpoints need {} pieces, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                pieces.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPotential(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if breakpoints.iter().any(|v| !v.is_finite())
            || pieces
                .iter()
                .any(|p| !(p.a.is_finite() && p.b.is_finite() && p.c.is_finite()))
        {
            return Err(Error::NonFinite("potential"));
        }
        for (j, &beta) in breakpoints.iter().enumerate() {
            let (l, r) = (pieces[j].eval(beta), pieces[j + 1].eval(beta));
            if (l - r).abs() > POTENTIAL_CHECK_TOL * (1.0 + l.abs().max(r.abs())) {
                return Err(Error::InvalidPotential(format!(
                    "discontinuous at breakpoint {beta}: {l} vs {r}"
                )));
            }
        }
        let derivative = derivative_curve_from_pieces(&breakpoints, &pieces)?;
        let pot = Self {
            breakpoints,
            pieces,
            derivative,
            convexity,
        };
        pot.check_convexity()?;
        Ok(pot)
    }

    fn check_convexity(&self) -> Result<()> {
        match self.convexity {
            Convexity::Weak(r) | Convexity::Strong(r) if !(r >= 0.0) => {
                return Err(Error::InvalidPotential(format!("rho must be >= 0, got {r}")));
            }
            _ => {}
        }
        let floor = self.convexity.curvature_floor();
        if let Some(p) = self.pieces.iter().find(|p| p.a < floor - POTENTIAL_CHECK_TOL) {
            return Err(Error::InvalidPotential(format!(
                "piece curvature {} below the declared floor {floor}",
                p.a
            )));
        }
        for (j, &beta) in self.breakpoints.iter().enumerate() {
            let jump = self.pieces[j + 1].derivative(beta) - self.pieces[j].derivative(beta);
            if jump < -POTENTIAL_CHECK_TOL {
                return Err(Error::InvalidPotential(format!(
                    "derivative jumps down at {beta}; not weakly convex"
                )));
            }
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[QuadPiece] {
        &self.pieces
    }

    pub fn derivative_curve(&self) -> &PwlCurve {
        &self.derivative
    }

    pub fn convexity(&self) -> Convexity {
        self.convexity
    }

    fn piece_index(&self, y: f64) -> usize {
        self.breakpoints.partition_point(|&b| b <= y)
    }

    /// Cell `[lo, hi)` of piece `j`.
    fn cell(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[j - 1]
        };
        let hi = self
            .breakpoints
            .get(j)
            .copied()
            .unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.pieces[self.piece_index(y)].eval(y)
    }

    /// `phi'(y)`; at a derivative jump the upper value is returned.
    pub fn eval_derivative(&self, y: f64) -> f64 {
        self.derivative.eval(y)
    }

    /// The potential `lambda * phi`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::LambdaOutOfRange {
                lambda,
                reason: "scale must be positive and finite".into(),
            });
        }
        Ok(Self {
            breakpoints: self.breakpoints.clone(),
            pieces: self.pieces.iter().map(|p| p.scaled(lambda)).collect(),
            derivative: self.derivative.map_points(|u, v| (u, lambda * v))?,
            convexity: self.convexity.scaled(lambda),
        })
    }
}

fn derivative_curve_from_pieces(breakpoints: &[f64], pieces: &[QuadPiece]) -> Result<PwlCurve> {
    let mut pts = Vec::with_capacity(2 * breakpoints.len() + 2);
    match (breakpoints.first(), breakpoints.last()) {
        (Some(&lo), Some(&hi)) => {
            pts.push((lo - 1.0, pieces[0].derivative(lo - 1.0)));
            for (j, &beta) in breakpoints.iter().enumerate() {
                let l = pieces[j].derivative(beta);
                let r = pieces[j + 1].derivative(beta);
                pts.push((beta, l));
                if r != l {
                    pts.push((beta, r));
                }
            }
            let last = pieces[pieces.len() - 1];
            pts.push((hi + 1.0, last.derivative(hi + 1.0)));
        }
        _ => {
            pts.push((-1.0, pieces[0].derivative(-1.0)));
            pts.push((1.0, pieces[0].derivative(1.0)));
        }
    }
    PwlCurve::new(pts)
}

/// Integrates a derivative curve (interior jumps allowed) into pieces with
/// `phi(0) == 0`. Fails on a vertical boundary segment.
fn integrate_derivative_curve(curve: &PwlCurve) -> Result<(Vec<f64>, Vec<QuadPiece>)> {
    let pts = curve.points();
    let n = pts.len();
    if pts[0].0 == pts[1].0 || pts[n - 2].0 == pts[n - 1].0 {
        return Err(Error::FlatBoundarySegment);
    }
    let mut breakpoints = Vec::new();
    let mut pieces = Vec::new();
    for w in pts.windows(2) {
        let ((u0, v0), (u1, v1)) = (w[0], w[1]);
        if u1 == u0 {
            continue;
        }
        let a = (v1 - v0) / (u1 - u0);
        let b = v0 - a * u0;
        if !pieces.is_empty() {
            breakpoints.push(u0);
        }
        pieces.push(QuadPiece { c: 0.0, b, a });
    }
    let anchor = breakpoints.partition_point(|&b| b <= 0.0);
    for j in anchor + 1..pieces.len() {
        let beta = breakpoints[j - 1];
        let left = pieces[j - 1].eval(beta);
        let p = &mut pieces[j];
        p.c = left - beta * (p.b + 0.5 * p.a * beta);
    }
    for j in (0..anchor).rev() {
        let beta = breakpoints[j];
        let right = pieces[j + 1].eval(beta);
        let p = &mut pieces[j];
        p.c = right - beta * (p.b + 0.5 * p.a * beta);
    }
    Ok((breakpoints, pieces))
}

/// The quadratic-spline potential with `phi' = spline` and `phi(0) = 0`.
/// Its class follows the minimum slope: convex for `s_min >= 0`, strongly
/// convex for `s_min > 0`, `|s_min|`-weakly convex otherwise.
pub fn potential_from_derivative(spline: &NodalSpline) -> PwQuadPotential {
    let curve = spline.to_curve().minimized();
    let (breakpoints, pieces) =
        integrate_derivative_curve(&curve).expect("a nodal spline has no jumps");
    let (s_min, _) = spline.slope_range();
    let convexity = if s_min > 0.0 {
        Convexity::Strong(s_min)
    } else if s_min == 0.0 {
        Convexity::Convex
    } else {
        Convexity::Weak(-s_min)
    };
    PwQuadPotential {
        breakpoints,
        pieces,
        derivative: curve,
        convexity,
    }
}

/// The continuous piecewise-quadratic potential whose proximal map is the
/// given nondecreasing spline.
pub fn potential_from_prox(spline: &NodalSpline) -> Result<PwQuadPotential> {
    let class = classify(spline);
    if !class.nondecreasing {
        return Err(Error::NotNondecreasing(spline.slope_range().0));
    }
    let points = spline.to_curve().minimized();
    // d phi(y) = f^{-1}(y) - y
    let derivative = points.map_points(|x, y| (y, x - y))?;
    let (breakpoints, pieces) = integrate_derivative_curve(&derivative)?;
    let (_, s_max) = points.slope_range();
    let convexity = if s_max < 1.0 {
        Convexity::Strong(1.0 / s_max - 1.0)
    } else if s_max == 1.0 {
        Convexity::Convex
    } else {
        Convexity::Weak(1.0 - 1.0 / s_max)
    };
    Ok(PwQuadPotential {
        breakpoints,
        pieces,
        derivative,
        convexity,
    })
}

/// Point set of `prox_{lambda phi}` given the minimal nondecreasing point set
/// of `prox_phi`: `(lambda x + (1 - lambda) y, y)`.
pub fn reweight_prox(curve: &PwlCurve, lambda: f64) -> Result<PwlCurve> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::LambdaOutOfRange {
            lambda,
            reason: "lambda must be positive and finite".into(),
        });
    }
    if !curve.is_nondecreasing() {
        return Err(Error::NotNondecreasing(curve.slope_range().0));
    }
    let pts: Vec<(f64, f64)> = curve
        .points()
        .iter()
        .map(|&(x, y)| (lambda * x + (1.0 - lambda) * y, y))
        .collect();
    if pts.windows(2).any(|w| w[1].0 <= w[0].0) {
        let s_max = if curve.has_jumps() {
            f64::INFINITY
        } else {
            curve.slope_range().1
        };
        let limit = if s_max.is_infinite() {
            1.0
        } else {
            s_max / (s_max - 1.0)
        };
        return Err(Error::LambdaOutOfRange {
            lambda,
            reason: format!(
                "need lambda < s_max/(s_max - 1) = {limit} (s_max = {s_max}); \
                 at or beyond the limit consecutive abscissas collapse into a jump"
            ),
        });
    }
    PwlCurve::new(pts)
}

/// Search parameters for [`numeric_prox_oracle`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Half-width of the search window centred at `x`; `None` picks a window
    /// that provably contains the minimizer.
    pub halfwidth: Option<f64>,
    pub step: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            halfwidth: None,
            step: DEFAULT_ORACLE_STEP,
        }
    }
}

/// Brute-force `argmin_z 1/2 (x - z)^2 + phi(z)` over the grid
/// `x + i * step, |i * step| <= halfwidth`, followed by an exact polish on the
/// quadratic pieces around the grid minimizer.
pub fn numeric_prox_oracle(pot: &PwQuadPotential, x: f64, cfg: &OracleConfig) -> Result<f64> {
    let rho = pot.convexity.rho_weak();
    if rho >= 1.0 {
        return Err(Error::WeakConvexityTooLarge(rho));
    }
    let min_q = pot
        .pieces
        .iter()
        .map(|p| 1.0 + p.a)
        .fold(f64::INFINITY, f64::min);
    if !(min_q > 0.0) {
        return Err(Error::WeakConvexityTooLarge(1.0 - min_q));
    }
    if !(cfg.step > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "oracle needs step > 0 and finite x, got step {} x {x}",
            cfg.step
        )));
    }
    let halfwidth = cfg.halfwidth.unwrap_or_else(|| {
        let bp = pot.breakpoints.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        let bmax = pot.pieces.iter().fold(0.0f64, |m, p| m.max(p.b.abs()));
        x.abs() + 10.0 + bp.max((x.abs() + bmax) / min_q)
    });
    let objective = |z: f64| 0.5 * (x - z) * (x - z) + pot.eval(z);
    let step = cfg.step;
    let reach = (halfwidth / step).ceil() as i64;
    let at = |i: i64| x + i as f64 * step;

    let mut best = (f64::INFINITY, 0i64);
    let consider = |i: i64, best: &mut (f64, i64)| {
        let v = objective(at(i));
        if v < best.0 || (v == best.0 && i < best.1) {
            *best = (v, i);
        }
    };
    for j in 0..pot.pieces.len() {
        let (lo, hi) = pot.cell(j);
        let i_lo = if lo.is_finite() {
            (((lo - x) / step).ceil() as i64).max(-reach)
        } else {
            -reach
        };
        let i_hi = if hi.is_finite() {
            ((((hi - x) / step).ceil() as i64) - 1).min(reach)
        } else {
            reach
        };
        if i_lo > i_hi {
            continue;
        }
        consider(i_lo, &mut best);
        consider(i_hi, &mut best);
        let p = pot.pieces[j];
        let q = 1.0 + p.a;
        if q > 0.0 {
            let v = (x - p.b) / q;
            let iv = ((v - x) / step).floor();
            if iv.is_finite() {
                let iv = iv as i64;
                consider(iv.clamp(i_lo, i_hi), &mut best);
                consider((iv + 1).clamp(i_lo, i_hi), &mut best);
            }
        }
    }

    let z0 = at(best.1);
    let mut out = (best.0, z0);
    let j0 = pot.piece_index(z0);
    for j in j0.saturating_sub(1)..=(j0 + 1).min(pot.pieces.len() - 1) {
        let (lo, hi) = pot.cell(j);
        let p = pot.pieces[j];
        let q = 1.0 + p.a;
        let mut cands = Vec::with_capacity(3);
        if q > 0.0 {
            cands.push(((x - p.b) / q).clamp(lo, hi));
        }
        cands.extend([lo, hi].into_iter().filter(|v| v.is_finite()));
        for z in cands {
            let v = objective(z);
            if v < out.0 {
                out = (v, z);
            }
        }
    }
    Ok(out.1)
}
