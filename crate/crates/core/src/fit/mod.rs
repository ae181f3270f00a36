//! Slope-constrained TV2 spline fitting on a fixed grid:
//!
//! ```text
//! min_f ||y - S f||^2 + lambda ||D D_t f||_1   s.t.  s_min <= D_t f <= s_max
//! ```
//!
//! [`fit`] is the production solver (ADMM with an exact TV/box slope step);
//! [`oracle_fit`] is an independent exhaustive reference for small problems.

mod admm;
mod oracle;
mod sampling;
pub mod tv;

pub use admm::fit;
pub use oracle::{oracle_fit, ORACLE_MAX_DIM};
pub use sampling::SamplingOperator;

use crate::error::{Error, Result};
use crate::pwl::{Grid, NodalSpline};
use crate::slope::SlopeBounds;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Stopping tolerance on the scaled primal/dual residuals.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial ADMM penalty; adapted by residual balancing early on.
    pub rho: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200_000,
            rho: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    data: Vec<(f64, f64)>,
    grid: Grid,
    lambda: f64,
    bounds: SlopeBounds,
}

impl FitProblem {
    /// Validates the data and builds the default grid when none is given:
    /// the data abscissas padded by one node on each side.
    pub fn new(
        data: Vec<(f64, f64)>,
        grid: Option<Grid>,
        lambda: f64,
        bounds: SlopeBounds,
    ) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidProblem("data must contain at least one point".into()));
        }
        if data.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::NonFinite("data"));
        }
        if let Some(i) = data.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidProblem(format!(
                "data abscissas must be strictly increasing (index {})",
                i + 1
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!("lambda must be >= 0, got {lambda}")));
        }
        let (x_first, x_last) = (data[0].0, data[data.len() - 1].0);
        let grid = match grid {
            Some(g) => {
                if g.first() > x_first || g.last() < x_last {
                    return Err(Error::InvalidProblem(format!(
                        "grid [{}, {}] does not span the data [{x_first}, {x_last}]",
                        g.first(),
                        g.last()
                    )));
                }
                g
            }
            None => {
                let mut t = Vec::with_capacity(data.len() + 2);
                t.push(x_first - 1.0);
                t.extend(data.iter().map(|p| p.0));
                t.push(x_last + 1.0);
                Grid::new(t)?
            }
        };
        Ok(Self {
            data,
            grid,
            lambda,
            bounds,
        })
    }

    pub fn data(&self) -> &[(f64, f64)] {
        &self.data
    }

    pub fn xs(&self) -> Vec<f64> {
        self.data.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.data.iter().map(|p| p.1).collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn bounds(&self) -> SlopeBounds {
        self.bounds
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.data.clone(), Some(self.grid.clone()), lambda, self.bounds)
    }

    pub fn with_ys(&self, ys: &[f64]) -> Result<Self> {
        if ys.len() != self.data.len() {
            return Err(Error::LengthMismatch {
                expected: self.data.len(),
                got: ys.len(),
            });
        }
        let data = self.data.iter().zip(ys).map(|(p, &y)| (p.0, y)).collect();
        Self::new(data, Some(self.grid.clone()), self.lambda, self.bounds)
    }

    pub fn sampling(&self) -> SamplingOperator {
        SamplingOperator::new(&self.grid, &self.xs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub total: f64,
    pub data_term: f64,
    pub reg_term: f64,
}

/// Squared-error data term plus `lambda * tv2`; slope feasibility is not
/// part of the value.
pub fn objective(problem: &FitProblem, spline: &NodalSpline) -> Result<Objective> {
    if spline.grid() != problem.grid() {
        return Err(Error::GridMismatch);
    }
    let data_term = problem
        .data
        .iter()
        .map(|&(x, y)| {
            let r = y - spline.eval(x);
            r * r
        })
        .sum();
    let reg_term = spline.tv2();
    Ok(Objective {
        total: data_term + problem.lambda * reg_term,
        data_term,
        reg_term,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spline: NodalSpline,
    pub objective: f64,
    pub data_term: f64,
    pub reg_term: f64,
    pub max_slope_violation: f64,
    pub optimality_residual: f64,
    pub iterations: usize,
}

impl FitResult {
    pub(crate) fn evaluate(
        problem: &FitProblem,
        spline: NodalSpline,
        optimality_residual: f64,
        iterations: usize,
    ) -> Self {
        let obj = objective(problem, &spline).expect("spline built on the problem grid");
        let max_slope_violation = problem.bounds.violation(&spline.segment_slopes());
        Self {
            spline,
            objective: obj.total,
            data_term: obj.data_term,
            reg_term: obj.reg_term,
            max_slope_violation,
            optimality_residual,
            iterations,
        }
    }
}

/// Removes interior nodes whose slope jump is at most `tol`. Removals are
/// accumulated per gap between kept nodes so the summed jump dropped inside
/// any gap never exceeds `tol`.
pub fn prune_knots(spline: &NodalSpline, tol: f64) -> NodalSpline {
    let seg = spline.segment_slopes();
    let t = spline.grid().nodes();
    let f = spline.values();
    let mut keep_t = vec![t[0]];
    let mut keep_f = vec![f[0]];
    let mut dropped = 0.0;
    for n in 1..t.len() - 1 {
        let jump = (seg[n] - seg[n - 1]).abs();
        if dropped + jump <= tol {
            dropped += jump;
        } else {
            keep_t.push(t[n]);
            keep_f.push(f[n]);
            dropped = 0.0;
        }
    }
    keep_t.push(t[t.len() - 1]);
    keep_f.push(f[f.len() - 1]);
    let grid = Grid::new(keep_t).expect("subset of a strictly increasing grid");
    let mut out = NodalSpline::new(grid, keep_f).expect("values copied from a valid spline");
    out.meta = spline.meta.clone();
    out
}
