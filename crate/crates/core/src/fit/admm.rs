//! ADMM on the splitting `u = D_t f` (segment slopes):
//!
//! * `f`-step: tridiagonal solve of `(2 S^T S + rho D^T D) f = 2 S^T y + rho D^T (u - w)`;
//! * `u`-step: exact prox of `lambda/rho * TV + box`, i.e. 1-D TV prox then clip;
//! * scaled dual update `w += D f - u`.
//!
//! The returned spline is rebuilt from the feasible slope iterate `u` with the
//! optimal additive offset, so the slope constraints hold exactly.

use super::tv::tv1d_prox_into;
use super::{FitProblem, FitResult, SolverConfig};
use crate::error::{Error, Result};
use crate::pwl::NodalSpline;
use crate::slope::integrate_zero_mean;

/// Iterations during which the penalty is rebalanced.
const ADAPT_ITERS: usize = 20_000;
const ADAPT_EVERY: usize = 25;

struct Tridiagonal {
    // LDL^T factors
    d: Vec<f64>,
    l: Vec<f64>,
}

impl Tridiagonal {
    fn factor(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = diag[0];
        for k in 1..n {
            l[k - 1] = off[k - 1] / d[k - 1];
            d[k] = diag[k] - l[k - 1] * off[k - 1];
        }
        Self { d, l }
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for k in 1..n {
            rhs[k] -= self.l[k - 1] * rhs[k - 1];
        }
        for k in 0..n {
            rhs[k] /= self.d[k];
        }
        for k in (0..n - 1).rev() {
            rhs[k] -= self.l[k] * rhs[k + 1];
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fit(problem: &FitProblem, config: &SolverConfig) -> Result<FitResult> {
    if !(config.tol > 0.0) || !(config.rho > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "solver needs tol > 0 and rho > 0, got tol {} rho {}",
            config.tol, config.rho
        )));
    }
    let grid = problem.grid();
    let n = grid.len();
    let k = n - 1;
    let h: Vec<f64> = (0..k).map(|j| grid.spacing(j)).collect();
    let sampling = problem.sampling();
    let ys = problem.ys();
    let (gram_d, gram_o) = sampling.gram();
    let sty = sampling.adjoint(&ys);
    let lambda = problem.lambda();
    let bounds = problem.bounds();

    let diff = |f: &[f64], out: &mut [f64]| {
        for j in 0..k {
            out[j] = (f[j + 1] - f[j]) / h[j];
        }
    };
    let diff_t = |u: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..k {
            let q = u[j] / h[j];
            out[j] -= q;
            out[j + 1] += q;
        }
    };
    let factor = |rho: f64| {
        let mut diag: Vec<f64> = gram_d.iter().map(|v| 2.0 * v).collect();
        let mut off: Vec<f64> = gram_o.iter().map(|v| 2.0 * v).collect();
        for j in 0..k {
            let q = rho / (h[j] * h[j]);
            diag[j] += q;
            diag[j + 1] += q;
            off[j] -= q;
        }
        Tridiagonal::factor(&diag, &off)
    };

    let mut rho = config.rho;
    let mut system = factor(rho);
    let mut f = vec![0.0; n];
    let mut df = vec![0.0; k];
    let mut u = vec![0.0; k];
    let mut u_prev = vec![0.0; k];
    let mut w = vec![0.0; k];
    let mut v = vec![0.0; k];
    let mut buf_n = vec![0.0; n];
    let mut buf_k = vec![0.0; k];

    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..config.max_iters {
        iterations = it + 1;
        // f-step
        for j in 0..k {
            buf_k[j] = u[j] - w[j];
        }
        diff_t(&buf_k, &mut buf_n);
        for i in 0..n {
            f[i] = 2.0 * sty[i] + rho * buf_n[i];
        }
        system.solve(&mut f);
        // u-step
        diff(&f, &mut df);
        for j in 0..k {
            v[j] = df[j] + w[j];
        }
        u_prev.copy_from_slice(&u);
        tv1d_prox_into(&v, lambda / rho, &mut u);
        u.iter_mut().for_each(|s| *s = bounds.clip(*s));
        // dual step
        for j in 0..k {
            w[j] += df[j] - u[j];
        }

        for j in 0..k {
            buf_k[j] = df[j] - u[j];
        }
        let r_pri = norm(&buf_k);
        for j in 0..k {
            buf_k[j] = u[j] - u_prev[j];
        }
        diff_t(&buf_k, &mut buf_n);
        let r_dual = rho * norm(&buf_n);
        diff_t(&w, &mut buf_n);
        let eps_pri = config.tol * ((k as f64).sqrt() + norm(&df).max(norm(&u)));
        let eps_dual = config.tol * ((n as f64).sqrt() + rho * norm(&buf_n));
        residual = (r_pri / eps_pri).max(r_dual / eps_dual) * config.tol;
        if r_pri <= eps_pri && r_dual <= eps_dual {
            converged = true;
            break;
        }

        if it < ADAPT_ITERS && (it + 1) % ADAPT_EVERY == 0 {
            let scale = if r_pri > 10.0 * r_dual {
                2.0
            } else if r_dual > 10.0 * r_pri {
                0.5
            } else {
                1.0
            };
            if scale != 1.0 {
                rho *= scale;
                w.iter_mut().for_each(|x| *x /= scale);
                system = factor(rho);
            }
        }
    }

    let spline = spline_from_slopes(problem, &u);
    let result = FitResult::evaluate(problem, spline, residual, iterations);
    if converged {
        Ok(result)
    } else {
        Err(Error::DidNotConverge(Box::new(result)))
    }
}

/// Nodal values with the given segment slopes and the offset that minimizes
/// the data term (rows of `S` sum to one, so the offset is a mean residual).
pub(crate) fn spline_from_slopes(problem: &FitProblem, seg: &[f64]) -> NodalSpline {
    let grid = problem.grid();
    let mut f = integrate_zero_mean(grid, seg);
    let sf = problem.sampling().apply(&f);
    let offset = problem
        .data()
        .iter()
        .zip(&sf)
        .map(|(p, s)| p.1 - s)
        .sum::<f64>()
        / sf.len() as f64;
    f.iter_mut().for_each(|v| *v += offset);
    NodalSpline::new(grid.clone(), f).expect("finite slopes give finite values")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::Grid;
    use crate::slope::SlopeBounds;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tridiagonal_solve() {
        let diag = [4.0, 5.0, 6.0, 3.0];
        let off = [1.0, -2.0, 0.5];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut b = [0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += off[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += off[i] * x[i + 1];
            }
        }
        Tridiagonal::factor(&diag, &off).solve(&mut b);
        for i in 0..4 {
            assert_abs_diff_eq!(b[i], x[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_affine_fit() {
        for lambda in [0.0, 0.5, 10.0] {
            let p = FitProblem::new(
                vec![(0.0, 0.0), (1.0, 1.0)],
                Some(Grid::new(vec![-1.0, 0.0, 1.0, 2.0]).unwrap()),
                lambda,
                SlopeBounds::firmly_nonexpansive(),
            )
            .unwrap();
            let r = fit(&p, &SolverConfig::default()).unwrap();
            assert!(r.objective < 1e-12, "lambda {lambda}: {}", r.objective);
            // with lambda = 0 the pad slopes are free
            if lambda == 0.0 {
                continue;
            }
            for (&t, &v) in r.spline.grid().nodes().iter().zip(r.spline.values()) {
                assert_abs_diff_eq!(v, t, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn slope_capped_two_point_fit() {
        let p = FitProblem::new(
            vec![(0.0, 0.0), (1.0, 2.0)],
            Some(Grid::new(vec![0.0, 1.0]).unwrap()),
            0.0,
            SlopeBounds::new(f64::NEG_INFINITY, 1.0).unwrap(),
        )
        .unwrap();
        let r = fit(&p, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(r.objective, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.spline.values()[0], 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(r.spline.values()[1], 1.5, epsilon = 1e-6);
        assert_eq!(r.max_slope_violation, 0.0);
    }

    #[test]
    fn large_lambda_gives_regression_line() {
        let p = FitProblem::new(
            vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)],
            None,
            1e8,
            SlopeBounds::unbounded(),
        )
        .unwrap();
        let r = fit(&p, &SolverConfig::default()).unwrap();
        // least-squares line through the three points is y = 1/3
        assert!(r.reg_term < 1e-6);
        for x in [-1.0, 0.0, 1.0, 2.0, 3.0] {
            assert_abs_diff_eq!(r.spline.eval(x), 1.0 / 3.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let p = FitProblem::new(
            vec![(0.0, 0.0), (1.0, 3.0), (2.0, -1.0), (3.0, 2.0)],
            None,
            0.3,
            SlopeBounds::unbounded(),
        )
        .unwrap();
        let cfg = SolverConfig {
            max_iters: 3,
            ..SolverConfig::default()
        };
        match fit(&p, &cfg) {
            Err(Error::DidNotConverge(r)) => {
                assert_eq!(r.iterations, 3);
                assert!(r.objective.is_finite());
            }
            other => panic!("expected DidNotConverge, got {other:?}"),
        }
    }
}
