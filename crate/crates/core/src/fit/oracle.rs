//! Reference solver for small fits, independent of the ADMM path.
//!
//! The problem is written in `z = (f_0, s_0, ..., s_{K-1})` (first value plus
//! segment slopes). A projected subgradient run gives a warm estimate; then
//! every pattern of slope-jump signs (merged, up, down) and every per-group
//! box status (free, at `s_min`, at `s_max`) is enumerated. Each pattern fixes
//! the nonsmooth terms, leaving an unconstrained least-squares problem whose
//! solution is kept when it is consistent with the pattern. The best
//! consistent candidate is an exact minimizer.

use nalgebra::{DMatrix, DVector};

use super::{FitProblem, FitResult};
use crate::error::{Error, Result};
use crate::pwl::NodalSpline;

/// Largest grid size and sample count accepted by [`oracle_fit`].
pub const ORACLE_MAX_DIM: usize = 12;

const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Free,
    Lower,
    Upper,
}

struct Setup {
    /// Dense `S C`, where `C` maps `z` to nodal values.
    a: DMatrix<f64>,
    y: DVector<f64>,
    lambda: f64,
    lo: f64,
    hi: f64,
    n_slopes: usize,
}

impl Setup {
    fn objective(&self, z: &DVector<f64>) -> f64 {
        let r = &self.y - &self.a * z;
        let tv: f64 = (1..self.n_slopes).map(|i| (z[i + 1] - z[i]).abs()).sum();
        r.norm_squared() + self.lambda * tv
    }

    fn clip(&self, z: &mut DVector<f64>) {
        for i in 1..=self.n_slopes {
            z[i] = z[i].clamp(self.lo, self.hi);
        }
    }
}

pub fn oracle_fit(problem: &FitProblem, budget: usize) -> Result<FitResult> {
    let grid = problem.grid();
    let n = grid.len();
    let m = problem.data().len();
    if n > ORACLE_MAX_DIM || m > ORACLE_MAX_DIM {
        return Err(Error::TooLarge { n, m });
    }
    let k = n - 1;
    let bounds = problem.bounds();
    let sampling = problem.sampling();
    let mut a = DMatrix::zeros(m, n);
    for r in 0..m {
        let (cell, _, w1) = sampling.row(r);
        a[(r, 0)] = 1.0;
        // f_j = f_0 + sum_{i<j} h_i s_i, so slope i reaches every node right of it
        for i in 0..k {
            let right_weight = if cell > i {
                1.0
            } else if cell == i {
                w1
            } else {
                0.0
            };
            a[(r, i + 1)] = grid.spacing(i) * right_weight;
        }
    }
    let setup = Setup {
        a,
        y: DVector::from_vec(problem.ys()),
        lambda: problem.lambda(),
        lo: bounds.s_min(),
        hi: bounds.s_max(),
        n_slopes: k,
    };

    let mut best = subgradient(&setup, budget);
    let best_val = setup.objective(&best);
    let mut certified = false;
    if let Some(z) = enumerate(&setup) {
        let v = setup.objective(&z);
        certified = true;
        if v <= best_val {
            best = z;
        }
    }

    let mut f = vec![best[0]; n];
    for j in 1..n {
        f[j] = f[j - 1] + grid.spacing(j - 1) * best[j];
    }
    let spline = NodalSpline::new(grid.clone(), f)?;
    let residual = if certified { 0.0 } else { f64::INFINITY };
    Ok(FitResult::evaluate(problem, spline, residual, budget))
}

/// Projected subgradient with `1/sqrt(t)` normalized steps and iterate
/// averaging; returns the better of the average and the best iterate.
fn subgradient(setup: &Setup, budget: usize) -> DVector<f64> {
    let n = setup.a.ncols();
    let mut z = DVector::zeros(n);
    setup.clip(&mut z);
    let mut best = z.clone();
    let mut best_val = setup.objective(&z);
    let mut avg = z.clone();
    let scale = 1.0 + setup.y.amax();
    for t in 0..budget {
        let r = &setup.y - &setup.a * &z;
        let mut g = setup.a.transpose() * r * -2.0;
        for i in 1..setup.n_slopes {
            let s = (z[i + 1] - z[i]).signum() * f64::from(z[i + 1] != z[i]);
            g[i + 1] += setup.lambda * s;
            g[i] -= setup.lambda * s;
        }
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        let step = scale / ((t + 1) as f64).sqrt() / gn;
        z -= g * step;
        setup.clip(&mut z);
        avg += (&z - &avg) / (t + 2) as f64;
        let v = setup.objective(&z);
        if v < best_val {
            best_val = v;
            best.copy_from(&z);
        }
    }
    if setup.objective(&avg) < best_val {
        avg
    } else {
        best
    }
}

fn enumerate(setup: &Setup) -> Option<DVector<f64>> {
    let k = setup.n_slopes;
    let n_jumps = k.saturating_sub(1);
    let mut statuses = vec![Status::Free];
    if setup.lo.is_finite() {
        statuses.push(Status::Lower);
    }
    if setup.hi.is_finite() {
        statuses.push(Status::Upper);
    }

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut jumps = vec![0i8; n_jumps];
    let total_jump_patterns = 3usize.pow(n_jumps as u32);
    for code in 0..total_jump_patterns {
        let mut c = code;
        for j in jumps.iter_mut() {
            *j = (c % 3) as i8 - 1;
            c /= 3;
        }
        // slope groups: runs separated by nonzero jumps
        let mut groups: Vec<Vec<usize>> = vec![vec![0]];
        let mut signs: Vec<f64> = Vec::new();
        for (i, &j) in jumps.iter().enumerate() {
            if j == 0 {
                groups.last_mut().unwrap().push(i + 1);
            } else {
                groups.push(vec![i + 1]);
                signs.push(f64::from(j));
            }
        }
        let ng = groups.len();
        let group_cols: Vec<DVector<f64>> = groups
            .iter()
            .map(|g| {
                let mut col = DVector::zeros(setup.a.nrows());
                for &i in g {
                    col += setup.a.column(i + 1);
                }
                col
            })
            .collect();

        let mut st = vec![0usize; ng];
        'status: loop {
            if admissible(&st, &statuses, &signs) {
                if let Some(z) = solve_pattern(setup, &groups, &group_cols, &signs, &st, &statuses)
                {
                    let v = setup.objective(&z);
                    if best.as_ref().is_none_or(|b| v < b.0) {
                        best = Some((v, z));
                    }
                }
            }
            for d in st.iter_mut() {
                *d += 1;
                if *d < statuses.len() {
                    continue 'status;
                }
                *d = 0;
            }
            break;
        }
    }
    best.map(|b| b.1)
}

/// Adjacent groups pinned to bounds must be ordered consistently with the
/// jump sign between them.
fn admissible(st: &[usize], statuses: &[Status], signs: &[f64]) -> bool {
    for g in 0..signs.len() {
        let (l, r) = (statuses[st[g]], statuses[st[g + 1]]);
        let ok = match (l, r) {
            (Status::Free, _) | (_, Status::Free) => true,
            (Status::Lower, Status::Upper) => signs[g] > 0.0,
            (Status::Upper, Status::Lower) => signs[g] < 0.0,
            _ => false,
        };
        if !ok {
            return false;
        }
    }
    true
}

fn solve_pattern(
    setup: &Setup,
    groups: &[Vec<usize>],
    group_cols: &[DVector<f64>],
    signs: &[f64],
    st: &[usize],
    statuses: &[Status],
) -> Option<DVector<f64>> {
    let m = setup.a.nrows();
    let free: Vec<usize> = (0..groups.len())
        .filter(|&g| statuses[st[g]] == Status::Free)
        .collect();
    let p = 1 + free.len();
    let mut a_red = DMatrix::zeros(m, p);
    a_red.set_column(0, &setup.a.column(0));
    for (c, &g) in free.iter().enumerate() {
        a_red.set_column(c + 1, &group_cols[g]);
    }
    let mut y_red = setup.y.clone();
    let mut values = vec![0.0; groups.len()];
    for g in 0..groups.len() {
        match statuses[st[g]] {
            Status::Lower => values[g] = setup.lo,
            Status::Upper => values[g] = setup.hi,
            Status::Free => continue,
        }
        y_red -= &group_cols[g] * values[g];
    }
    // lambda * sum_b sign_b (v_{b+1} - v_b): coefficient of each free group
    let mut lin = DVector::zeros(p);
    for (c, &g) in free.iter().enumerate() {
        let mut coef = 0.0;
        if g > 0 {
            coef += signs[g - 1];
        }
        if g < signs.len() {
            coef -= signs[g];
        }
        lin[c + 1] = setup.lambda * coef;
    }
    let q = a_red.transpose() * &a_red;
    let rhs = a_red.transpose() * &y_red - lin * 0.5;
    let w = match q.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = q.clone().svd(true, true);
            let eps = 1e-12 * svd.singular_values.max().max(1.0);
            svd.solve(&rhs, eps).ok()?
        }
    };
    if (&q * &w - &rhs).norm() > CONSISTENCY_TOL * (1.0 + rhs.norm()) {
        return None;
    }

    for (c, &g) in free.iter().enumerate() {
        values[g] = w[c + 1];
        if values[g] < setup.lo - CONSISTENCY_TOL || values[g] > setup.hi + CONSISTENCY_TOL {
            return None;
        }
    }
    for (b, &s) in signs.iter().enumerate() {
        if s * (values[b + 1] - values[b]) < -CONSISTENCY_TOL {
            return None;
        }
    }
    let mut z = DVector::zeros(setup.n_slopes + 1);
    z[0] = w[0];
    for (g, members) in groups.iter().enumerate() {
        for &i in members {
            z[i + 1] = values[g];
        }
    }
    setup.clip(&mut z);
    Some(z)
}
