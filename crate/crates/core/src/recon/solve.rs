use super::filters::FilterBank;
use super::image::Image;
use super::nonlinearity::{ChannelNonlinearity, Mode};
use super::operator::InverseProblem;
use crate::error::{Error, Result};
use crate::potential::{potential_from_derivative, PwQuadPotential};

fn check_arch(bank: &FilterBank, nl: &ChannelNonlinearity, mode: Mode) -> Result<()> {
    if nl.mode() != mode {
        return Err(Error::ModeMismatch {
            expected: mode.as_str(),
        });
    }
    if nl.channels() != bank.len() {
        return Err(Error::InvalidArgument(format!(
            "{} channel scales for {} filters",
            nl.channels(),
            bank.len()
        )));
    }
    Ok(())
}

/// `x - gamma (sum_i W_i^T psi_i(W_i x) + H^T (H x - y))`
pub fn steepest_descent_step(
    x: &Image,
    problem: &InverseProblem,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
) -> Result<Image> {
    check_arch(bank, nl, Mode::Derivative)?;
    x.check_shape(problem.y())?;
    Ok(descent_step(x, problem, bank, nl))
}

fn descent_step(x: &Image, problem: &InverseProblem, bank: &FilterBank, nl: &ChannelNonlinearity) -> Image {
    let mut grad = problem.data_gradient(x);
    for i in 0..bank.len() {
        let act = bank.apply_channel(i, x).map(|u| nl.eval(i, u));
        grad.axpy(1.0, &bank.adjoint_channel(i, &act));
    }
    let mut out = x.clone();
    out.axpy(-problem.gamma(), &grad);
    out
}

/// `1/2 ||y - H x||^2 + sum_i sum_p Phi(alpha_i (W_i x)_p) / alpha_i^2` with
/// `Phi' = psi`.
pub fn variational_objective(
    x: &Image,
    problem: &InverseProblem,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    potential: &PwQuadPotential,
) -> f64 {
    let mut total = problem.data_term(x);
    for (i, &a) in nl.alphas().iter().enumerate() {
        let u = bank.apply_channel(i, x);
        total += u.data().iter().map(|&v| potential.eval(a * v)).sum::<f64>() / (a * a);
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentRun {
    pub x: Image,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the profile has negative slopes large enough that the
    /// objective may be nonconvex (`rho ||W||^2 >= 1`).
    pub weak_convexity_warning: bool,
}

/// Gradient descent from `x0 = H^T y`, stopping once the relative change of
/// the objective drops below `tol`.
pub fn run_steepest_descent(
    problem: &InverseProblem,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    iters: usize,
    tol: f64,
) -> Result<DescentRun> {
    check_arch(bank, nl, Mode::Derivative)?;
    let potential = potential_from_derivative(nl.profile());
    let rho = (-nl.profile().slope_range().0).max(0.0);
    let w2 = bank.spectral_norm_bound().powi(2);
    let weak_convexity_warning = rho > 0.0 && rho * w2 >= 1.0;

    let mut x = problem.op().adjoint(problem.y());
    let mut prev = variational_objective(&x, problem, bank, nl, &potential);
    let mut trace = vec![prev];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..iters {
        x = descent_step(&x, problem, bank, nl);
        iterations += 1;
        let cur = variational_objective(&x, problem, bank, nl, &potential);
        trace.push(cur);
        if (prev - cur).abs() <= tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev = cur;
    }
    Ok(DescentRun {
        x,
        objective_trace: trace,
        iterations,
        converged,
        weak_convexity_warning,
    })
}

/// Effective gradient Lipschitz constant of `z -> 1/2 ||y - H W z||^2`.
fn prox_lipschitz(problem: &InverseProblem, bank: &FilterBank) -> f64 {
    problem.lipschitz() * bank.spectral_norm_bound().powi(2)
}

/// Synthesis `x = sum_i W_i z_i`.
pub fn synthesize(bank: &FilterBank, z: &[Image]) -> Image {
    let mut x = bank.apply_channel(0, &z[0]);
    for (i, zi) in z.iter().enumerate().skip(1) {
        x.axpy(1.0, &bank.apply_channel(i, zi));
    }
    x
}

/// `z_i <- f_i(z_i - (1/L) W_i^T H^T (H W z - y))`
pub fn prox_grad_step(
    z: &[Image],
    problem: &InverseProblem,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
) -> Result<Vec<Image>> {
    check_arch(bank, nl, Mode::Prox)?;
    if z.len() != bank.len() {
        return Err(Error::LengthMismatch {
            expected: bank.len(),
            got: z.len(),
        });
    }
    for zi in z {
        zi.check_shape(problem.y())?;
    }
    Ok(prox_step(z, problem, bank, nl))
}

fn prox_step(z: &[Image], problem: &InverseProblem, bank: &FilterBank, nl: &ChannelNonlinearity) -> Vec<Image> {
    let l = prox_lipschitz(problem, bank);
    let g = problem.data_gradient(&synthesize(bank, z));
    z.iter()
        .enumerate()
        .map(|(i, zi)| {
            let mut v = zi.clone();
            if l > 0.0 {
                v.axpy(-1.0 / l, &bank.adjoint_channel(i, &g));
            }
            v.map(|s| nl.eval(i, s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxGradRun {
    pub z: Vec<Image>,
    pub x: Image,
    /// `||z_{k+1} - z_k||` per iteration.
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Proximal gradient from `z0 = W^T H^T y` until the fixed-point residual
/// drops to `tol`.
pub fn run_prox_grad(
    problem: &InverseProblem,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    iters: usize,
    tol: f64,
) -> Result<ProxGradRun> {
    check_arch(bank, nl, Mode::Prox)?;
    let hty = problem.op().adjoint(problem.y());
    let mut z: Vec<Image> = (0..bank.len()).map(|i| bank.adjoint_channel(i, &hty)).collect();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..iters {
        let next = prox_step(&z, problem, bank, nl);
        iterations += 1;
        let res = next
            .iter()
            .zip(&z)
            .map(|(a, b)| a.sub(b).norm_sq())
            .sum::<f64>()
            .sqrt();
        z = next;
        trace.push(res);
        if res <= tol {
            converged = true;
            break;
        }
    }
    let x = synthesize(bank, &z);
    Ok(ProxGradRun {
        z,
        x,
        residual_trace: trace,
        iterations,
        converged,
    })
}
