//! Small-scale iterative reconstruction with spline nonlinearities:
//! gradient descent with learned derivatives, proximal gradient with learned
//! proximal maps, and an unrolled training loop.

mod filters;
mod image;
mod nonlinearity;
mod operator;
mod solve;
mod train;

pub use filters::{Boundary, FilterBank, Kernel, NORM_CHECK_TOL};
pub use image::{psnr, Image};
pub use nonlinearity::{ChannelNonlinearity, Mode};
pub use operator::{ForwardOperator, InverseProblem};
pub use solve::{
    prox_grad_step, run_prox_grad, run_steepest_descent, steepest_descent_step, synthesize,
    variational_objective, DescentRun, ProxGradRun,
};
pub use train::{
    check_scale, loss_and_gradient, train_unrolled, tv2_subgradient, Gradient, TrainConfig,
    TrainReport, MAX_PROFILE_NODES, MAX_SIGNAL_SIDE, MAX_UNROLL,
};
