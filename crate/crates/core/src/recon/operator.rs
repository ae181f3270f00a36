use super::filters::{Boundary, Kernel};
use super::image::Image;
use crate::error::{Error, Result};

/// Linear measurement operator `H` with matrix-free apply and adjoint.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOperator {
    Identity,
    Blur { kernel: Kernel, boundary: Boundary },
    /// Keeps the samples where the mask is true and zeroes the rest.
    Mask(Vec<bool>),
}

impl ForwardOperator {
    pub fn apply(&self, x: &Image) -> Image {
        match self {
            Self::Identity => x.clone(),
            Self::Blur { kernel, boundary } => kernel.apply(x, *boundary),
            Self::Mask(m) => {
                let mut out = x.clone();
                for (v, &keep) in out.data_mut().iter_mut().zip(m) {
                    if !keep {
                        *v = 0.0;
                    }
                }
                out
            }
        }
    }

    pub fn adjoint(&self, u: &Image) -> Image {
        match self {
            Self::Identity | Self::Mask(_) => self.apply(u),
            Self::Blur { kernel, boundary } => kernel.adjoint(u, *boundary),
        }
    }

    /// Upper bound on `||H||`. For a blur this is the l1 norm of the taps.
    pub fn norm_bound(&self) -> f64 {
        match self {
            Self::Identity => 1.0,
            Self::Blur { kernel, .. } => kernel.l1_norm(),
            Self::Mask(m) => {
                if m.iter().any(|&k| k) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn check(&self, shape: (usize, usize)) -> Result<()> {
        if let Self::Mask(m) = self {
            if m.len() != shape.0 * shape.1 {
                return Err(Error::LengthMismatch {
                    expected: shape.0 * shape.1,
                    got: m.len(),
                });
            }
        }
        Ok(())
    }
}

/// `y = H x` with data-gradient Lipschitz constant `L = ||H||^2` and step `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseProblem {
    y: Image,
    op: ForwardOperator,
    lipschitz: f64,
    gamma: f64,
}

impl InverseProblem {
    pub fn new(y: Image, op: ForwardOperator, gamma: f64) -> Result<Self> {
        op.check(y.shape())?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be >= 0, got {gamma}")));
        }
        let n = op.norm_bound();
        Ok(Self {
            y,
            op,
            lipschitz: n * n,
            gamma,
        })
    }

    pub fn denoising(y: Image, gamma: f64) -> Result<Self> {
        Self::new(y, ForwardOperator::Identity, gamma)
    }

    pub fn y(&self) -> &Image {
        &self.y
    }

    pub fn op(&self) -> &ForwardOperator {
        &self.op
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.y.clone(), self.op.clone(), gamma)
    }

    /// `H^T (H x - y)`
    pub fn data_gradient(&self, x: &Image) -> Image {
        let r = self.op.apply(x).sub(&self.y);
        self.op.adjoint(&r)
    }

    pub fn data_term(&self, x: &Image) -> f64 {
        0.5 * self.op.apply(x).sub(&self.y).norm_sq()
    }
}
