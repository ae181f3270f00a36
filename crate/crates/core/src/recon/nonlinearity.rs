use crate::error::{Error, Result};
use crate::pwl::NodalSpline;
use crate::slope::classify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// The profile is the derivative of a potential (gradient descent).
    Derivative,
    /// The profile is a proximal map (proximal gradient).
    Prox,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Derivative => "derivative",
            Mode::Prox => "prox",
        }
    }
}

/// Shared profile `psi` with per-channel maps `psi_i(z) = psi(alpha_i z) / alpha_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelNonlinearity {
    profile: NodalSpline,
    alphas: Vec<f64>,
    mode: Mode,
}

impl ChannelNonlinearity {
    pub fn new(profile: NodalSpline, alphas: Vec<f64>, mode: Mode) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidArgument("at least one channel scale is required".into()));
        }
        if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidArgument(format!("channel scales must be > 0, got {a}")));
        }
        if mode == Mode::Prox && !classify(&profile).nondecreasing {
            return Err(Error::NotNondecreasing(profile.slope_range().0));
        }
        Ok(Self {
            profile,
            alphas,
            mode,
        })
    }

    pub fn profile(&self) -> &NodalSpline {
        &self.profile
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn channels(&self) -> usize {
        self.alphas.len()
    }

    pub fn with_profile(&self, profile: NodalSpline) -> Result<Self> {
        Self::new(profile, self.alphas.clone(), self.mode)
    }

    pub fn with_alphas(&self, alphas: Vec<f64>) -> Result<Self> {
        Self::new(self.profile.clone(), alphas, self.mode)
    }

    pub fn eval(&self, i: usize, z: f64) -> f64 {
        let a = self.alphas[i];
        self.profile.eval(a * z) / a
    }

    /// `d psi_i / dz` (right-continuous at knots).
    pub fn slope(&self, i: usize, z: f64) -> f64 {
        self.profile.local_slope(self.alphas[i] * z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::Grid;

    #[test]
    fn channel_scaling() {
        let g = Grid::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let relu = NodalSpline::new(g, vec![0.0, 0.0, 1.0]).unwrap();
        let nl = ChannelNonlinearity::new(relu.clone(), vec![1.0, 2.0], Mode::Derivative).unwrap();
        assert_eq!(nl.eval(0, 0.5), 0.5);
        // psi(2 * 0.5) / 2
        assert_eq!(nl.eval(1, 0.5), 0.5);
        assert_eq!(nl.eval(1, 3.0), 3.0);
        assert_eq!(nl.slope(1, -0.25), 0.0);
        assert!(ChannelNonlinearity::new(relu.clone(), vec![0.0], Mode::Derivative).is_err());
        assert!(ChannelNonlinearity::new(relu, vec![], Mode::Derivative).is_err());
    }

    #[test]
    fn prox_mode_needs_nondecreasing() {
        let g = Grid::new(vec![0.0, 1.0]).unwrap();
        let dec = NodalSpline::new(g, vec![1.0, 0.0]).unwrap();
        assert!(ChannelNonlinearity::new(dec.clone(), vec![1.0], Mode::Derivative).is_ok());
        assert!(matches!(
            ChannelNonlinearity::new(dec, vec![1.0], Mode::Prox),
            Err(Error::NotNondecreasing(_))
        ));
    }
}
