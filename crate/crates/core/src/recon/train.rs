//! Unrolled denoiser training (`H = I`) by projected gradient descent on the
//! nodal values of the shared profile and, optionally, the channel scales.
//!
//! Loss: `mean_s 1/2 ||x_K(noisy_s) - clean_s||^2 + lambda_tv2 * tv2(psi)`.

use rayon::prelude::*;

use super::filters::FilterBank;
use super::image::Image;
use super::nonlinearity::{ChannelNonlinearity, Mode};
use super::solve::synthesize;
use crate::error::{Error, Result};
use crate::pwl::NodalSpline;
use crate::slope::{project_slopes, SlopeBounds};

pub const MAX_SIGNAL_SIDE: usize = 64;
pub const MAX_UNROLL: usize = 20;
pub const MAX_PROFILE_NODES: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub step: f64,
    pub epochs: usize,
    pub lambda_tv2: f64,
    pub bounds: SlopeBounds,
    /// Number of unrolled iterations `K`.
    pub unroll: usize,
    /// Descent step `gamma` (derivative mode only).
    pub gamma: f64,
    pub learn_alphas: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            step: 1e-2,
            epochs: 10,
            lambda_tv2: 0.0,
            bounds: SlopeBounds::unbounded(),
            unroll: 3,
            gamma: 0.5,
            learn_alphas: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
    pub alphas: Vec<f64>,
}

impl Gradient {
    fn zeros(nodes: usize, channels: usize) -> Self {
        Self {
            values: vec![0.0; nodes],
            alphas: vec![0.0; channels],
        }
    }

    fn add(&mut self, other: &Self) {
        self.values.iter_mut().zip(&other.values).for_each(|(a, b)| *a += b);
        self.alphas.iter_mut().zip(&other.alphas).for_each(|(a, b)| *a += b);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub nl: ChannelNonlinearity,
    /// Loss at the start of each epoch, then the final loss.
    pub loss_trace: Vec<f64>,
}

pub fn check_scale(dataset: &[(Image, Image)], nl: &ChannelNonlinearity, unroll: usize) -> Result<()> {
    if unroll > MAX_UNROLL {
        return Err(Error::ScaleTooLarge(format!("unroll depth {unroll} > {MAX_UNROLL}")));
    }
    if nl.profile().len() > MAX_PROFILE_NODES {
        return Err(Error::ScaleTooLarge(format!(
            "profile grid has {} nodes > {MAX_PROFILE_NODES}",
            nl.profile().len()
        )));
    }
    for (clean, _) in dataset {
        if clean.rows() > MAX_SIGNAL_SIDE || clean.cols() > MAX_SIGNAL_SIDE {
            return Err(Error::ScaleTooLarge(format!(
                "signal {}x{} exceeds {MAX_SIGNAL_SIDE}x{MAX_SIGNAL_SIDE}",
                clean.rows(),
                clean.cols()
            )));
        }
    }
    Ok(())
}

fn validate(
    dataset: &[(Image, Image)],
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("empty training set".into()));
    }
    check_scale(dataset, nl, cfg.unroll)?;
    for (clean, noisy) in dataset {
        clean.check_shape(noisy)?;
    }
    if nl.channels() != bank.len() {
        return Err(Error::InvalidArgument(format!(
            "{} channel scales for {} filters",
            nl.channels(),
            bank.len()
        )));
    }
    if !(cfg.step >= 0.0 && cfg.lambda_tv2 >= 0.0 && cfg.gamma >= 0.0) {
        return Err(Error::InvalidArgument("step, lambda_tv2 and gamma must be >= 0".into()));
    }
    if nl.mode() == Mode::Prox && cfg.bounds.s_min() < 0.0 {
        return Err(Error::InvalidArgument(
            "prox-mode training needs bounds with s_min >= 0".into(),
        ));
    }
    Ok(())
}

/// Accumulates the parameter gradient of `sum_p coeff_p * psi_i(input_p)`.
fn accumulate_params(
    nl: &ChannelNonlinearity,
    i: usize,
    input: &Image,
    coeff: &Image,
    grad: &mut Gradient,
) {
    let profile = nl.profile();
    let a = nl.alphas()[i];
    for (&u, &c) in input.data().iter().zip(coeff.data()) {
        if c == 0.0 {
            continue;
        }
        let au = a * u;
        let (cell, left, right) = profile.grid().active(au);
        grad.values[cell] += c * left / a;
        grad.values[cell + 1] += c * right / a;
        let slope = profile.local_slope(au);
        grad.alphas[i] += c * (u * slope / a - profile.eval(au) / (a * a));
    }
}

fn sample_derivative(
    clean: &Image,
    noisy: &Image,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> (f64, Gradient) {
    let gamma = cfg.gamma;
    let mut xs = vec![noisy.clone()];
    let mut pre: Vec<Vec<Image>> = Vec::with_capacity(cfg.unroll);
    for _ in 0..cfg.unroll {
        let x = xs.last().unwrap();
        let u = bank.apply(x);
        let mut grad = x.sub(noisy);
        for (i, ui) in u.iter().enumerate() {
            grad.axpy(1.0, &bank.adjoint_channel(i, &ui.map(|v| nl.eval(i, v))));
        }
        let mut next = x.clone();
        next.axpy(-gamma, &grad);
        pre.push(u);
        xs.push(next);
    }
    let mut g = xs.last().unwrap().sub(clean);
    let loss = 0.5 * g.norm_sq();
    let mut out = Gradient::zeros(nl.profile().len(), nl.channels());
    for u in pre.iter().rev() {
        let mut next = g.clone();
        next.scale(1.0 - gamma);
        for (i, ui) in u.iter().enumerate() {
            let wg = bank.apply_channel(i, &g);
            let mut coeff = wg.clone();
            coeff.scale(-gamma);
            accumulate_params(nl, i, ui, &coeff, &mut out);
            let mut d = wg;
            for (dv, &uv) in d.data_mut().iter_mut().zip(ui.data()) {
                *dv *= nl.slope(i, uv);
            }
            next.axpy(-gamma, &bank.adjoint_channel(i, &d));
        }
        g = next;
    }
    (loss, out)
}

fn sample_prox(
    clean: &Image,
    noisy: &Image,
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> (f64, Gradient) {
    let l = bank.spectral_norm_bound().powi(2);
    let mut z: Vec<Image> = (0..bank.len()).map(|i| bank.adjoint_channel(i, noisy)).collect();
    let mut vs: Vec<Vec<Image>> = Vec::with_capacity(cfg.unroll);
    for _ in 0..cfg.unroll {
        let r = synthesize(bank, &z).sub(noisy);
        let v: Vec<Image> = z
            .iter()
            .enumerate()
            .map(|(i, zi)| {
                let mut vi = zi.clone();
                vi.axpy(-1.0 / l, &bank.adjoint_channel(i, &r));
                vi
            })
            .collect();
        z = v
            .iter()
            .enumerate()
            .map(|(i, vi)| vi.map(|s| nl.eval(i, s)))
            .collect();
        vs.push(v);
    }
    let gx = synthesize(bank, &z).sub(clean);
    let loss = 0.5 * gx.norm_sq();
    let mut gz: Vec<Image> = (0..bank.len()).map(|i| bank.adjoint_channel(i, &gx)).collect();
    let mut out = Gradient::zeros(nl.profile().len(), nl.channels());
    for v in vs.iter().rev() {
        let mut gv = Vec::with_capacity(v.len());
        for (i, vi) in v.iter().enumerate() {
            accumulate_params(nl, i, vi, &gz[i], &mut out);
            let mut d = gz[i].clone();
            for (dv, &s) in d.data_mut().iter_mut().zip(vi.data()) {
                *dv *= nl.slope(i, s);
            }
            gv.push(d);
        }
        let s = synthesize(bank, &gv);
        gz = gv
            .into_iter()
            .enumerate()
            .map(|(i, mut gi)| {
                gi.axpy(-1.0 / l, &bank.adjoint_channel(i, &s));
                gi
            })
            .collect();
    }
    (loss, out)
}

/// Subgradient of `tv2` with respect to the nodal values (zero at kinks).
pub fn tv2_subgradient(profile: &NodalSpline) -> Vec<f64> {
    let seg = profile.segment_slopes();
    let grid = profile.grid();
    let mut g = vec![0.0; profile.len()];
    for j in 1..seg.len() {
        let d = seg[j] - seg[j - 1];
        let sigma = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        if sigma == 0.0 {
            continue;
        }
        let (hj, hp) = (grid.spacing(j), grid.spacing(j - 1));
        g[j + 1] += sigma / hj;
        g[j] -= sigma / hj;
        g[j] -= sigma / hp;
        g[j - 1] += sigma / hp;
    }
    g
}

/// Training loss and its gradient. Per-sample work runs in parallel and is
/// reduced in sample order.
pub fn loss_and_gradient(
    dataset: &[(Image, Image)],
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> Result<(f64, Gradient)> {
    validate(dataset, bank, nl, cfg)?;
    Ok(loss_and_gradient_unchecked(dataset, bank, nl, cfg))
}

fn loss_and_gradient_unchecked(
    dataset: &[(Image, Image)],
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> (f64, Gradient) {
    let per_sample: Vec<(f64, Gradient)> = dataset
        .par_iter()
        .map(|(clean, noisy)| match nl.mode() {
            Mode::Derivative => sample_derivative(clean, noisy, bank, nl, cfg),
            Mode::Prox => sample_prox(clean, noisy, bank, nl, cfg),
        })
        .collect();
    let n = dataset.len() as f64;
    let mut loss = 0.0;
    let mut grad = Gradient::zeros(nl.profile().len(), nl.channels());
    for (l, g) in &per_sample {
        loss += l;
        grad.add(g);
    }
    loss /= n;
    grad.values.iter_mut().for_each(|v| *v /= n);
    grad.alphas.iter_mut().for_each(|v| *v /= n);
    if cfg.lambda_tv2 > 0.0 {
        loss += cfg.lambda_tv2 * nl.profile().tv2();
        for (g, t) in grad.values.iter_mut().zip(tv2_subgradient(nl.profile())) {
            *g += cfg.lambda_tv2 * t;
        }
    }
    (loss, grad)
}

/// Full-batch projected gradient descent; the profile is projected onto the
/// slope bounds after every update.
pub fn train_unrolled(
    dataset: &[(Image, Image)],
    bank: &FilterBank,
    nl: &ChannelNonlinearity,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    validate(dataset, bank, nl, cfg)?;
    let mut nl = nl.clone();
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    for _ in 0..cfg.epochs {
        let (loss, grad) = loss_and_gradient_unchecked(dataset, bank, &nl, cfg);
        trace.push(loss);
        if cfg.step == 0.0 {
            continue;
        }
        let values: Vec<f64> = nl
            .profile()
            .values()
            .iter()
            .zip(&grad.values)
            .map(|(v, g)| v - cfg.step * g)
            .collect();
        let profile = project_slopes(&nl.profile().with_values(values)?, &cfg.bounds);
        nl = nl.with_profile(profile)?;
        if cfg.learn_alphas {
            let alphas = nl
                .alphas()
                .iter()
                .zip(&grad.alphas)
                .map(|(a, g)| (a - cfg.step * g).max(0.5 * a))
                .collect();
            nl = nl.with_alphas(alphas)?;
        }
    }
    trace.push(loss_and_gradient_unchecked(dataset, bank, &nl, cfg).0);
    Ok(TrainReport { nl, loss_trace: trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::Grid;
    use crate::slope::classify;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(seed: u64, n: usize, side: usize, sigma: f64) -> Vec<(Image, Image)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let c = rng.gen_range(-0.5..0.5);
                let clean = Image::from_fn(side, side, |_, _| c);
                let noisy = clean.map(|v| v + sigma * rng.gen_range(-1.0..1.0));
                (clean, noisy)
            })
            .collect()
    }

    fn linear_profile(nodes: usize, slope: f64) -> NodalSpline {
        NodalSpline::from_fn(Grid::uniform(-1.0, 1.0, nodes).unwrap(), |x| slope * x).unwrap()
    }

    #[test]
    fn tv2_subgradient_matches_difference_quotient() {
        let g = Grid::new(vec![0.0, 0.5, 1.5, 2.0, 3.0]).unwrap();
        let sp = NodalSpline::new(g, vec![0.0, 1.0, 0.3, 0.9, -0.2]).unwrap();
        let sub = tv2_subgradient(&sp);
        let h = 1e-7;
        for n in 0..sp.len() {
            let mut v = sp.values().to_vec();
            v[n] += h;
            let up = sp.with_values(v.clone()).unwrap().tv2();
            v[n] -= 2.0 * h;
            let dn = sp.with_values(v).unwrap().tv2();
            assert!(((up - dn) / (2.0 * h) - sub[n]).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_step_keeps_profile() {
        let data = dataset(1, 3, 6, 0.1);
        let nl = ChannelNonlinearity::new(linear_profile(11, 0.3), vec![1.0, 1.0], Mode::Derivative)
            .unwrap();
        let cfg = TrainConfig {
            step: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        let r = train_unrolled(&data, &FilterBank::finite_differences_2d(), &nl, &cfg).unwrap();
        assert_eq!(r.nl, nl);
        assert_eq!(r.loss_trace.len(), 4);
    }

    #[test]
    fn constant_signals_loss_decreases_and_bounds_hold() {
        let data = dataset(2, 4, 8, 0.2);
        let nl = ChannelNonlinearity::new(linear_profile(21, 0.0), vec![1.0, 1.0], Mode::Derivative)
            .unwrap();
        let cfg = TrainConfig {
            step: 0.01,
            epochs: 5,
            bounds: SlopeBounds::firmly_nonexpansive(),
            ..TrainConfig::default()
        };
        let r = train_unrolled(&data, &FilterBank::finite_differences_2d(), &nl, &cfg).unwrap();
        for w in r.loss_trace.windows(2) {
            assert!(w[1] < w[0], "{:?}", r.loss_trace);
        }
        assert!(classify(r.nl.profile()).firmly_nonexpansive);
    }

    #[test]
    fn scale_limits() {
        let big = vec![(Image::zeros(65, 2), Image::zeros(65, 2))];
        let nl = ChannelNonlinearity::new(linear_profile(5, 0.0), vec![1.0], Mode::Derivative)
            .unwrap();
        let cfg = TrainConfig::default();
        let bank = FilterBank::identity();
        assert!(matches!(
            train_unrolled(&big, &bank, &nl, &cfg),
            Err(Error::ScaleTooLarge(_))
        ));
        let small = vec![(Image::zeros(2, 2), Image::zeros(2, 2))];
        let deep = TrainConfig {
            unroll: 21,
            ..cfg
        };
        assert!(matches!(
            train_unrolled(&small, &bank, &nl, &deep),
            Err(Error::ScaleTooLarge(_))
        ));
        let wide = ChannelNonlinearity::new(linear_profile(102, 0.0), vec![1.0], Mode::Derivative)
            .unwrap();
        assert!(matches!(
            train_unrolled(&small, &bank, &wide, &cfg),
            Err(Error::ScaleTooLarge(_))
        ));
    }

    fn fd_check(nl: &ChannelNonlinearity, bank: &FilterBank, data: &[(Image, Image)], cfg: &TrainConfig) {
        let (_, grad) = loss_and_gradient(data, bank, nl, cfg).unwrap();
        let h = 1e-5;
        for n in 0..nl.profile().len() {
            let mut v = nl.profile().values().to_vec();
            v[n] += h;
            let up = loss_and_gradient(data, bank, &nl.with_profile(nl.profile().with_values(v.clone()).unwrap()).unwrap(), cfg).unwrap().0;
            v[n] -= 2.0 * h;
            let dn = loss_and_gradient(data, bank, &nl.with_profile(nl.profile().with_values(v).unwrap()).unwrap(), cfg).unwrap().0;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - grad.values[n]).abs() <= 1e-6 * (1.0 + fd.abs()), "node {n}: {fd} vs {}", grad.values[n]);
        }
        for i in 0..nl.channels() {
            let mut a = nl.alphas().to_vec();
            a[i] += h;
            let up = loss_and_gradient(data, bank, &nl.with_alphas(a.clone()).unwrap(), cfg).unwrap().0;
            a[i] -= 2.0 * h;
            let dn = loss_and_gradient(data, bank, &nl.with_alphas(a).unwrap(), cfg).unwrap().0;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - grad.alphas[i]).abs() <= 1e-6 * (1.0 + fd.abs()), "alpha {i}: {fd} vs {}", grad.alphas[i]);
        }
    }

    #[test]
    fn prox_mode_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<(Image, Image)> = (0..2)
            .map(|_| {
                let clean = Image::from_fn(5, 5, |_, _| rng.gen_range(-0.5..0.5));
                let noisy = clean.map(|v| v + 0.1 * rng.gen_range(-1.0..1.0));
                (clean, noisy)
            })
            .collect();
        let grid = Grid::uniform(-1.0, 1.0, 9).unwrap();
        let profile = NodalSpline::from_fn(grid, |x| 0.8 * x + 0.1 * (3.0 * x).sin()).unwrap();
        let nl = ChannelNonlinearity::new(profile, vec![0.9, 1.3], Mode::Prox).unwrap();
        let cfg = TrainConfig {
            unroll: 2,
            lambda_tv2: 0.0,
            bounds: SlopeBounds::monotone(),
            ..TrainConfig::default()
        };
        fd_check(&nl, &FilterBank::finite_differences_2d(), &data, &cfg);
    }

    #[test]
    fn derivative_mode_gradient_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<(Image, Image)> = (0..2)
            .map(|_| {
                let clean = Image::from_fn(4, 4, |_, _| rng.gen_range(-0.5..0.5));
                let noisy = clean.map(|v| v + 0.2 * rng.gen_range(-1.0..1.0));
                (clean, noisy)
            })
            .collect();
        let grid = Grid::uniform(-1.0, 1.0, 9).unwrap();
        let profile = NodalSpline::from_fn(grid, |x| 0.5 * x + 0.2 * (4.0 * x).sin()).unwrap();
        let nl = ChannelNonlinearity::new(profile, vec![1.5, 0.7], Mode::Derivative).unwrap();
        let cfg = TrainConfig {
            unroll: 3,
            ..TrainConfig::default()
        };
        fd_check(&nl, &FilterBank::finite_differences_2d(), &data, &cfg);
    }
}
