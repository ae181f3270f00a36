//! Command-line front end. Exit codes: 0 ok, 2 input error, 3 non-convergence,
//! 4 precondition failure, 5 scale limit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fit::{fit, FitResult};
use crate::io::{self, ModelBundle};
use crate::potential::{
    numeric_prox_oracle, potential_from_derivative, potential_from_prox, reweight_prox,
    OracleConfig,
};
use crate::pwl::PwlCurve;
use crate::recon::{
    psnr, run_prox_grad, run_steepest_descent, train_unrolled, Image, InverseProblem, Mode,
    TrainConfig,
};
use crate::slope::{project_slopes, SlopeBounds};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;
pub const EXIT_PRECONDITION: u8 = 4;
pub const EXIT_SCALE: u8 = 5;

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "SPLINETOOL_THREADS";

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::DidNotConverge(_) => EXIT_NO_CONVERGENCE,
        Error::NotNondecreasing(_)
        | Error::FlatBoundarySegment
        | Error::ModeMismatch { .. }
        | Error::LambdaOutOfRange { .. }
        | Error::WeakConvexityTooLarge(_)
        | Error::NotMonotone(_) => EXIT_PRECONDITION,
        Error::ScaleTooLarge(_) | Error::TooLarge { .. } => EXIT_SCALE,
        _ => EXIT_INPUT,
    }
}

#[derive(Debug, Parser)]
#[command(name = "splinetool", version, about = "Slope-constrained linear splines, spline potentials and proximal maps")]
pub struct Cli {
    /// Seed for all randomness (noise generation, initialization).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a slope-constrained TV2 spline to data.
    Fit(FitArgs),
    /// Project a spline onto slope bounds.
    Project(ProjectArgs),
    /// Build the quadratic-spline potential of a spline.
    Potential(PotentialArgs),
    /// Reweight a proximal map to a new regularization weight.
    ProxReweight(ReweightArgs),
    /// Evaluate the proximal map of a potential by direct minimization.
    ProxOracle(OracleArgs),
    /// Denoise a signal with a model bundle.
    Denoise(DenoiseArgs),
    /// Train the profile of a model bundle on clean/noisy pairs.
    Train(TrainArgs),
    /// Report PSNR of a model over clean/noisy pairs.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    /// Lower slope bound (number or -inf).
    #[arg(long, allow_hyphen_values = true)]
    pub smin: Option<String>,
    /// Upper slope bound (number or +inf).
    #[arg(long, allow_hyphen_values = true)]
    pub smax: Option<String>,
}

impl BoundArgs {
    fn apply(&self, base: SlopeBounds) -> Result<SlopeBounds> {
        let lo = match &self.smin {
            Some(s) => io::parse_bound(s)?,
            None => base.s_min(),
        };
        let hi = match &self.smax {
            Some(s) => io::parse_bound(s)?,
            None => base.s_max(),
        };
        SlopeBounds::new(lo, hi)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Problem JSON.
    #[arg(long)]
    pub problem: PathBuf,
    /// Result JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// CSV of the fitted curve on a dense grid plus data residuals.
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[command(flatten)]
    pub bounds: BoundArgs,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub spline: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Bounds JSON; --smin/--smax override its entries.
    #[arg(long)]
    pub bounds_json: Option<PathBuf>,
    #[command(flatten)]
    pub bounds: BoundArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PotentialMode {
    Derivative,
    Prox,
}

#[derive(Debug, Args)]
pub struct PotentialArgs {
    #[arg(long)]
    pub spline: PathBuf,
    #[arg(long, value_enum)]
    pub mode: PotentialMode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReweightArgs {
    /// Proximal map as spline JSON or curve JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub lambda: f64,
    /// Output curve JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Potential JSON.
    #[arg(long)]
    pub potential: PathBuf,
    /// Points at which to evaluate the prox.
    #[arg(long = "x", required = true, num_args = 1.., allow_hyphen_values = true)]
    pub xs: Vec<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub halfwidth: Option<f64>,
    /// CSV output (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Descent step (derivative-mode models).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Noisy signal (.csv or binary).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Objective (derivative mode) or fixed-point residual (prox mode) per iteration.
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    #[command(flatten)]
    pub solve: SolveArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Initial model bundle.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub clean: Vec<PathBuf>,
    /// Noisy counterparts; generated from --sigma and --seed when omitted.
    #[arg(long, num_args = 1..)]
    pub noisy: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub step: f64,
    #[arg(long, default_value_t = 3)]
    pub unroll: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Weight of the TV2 penalty on the profile.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long)]
    pub learn_alphas: bool,
    #[command(flatten)]
    pub bounds: BoundArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub clean: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    pub noisy: Vec<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub peak: f64,
    #[arg(long)]
    pub psnr_csv: PathBuf,
    #[arg(long)]
    pub trace_csv: Option<PathBuf>,
    #[command(flatten)]
    pub solve: SolveArgs,
}

/// Caps the global worker pool from the environment, if set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Project(a) => cmd_project(&a),
        Command::Potential(a) => cmd_potential(&a),
        Command::ProxReweight(a) => cmd_prox_reweight(&a),
        Command::ProxOracle(a) => cmd_prox_oracle(&a),
        Command::Denoise(a) => cmd_denoise(&a),
        Command::Train(a) => cmd_train(&a, cli.seed),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let (problem, mut cfg) = io::problem_from_json(&io::read_json(&a.problem)?)?;
    let mut problem = problem;
    if let Some(l) = a.lambda {
        problem = problem.with_lambda(l)?;
    }
    if a.bounds.smin.is_some() || a.bounds.smax.is_some() {
        let b = a.bounds.apply(problem.bounds())?;
        problem = crate::fit::FitProblem::new(
            problem.data().to_vec(),
            Some(problem.grid().clone()),
            problem.lambda(),
            b,
        )?;
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(n) = a.max_iters {
        cfg.max_iters = n;
    }
    let (result, err) = match fit(&problem, &cfg) {
        Ok(r) => (r, None),
        Err(Error::DidNotConverge(r)) => {
            let r = *r;
            (r.clone(), Some(Error::DidNotConverge(Box::new(r))))
        }
        Err(e) => return Err(e),
    };
    io::write_json(&a.out, &io::fit_result_to_json(&result, err.is_none()))?;
    if let Some(p) = &a.plot_csv {
        io::write_text(p, &fit_plot_csv(&problem, &result))?;
    }
    err.map_or(Ok(()), Err)
}

const PLOT_POINTS: usize = 401;

fn fit_plot_csv(problem: &crate::fit::FitProblem, r: &FitResult) -> String {
    let (lo, hi) = (problem.grid().first(), problem.grid().last());
    let mut s = String::from("kind,x,fit,residual\n");
    for i in 0..PLOT_POINTS {
        let x = lo + (hi - lo) * i as f64 / (PLOT_POINTS - 1) as f64;
        let _ = writeln!(s, "curve,{},{},", io::fmt_f64(x), io::fmt_f64(r.spline.eval(x)));
    }
    for &(x, y) in problem.data() {
        let f = r.spline.eval(x);
        let _ = writeln!(s, "data,{},{},{}", io::fmt_f64(x), io::fmt_f64(f), io::fmt_f64(y - f));
    }
    s
}

fn cmd_project(a: &ProjectArgs) -> Result<()> {
    let spline = io::spline_from_json(&io::read_json(&a.spline)?)?;
    let base = match &a.bounds_json {
        Some(p) => io::bounds_from_json(&io::read_json(p)?)?,
        None => SlopeBounds::unbounded(),
    };
    let bounds = a.bounds.apply(base)?;
    io::write_json(&a.out, &io::spline_to_json(&project_slopes(&spline, &bounds)))
}

fn cmd_potential(a: &PotentialArgs) -> Result<()> {
    let spline = io::spline_from_json(&io::read_json(&a.spline)?)?;
    let pot = match a.mode {
        PotentialMode::Derivative => potential_from_derivative(&spline),
        PotentialMode::Prox => potential_from_prox(&spline)?,
    };
    io::write_json(&a.out, &io::potential_to_json(&pot))
}

fn read_prox_curve(path: &Path) -> Result<PwlCurve> {
    let v = io::read_json(path)?;
    if v.get("points").is_some() {
        io::curve_from_json(&v)
    } else {
        Ok(io::spline_from_json(&v)?.to_curve().minimized())
    }
}

fn cmd_prox_reweight(a: &ReweightArgs) -> Result<()> {
    let curve = read_prox_curve(&a.input)?;
    io::write_json(&a.out, &io::curve_to_json(&reweight_prox(&curve, a.lambda)?))
}

fn cmd_prox_oracle(a: &OracleArgs) -> Result<()> {
    let pot = io::potential_from_json(&io::read_json(&a.potential)?)?;
    let mut cfg = OracleConfig::default();
    if let Some(s) = a.step {
        cfg.step = s;
    }
    cfg.halfwidth = a.halfwidth;
    let mut s = String::from("x,prox\n");
    for &x in &a.xs {
        let p = numeric_prox_oracle(&pot, x, &cfg)?;
        let _ = writeln!(s, "{},{}", io::fmt_f64(x), io::fmt_f64(p));
    }
    match &a.out {
        Some(p) => io::write_text(p, &s),
        None => {
            print!("{s}");
            Ok(())
        }
    }
}

struct Denoised {
    x: Image,
    trace: Vec<f64>,
}

fn denoise(model: &ModelBundle, noisy: &Image, solve: &SolveArgs) -> Result<Denoised> {
    match model.nl.mode() {
        Mode::Derivative => {
            let p = InverseProblem::denoising(noisy.clone(), solve.gamma)?;
            let run = run_steepest_descent(&p, &model.bank, &model.nl, solve.max_iters, solve.tol)?;
            Ok(Denoised {
                x: run.x,
                trace: run.objective_trace,
            })
        }
        Mode::Prox => {
            let p = InverseProblem::denoising(noisy.clone(), 1.0)?;
            let run = run_prox_grad(&p, &model.bank, &model.nl, solve.max_iters, solve.tol)?;
            Ok(Denoised {
                x: run.x,
                trace: run.residual_trace,
            })
        }
    }
}

fn cmd_denoise(a: &DenoiseArgs) -> Result<()> {
    let model = io::model_from_json(&io::read_json(&a.model)?)?;
    let noisy = io::read_signal(&a.input)?;
    let out = denoise(&model, &noisy, &a.solve)?;
    io::write_signal(&a.output, &out.x)?;
    if let Some(p) = &a.trace_csv {
        let mut s = String::from("iteration,value\n");
        for (i, v) in out.trace.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", io::fmt_f64(*v));
        }
        io::write_text(p, &s)?;
    }
    Ok(())
}

fn read_signals(paths: &[PathBuf]) -> Result<Vec<Image>> {
    paths.iter().map(|p| io::read_signal(p)).collect()
}

fn pair_up(clean: Vec<Image>, noisy: Vec<Image>) -> Result<Vec<(Image, Image)>> {
    if clean.len() != noisy.len() {
        return Err(Error::LengthMismatch {
            expected: clean.len(),
            got: noisy.len(),
        });
    }
    Ok(clean.into_iter().zip(noisy).collect())
}

fn cmd_train(a: &TrainArgs, seed: u64) -> Result<()> {
    let model = io::model_from_json(&io::read_json(&a.model)?)?;
    let clean = read_signals(&a.clean)?;
    let noisy = if a.noisy.is_empty() {
        if !(a.sigma >= 0.0 && a.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {}", a.sigma)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        clean
            .iter()
            .map(|c| {
                c.map(|v| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    v + a.sigma * z
                })
            })
            .collect()
    } else {
        read_signals(&a.noisy)?
    };
    let data = pair_up(clean, noisy)?;
    let cfg = TrainConfig {
        step: a.step,
        epochs: a.epochs,
        lambda_tv2: a.lambda,
        bounds: a.bounds.apply(SlopeBounds::unbounded())?,
        unroll: a.unroll,
        gamma: a.gamma,
        learn_alphas: a.learn_alphas,
    };
    let report = train_unrolled(&data, &model.bank, &model.nl, &cfg)?;
    let trained = ModelBundle {
        bank: model.bank,
        nl: report.nl,
    };
    io::write_json(&a.out, &io::model_to_json(&trained))?;
    if let Some(p) = &a.loss_csv {
        let mut s = String::from("epoch,loss\n");
        for (i, v) in report.loss_trace.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", io::fmt_f64(*v));
        }
        io::write_text(p, &s)?;
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let model = io::model_from_json(&io::read_json(&a.model)?)?;
    let data = pair_up(read_signals(&a.clean)?, read_signals(&a.noisy)?)?;
    let mut table = String::from("image,psnr_noisy,psnr_denoised\n");
    let mut trace = String::from("image,iteration,value\n");
    for (i, (clean, noisy)) in data.iter().enumerate() {
        let out = denoise(&model, noisy, &a.solve)?;
        let before = psnr(clean, noisy, a.peak)?;
        let after = psnr(clean, &out.x, a.peak)?;
        let _ = writeln!(table, "{i},{},{}", io::fmt_f64(before), io::fmt_f64(after));
        for (k, v) in out.trace.iter().enumerate() {
            let _ = writeln!(trace, "{i},{k},{}", io::fmt_f64(*v));
        }
    }
    io::write_text(&a.psnr_csv, &table)?;
    if let Some(p) = &a.trace_csv {
        io::write_text(p, &trace)?;
    }
    Ok(())
}
