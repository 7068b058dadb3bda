//! Command-line front end. Each subcommand maps one-to-one onto a library
//! operation; results print as JSON (or a single CSV record with
//! `--format csv`). Usage errors exit 2 via clap, numerical failures and
//! failing verification verdicts exit 1.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::addone::{
    extreme_value_mean, quadratic_form_tail, verify_addone_identity,
    verify_inner_product_independence, verify_zj_marginal, FKind, IdentityVariant, Selector,
    TestReport, ZDist,
};
use crate::emit::{emit_json_summary, emit_svg, CsvSink, SvgSeries};
use crate::error::{Error, Result};
use crate::model::{decompose, Instance, WStarMode};
use crate::optimize::{gradient_descent, gradient_flow, AdamConfig, FlowField, Integrator};
use crate::probes::{
    annulus_min_ratio, certificate_hessian_ball, certificate_hessian_fixed,
    certificate_onepoint_ball, probe_onepoint, probe_q, Certificate,
};
use crate::rng::{rng_from_seed, splitmix64, unit_sphere_vec};
use crate::spectral::{min_eigen_dense, min_eigen_lanczos, DEFAULT_EIGEN_TOL};
use crate::sweep::{run_sweep, SweepConfig, SweepMetric, SweepRecord};

pub const THREADS_ENV: &str = "PHASEPROBE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "phaseprobe", version, about = "Landscape probes for phase retrieval")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Base seed for all randomness in the command.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Worker threads for sweeps (falls back to PHASEPROBE_THREADS, then 1).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Fixed reduction order and zeroed timings: byte-identical reruns.
    #[arg(long, global = true)]
    deterministic: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum WStarModeArg {
    CanonicalE1,
    RandomUnit,
}

impl From<WStarModeArg> for WStarMode {
    fn from(m: WStarModeArg) -> Self {
        match m {
            WStarModeArg::CanonicalE1 => WStarMode::CanonicalE1,
            WStarModeArg::RandomUnit => WStarMode::RandomUnit,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct InstanceArgs {
    /// Dimension d.
    #[arg(long)]
    d: usize,
    /// Explicit sample count n (overrides --ratio).
    #[arg(long)]
    n: Option<usize>,
    /// Sample ratio n/d.
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    #[arg(long, value_enum, default_value_t = WStarModeArg::CanonicalE1)]
    w_star_mode: WStarModeArg,
}

impl InstanceArgs {
    fn n(&self) -> usize {
        self.n.unwrap_or(((self.ratio * self.d as f64).round() as usize).max(1))
    }

    fn build(&self, seed: u64) -> Result<Instance> {
        Instance::generate(self.d, self.n(), seed, self.w_star_mode.into())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an instance and print its summary.
    Gen(GenArgs),
    /// Evaluate landscape quantities at w = alpha·w* + beta·w⊥.
    Eval(EvalArgs),
    /// Minimize the Hessian quadratic form over the locality ball.
    ProbeQ(ProbeArgs),
    /// Minimize the one-point ratio over the locality ball.
    ProbeOnepoint(ProbeArgs),
    /// Evaluate a closed-form adversarial certificate.
    Certificate(CertificateArgs),
    /// Sample the minimum one-point ratio over a shell around w*.
    AnnulusCheck(AnnulusArgs),
    /// Estimate the smallest Hessian eigenvalue at a point.
    EigMin(EigMinArgs),
    /// Run plain gradient descent toward w*.
    Gd(GdArgs),
    /// Integrate gradient flow and report the contraction of ‖w − w*‖².
    Flow(FlowArgs),
    /// Run one of the distributional verification tests.
    AddoneTest(AddoneArgs),
    /// Sweep a metric over a (d, ratio, seed) grid; writes CSV/JSON/SVG.
    Sweep(Box<SweepArgs>),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    inst: InstanceArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Component along w*.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Component along a seeded random orthogonal direction.
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Ball radius around w*.
    #[arg(long, default_value_t = 0.1)]
    r: f64,
    /// Optimizer preset.
    #[arg(long, default_value = "auto")]
    preset: String,
    /// Inline schedule "steps:lr[,steps:lr...]" (overrides --preset).
    #[arg(long)]
    schedule: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum CertificateKindArg {
    HessianBall,
    HessianFixed,
    OnepointBall,
}

#[derive(Args, Debug)]
struct CertificateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum)]
    kind: CertificateKindArg,
    /// For hessian-fixed: w = alpha·w* + beta·w⊥.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
}

#[derive(Args, Debug)]
struct AnnulusArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 0.15)]
    r_lo: f64,
    #[arg(long, default_value_t = 0.3)]
    r_hi: f64,
    #[arg(long, default_value_t = 500)]
    points: usize,
}

#[derive(Args, Debug)]
struct EigMinArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Use the dense eigensolver instead of Lanczos.
    #[arg(long)]
    dense: bool,
    #[arg(long, default_value_t = 400)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_EIGEN_TOL)]
    tol: f64,
    /// Evaluation point w = alpha·w* + beta·w⊥ (defaults to w*).
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
}

#[derive(Args, Debug)]
struct GdArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Initial distance ‖w₀ − w*‖.
    #[arg(long, default_value_t = 0.3)]
    dist0: f64,
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FieldArg {
    Empirical,
    Population,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MethodArg {
    Euler,
    Rk4,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long, value_enum, default_value_t = FieldArg::Population)]
    field: FieldArg,
    #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
    method: MethodArg,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long = "t", default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.1)]
    dist0: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum AddoneTestArg {
    ZjMarginal,
    AddoneIdentity,
    InnerProduct,
    ExtremeValue,
    QuadTail,
    MinZ,
}

#[derive(Args, Debug)]
struct AddoneArgs {
    #[arg(long, value_enum)]
    test: AddoneTestArg,
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    /// zj-marginal: argmin-y | argmax-y | argmax-z-norm (control).
    #[arg(long, default_value = "argmin-y")]
    selector: String,
    /// addone-identity: hessian | onepoint.
    #[arg(long, default_value = "hessian")]
    f_kind: String,
    /// Run the deliberately broken variant (negative control).
    #[arg(long)]
    control: bool,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Tail level for quad-tail.
    #[arg(long = "t", default_value_t = 3.0)]
    t_level: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// q | Q | cert-hessian | cert-onepoint | eig-min | annulus | gd.
    #[arg(long)]
    metric: Option<String>,
    /// Comma-separated dimensions, e.g. 256,512,1024.
    #[arg(long)]
    d_grid: Option<String>,
    /// Comma-separated ratios n/d, e.g. 2,3,5 (one plotted line each).
    #[arg(long)]
    ratio: Option<String>,
    /// Explicit n for every cell (overrides --ratio).
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// fig2 | fig3 | auto.
    #[arg(long)]
    preset: Option<String>,
    /// Inline schedule "steps:lr[,steps:lr...]".
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    r_lo: Option<f64>,
    #[arg(long)]
    r_hi: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dist0: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Key = value file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "sweep.csv")]
    out_csv: PathBuf,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
}

impl Cli {
    /// Returns the process exit code.
    pub fn run(self) -> Result<i32> {
        let g = &self.global;
        match self.command {
            Command::Gen(args) => {
                let inst = args.inst.build(g.seed)?;
                let mean_y: f64 =
                    inst.y_sq().iter().sum::<f64>() / inst.n() as f64;
                emit_value(
                    g,
                    json!({
                        "d": inst.d(),
                        "n": inst.n(),
                        "seed": g.seed,
                        "w_star_mode": format!("{:?}", args.inst.w_star_mode),
                        "mean_y_sq": mean_y,
                        "loss_at_w_star": inst.loss(inst.w_star())?,
                    }),
                    None,
                )?;
                Ok(0)
            }
            Command::Eval(args) => {
                let inst = args.inst.build(g.seed)?;
                let w = point_from_components(&inst, args.alpha, args.beta, g.seed);
                let lp = decompose(&w, inst.w_star());
                let mut rng = rng_from_seed(splitmix64(g.seed));
                let u = unit_sphere_vec(&mut rng, inst.d());
                let ratio = if lp.delta.iter().any(|x| x.abs() > 1e-12) {
                    Some(inst.onepoint_ratio(&w)?)
                } else {
                    None
                };
                emit_value(
                    g,
                    json!({
                        "d": inst.d(),
                        "n": inst.n(),
                        "alpha": lp.alpha,
                        "beta": lp.beta,
                        "in_local_region": lp.in_local_region,
                        "loss": inst.loss(&w)?,
                        "gradient_norm": crate::linalg::norm(&inst.gradient(&w)?),
                        "hessian_quadratic_random_u": inst.hessian_quadratic(&w, &u)?,
                        "onepoint_ratio": ratio,
                    }),
                    None,
                )?;
                Ok(0)
            }
            Command::ProbeQ(args) => {
                let inst = args.inst.build(g.seed)?;
                let cfg = resolve_schedule(&args.preset, &args.schedule, SweepMetric::Q)?;
                let res = probe_q(&inst, args.r, &cfg, splitmix64(g.seed))?;
                let record = probe_record("q", &inst, g.seed, res.final_value, args.r);
                emit_value(g, serde_json::to_value(&res)?, Some(record))?;
                Ok(0)
            }
            Command::ProbeOnepoint(args) => {
                let inst = args.inst.build(g.seed)?;
                let cfg =
                    resolve_schedule(&args.preset, &args.schedule, SweepMetric::OnepointQ)?;
                let res = probe_onepoint(&inst, args.r, &cfg, splitmix64(g.seed))?;
                let record = probe_record("Q", &inst, g.seed, res.final_value, args.r);
                emit_value(g, serde_json::to_value(&res)?, Some(record))?;
                Ok(0)
            }
            Command::Certificate(args) => {
                let inst = args.inst.build(g.seed)?;
                let cert: Certificate = match args.kind {
                    CertificateKindArg::HessianBall => certificate_hessian_ball(&inst)?,
                    CertificateKindArg::OnepointBall => certificate_onepoint_ball(&inst)?,
                    CertificateKindArg::HessianFixed => {
                        let w = point_from_components(&inst, args.alpha, args.beta, g.seed);
                        certificate_hessian_fixed(&inst, &w)?
                    }
                };
                let record = SweepRecord {
                    metric: match args.kind {
                        CertificateKindArg::OnepointBall => "cert_onepoint".into(),
                        _ => "cert_hessian".into(),
                    },
                    d: inst.d(),
                    n: inst.n(),
                    seed: g.seed,
                    value: cert.value,
                    wall_ms: 0,
                    extra: json!({ "delta_norm": cert.delta_norm, "index": cert.index })
                        .to_string(),
                };
                let mut v = serde_json::to_value(&cert)?;
                // the full point/direction vectors are bulky; keep the summary
                if inst.d() > 32 {
                    v.as_object_mut().map(|m| {
                        m.remove("point");
                        m.remove("u")
                    });
                }
                emit_value(g, v, Some(record))?;
                Ok(0)
            }
            Command::AnnulusCheck(args) => {
                let inst = args.inst.build(g.seed)?;
                let (min_ratio, _argmin) = annulus_min_ratio(
                    &inst,
                    args.r_lo,
                    args.r_hi,
                    args.points,
                    splitmix64(g.seed),
                )?;
                let record = SweepRecord {
                    metric: "annulus".into(),
                    d: inst.d(),
                    n: inst.n(),
                    seed: g.seed,
                    value: min_ratio,
                    wall_ms: 0,
                    extra: json!({ "points": args.points }).to_string(),
                };
                emit_value(
                    g,
                    json!({
                        "min_ratio": min_ratio,
                        "r_lo": args.r_lo,
                        "r_hi": args.r_hi,
                        "points": args.points,
                    }),
                    Some(record),
                )?;
                Ok(0)
            }
            Command::EigMin(args) => {
                let inst = args.inst.build(g.seed)?;
                let w = point_from_components(&inst, args.alpha, args.beta, g.seed);
                let est = if args.dense {
                    min_eigen_dense(&inst, &w)?
                } else {
                    min_eigen_lanczos(&inst, &w, args.max_iters, args.tol, splitmix64(g.seed))?
                };
                let record = SweepRecord {
                    metric: "eig_min".into(),
                    d: inst.d(),
                    n: inst.n(),
                    seed: g.seed,
                    value: est.lambda_min,
                    wall_ms: 0,
                    extra: json!({
                        "iterations": est.iterations,
                        "residual": est.residual,
                        "converged": est.converged,
                    })
                    .to_string(),
                };
                emit_value(
                    g,
                    json!({
                        "lambda_min": est.lambda_min,
                        "residual": est.residual,
                        "iterations": est.iterations,
                        "converged": est.converged,
                        "dense": args.dense,
                    }),
                    Some(record),
                )?;
                Ok(0)
            }
            Command::Gd(args) => {
                let inst = args.inst.build(g.seed)?;
                let mut rng = rng_from_seed(splitmix64(g.seed));
                let dir = unit_sphere_vec(&mut rng, inst.d());
                let w0: Vec<f64> = inst
                    .w_star()
                    .iter()
                    .zip(&dir)
                    .map(|(s, p)| s + args.dist0 * p)
                    .collect();
                let trace = gradient_descent(&inst, &w0, args.eta, args.steps, args.tol)?;
                let final_dist = *trace.values.last().unwrap();
                let record = SweepRecord {
                    metric: "gd".into(),
                    d: inst.d(),
                    n: inst.n(),
                    seed: g.seed,
                    value: final_dist,
                    wall_ms: 0,
                    extra: json!({ "steps": trace.steps }).to_string(),
                };
                emit_value(
                    g,
                    json!({
                        "final_distance": final_dist,
                        "final_loss": trace.extra.as_ref().unwrap().last(),
                        "steps": trace.steps,
                        "converged": final_dist <= args.tol,
                    }),
                    Some(record),
                )?;
                Ok(0)
            }
            Command::Flow(args) => {
                let inst = args.inst.build(g.seed)?;
                let mut rng = rng_from_seed(splitmix64(g.seed));
                let dir = unit_sphere_vec(&mut rng, inst.d());
                let w0: Vec<f64> = inst
                    .w_star()
                    .iter()
                    .zip(&dir)
                    .map(|(s, p)| s + args.dist0 * p)
                    .collect();
                let field = match args.field {
                    FieldArg::Empirical => FlowField::Empirical(&inst),
                    FieldArg::Population => FlowField::Population { w_star: inst.w_star() },
                };
                let method = match args.method {
                    MethodArg::Euler => Integrator::Euler,
                    MethodArg::Rk4 => Integrator::Rk4,
                };
                let trace = gradient_flow(field, &w0, args.dt, args.t_end, method)?;
                let logs: Vec<f64> =
                    trace.values.iter().map(|v| v.max(1e-300).ln()).collect();
                let ts: Vec<f64> =
                    (0..logs.len()).map(|k| k as f64 * args.dt).collect();
                let slope = crate::stats::least_squares_slope(&ts, &logs);
                emit_value(
                    g,
                    json!({
                        "initial_dist_sq": trace.values.first(),
                        "final_dist_sq": trace.values.last(),
                        "log_contraction_slope": slope,
                        "steps": trace.steps,
                    }),
                    None,
                )?;
                Ok(0)
            }
            Command::AddoneTest(args) => {
                let report = run_addone(&args, g.seed)?;
                let pass = report.pass;
                emit_value(g, serde_json::to_value(&report)?, None)?;
                Ok(if pass { 0 } else { 1 })
            }
            Command::Sweep(args) => run_sweep_command(*args, g),
        }
    }
}

/// w = alpha·w* + beta·w⊥ with w⊥ a seeded random unit direction
/// orthogonal to w*.
fn point_from_components(inst: &Instance, alpha: f64, beta: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(splitmix64(seed ^ 0xA5A5_5A5A));
    let mut dir = unit_sphere_vec(&mut rng, inst.d());
    let a = crate::linalg::dot(&dir, inst.w_star());
    for (p, s) in dir.iter_mut().zip(inst.w_star()) {
        *p -= a * s;
    }
    crate::linalg::normalize(&mut dir);
    inst.w_star()
        .iter()
        .zip(&dir)
        .map(|(s, p)| alpha * s + beta * p)
        .collect()
}

fn resolve_schedule(
    preset: &str,
    inline: &Option<String>,
    metric: SweepMetric,
) -> Result<AdamConfig> {
    if let Some(spec) = inline {
        return parse_schedule(spec);
    }
    match preset {
        "fig2" => Ok(AdamConfig::fig2()),
        "fig3" => Ok(AdamConfig::fig3()),
        "auto" => Ok(metric.default_schedule().1),
        other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
    }
}

fn parse_schedule(spec: &str) -> Result<AdamConfig> {
    let mut segments = Vec::new();
    for part in spec.split(',') {
        let (steps, lr) = part.split_once(':').ok_or_else(|| {
            Error::InvalidParameter(format!("bad schedule segment '{part}', want steps:lr"))
        })?;
        let steps: usize = steps
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad step count '{steps}'")))?;
        let lr: f64 = lr
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad learning rate '{lr}'")))?;
        segments.push((steps, lr));
    }
    let cfg = AdamConfig::new(segments);
    cfg.validate()?;
    Ok(cfg)
}

fn probe_record(metric: &str, inst: &Instance, seed: u64, value: f64, r: f64) -> SweepRecord {
    SweepRecord {
        metric: metric.into(),
        d: inst.d(),
        n: inst.n(),
        seed,
        value,
        wall_ms: 0,
        extra: json!({ "r": r }).to_string(),
    }
}

fn run_addone(args: &AddoneArgs, seed: u64) -> Result<TestReport> {
    match args.test {
        AddoneTestArg::ZjMarginal => {
            let selector = match args.selector.as_str() {
                "argmin-y" | "argmin_y" => Selector::ArgminY,
                "argmax-y" | "argmax_y" => Selector::ArgmaxY,
                "argmax-z-norm" | "argmax_z_norm" => Selector::ArgmaxZNorm,
                other => {
                    return Err(Error::InvalidParameter(format!("unknown selector '{other}'")))
                }
            };
            verify_zj_marginal(args.n, args.d, selector, args.trials, seed)
        }
        AddoneTestArg::AddoneIdentity => {
            let f_kind = match args.f_kind.as_str() {
                "hessian" | "hessian-form" => FKind::HessianForm,
                "onepoint" | "onepoint-form" => FKind::OnepointForm,
                other => {
                    return Err(Error::InvalidParameter(format!("unknown f kind '{other}'")))
                }
            };
            let variant = if args.control {
                IdentityVariant::BrokenReuseSelected
            } else {
                IdentityVariant::Standard
            };
            verify_addone_identity(args.n, args.d, args.trials, seed, f_kind, variant)
        }
        AddoneTestArg::InnerProduct => {
            let z_dist = if args.control { ZDist::Rademacher } else { ZDist::Gaussian };
            verify_inner_product_independence(args.n, args.d, args.trials, seed, z_dist)
        }
        AddoneTestArg::ExtremeValue => extreme_value_mean(args.n, args.trials, seed),
        AddoneTestArg::QuadTail => {
            quadratic_form_tail(args.alpha, args.beta, args.t_level, args.trials, seed)
        }
        AddoneTestArg::MinZ => {
            let inst = Instance::generate(
                args.d.max(2),
                args.n,
                seed,
                WStarMode::CanonicalE1,
            )?;
            let mut w = inst.w_star().to_vec();
            w[1] += args.beta;
            let z = crate::addone::empirical_min_z(&inst, &w)?;
            let threshold = -0.05 * args.beta * args.beta * (args.n as f64).ln();
            Ok(TestReport {
                statistic_name: "empirical_min_z".into(),
                observed: z,
                reference: crate::addone::ReferenceBand::Below(threshold),
                n_trials: args.n,
                pass: z < threshold,
                seed,
                extras: vec![("threshold".into(), threshold)],
            })
        }
    }
}

fn run_sweep_command(args: SweepArgs, g: &GlobalArgs) -> Result<i32> {
    let file_cfg = match &args.config {
        Some(path) => parse_config_file(path)?,
        None => HashMap::new(),
    };
    let pick_str = |flag: &Option<String>, key: &str| -> Option<String> {
        flag.clone().or_else(|| file_cfg.get(key).cloned())
    };

    let metric_name = pick_str(&args.metric, "metric")
        .ok_or_else(|| Error::InvalidParameter("sweep needs --metric".into()))?;
    let metric = SweepMetric::parse(&metric_name)?;
    let mut cfg = SweepConfig::new(metric);

    let d_grid = pick_str(&args.d_grid, "d-grid")
        .ok_or_else(|| Error::InvalidParameter("sweep needs --d-grid".into()))?;
    cfg.d_grid = parse_list::<usize>(&d_grid, "d-grid")?;

    if let Some(n) = args.n.or_else(|| parse_opt(&file_cfg, "n")) {
        cfg.explicit_n = Some(n);
    } else if let Some(r) = pick_str(&args.ratio, "ratio") {
        cfg.ratios = parse_list::<f64>(&r, "ratio")?;
    }
    if let Some(v) = args.r.or_else(|| parse_opt(&file_cfg, "r")) {
        cfg.r = v;
    }
    if let Some(v) = args.seeds.or_else(|| parse_opt(&file_cfg, "seeds")) {
        cfg.seeds = v;
    }
    cfg.base_seed = args.base_seed.or_else(|| parse_opt(&file_cfg, "base-seed")).unwrap_or(g.seed);
    if let Some(preset) = pick_str(&args.preset, "preset") {
        if preset != "auto" {
            cfg.adam = resolve_schedule(&preset, &None, metric)?;
            cfg.schedule_name = preset;
        }
    }
    if let Some(spec) = pick_str(&args.schedule, "schedule") {
        cfg.adam = parse_schedule(&spec)?;
        cfg.schedule_name = "custom".into();
    }
    if let Some(v) = args.r_lo.or_else(|| parse_opt(&file_cfg, "r-lo")) {
        cfg.annulus_r_lo = v;
    }
    if let Some(v) = args.r_hi.or_else(|| parse_opt(&file_cfg, "r-hi")) {
        cfg.annulus_r_hi = v;
    }
    if let Some(v) = args.points.or_else(|| parse_opt(&file_cfg, "points")) {
        cfg.annulus_points = v;
    }
    if let Some(v) = args.eta.or_else(|| parse_opt(&file_cfg, "eta")) {
        cfg.gd_eta = v;
    }
    if let Some(v) = args.steps.or_else(|| parse_opt(&file_cfg, "steps")) {
        cfg.gd_steps = v;
    }
    if let Some(v) = args.dist0.or_else(|| parse_opt(&file_cfg, "dist0")) {
        cfg.gd_dist0 = v;
    }
    if let Some(v) = args.tol.or_else(|| parse_opt(&file_cfg, "tol")) {
        cfg.gd_tol = v;
        cfg.eig_tol = v;
    }
    cfg.threads = g
        .threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()))
        .unwrap_or(1)
        .max(1);
    cfg.deterministic = g.deterministic;

    let mut sink = CsvSink::open(&args.out_csv)?;
    let outcome = run_sweep(&cfg, |rec| sink.append(rec))?;

    if let Some(path) = &args.out_json {
        emit_json_summary(metric.name(), &outcome.aggregates, path)?;
    }
    if let Some(path) = &args.out_svg {
        let mut series = Vec::new();
        if cfg.explicit_n.is_none() && cfg.ratios.len() > 1 {
            for &ratio in &cfg.ratios {
                let aggs: Vec<_> = outcome
                    .aggregates
                    .iter()
                    .filter(|a| {
                        cfg.d_grid.iter().any(|&d| {
                            a.d == d && a.n == (ratio * d as f64).round() as usize
                        })
                    })
                    .cloned()
                    .collect();
                series.push(SvgSeries::from_aggregates(format!("n/d={ratio}"), &aggs));
            }
        } else {
            series.push(SvgSeries::from_aggregates(
                format!("metric={}", metric.name()),
                &outcome.aggregates,
            ));
        }
        emit_svg(&series, path)?;
    }

    eprintln!(
        "sweep complete: {} records, {} failed cells -> {}",
        outcome.records.len(),
        outcome.failed_cells,
        args.out_csv.display()
    );
    Ok(if outcome.failed_cells > 0 { 1 } else { 0 })
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidParameter(format!("bad {what} entry '{p}'")))
        })
        .collect()
}

fn parse_opt<T: std::str::FromStr>(cfg: &HashMap<String, String>, key: &str) -> Option<T> {
    cfg.get(key).and_then(|s| s.parse().ok())
}

/// `key = value` lines; '#' starts a comment.
fn parse_config_file(path: &Path) -> Result<HashMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{}:{}: expected 'key = value'",
                path.display(),
                lineno + 1
            ))
        })?;
        out.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(out)
}

fn emit_value(
    g: &GlobalArgs,
    value: serde_json::Value,
    record: Option<SweepRecord>,
) -> Result<()> {
    let body = match (g.format, record) {
        (OutputFormat::Csv, Some(rec)) => {
            let mut buf = Vec::new();
            {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
                w.write_record(crate::emit::CSV_HEADER)?;
                w.serialize(&rec)?;
                w.flush().map_err(csv::Error::from)?;
            }
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        _ => format!("{}\n", serde_json::to_string_pretty(&value)?),
    };
    match &g.out {
        Some(path) => {
            std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
        }
        None => print!("{body}"),
    }
    Ok(())
}
