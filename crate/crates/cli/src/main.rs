//! Command-line driver for reproduction-number analysis of nonnegative
//! structured population models: R0 computation, trichotomy classification,
//! spectral-radius curves, Leslie truncation studies, trajectory growth
//! estimates, and a seeded self-test battery.
//!
//! Exit codes: 0 success; 1 argument/model validation errors; 2 numerical
//! failures (non-convergence, inconclusive boundary); 3 self-test invariant
//! failures; 10/11/12 from `classify` for the supercritical / critical /
//! subcritical case unless `--no-case-exit` is given.

mod model_file;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use model_file::{load, LoadedModel};
use r0lab_core::harness::{self, GenConfig, Report, SplitMix64};
use r0lab_core::leslie::{self, LeslieError};
use r0lab_core::model::ModelError;
use r0lab_core::ngm::{self, NgmError};
use r0lab_core::spectral::{self, SpectralError};
use r0lab_core::trichotomy::{self, StrictBlocker, TrichotomyCase, TrichotomyError};
use r0lab_core::{dynamics, Tolerances};
use r0lab_core::dynamics::DynamicsError;
use serde_json::json;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Malformed arguments or model files: exit 1.
    Parse(String),
    /// The computation itself failed or was inconclusive: exit 2.
    Numeric(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) | CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Spectral(inner) => inner.into(),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::DimensionTooLarge { .. } => CliError::Parse(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<NgmError> for CliError {
    fn from(e: NgmError) -> Self {
        match e {
            NgmError::LambdaTooSmall { .. } | NgmError::BadRange { .. } => {
                CliError::Parse(e.to_string())
            }
            NgmError::Spectral(inner) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<TrichotomyError> for CliError {
    fn from(e: TrichotomyError) -> Self {
        match e {
            TrichotomyError::Ngm(inner) => inner.into(),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<LeslieError> for CliError {
    fn from(e: LeslieError) -> Self {
        match e {
            LeslieError::Split(inner) => inner.into(),
            LeslieError::Ngm(inner) => inner.into(),
            LeslieError::DivergentSeries { .. } => CliError::Numeric(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        CliError::Parse(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "r0lab",
    version,
    about = "Reproduction numbers and spectral analysis for nonnegative population models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the reproduction number R0 of a model.
    R0(ModelArgs),
    /// Assign the trichotomy case (growth, threshold, or decay).
    Classify(ClassifyArgs),
    /// Sample the radius curve lambda -> r(F (lambda I - T)^-1) as TSV.
    Curve(CurveArgs),
    /// Closed-form R0 of a Leslie model with its truncation series.
    Leslie(LeslieArgs),
    /// Iterate the population map and estimate the growth factor.
    Simulate(SimulateArgs),
    /// Run the seeded cross-validation battery and report per-invariant
    /// worst violations.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Path to a JSON model file.
    #[arg(long)]
    model: PathBuf,
    /// Truncation dimension for Leslie models.
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Emit machine-readable JSON at full precision.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    common: ModelArgs,
    /// Also certify strict inequalities (irreducible, nonzero transition,
    /// positive R0).
    #[arg(long)]
    strict: bool,
    /// Always exit 0 instead of encoding the case as 10/11/12.
    #[arg(long)]
    no_case_exit: bool,
}

#[derive(Args)]
struct CurveArgs {
    #[command(flatten)]
    common: ModelArgs,
    /// Left endpoint of the sampling interval.
    #[arg(long, default_value_t = 1.0)]
    lambda_min: f64,
    /// Right endpoint of the sampling interval.
    #[arg(long, default_value_t = 4.0)]
    lambda_max: f64,
    /// Number of evenly spaced sample points (at least 3).
    #[arg(long, default_value_t = 17)]
    samples: usize,
}

#[derive(Args)]
struct LeslieArgs {
    #[command(flatten)]
    common: ModelArgs,
    /// Truncation sizes for the convergence table.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    truncate: Vec<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ModelArgs,
    /// Number of iterations of the population map.
    #[arg(long, default_value_t = 500)]
    steps: usize,
    /// Iterations discarded before fitting the growth factor.
    #[arg(long, default_value_t = 100)]
    burn_in: usize,
    /// Initial state as comma-separated entries (defaults to all ones).
    #[arg(long, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Number of generated instances, split across transition-radius
    /// targets 0.1, 0.5, and 0.9.
    #[arg(long, default_value_t = 500)]
    count: usize,
    /// Master seed for the instance stream.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Emit machine-readable JSON at full precision.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    // Die quietly when the reader of a pipe goes away (`curve ... | head`)
    // instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage_ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if usage_ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::R0(args) => cmd_r0(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Curve(args) => cmd_curve(args),
        Command::Leslie(args) => cmd_leslie(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Selftest(args) => cmd_selftest(args),
    }
}

/// Rounds to 9 significant digits for the human-readable output; JSON mode
/// keeps full precision. Magnitudes far from 1 switch to scientific
/// notation to stay readable.
fn fmt_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        format!("{x}")
    } else {
        let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float reparses");
        if rounded.abs() < 1e-4 || rounded.abs() >= 1e10 {
            format!("{rounded:e}")
        } else {
            format!("{rounded}")
        }
    }
}

fn cmd_r0(args: ModelArgs) -> Result<u8, CliError> {
    let (loaded, tol) = load(&args.model, args.dim)?;
    let sys = loaded.system();
    let r = ngm::r0(sys, &tol)?;
    let ra = spectral::spectral_radius(sys.combined(), &tol)?;
    match &loaded {
        LoadedModel::Split(_) => {
            if args.json {
                println!(
                    "{}",
                    json!({
                        "r0": r.radius,
                        "radius_a": ra.radius,
                        "method": r.method.to_string(),
                        "iterations": r.iterations,
                        "residual": r.residual,
                        "transition_radius": sys.transition_radius(),
                    })
                );
            } else {
                println!("R0 = {}", fmt_sig(r.radius));
                println!("r(A) = {}", fmt_sig(ra.radius));
                println!(
                    "method = {} ({} iterations, residual {})",
                    r.method,
                    r.iterations,
                    fmt_sig(r.residual)
                );
                println!("r(T) = {}", fmt_sig(sys.transition_radius()));
            }
        }
        LoadedModel::Leslie { closed, truncated, .. } => {
            if args.json {
                println!(
                    "{}",
                    json!({
                        "r0_closed_form": closed.value,
                        "series_terms": closed.terms,
                        "series_tail_bound": closed.tail_bound,
                        "r0_truncated": r.radius,
                        "radius_a_truncated": ra.radius,
                        "truncation_dim": truncated.dim(),
                    })
                );
            } else {
                println!("R0 (closed form) = {}", fmt_sig(closed.value));
                println!(
                    "R0 (truncated at {} states) = {}",
                    truncated.dim(),
                    fmt_sig(r.radius)
                );
                println!("r(A) of the truncation = {}", fmt_sig(ra.radius));
                println!("series tail bound = {}", fmt_sig(closed.tail_bound));
            }
        }
    }
    Ok(0)
}

fn case_exit(case: TrichotomyCase) -> u8 {
    match case {
        TrichotomyCase::Supercritical => 10,
        TrichotomyCase::Critical => 11,
        TrichotomyCase::Subcritical => 12,
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<u8, CliError> {
    let (loaded, tol) = load(&args.common.model, args.common.dim)?;
    let sys = loaded.system();
    let (verdict, blockers): (_, Option<Vec<StrictBlocker>>) = if args.strict {
        match trichotomy::classify_strict(sys, &tol) {
            Ok(v) => (v, Some(Vec::new())),
            Err(TrichotomyError::PreconditionUnmet { blockers, verdict }) => {
                (*verdict, Some(blockers))
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        (trichotomy::classify(sys, &tol)?, None)
    };
    if args.common.json {
        println!(
            "{}",
            json!({
                "case": verdict.case.label(),
                "name": verdict.case.to_string(),
                "r0": verdict.r0,
                "radius_a": verdict.radius_a,
                "r0_margin": verdict.r0_margin,
                "radius_margin": verdict.radius_margin,
                "near_boundary": verdict.near_boundary,
                "strict": verdict.strict,
                "strict_blockers": blockers
                    .as_ref()
                    .map(|bs| bs.iter().map(|b| b.to_string()).collect::<Vec<_>>()),
                "truncation_dim": loaded.truncation_dim(),
            })
        );
    } else {
        if let Some(dim) = loaded.truncation_dim() {
            println!("leslie model truncated at {dim} states");
        }
        println!("case {} ({})", verdict.case.label(), verdict.case);
        println!("R0 = {}", fmt_sig(verdict.r0));
        println!("r(A) = {}", fmt_sig(verdict.radius_a));
        println!(
            "margins: |R0 - 1| = {}, |r(A) - 1| = {}",
            fmt_sig(verdict.r0_margin),
            fmt_sig(verdict.radius_margin)
        );
        match &blockers {
            Some(bs) if bs.is_empty() => {
                if verdict.strict {
                    println!("strict inequalities certified");
                } else {
                    println!("strict inequalities not certified (gap below tolerance)");
                }
            }
            Some(bs) => {
                let list = bs.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("; ");
                println!("strict inequalities not applicable: {list}");
            }
            None => {}
        }
    }
    if verdict.near_boundary {
        eprintln!("warning: within 100 * tol_eq of the critical boundary; consider tighter tolerances");
    }
    Ok(if args.no_case_exit { 0 } else { case_exit(verdict.case) })
}

fn cmd_curve(args: CurveArgs) -> Result<u8, CliError> {
    let (loaded, tol) = load(&args.common.model, args.common.dim)?;
    let curve =
        ngm::radius_curve(loaded.system(), args.lambda_min, args.lambda_max, args.samples, &tol)?;
    if args.common.json {
        println!(
            "{}",
            json!({
                "points": curve
                    .points
                    .iter()
                    .map(|&(l, r)| json!({"lambda": l, "radius": r}))
                    .collect::<Vec<_>>(),
                "monotone_ok": curve.monotone_ok,
                "convex_ok": curve.convex_ok,
                "max_violation": curve.max_violation,
            })
        );
    } else {
        println!("lambda\tradius");
        for &(l, r) in &curve.points {
            println!("{}\t{}", fmt_sig(l), fmt_sig(r));
        }
        eprintln!(
            "curve audit: monotone {}, convex {}, max violation {}",
            if curve.monotone_ok { "ok" } else { "VIOLATED" },
            if curve.convex_ok { "ok" } else { "VIOLATED" },
            fmt_sig(curve.max_violation)
        );
    }
    Ok(0)
}

fn cmd_leslie(args: LeslieArgs) -> Result<u8, CliError> {
    let (loaded, tol) = load(&args.common.model, args.common.dim)?;
    let LoadedModel::Leslie { model, closed, .. } = &loaded else {
        return Err(CliError::Parse(
            "the leslie command needs a model file with kind = \"leslie\"".to_string(),
        ));
    };
    if args.truncate.is_empty() {
        return Err(CliError::Parse("at least one truncation size is required".to_string()));
    }
    let series = leslie::truncated_r0_series(model, &args.truncate, &tol)?;
    let survival = model.survival_radius_bound();
    if args.common.json {
        println!(
            "{}",
            json!({
                "r0_closed_form": closed.value,
                "series_terms": closed.terms,
                "series_tail_bound": closed.tail_bound,
                "survival_radius_bound": survival.bound,
                "survival_settle_index": survival.settle_index,
                "truncations": series
                    .iter()
                    .map(|&(n, r)| json!({"n": n, "r0": r, "gap": closed.value - r}))
                    .collect::<Vec<_>>(),
            })
        );
    } else {
        println!(
            "R0 (closed form) = {} ({} series terms, tail bound {})",
            fmt_sig(closed.value),
            closed.terms,
            fmt_sig(closed.tail_bound)
        );
        println!(
            "survival radius bound = {} (settled from index {})",
            fmt_sig(survival.bound),
            survival.settle_index
        );
        println!("{:>6}  {:>14}  {:>14}", "n", "r0(n)", "gap");
        for &(n, r) in &series {
            println!("{:>6}  {:>14}  {:>14}", n, fmt_sig(r), fmt_sig(closed.value - r));
        }
    }
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, CliError> {
    let (loaded, tol) = load(&args.common.model, args.common.dim)?;
    let sys = loaded.system();
    let a = sys.combined();
    let x0 = args.x0.unwrap_or_else(|| vec![1.0; a.dim()]);
    let traj = dynamics::iterate(a, &x0, args.steps)?;
    let growth = dynamics::growth_rate(&traj, args.burn_in)?;
    let ra = spectral::spectral_radius(a, &tol)?.radius;
    if args.common.json {
        println!(
            "{}",
            json!({
                "steps": traj.steps,
                "absorbed": traj.absorbed,
                "growth": growth,
                "radius_a": ra,
                "relative_gap": (growth - ra) / ra.max(1.0),
            })
        );
    } else {
        println!("steps = {} (absorbed: {})", traj.steps, traj.absorbed);
        println!("growth factor = {}", fmt_sig(growth));
        println!("r(A) = {}", fmt_sig(ra));
        println!("relative gap = {}", fmt_sig((growth - ra) / ra.max(1.0)));
    }
    Ok(0)
}

fn cmd_selftest(args: SelftestArgs) -> Result<u8, CliError> {
    let targets = [0.1, 0.5, 0.9];
    let mut seeds = SplitMix64::new(args.seed);
    let mut merged: Option<Report> = None;
    for (i, &target_rt) in targets.iter().enumerate() {
        let share = args.count / targets.len() + usize::from(i < args.count % targets.len());
        let stage_seed = seeds.next_u64();
        if share == 0 {
            continue;
        }
        let cfg = GenConfig { seed: stage_seed, target_rt, ..GenConfig::default() };
        let report = harness::cross_validate(share, &cfg, &Tolerances::default());
        match &mut merged {
            Some(m) => m.merge(report),
            None => merged = Some(report),
        }
    }
    let Some(mut report) = merged else {
        return Err(CliError::Parse("count must be at least 1".to_string()));
    };
    report.seed = args.seed;
    if args.json {
        println!(
            "{}",
            json!({
                "instances": report.instances,
                "seed": report.seed,
                "near_boundary_stress": report.near_boundary_stress,
                "all_passed": report.all_passed(),
                "checks": report
                    .checks
                    .iter()
                    .map(|c| json!({
                        "name": c.name,
                        "cases": c.cases,
                        "worst": c.worst,
                        "tolerance": c.tolerance,
                        "passed": c.passed(),
                    }))
                    .collect::<Vec<_>>(),
                "failures": report.failures,
            })
        );
    } else {
        print!("{report}");
    }
    Ok(if report.all_passed() { 0 } else { 3 })
}
