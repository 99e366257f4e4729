//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification found violations, 2 malformed input or flags,
//! 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use tre_kit::divergence::{grad1_rel, grad1_tre, grad2_rel, grad2_tre, rel_entropy, tre, tre_limit, Endpoint, JsonReal};
use tre_kit::harness::checks::{linear_coefficient, triangle2_linear_bound, triangle2_tight_bound};
use tre_kit::harness::ensemble::{Family, RankProfile};
use tre_kit::harness::{run_suite, Check, SuiteConfig, SuiteReport};
use tre_kit::matrix_io::{read_hermitian, to_json_string};
use tre_kit::operator::{DensityMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig};
use tre_kit::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tre-kit", version, about = "Telescopic relative entropy toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate S_a(ρ‖σ) or S(ρ‖σ), optionally with a gradient
    Compute(ComputeArgs),
    /// Run randomized certification of the inequalities
    Verify(VerifyArgs),
    /// Tabulate the second-argument triangle bounds over an (a, t) grid
    Sweep(SweepArgs),
    /// Endpoint limits S₀, S₁ and the convergence of S_a towards them
    Limits(LimitsArgs),
}

#[derive(Debug, Args)]
struct Tolerances {
    /// Relative eigenvalue threshold defining the support
    #[arg(long, default_value_t = 1e-10)]
    rank_tol: f64,
    /// Relative gap below which divided differences use their confluent limit
    #[arg(long, default_value_t = 1e-7)]
    confluence_tol: f64,
}

impl Tolerances {
    fn config(&self) -> Result<ToleranceConfig> {
        let tol = ToleranceConfig {
            rank_tol: self.rank_tol,
            confluence_tol: self.confluence_tol,
            ..ToleranceConfig::default()
        };
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Debug, Args)]
struct ComputeArgs {
    #[arg(long)]
    rho: PathBuf,
    #[arg(long)]
    sigma: PathBuf,
    /// Telescope parameter in (0, 1)
    #[arg(long, required_unless_present = "ordinary", conflicts_with = "ordinary")]
    a: Option<f64>,
    /// Ordinary relative entropy instead of the telescopic one
    #[arg(long)]
    ordinary: bool,
    /// Also print the gradient with respect to argument 1 or 2
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    gradient: Option<u8>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Theorem {
    Triangle1,
    Triangle2,
    Rbts,
    Rbts2,
    Tderiv,
    Aux,
    Monoboth,
    Convexity,
    Scaling,
    Fannes,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    GenericMixed,
    HaarPure,
    CommutingDiagonal,
    OrthogonalBlocks,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::GenericMixed => Family::GenericMixed,
            FamilyArg::HaarPure => Family::HaarPure,
            FamilyArg::CommutingDiagonal => Family::CommutingDiagonal,
            FamilyArg::OrthogonalBlocks => Family::OrthogonalBlocks,
        }
    }
}

fn parse_profile(s: &str) -> std::result::Result<RankProfile, String> {
    match s {
        "full" => Ok(RankProfile::Full),
        "pure" => Ok(RankProfile::Pure),
        _ => s
            .strip_prefix("deficient:")
            .and_then(|k| k.parse().ok())
            .filter(|&k: &usize| k >= 1)
            .map(RankProfile::Deficient)
            .ok_or_else(|| format!("expected full, pure or deficient:K, got {s:?}")),
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    theorem: Theorem,
    /// Trials per grid cell
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Matrix dimensions, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 8])]
    dim: Vec<usize>,
    /// Master seed; every trial derives its own stream from it
    #[arg(long, env = "TRE_KIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Violation threshold on margins
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Write the report here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Run the exact equality family of triangle1/triangle2 instead of random trials
    #[arg(long)]
    equality_family: bool,
    /// Telescope parameters, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.5, 0.95])]
    a: Vec<f64>,
    /// Mixing weights for the checks that take one
    #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])]
    t: Vec<f64>,
    /// Rank profiles: full, pure, deficient:K
    #[arg(long, value_delimiter = ',', value_parser = parse_profile, default_value = "full")]
    profile: Vec<RankProfile>,
    /// Ensemble families, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "generic-mixed")]
    family: Vec<FamilyArg>,
    /// Worker threads (default: all cores); the report does not depend on it
    #[arg(long)]
    workers: Option<usize>,
    /// Write the inputs of violating trials to this directory
    #[arg(long)]
    dump_failures: Option<PathBuf>,
    /// Include per-trial margins in the report
    #[arg(long)]
    record_trials: bool,
    #[command(flatten)]
    numerics: Tolerances,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    a_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    t_grid: Vec<f64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Debug, Args)]
struct LimitsArgs {
    #[arg(long)]
    rho: PathBuf,
    #[arg(long)]
    sigma: PathBuf,
    /// Telescope parameters at which to evaluate S_a
    #[arg(long, value_delimiter = ',')]
    a_schedule: Vec<f64>,
    #[command(flatten)]
    tol: Tolerances,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Compute(a) => cmd_compute(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Limits(a) => cmd_limits(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

fn read_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::new(read_hermitian(path)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn matrix_value(m: &HermitianMatrix) -> Result<Value> {
    Ok(serde_json::from_str(&to_json_string(m.entries()))?)
}

fn cmd_compute(args: &ComputeArgs) -> Result<i32> {
    let tol = args.tol.config()?;
    let rho = read_state(&args.rho)?;
    let (result, gradient) = if args.ordinary {
        let sigma = PsdMatrix::new(read_hermitian(&args.sigma)?)?;
        let result = rel_entropy(&rho, &sigma, &tol)?;
        let g = match args.gradient {
            Some(1) => Some(grad1_rel(&rho, &sigma, &tol)?),
            Some(_) => Some(grad2_rel(&rho, &sigma, &tol)?),
            None => None,
        };
        (result, g)
    } else {
        let a = args.a.expect("clap requires --a without --ordinary");
        let sigma = read_state(&args.sigma)?;
        let result = tre(a, &rho, &sigma, &tol)?;
        let g = match args.gradient {
            Some(1) => Some(grad1_tre(a, &rho, &sigma, &tol)?),
            Some(_) => Some(grad2_tre(a, &rho, &sigma, &tol)?),
            None => None,
        };
        (result, g)
    };
    let mut value = serde_json::to_value(&result)?;
    if let Some(g) = gradient {
        value["gradient"] = matrix_value(&g)?;
    }
    print_json(&value)?;
    Ok(EXIT_OK)
}

fn selected_checks(theorem: Theorem, equality: bool) -> Result<Vec<Check>> {
    if equality {
        return match theorem {
            Theorem::Triangle1 => Ok(vec![Check::Triangle1Equality]),
            Theorem::Triangle2 => Ok(vec![Check::Triangle2Equality]),
            Theorem::All => Ok(vec![Check::Triangle1Equality, Check::Triangle2Equality]),
            other => Err(Error::InvalidSpec(format!(
                "--equality-family applies to triangle1 and triangle2, not {other:?}"
            ))),
        };
    }
    Ok(match theorem {
        Theorem::Triangle1 => vec![Check::Triangle1],
        Theorem::Triangle2 => vec![Check::Triangle2],
        Theorem::Rbts => vec![Check::Rbts],
        Theorem::Rbts2 => vec![Check::Rbts2],
        Theorem::Tderiv => vec![Check::Tderiv],
        Theorem::Aux => vec![Check::Aux],
        Theorem::Monoboth => vec![Check::Monoboth],
        Theorem::Convexity => vec![Check::Convexity],
        Theorem::Scaling => vec![Check::Scaling],
        Theorem::Fannes => vec![Check::Fannes],
        Theorem::All => Check::ALL.to_vec(),
    })
}

fn report_csv(report: &SuiteReport) -> String {
    let mut s = String::from("check_name,kind,trials,violations,errors,min_margin,p1,p50,p99,seed,tol,config_digest\n");
    let real = |x: JsonReal| {
        if x.0.is_finite() {
            format!("{}", x.0)
        } else {
            serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
        }
    };
    for r in &report.reports {
        let kind = serde_json::to_value(r.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.check_name,
            kind,
            r.trials,
            r.violations,
            r.errors,
            real(r.min_margin),
            real(r.quantiles.p1),
            real(r.quantiles.p50),
            real(r.quantiles.p99),
            r.seed,
            r.tol,
            r.config_digest
        ));
    }
    s
}

fn emit(text: &str, path: Option<&PathBuf>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> Result<i32> {
    let config = SuiteConfig {
        checks: selected_checks(args.theorem, args.equality_family)?,
        dims: args.dim.clone(),
        a_values: args.a.clone(),
        t_values: args.t.clone(),
        profiles: args.profile.clone(),
        families: args.family.iter().map(|&f| f.into()).collect(),
        trials: args.trials,
        seed: args.seed,
        tol: args.tol,
        numerics: args.numerics.config()?,
        record_trials: args.record_trials,
        workers: args.workers,
        dump_failures: args.dump_failures.clone(),
    };
    let report = run_suite(&config)?;
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&report)? + "\n",
        Format::Csv => report_csv(&report),
    };
    emit(&text, args.report.as_ref())?;
    Ok(if report.pass { EXIT_OK } else { EXIT_VIOLATION })
}

fn in_open_unit(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        Some(v) => Err(Error::InvalidSpec(format!("{name} entries must lie in (0, 1), got {v}"))),
        None => Ok(()),
    }
}

/// |S_a(ρ‖σ₁) − S_a(ρ‖σ₂)| for ρ = |0⟩⟨0|, σ₁ = |1⟩⟨1|, σ₂ = tρ + (1−t)σ₁.
fn equality_family_gap(a: f64, t: f64, tol: &ToleranceConfig) -> Result<f64> {
    let rho = DensityMatrix::from_real_diagonal(&[1.0, 0.0])?;
    let sigma1 = DensityMatrix::from_real_diagonal(&[0.0, 1.0])?;
    let sigma2 = rho.mix(t, &sigma1)?;
    Ok((tre(a, &rho, &sigma1, tol)?.value - tre(a, &rho, &sigma2, tol)?.value).abs())
}

fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let tol = args.tol.config()?;
    if args.a_grid.is_empty() || args.t_grid.is_empty() {
        return Err(Error::InvalidSpec("grids must be non-empty".into()));
    }
    in_open_unit("--a-grid", &args.a_grid)?;
    if let Some(t) = args.t_grid.iter().find(|&&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::InvalidSpec(format!("--t-grid entries must lie in [0, 1], got {t}")));
    }
    let mut csv = String::from("a,t,coefficient,bound_tight,bound_linear,achieved\n");
    for &a in &args.a_grid {
        for &t in &args.t_grid {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                a,
                t,
                linear_coefficient(a),
                triangle2_tight_bound(a, t)?,
                triangle2_linear_bound(a, t),
                equality_family_gap(a, t, &tol)?
            ));
        }
    }
    emit(&csv, args.report.as_ref())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct ScheduleEntry {
    a: f64,
    value: f64,
    gap_s0: f64,
    gap_s1: f64,
}

#[derive(Serialize)]
struct LimitsOutput {
    s0: f64,
    s1: f64,
    support_contained: bool,
    schedule: Vec<ScheduleEntry>,
}

fn cmd_limits(args: &LimitsArgs) -> Result<i32> {
    let tol = args.tol.config()?;
    in_open_unit("--a-schedule", &args.a_schedule)?;
    let rho = read_state(&args.rho)?;
    let sigma = read_state(&args.sigma)?;
    let s0 = tre_limit(Endpoint::Zero, &rho, &sigma, &tol)?;
    let s1 = tre_limit(Endpoint::One, &rho, &sigma, &tol)?;
    let contained = rel_entropy(&rho, &sigma, &tol)?.support_contained;
    let mut schedule = Vec::with_capacity(args.a_schedule.len());
    for &a in &args.a_schedule {
        let r = tre(a, &rho, &sigma, &tol)?;
        schedule.push(ScheduleEntry {
            a,
            value: r.value,
            gap_s0: (r.value - s0).abs(),
            gap_s1: (r.value - s1).abs(),
        });
    }
    print_json(&LimitsOutput {
        s0,
        s1,
        support_contained: contained,
        schedule,
    })?;
    Ok(EXIT_OK)
}
