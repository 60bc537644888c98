//! Command-line front end: `analyze`, `solve`, `sweep` and `verify`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::euler_lagrange::ELOperator;
use crate::oracle::{verify, OracleChoice, VerifyTolerances};
use crate::polymat::{rat, RatPoly};
use crate::problem::{float_json, load_problem, LQProblem};
use crate::turnpike::{analyze_pipeline, sweep, AnalyzeOptions, Pipeline};

#[derive(Parser, Debug)]
#[command(name = "lqflat", version, about = "Flatness-based turnpike analysis of linear-quadratic optimal control problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify hyperbolicity and admissibility, solve and fit the turnpike envelope.
    Analyze(CommonArgs),
    /// Solve at one horizon and write the sampled trajectory.
    Solve(CommonArgs),
    /// Solve over several horizons and report the decay of the interior deviation.
    Sweep(SweepArgs),
    /// Compare against the transcription and Hamiltonian oracles.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Override the horizon of the problem file.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Uniform samples on the output grid.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Report document path (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Delimited table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    pub tol: Vec<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated increasing horizons.
    #[arg(long, value_delimiter = ',', required = true)]
    pub horizons: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleArg {
    Transcription,
    Hamiltonian,
    Both,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub oracle: OracleArg,
    /// Transcription steps.
    #[arg(long, default_value_t = 3000)]
    pub steps: usize,
    /// Perturb the Euler-Lagrange operator before verification.
    #[arg(long, hide = true)]
    pub corrupt_operator: bool,
}

/// Tolerances resolved from defaults and `--tol` overrides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub analyze: AnalyzeOptions,
    pub verify: VerifyTolerances,
}

impl RunConfig {
    pub fn from_overrides(samples: Option<usize>, overrides: &[String]) -> Result<RunConfig> {
        let mut cfg = RunConfig {
            analyze: AnalyzeOptions::default(),
            verify: VerifyTolerances::default(),
        };
        if let Some(s) = samples {
            if s < 2 {
                return Err(Error::Usage("--samples must be at least 2".into()));
            }
            cfg.analyze.grid.uniform = s;
        }
        for item in overrides {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("tolerance {item:?} is not name=value")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Usage(format!("tolerance {name} has a non-numeric value")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Usage(format!("tolerance {name} must be positive")));
            }
            let a = &mut cfg.analyze;
            match name.trim() {
                "gap_floor" => a.gap_floor = v,
                "rank_tol" => a.boundary.rank_tol = v,
                "cond_bound" => a.boundary.cond_bound = v,
                "compat_tol" => a.boundary.compat_tol = v,
                "layer_threshold" => a.layer_threshold = v,
                "fit_residual" => a.fit_residual_max = v,
                "fit_floor" => a.fit_floor = v,
                "transcription" => cfg.verify.transcription = v,
                "spectral" => cfg.verify.spectral = v,
                other => return Err(Error::Usage(format!("unknown tolerance {other:?}"))),
            }
        }
        Ok(cfg)
    }
}

fn read_problem(args: &CommonArgs) -> Result<LQProblem> {
    let text = fs::read_to_string(&args.problem)?;
    let p = load_problem(&text)?;
    match args.horizon {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(Error::Horizon(t)),
        Some(t) => Ok(p.with_horizon(t)),
        None => Ok(p),
    }
}

fn write_or_print(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn document(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("valid JSON");
    s.push('\n');
    s
}

/// Exit code for pipelines that cannot be solved at all.
fn refusal(pipe: &Pipeline) -> Option<(i32, String)> {
    if !pipe.is_hyperbolic() {
        return Some((
            2,
            format!(
                "not hyperbolic ({}, regime {})",
                pipe.certificate.verdict.label(),
                pipe.regime.label()
            ),
        ));
    }
    let bo = pipe.boundary.as_ref()?;
    if bo.admissibility != crate::boundary::Admissibility::Admissible {
        return Some((3, format!("boundary operator {}", bo.admissibility.label())));
    }
    None
}

fn cmd_analyze(args: &CommonArgs, stdout: &mut dyn Write) -> Result<i32> {
    let p = read_problem(args)?;
    let cfg = RunConfig::from_overrides(args.samples, &args.tol)?;
    let pipe = Pipeline::build(&p, &cfg.analyze)?;
    let report = analyze_pipeline(&pipe, p.horizon)?;
    write_or_print(args.out.as_deref(), &report.serialize(), stdout)?;
    Ok(report.verdict.exit_code())
}

fn cmd_solve(args: &CommonArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let p = read_problem(args)?;
    let cfg = RunConfig::from_overrides(args.samples, &args.tol)?;
    let pipe = Pipeline::build(&p, &cfg.analyze)?;
    if let Some((code, why)) = refusal(&pipe) {
        writeln!(stderr, "refusing to solve: {why}")?;
        return Ok(code);
    }
    let (sol, traj) = pipe.solve_on_grid(p.horizon)?;
    let summary = json!({
        "T": float_json(p.horizon),
        "samples": traj.grid.len(),
        "boundary_residual": float_json(sol.residual),
        "data_norm": float_json(sol.eta_norm),
        "condition_T": float_json(sol.condition),
        "condition_infinity": float_json(pipe.boundary.as_ref().map_or(f64::NAN, |b| b.condition_infinity)),
        "threshold_horizon": float_json(sol.threshold_horizon),
        "below_threshold_horizon": sol.below_threshold_horizon,
        "max_deviation": float_json(traj.deviation.iter().copied().fold(0.0, f64::max)),
        "interior_max_deviation": float_json(traj.max_deviation_on(0.25, 0.75)),
    });
    let csv = traj.to_csv();
    match &args.csv {
        Some(path) => {
            fs::write(path, csv)?;
            write_or_print(args.out.as_deref(), &document(&summary), stdout)?;
        }
        None => {
            stdout.write_all(csv.as_bytes())?;
            match &args.out {
                Some(path) => fs::write(path, document(&summary))?,
                None => stderr.write_all(document(&summary).as_bytes())?,
            }
        }
    }
    if sol.below_threshold_horizon {
        writeln!(stderr, "warning: horizon below the asymptotic threshold {:.6e}", sol.threshold_horizon)?;
    }
    Ok(0)
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    if args.horizons.len() < 2 {
        return Err(Error::Usage("--horizons needs at least two values".into()));
    }
    let p = read_problem(&args.common)?;
    let cfg = RunConfig::from_overrides(args.common.samples, &args.common.tol)?;
    let pipe = Pipeline::build(&p, &cfg.analyze)?;
    if let Some((code, why)) = refusal(&pipe) {
        writeln!(stderr, "refusing to sweep: {why}")?;
        return Ok(code);
    }
    let rep = sweep(&pipe, &args.horizons)?;
    if let Some(path) = &args.common.csv {
        fs::write(path, rep.to_table())?;
    }
    write_or_print(args.common.out.as_deref(), &document(&rep.to_json()), stdout)?;
    Ok(0)
}

/// `E(D) + I`: keeps self-adjointness, moves the characteristic roots.
fn corrupt(el: ELOperator) -> ELOperator {
    let m = el.m();
    let shift = crate::polymat::PolyMatrix::diag(&vec![RatPoly::constant(rat(1)); m]);
    let e = &el.e_op + &shift;
    el.with_operator(e)
}

fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let p = read_problem(&args.common)?;
    let cfg = RunConfig::from_overrides(args.common.samples, &args.common.tol)?;
    let pipe = if args.corrupt_operator {
        Pipeline::build_with(&p, &cfg.analyze, corrupt)?
    } else {
        Pipeline::build(&p, &cfg.analyze)?
    };
    let choice = match args.oracle {
        OracleArg::Transcription => OracleChoice::Transcription,
        OracleArg::Hamiltonian => OracleChoice::Hamiltonian,
        OracleArg::Both => OracleChoice::Both,
    };
    let rep = verify(&pipe, choice, args.steps, cfg.verify)?;
    write_or_print(args.common.out.as_deref(), &document(&rep.to_json()), stdout)?;
    if rep.passed() {
        Ok(0)
    } else {
        writeln!(stderr, "verification FAILED: solver disagrees with the oracle")?;
        Ok(1)
    }
}

/// Run with explicit arguments and streams; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, stdout),
        Command::Solve(a) => cmd_solve(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}
