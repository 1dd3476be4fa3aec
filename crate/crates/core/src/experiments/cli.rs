//! Command-line front end. Exit codes: 0 success, 2 usage or config error,
//! 3 runtime failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use super::{
    run_critical_sweep, run_landscape, run_origin_check, run_phase_transition, run_rrcp_study, run_solve_one,
    run_wdc_study, ExperimentKind, ExperimentSpec,
};
use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Overrides the worker-thread count.
pub const WORKERS_ENV: &str = "DPR_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "dpr", about = "Phase retrieval under random ReLU generative priors", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Success rate against m over seeded random instances (CSV).
    PhaseTransition(Common),
    /// Expected objective over a 2-D latent grid (CSV).
    Landscape(Common),
    /// Per-layer weight-distribution deviation reports (JSON).
    Wdc(Common),
    /// Measurement deviation reports, one per m (JSON).
    Rrcp(Common),
    /// Directional derivatives at the origin (JSON).
    OriginCheck(Common),
    /// One-step decrease test on a polar grid (CSV).
    CriticalSweep(Common),
    /// One solve at the first m of the grid (JSON).
    SolveOne(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML experiment config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; overrides `output_path`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::InvalidDimensions(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code. Output files are written as a side effect; the one-line summary
/// goes to standard error so standard output can carry data.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(msg) = configure_workers() {
        eprintln!("error: {msg}");
        return EXIT_CONFIG;
    }
    match dispatch(cli.command) {
        Ok(summary) => {
            eprintln!("{summary}");
            EXIT_OK
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn configure_workers() -> Result<(), String> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got {raw:?}"))?;
    // A second call in the same process (tests) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load(kind: ExperimentKind, args: &Common) -> Result<(ExperimentSpec, Option<PathBuf>), Failure> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::from_path(path)?,
        None => ExperimentSpec::default(),
    };
    match spec.kind {
        Some(k) if k != kind => {
            return Err(Failure::Config(format!(
                "config declares kind {k:?} but the subcommand runs {kind:?}"
            )))
        }
        _ => spec.kind = Some(kind),
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let out = args.out.clone().or_else(|| spec.output_path.clone());
    spec.validate()?;
    Ok((spec, out))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn dispatch(command: Command) -> Result<String, Failure> {
    match command {
        Command::PhaseTransition(args) => {
            let (spec, out) = load(ExperimentKind::PhaseTransition, &args)?;
            let r = run_phase_transition(&spec)?;
            r.write_csv(sink(out.as_deref())?)?;
            let rates: Vec<String> = r.rows.iter().map(|r| format!("{}:{:.2}", r.m, r.success_rate)).collect();
            Ok(format!("phase-transition: success rate by m {}", rates.join(" ")))
        }
        Command::Landscape(args) => {
            let (spec, out) = load(ExperimentKind::Landscape, &args)?;
            let g = run_landscape(&spec)?;
            g.write_csv(sink(out.as_deref())?)?;
            let min = g.points.iter().min_by(|a, b| a.value.total_cmp(&b.value)).expect("grid is nonempty");
            Ok(format!(
                "landscape: {}×{} grid, minimum {:.4e} at ({:.3}, {:.3})",
                g.n1, g.n2, min.value, min.x1, min.x2
            ))
        }
        Command::Wdc(args) => {
            let (spec, out) = load(ExperimentKind::WdcStudy, &args)?;
            let reports = run_wdc_study(&spec)?;
            write_json(&reports, out.as_deref())?;
            let worst = reports.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
            Ok(format!("wdc: {} layers, worst max deviation {worst:.4e}", reports.len()))
        }
        Command::Rrcp(args) => {
            let (spec, out) = load(ExperimentKind::RrcpStudy, &args)?;
            let reports = run_rrcp_study(&spec)?;
            write_json(&reports, out.as_deref())?;
            let parts: Vec<String> = reports
                .iter()
                .map(|r| format!("m={}:{:.3e}", r.dims.m.unwrap_or(0), r.max_deviation))
                .collect();
            Ok(format!("rrcp: max deviation {}", parts.join(" ")))
        }
        Command::OriginCheck(args) => {
            let (spec, out) = load(ExperimentKind::OriginCheck, &args)?;
            let r = run_origin_check(&spec)?;
            write_json(&r, out.as_deref())?;
            Ok(format!(
                "origin-check: {} violations over {} directions ({} degenerate)",
                r.violations, r.directions, r.degenerate_directions
            ))
        }
        Command::CriticalSweep(args) => {
            let (spec, out) = load(ExperimentKind::CriticalSweep, &args)?;
            let r = run_critical_sweep(&spec)?;
            r.write_csv(sink(out.as_deref())?)?;
            Ok(format!(
                "critical-sweep: {} of {} points fail to decrease, {} outside the balls",
                r.failures.len(),
                r.points.len(),
                r.stray_failures
            ))
        }
        Command::SolveOne(args) => {
            let (spec, out) = load(ExperimentKind::SolveOne, &args)?;
            let r = run_solve_one(&spec)?;
            write_json(&r, out.as_deref())?;
            Ok(format!(
                "solve-one: objective {:.4e}, relative error {:?}, {} iterations",
                r.objective_final, r.relative_error, r.iterations_used
            ))
        }
    }
}
