//! Command-line front end: landscape tools, scenario runs and reports.

// `!(x > 0.0)` is the NaN-rejecting form used throughout validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod report;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand};
use haptic_core::landscape::{ForceLandscape, LandscapeError, SyntheticLandscapeParams};
use haptic_core::numfmt::sig6;
use haptic_core::plant::TraceError;
use haptic_core::{simulate, SimError, Trace};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "haptic", version, about = "Force landscapes, closed-loop plant runs and latency reports for an electromagnetic finger-tactile device.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate, invert and summarise force landscapes.
    #[command(subcommand)]
    Landscape(LandscapeCmd),
    /// Run scenario files; repeat --scenario/--out pairs to run several in parallel.
    #[command(after_help = config::SCENARIO_HELP)]
    Simulate {
        #[arg(long = "scenario", required = true)]
        scenarios: Vec<PathBuf>,
        /// Trace file for each scenario, in the same order.
        #[arg(long = "out", required = true)]
        outs: Vec<PathBuf>,
    },
    /// Summaries over traces and grids.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Debug, Subcommand)]
pub enum LandscapeCmd {
    /// Write a synthetic grid, F = a·I·u − b·u² with u = 1/(d + d0)².
    Gen(GenArgs),
    /// Write the zero-force curve of a grid.
    Zero {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the current (A) that produces a force at a distance.
    Invert {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        distance_mm: f64,
        #[arg(long, allow_negative_numbers = true)]
        force_n: f64,
    },
    /// Print the maximum practicable static rejection (N) over a distance range.
    Mpsr {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        dmin_mm: f64,
        #[arg(long, allow_negative_numbers = true)]
        dmax_mm: f64,
    },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// Coil coupling (N·mm²/A).
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Residual magnetization (N·mm⁴).
    #[arg(long, default_value_t = 5000.0, allow_negative_numbers = true)]
    pub b: f64,
    /// Geometric offset (mm).
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub d0: f64,
    /// Per-cell Gaussian noise (N).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub d_min: f64,
    #[arg(long, default_value_t = 35.0, allow_negative_numbers = true)]
    pub d_max: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub d_step: f64,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub i_min: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub i_max: f64,
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    pub i_step: f64,
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Per-event table: predicted onset, contact, error and lateness.
    Latency {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Static rejection with its binding distance.
    Mpsr {
        #[arg(long)]
        grid: PathBuf,
        /// Lower end of the range; the default skips the contact region.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        dmin_mm: f64,
        /// Upper end of the range [default: largest grid distance].
        #[arg(long, allow_negative_numbers = true)]
        dmax_mm: Option<f64>,
    },
}

fn landscape_error(e: LandscapeError) -> CliError {
    match e {
        LandscapeError::InvalidParams(_)
        | LandscapeError::InvalidGrid(_)
        | LandscapeError::NotMonotone { .. }
        | LandscapeError::Parse { .. } => CliError::Validation(e.to_string()),
        _ => CliError::Runtime(e.to_string()),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn read_grid(path: &Path) -> Result<ForceLandscape, CliError> {
    ForceLandscape::read_csv(open(path)?).map_err(|e| match landscape_error(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_err = |e: std::io::Error| CliError::Runtime(format!("stdout: {e}"));
    match cli.command {
        Command::Landscape(cmd) => match cmd {
            LandscapeCmd::Gen(g) => {
                let params = SyntheticLandscapeParams {
                    a: g.a,
                    b: g.b,
                    d0: g.d0,
                    noise_sigma: g.noise,
                    seed: g.seed,
                    d_min: g.d_min,
                    d_max: g.d_max,
                    d_step: g.d_step,
                    i_min: g.i_min,
                    i_max: g.i_max,
                    i_step: g.i_step,
                };
                let grid = ForceLandscape::generate_synthetic(&params).map_err(landscape_error)?;
                let mut w = create(&g.out)?;
                grid.write_csv(&mut w).map_err(landscape_error)?;
                w.flush().map_err(io_error(&g.out))
            }
            LandscapeCmd::Zero { grid, out: path } => {
                let curve = read_grid(&grid)?.zero_force_curve().map_err(landscape_error)?;
                let mut w = create(&path)?;
                curve.write_csv(&mut w).map_err(landscape_error)?;
                w.flush().map_err(io_error(&path))
            }
            LandscapeCmd::Invert {
                grid,
                distance_mm,
                force_n,
            } => {
                let i = read_grid(&grid)?
                    .invert_current(distance_mm, force_n)
                    .map_err(landscape_error)?;
                writeln!(out, "{}", sig6(i)).map_err(stdout_err)
            }
            LandscapeCmd::Mpsr {
                grid,
                dmin_mm,
                dmax_mm,
            } => {
                let m = read_grid(&grid)?.mpsr(dmin_mm, dmax_mm).map_err(landscape_error)?;
                writeln!(out, "{}", sig6(m.force_n)).map_err(stdout_err)
            }
        },
        Command::Simulate { scenarios, outs } => {
            if scenarios.len() != outs.len() {
                return Err(CliError::Usage(format!(
                    "{} --scenario but {} --out; give one --out per --scenario",
                    scenarios.len(),
                    outs.len()
                )));
            }
            run_scenarios(&scenarios, &outs, out)
        }
        Command::Report(cmd) => match cmd {
            ReportCmd::Latency { trace } => {
                let t = Trace::read(open(&trace)?).map_err(|e| match e {
                    TraceError::Parse { .. } => {
                        CliError::Validation(format!("{}: {e}", trace.display()))
                    }
                    _ => CliError::Runtime(format!("{}: {e}", trace.display())),
                })?;
                out.write_all(report::latency_table(&t).as_bytes())
                    .map_err(stdout_err)
            }
            ReportCmd::Mpsr {
                grid,
                dmin_mm,
                dmax_mm,
            } => {
                let g = read_grid(&grid)?;
                let dmax = dmax_mm.unwrap_or(g.distance_span().1);
                let m = g.mpsr(dmin_mm, dmax).map_err(landscape_error)?;
                writeln!(out, "{}", report::mpsr_line(&m)).map_err(stdout_err)
            }
        },
    }
}

/// Loads, runs and writes one scenario.
fn run_one(scenario: &Path, out: &Path) -> Result<Trace, CliError> {
    let sc = config::load_scenario(scenario).map_err(|e| CliError::Validation(e.to_string()))?;
    let trace = simulate(&sc).map_err(|e| match e {
        SimError::InvalidScenario(_) => {
            CliError::Validation(format!("{}: {e}", scenario.display()))
        }
        _ => CliError::Runtime(format!("{}: {e}", scenario.display())),
    })?;
    let mut w = create(out)?;
    trace
        .write(&mut w)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))?;
    w.flush().map_err(io_error(out))?;
    Ok(trace)
}

/// One engine per scenario, each on its own thread; summaries are printed in
/// argument order once all have finished.
fn run_scenarios(scenarios: &[PathBuf], outs: &[PathBuf], out: &mut dyn Write) -> Result<(), CliError> {
    let results: Vec<Result<Trace, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = scenarios
            .iter()
            .zip(outs)
            .map(|(sc, o)| s.spawn(move || run_one(sc, o)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut errors = Vec::new();
    for (path, result) in scenarios.iter().zip(results) {
        match result {
            Ok(trace) => {
                if scenarios.len() > 1 {
                    writeln!(out, "#scenario={}", path.display())
                        .map_err(|e| CliError::Runtime(format!("stdout: {e}")))?;
                }
                trace
                    .write_summary(&mut *out)
                    .map_err(|e| CliError::Runtime(format!("stdout: {e}")))?;
            }
            Err(e) => errors.push(e),
        }
    }
    match errors.len() {
        0 => Ok(()),
        1 => Err(errors.remove(0)),
        _ => {
            let worst = errors.iter().map(CliError::exit_code).max().unwrap_or(4);
            let message = errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n");
            Err(match worst {
                3 => CliError::Validation(message),
                _ => CliError::Runtime(message),
            })
        }
    }
}
