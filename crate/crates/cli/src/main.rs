//! `qms`: entropy decay analysis for symmetric quantum Markov semigroups.
//!
//! Exit codes: 0 success, 1 failed verification suite, 2 usage or parse
//! error, 3 model validation error, 4 numeric failure.

mod commands;
mod model_file;
mod report;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use commands::{AnalyzeOpts, CommandError, DecayOpts, TcbChoice};
use model_file::ModelFile;

#[derive(Parser)]
#[command(
    name = "qms",
    version,
    about = "Mixing-time and entropy-decay constants for symmetric quantum Markov semigroups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TcbFlag {
    Exact,
    Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RhoFlag {
    Random,
    File,
    Witness,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze a model file and print the full report
    #[command(group(ArgGroup::new("fmt").args(["json", "text"])))]
    Analyze {
        /// Path to the model document
        model: PathBuf,
        /// Return-time method; defaults to exact when the model is ergodic
        #[arg(long, value_enum)]
        tcb: Option<TcbFlag>,
        /// Restarts for the constant search
        #[arg(long, default_value_t = 8)]
        search_starts: usize,
        /// Seed for every randomized step
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the canonical JSON report (default)
        #[arg(long)]
        json: bool,
        /// Print the human-readable rendering
        #[arg(long)]
        text: bool,
        /// Include wall-clock timings (makes reruns differ)
        #[arg(long)]
        timings: bool,
    },
    /// Tabulate entropy decay along the semigroup as CSV
    Decay {
        /// Path to the model document
        model: PathBuf,
        /// Initial state source
        #[arg(long, value_enum, default_value_t = RhoFlag::Random)]
        rho: RhoFlag,
        /// State document, required with --rho file
        #[arg(long)]
        rho_file: Option<PathBuf>,
        /// Largest time on the grid
        #[arg(long, allow_hyphen_values = true)]
        tmax: f64,
        /// Number of grid points, endpoints included
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Seed for the random or witness state
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Heat-semigroup return time and log-Sobolev constant on a torus
    Torus {
        /// Torus dimension
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Bisection tolerance
        #[arg(long, default_value_t = 1e-6, allow_hyphen_values = true)]
        tol: f64,
    },
    /// Re-derive the library's golden values and report pass/fail
    VerifyPaper {
        /// Run only checks whose label contains this substring
        #[arg(long)]
        filter: Option<String>,
        /// Test hook: push the first matching check past its tolerance
        #[arg(long, hide = true)]
        perturb: Option<String>,
    },
}

fn load_model(path: &Path) -> Result<ModelFile, CommandError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CommandError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CommandError::Usage(format!("cannot parse {}: {e}", path.display())))
}

fn run_analyze(
    model: &Path,
    tcb: Option<TcbFlag>,
    search_starts: usize,
    seed: u64,
    text: bool,
    timings: bool,
) -> Result<String, CommandError> {
    if search_starts == 0 {
        return Err(CommandError::Usage("--search-starts must be positive".into()));
    }
    let file = load_model(model)?;
    let opts = AnalyzeOpts {
        tcb: tcb.map(|t| match t {
            TcbFlag::Exact => TcbChoice::Exact,
            TcbFlag::Bound => TcbChoice::Bound,
        }),
        search_starts,
        seed,
        timings,
    };
    let report = commands::analyze(&file, &opts).map_err(CommandError::Core)?;
    Ok(if text {
        report.to_text()
    } else {
        report.to_json()
    })
}

fn run_decay(
    model: &Path,
    rho: RhoFlag,
    rho_file: Option<&Path>,
    tmax: f64,
    steps: usize,
    out: &Path,
    seed: u64,
) -> Result<(), CommandError> {
    if !(tmax.is_finite() && tmax > 0.0) {
        return Err(CommandError::Usage(format!(
            "--tmax must be a positive time, got {tmax}"
        )));
    }
    if steps < 2 {
        return Err(CommandError::Usage("--steps must be at least 2".into()));
    }
    let file = load_model(model)?;
    let rho_text = match (rho, rho_file) {
        (RhoFlag::File, Some(path)) => Some(std::fs::read_to_string(path).map_err(|e| {
            CommandError::Usage(format!("cannot read {}: {e}", path.display()))
        })?),
        (RhoFlag::File, None) => {
            return Err(CommandError::Usage("--rho file needs --rho-file".into()))
        }
        (_, Some(_)) => {
            return Err(CommandError::Usage(
                "--rho-file only applies with --rho file".into(),
            ))
        }
        _ => None,
    };
    let opts = DecayOpts {
        rho: match rho {
            RhoFlag::Random => commands::RhoChoice::Random,
            RhoFlag::File => commands::RhoChoice::File,
            RhoFlag::Witness => commands::RhoChoice::Witness,
        },
        tmax,
        steps,
        seed,
    };
    let csv = commands::decay(&file, &opts, rho_text.as_deref())?;
    std::fs::write(out, csv)
        .map_err(|e| CommandError::Usage(format!("cannot write {}: {e}", out.display())))?;
    Ok(())
}

fn run_torus(dim: usize, tol: f64) -> Result<String, CommandError> {
    if dim == 0 {
        return Err(CommandError::Usage("--dim must be at least 1".into()));
    }
    if !(tol.is_finite() && tol > 0.0 && tol < 0.5) {
        return Err(CommandError::Usage(format!(
            "--tol must sit in (0, 0.5), got {tol}"
        )));
    }
    commands::torus(dim, tol).map_err(CommandError::Core)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Analyze {
            model,
            tcb,
            search_starts,
            seed,
            json: _,
            text,
            timings,
        } => match run_analyze(&model, tcb, search_starts, seed, text, timings) {
            Ok(rendered) => {
                print!("{rendered}");
                0
            }
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Cmd::Decay {
            model,
            rho,
            rho_file,
            tmax,
            steps,
            out,
            seed,
        } => match run_decay(&model, rho, rho_file.as_deref(), tmax, steps, &out, seed) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Cmd::Torus { dim, tol } => match run_torus(dim, tol) {
            Ok(rendered) => {
                print!("{rendered}");
                0
            }
            Err(e) => {
                eprintln!("error: {}", e.message());
                e.exit_code()
            }
        },
        Cmd::VerifyPaper { filter, perturb } => {
            verify::run(filter.as_deref(), perturb.as_deref())
        }
    };
    ExitCode::from(code as u8)
}
