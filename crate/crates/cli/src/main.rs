use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vfv::analyze::{cmd_analyze, AnalyzeArgs};
use vfv::config::{parse_subdomain, Config};
use vfv::error::CliError;
use vfv::runs::{cmd_run, failures};
use vfv::selftest::cmd_selftest;

/// Viscosity finite volume solver for the barotropic Euler system on the
/// periodic unit torus, with ensemble-statistics analysis across mesh
/// resolutions.
#[derive(Parser)]
#[command(name = "vfv", version, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver for every resolution in the config file.
    Run {
        /// Path to the run configuration.
        config: PathBuf,
        /// Recompute runs even when an identical config already produced them.
        #[arg(long)]
        force: bool,
    },
    /// Build convergence tables, field dumps and histograms from run
    /// directories.
    Analyze {
        /// Run directories (each holding manifest.txt and state_final.field).
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Weight function; repeat for several (default: all four).
        #[arg(long = "weight")]
        weights: Vec<String>,
        /// Reference solution policy: per-column, cesaro-superset or
        /// file:<path>.
        #[arg(long, default_value = "per-column")]
        reference: String,
        /// Histogram subdomain x0,x1,y0,y1; repeatable.
        #[arg(long = "subdomain")]
        subdomains: Vec<String>,
        /// Histogram bin count.
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Output directory for tables and field dumps.
        #[arg(long, default_value = "analysis")]
        out: PathBuf,
        /// Ignore cutoffs above this resolution in the tables.
        #[arg(long)]
        cutoff_max: Option<usize>,
    },
    /// Run the embedded invariant suite and report each property.
    Selftest,
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, force } => {
            let cfg = Config::from_file(&config)?;
            let outcomes = cmd_run(&cfg, force)?;
            let failed = failures(&outcomes);
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Solver(format!(
                    "{} of {} runs failed:\n  {}",
                    failed.len(),
                    outcomes.len(),
                    failed.join("\n  ")
                )))
            }
        }
        Command::Analyze {
            dirs,
            weights,
            reference,
            subdomains,
            bins,
            out,
            cutoff_max,
        } => {
            let weights = if weights.is_empty() {
                vec!["equal".into(), "quad".into(), "sin2".into(), "exp".into()]
            } else {
                weights
            };
            let mut boxes = Vec::new();
            for spec in &subdomains {
                boxes.push(parse_subdomain(spec).map_err(CliError::Usage)?);
            }
            let written = cmd_analyze(&AnalyzeArgs {
                run_dirs: dirs,
                weights,
                reference,
                subdomains: boxes,
                bins,
                out,
                cutoff_max,
            })?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Selftest => {
            let failed = cmd_selftest();
            if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Analysis(format!("{failed} invariant(s) failed")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // keep clap's rendered help/errors but exit 1 on usage problems
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
