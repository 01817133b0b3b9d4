use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sensornet_cli::commands::{
    advantage, design_files, render_advantage, render_design, render_simulation, simulate_scenario,
    write_examples, SimulateRequest, DEFAULT_SAMPLES,
};
use sensornet_cli::report::write_csv_file;
use sensornet_cli::scenario::ProbeSpec;
use sensornet_cli::{CliError, ScenarioFile};

/// Noise-insensitive probe design for distributed quantum sensor networks.
///
/// Exit codes: 0 success, 1 parse or I/O error, 2 domain error or failed
/// self-check.
#[derive(Debug, Parser)]
#[command(name = "sensornet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the relative noise-constraint tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find the optimal noise-insensitive probe for each scenario file.
    Design {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Write one report row per scenario.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Evolve a probe under the given phases, twirl, and report Fisher information.
    Simulate {
        scenario: PathBuf,
        /// Comma-separated phase per generating function.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        phases: Option<Vec<f64>>,
        /// Custom probe branch s (requires --r).
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "r"
        )]
        s: Option<Vec<f64>>,
        /// Custom probe branch r (requires --s).
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            requires = "s"
        )]
        r: Option<Vec<f64>>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Entangled versus product-state Fisher information in the alternating scenario.
    Advantage {
        /// Even sensor counts J.
        #[arg(required = true)]
        sites: Vec<usize>,
        /// Random product states per J beyond the exhaustive grid.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write the bundled example scenarios into a directory.
    Examples { dir: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design { scenarios, csv } => {
            let results = design_files(&scenarios, cli.tol, cli.jobs)?;
            let mut rows = Vec::new();
            let mut first_err = None;
            for (path, res) in scenarios.iter().zip(results) {
                match res {
                    Ok(o) => {
                        println!("{}", render_design(&o));
                        rows.push(o.row);
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e}", path.display());
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(path) = csv {
                write_csv_file(&rows, &path)?;
            }
            first_err.map_or(Ok(()), Err)
        }
        Command::Simulate {
            scenario,
            phases,
            s,
            r,
            csv,
        } => {
            let sc = ScenarioFile::load(&scenario)?;
            let req = SimulateRequest {
                phases,
                probe: s.zip(r).map(|(s, r)| ProbeSpec { s, r }),
                tol: cli.tol,
            };
            let o = simulate_scenario(&sc, &req)?;
            print!("{}", render_simulation(&o));
            if let Some(path) = csv {
                write_csv_file(&[o.row], &path)?;
            }
            Ok(())
        }
        Command::Advantage {
            sites,
            samples,
            csv,
        } => {
            let out = advantage(&sites, samples, cli.jobs)?;
            print!("{}", render_advantage(&out));
            if let Some(path) = csv {
                let rows: Vec<_> = out.into_iter().map(|o| o.row).collect();
                write_csv_file(&rows, &path)?;
            }
            Ok(())
        }
        Command::Examples { dir } => {
            for path in write_examples(&dir)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
