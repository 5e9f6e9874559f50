use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use udnsync::harness::{run_and_emit, ExperimentSpec, Preset};

#[derive(Parser, Debug)]
#[command(name = "sim", version, about = "Consensus clock sync with NOMA-assisted exchange")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file or a built-in preset and write CSV and SVG results.
    Run {
        /// TOML scenario file.
        scenario: Option<PathBuf>,
        /// Built-in scenario: fig4, fig5, fig6, fig7 or fig8.
        #[arg(long, conflicts_with = "scenario")]
        preset: Option<String>,
        /// Output directory; defaults to the scenario's `output_dir`.
        #[arg(long, env = "UDNSYNC_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Preset budgets at full scale (250 nodes, 1000 snapshots).
        #[arg(long, requires = "preset")]
        full_scale: bool,
    },
    /// Parse and validate a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn load_specs(scenario: Option<PathBuf>, preset: Option<String>, full_scale: bool) -> Result<Vec<ExperimentSpec>> {
    match (scenario, preset) {
        (Some(path), None) => Ok(vec![ExperimentSpec::from_path(&path)?]),
        (None, Some(name)) => Ok(name.parse::<Preset>()?.specs(full_scale)),
        _ => bail!("give either a scenario file or --preset"),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { scenario } => {
            let spec = ExperimentSpec::from_path(&scenario)?;
            println!(
                "{}: ok ({} values x {} replications)",
                spec.name,
                spec.values.len(),
                spec.replications
            );
        }
        Command::Run {
            scenario,
            preset,
            out,
            seed,
            replications,
            full_scale,
        } => {
            for mut spec in load_specs(scenario, preset, full_scale)? {
                if let Some(seed) = seed {
                    spec.base.rng_seed = seed;
                }
                if let Some(r) = replications {
                    spec.replications = r;
                }
                spec.validate()?;
                let dir = out.clone().unwrap_or_else(|| spec.output_dir.clone());
                let written = run_and_emit(&spec, &dir).with_context(|| format!("running {}", spec.name))?;
                for path in written {
                    println!("{}", path.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
