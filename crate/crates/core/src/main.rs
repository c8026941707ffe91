use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lyapchain::config::{ConfigError, ExperimentConfig};
use lyapchain::experiment::{resolve_output_dir, run_experiment, RunError};

#[derive(Parser)]
#[command(name = "lyapchain", version, about = "Lyapunov-feedback state transfer on periodic spin chains")]
struct Cli {
    /// Worker threads for ensembles, scans and sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever experiment the config describes.
    Run(Common),
    /// Closed-loop transfer from one end of the chain.
    Transfer(Common),
    /// Uncontrolled propagation amplitudes.
    Free(Common),
    /// End-site occupation of the target level over a (D1, D2) grid.
    Scan(Common),
    /// Final fidelity against static perturbation of one parameter.
    Sweep(Common),
    /// Mean fidelity under time-dependent coupling disorder.
    Ensemble(Common),
    /// Eigenvalues, boundary levels and their gaps.
    Spectrum(Common),
    /// Time to reach a fidelity target against chain length.
    Scale(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a config entry, e.g. `--set control.gains=[2,2]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to the config's, then $LYAPCHAIN_OUTPUT.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Command {
    fn split(&self) -> (Option<&'static str>, &Common) {
        match self {
            Command::Run(c) => (None, c),
            Command::Transfer(c) => (Some("transfer"), c),
            Command::Free(c) => (Some("free_evolution"), c),
            Command::Scan(c) => (Some("occupation_scan"), c),
            Command::Sweep(c) => (Some("disorder_sweep"), c),
            Command::Ensemble(c) => (Some("dynamic_disorder"), c),
            Command::Spectrum(c) => (Some("spectrum"), c),
            Command::Scale(c) => (Some("scalability"), c),
        }
    }
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| ConfigError::Schema(format!("--jobs: {e}")))?;
    }
    let (expected, common) = cli.command.split();
    let config = ExperimentConfig::load(&common.config, &common.overrides)?;
    if let Some(expected) = expected {
        let found = config.experiment.name();
        if found != expected {
            return Err(ConfigError::WrongExperiment { expected, found }.into());
        }
    }
    let dir = resolve_output_dir(&config, common.out.as_deref());
    let outcome = run_experiment(&config, &dir)?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary).expect("summary serializes"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lyapchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
