//! Command-line runner for the experiment harness.

use std::path::PathBuf;
use std::process::ExitCode;

use cauchy_mimo::harness::{self, ConfigOverrides, EstimatorKind, ExperimentConfig};
use cauchy_mimo::{Error, Init, PilotKind};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cauchy-mimo", version, about = "Massive MIMO simulations under Cauchy and SaS noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write `<out>/<experiment>.csv` and `.svg`.
    Run(Box<RunArgs>),
    /// List the experiment names.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Full scale: 500 blocks per SDR point.
    #[arg(long)]
    paper_scale: bool,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// Comma-separated SDR grid in dB.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sdr_grid_db: Option<Vec<f64>>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// `dft` or `identity`.
    #[arg(long, value_parser = parse_pilot_kind)]
    pilot_kind: Option<PilotKind>,
    /// `despread_ml` or `raw_ml`.
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<EstimatorKind>,
    /// `despread` or `zero`.
    #[arg(long, value_parser = parse_init)]
    init: Option<Init>,
    #[arg(long)]
    n_blocks: Option<usize>,
    #[arg(long)]
    gamma_likelihood_override: Option<f64>,
    #[arg(long)]
    n_trials: Option<usize>,
}

fn parse_pilot_kind(s: &str) -> Result<PilotKind, String> {
    match s {
        "dft" => Ok(PilotKind::Dft),
        "identity" => Ok(PilotKind::Identity),
        _ => Err(format!("expected `dft` or `identity`, got `{s}`")),
    }
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    match s {
        "despread_ml" => Ok(EstimatorKind::DespreadMl),
        "raw_ml" => Ok(EstimatorKind::RawMl),
        _ => Err(format!("expected `despread_ml` or `raw_ml`, got `{s}`")),
    }
}

fn parse_init(s: &str) -> Result<Init, String> {
    match s {
        "despread" => Ok(Init::Despread),
        "zero" => Ok(Init::Zero),
        _ => Err(format!("expected `despread` or `zero`, got `{s}`")),
    }
}

impl RunArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            experiment: self.experiment.clone(),
            m: self.m,
            k: self.k,
            tau: self.tau,
            t: self.t,
            sdr_grid_db: self.sdr_grid_db.clone(),
            alpha: self.alpha,
            gamma: self.gamma,
            pilot_kind: self.pilot_kind,
            estimator: self.estimator,
            init: self.init,
            n_blocks: self.n_blocks,
            seed: self.seed,
            gamma_likelihood_override: self.gamma_likelihood_override,
            n_trials: self.n_trials,
            paper_scale: self.paper_scale,
        }
    }
}

/// Exit code for invalid configuration, distinct from runtime failures.
const EXIT_CONFIG: u8 = 2;

fn run(args: &RunArgs) -> Result<(), Error> {
    let config = ExperimentConfig::from_path(&args.config).and_then(|c| args.overrides().apply(c))?;
    log::info!(
        "running {} (config hash {}, {} grid points, {} blocks)",
        config.experiment.name(),
        config.hash(),
        config.sdr_grid_db.len(),
        config.n_blocks
    );
    let start = std::time::Instant::now();
    let rows = harness::run(&config)?;
    let paths = harness::write_outputs(&config, &rows, &args.out)?;
    log::info!("{} rows in {:.1?}", rows.len(), start.elapsed());
    println!("{}", paths.csv.display());
    if let Some(svg) = paths.svg {
        println!("{}", svg.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for kind in harness::ExperimentKind::ALL {
                println!("{}", kind.name());
            }
            ExitCode::SUCCESS
        }
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e @ (Error::Config { .. } | Error::Io(_))) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_CONFIG)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
    }
}
