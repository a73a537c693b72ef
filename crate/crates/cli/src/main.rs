use std::path::PathBuf;
use std::process::ExitCode;

use barywalk_core::classifier::classify;
use barywalk_core::error::CoreError;
use barywalk_core::experiment::{run_experiment, ExperimentConfig};
use barywalk_core::models::BiasTarget;
use clap::{Parser, Subcommand};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "barywalk", about = "Random walks with barycentric self-interaction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a `key = value` config file.
    Run { config: PathBuf },
    /// Print the analytic phase prediction as JSON.
    Classify {
        #[arg(long)]
        d: usize,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        sigma2: f64,
        #[arg(long, default_value = "barycentre", value_parser = parse_bias_target)]
        bias_target: BiasTarget,
    },
    /// Print the version.
    Version,
}

fn parse_bias_target(s: &str) -> Result<BiasTarget, String> {
    BiasTarget::parse(s).ok_or_else(|| format!("expected `barycentre` or `origin`, got `{s}`"))
}

fn fail(err: CoreError) -> ExitCode {
    eprintln!("barywalk: {err}");
    ExitCode::from(if err.is_config_error() {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    })
}

fn run(config: PathBuf) -> Result<(), CoreError> {
    let mut config = ExperimentConfig::load(&config)?;
    if let Ok(raw) = std::env::var("BARYWALK_THREADS") {
        config.parallelism = raw.trim().parse().map_err(|_| CoreError::Config {
            line: None,
            message: format!("BARYWALK_THREADS must be a count, got `{raw}`"),
        })?;
    }
    let out = run_experiment(&config)?;
    println!("{}", out.series_csv.display());
    println!("{}", out.summary_json.display());
    if let Some(p) = out.path_csv {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Classify {
            d,
            rho,
            beta,
            sigma2,
            bias_target,
        } => classify(d, rho, beta, sigma2, bias_target).and_then(|p| {
            println!("{}", serde_json::to_string_pretty(&p)?);
            Ok(())
        }),
        Command::Version => {
            println!("barywalk {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
