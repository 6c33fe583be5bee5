use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use deauthguard::bench::bench;
use deauthguard::medium::write_jsonl;
use deauthguard::scenario::{preset, preset_names, run_scenario, ConfigError, ScenarioConfig, ScenarioError};

const EXIT_CONFIG: u8 = 2;
const EXIT_TICK_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "deauthguard", version, about = "Simulate token-verified 802.11 deauthentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Human,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a bundled scenario).
    Run {
        scenario: String,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
        /// Write the medium event log as JSON Lines.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Time token generation and SHA-512 hashing.
    Bench {
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, value_enum, default_value = "human")]
        format: Format,
    },
    /// List the bundled scenarios.
    ListScenarios,
}

fn load(scenario: &str) -> Result<ScenarioConfig, ConfigError> {
    let path = Path::new(scenario);
    if path.exists() {
        return ScenarioConfig::from_path(path);
    }
    preset(scenario).map_err(|_| ConfigError::Io {
        path: scenario.to_string(),
        reason: "no such file or bundled scenario".to_string(),
    })
}

fn run(scenario: &str, seed: Option<u64>, format: Format, log: Option<&Path>) -> anyhow::Result<ExitCode> {
    let mut cfg = match load(scenario) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_CONFIG));
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let result = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                ScenarioError::TickLimitExceeded { .. } => EXIT_TICK_LIMIT,
                ScenarioError::Config(_) | ScenarioError::Attack { .. } => EXIT_CONFIG,
            };
            return Ok(ExitCode::from(code));
        }
    };
    if let Some(path) = log {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_jsonl(BufWriter::new(file), &result.events)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    match format {
        Format::Human => print!("{}", result.outcome.render_table()),
        Format::Json => println!("{}", result.outcome.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            seed,
            format,
            log,
        } => run(&scenario, seed, format, log.as_deref()),
        Command::Bench { iterations, format } => match bench(iterations) {
            Ok(report) => {
                match format {
                    Format::Human => print!("{report}"),
                    Format::Json => println!("{}", report.to_json()),
                }
                Ok(ExitCode::SUCCESS)
            }
            Err(e) => {
                eprintln!("error: {e}");
                Ok(ExitCode::from(EXIT_CONFIG))
            }
        },
        Command::ListScenarios => {
            for name in preset_names() {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
