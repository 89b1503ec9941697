//! `photonloc <scenario> --config <path> --out <dir> [--seed N] [--threads N]`
//!
//! Exit status 0 on success, 1 on a numerical failure, 2 on a configuration
//! error.

mod config;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use config::ConfigError;
use scenarios::{Failure, SCENARIOS};

#[derive(Parser, Debug)]
#[command(
    name = "photonloc",
    version,
    about = "Photon localization scenarios on spacetime hyperplanes"
)]
struct Cli {
    /// density, count, boost, costheta, tail or validate
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
    scenario: String,
    /// TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Directory for the report and data files
    #[arg(long)]
    out: PathBuf,
    /// Overrides `seed` from the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the numerical kernels
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_NUMERICAL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn load(cli: &Cli) -> Result<config::RunConfig, ConfigError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", cli.config.display())))?;
    let cfg = config::parse(&text)?;
    if let Some(s) = &cfg.scenario {
        if s != &cli.scenario {
            return Err(ConfigError::new(
                "scenario",
                format!("config is for `{s}` but `{}` was requested", cli.scenario),
            ));
        }
    }
    Ok(cfg)
}

fn write_outputs(
    dir: &Path,
    report_name: &str,
    outcome: &scenarios::Outcome,
    scenario: &str,
    seed: u64,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in &outcome.files {
        std::fs::write(dir.join(name), bytes)?;
    }
    let report = json!({
        "scenario": scenario,
        "seed": seed,
        "passed": outcome.passed,
        "results": outcome.report,
        "files": outcome.files.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(dir.join(report_name), text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("config error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot start thread pool: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let outcome = match scenarios::run(&cli.scenario, &cfg, seed) {
        Ok(o) => o,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    if let Err(e) = write_outputs(&cli.out, &cfg.output.report, &outcome, &cli.scenario, seed) {
        eprintln!("cannot write outputs to {}: {e}", cli.out.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    println!(
        "{}: {} ({})",
        cli.scenario,
        if outcome.passed { "passed" } else { "FAILED" },
        cli.out.join(&cfg.output.report).display()
    );
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    }
}
