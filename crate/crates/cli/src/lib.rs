//! Command-line front end for the `weakval` simulator: configuration
//! loading and the `sweep`, `calibrate`, `methods` and `image` commands.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};

use crate::config::{ExperimentConfig, KEYS};

fn key_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .short('c')
        .value_name("FILE")
        .help("flat `key = value` configuration file")
        .value_parser(clap::value_parser!(PathBuf))];
    for (key, help) in KEYS {
        args.push(
            Arg::new(*key)
                .long(key.replace('_', "-"))
                .value_name("VALUE")
                .help(*help)
                .allow_hyphen_values(true)
                .action(ArgAction::Set),
        );
    }
    args
}

pub fn cli() -> Command {
    let sub = |name: &'static str, about: &'static str| Command::new(name).about(about).args(key_args());
    Command::new("weakval")
        .about("Simulated single-apparatus readout of complex weak values")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(sub("sweep", "waveplate-angle sweep; writes sweep.csv and sweep_summary.txt"))
        .subcommand(sub("calibrate", "pixel calibration from reference images; writes calibration.csv"))
        .subcommand(sub("methods", "compare readout methods A/B/C; writes methods.csv"))
        .subcommand(sub("image", "render one sensor image; writes image.pgm and image.csv"))
}

/// Defaults, then the config file, then command-line flags.
pub fn load(m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        config.apply_file(path)?;
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            config
                .set(key, v)
                .with_context(|| format!("invalid value for --{}", key.replace('_', "-")))?;
        }
    }
    Ok(config)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("WEAKVAL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .with_context(|| format!("WEAKVAL_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Parses `std::env::args` and runs the selected command.
pub fn run() -> Result<ExitCode> {
    // Usage errors exit 1 like every other configuration error; 2 is
    // reserved for flagged sweep points.
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return Ok(ExitCode::from(1));
        }
        Err(e) => {
            let _ = e.print();
            return Ok(ExitCode::SUCCESS);
        }
    };
    init_threads()?;
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let config = load(sub)?;
    match name {
        "sweep" => commands::sweep(&config),
        "calibrate" => commands::calibrate_cmd(&config),
        "methods" => commands::methods(&config),
        "image" => commands::image(&config),
        _ => unreachable!("unknown subcommand"),
    }
}
