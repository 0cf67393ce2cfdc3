use std::path::PathBuf;
use std::process::ExitCode;

use corrnet_cli::commands::{execute, Command};
use corrnet_cli::config::parse_config;
use corrnet_cli::error::CliError;

const USAGE: &str = "usage: corrnet <gen|corr|train|decode|eval|run> \
[--config PATH] [--seed N] [--out DIR] [--decoders LIST] [--<key> VALUE]...";

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corrnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run() -> Result<(), CliError> {
    let mut args = std::env::args().skip(1);
    let sub = args
        .next()
        .ok_or_else(|| CliError::Config(format!("missing subcommand\n{USAGE}")))?;
    let cmd = Command::parse(&sub)?;

    let mut config_file: Option<PathBuf> = None;
    let mut flags: Vec<(String, String)> = Vec::new();
    while let Some(flag) = args.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| CliError::Config(format!("expected a --flag, got `{flag}`\n{USAGE}")))?;
        let value = args
            .next()
            .ok_or_else(|| CliError::Config(format!("flag --{key} needs a value")))?;
        if key == "config" {
            config_file = Some(PathBuf::from(value));
        } else {
            flags.push((key.replace('-', "_"), value));
        }
    }

    let cfg = parse_config(config_file.as_deref(), &flags)?;
    execute(cmd, &cfg)
}
