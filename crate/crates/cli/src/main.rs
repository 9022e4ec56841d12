use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, FromArgMatches};
use log::error;
use wbp::args::{Cli, Command};
use wbp::commands::{self, RuntimeAbort};
use wbp::config::{merge_config, read_snapshot};

/// Replaces unset flags of `cmd` with the values from its `--config` file.
fn apply_config(cmd: Command, matches: &clap::ArgMatches) -> Result<Command> {
    let Some((name, sub)) = matches.subcommand() else { return Ok(cmd) };
    Ok(match cmd {
        Command::Train(a) => match a.config.clone() {
            Some(p) => Command::Train(merge_config(&a, sub, name, &p)?),
            None => Command::Train(a),
        },
        Command::Prune(a) => match a.config.clone() {
            Some(p) => Command::Prune(merge_config(&a, sub, name, &p)?),
            None => Command::Prune(a),
        },
        Command::Eval(a) => match a.config.clone() {
            Some(p) => Command::Eval(merge_config(&a, sub, name, &p)?),
            None => Command::Eval(a),
        },
        Command::Oracle(a) => match a.config.clone() {
            Some(p) => Command::Oracle(merge_config(&a, sub, name, &p)?),
            None => Command::Oracle(a),
        },
        Command::Rerun(r) => {
            let mut cmd = read_snapshot(&r.snapshot)?;
            if let Some(out) = r.out {
                if let Some(o) = cmd.out_mut() {
                    *o = out;
                }
            }
            cmd
        }
        other => other,
    })
}

fn run(cli: Cli, matches: &clap::ArgMatches) -> Result<()> {
    if let Some(w) = cli.workers {
        if w == 0 {
            anyhow::bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().context("cannot start the worker pool")?;
    }
    let cmd = apply_config(cli.command, matches)?;
    commands::run(&cmd)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<RuntimeAbort>()) {
        2
    } else if let Some(core) = e.downcast_ref::<wbp_core::Error>() {
        if commands::is_runtime(core) { 2 } else { 1 }
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
