//! Experiment runner.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 i/o error, 4 numerical
//! failure (stalled or diverging iteration, blow-up), 5 invariant or support
//! violation, 1 anything else. Failures print one JSON object on stderr.

use clap::{Parser, Subcommand};
use nls_control::experiment::{self, ExperimentKind};
use nls_control::Error;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nlsctl", version, about = "Run damping, control and estimate experiments")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Output root; defaults to $NLSCTL_OUTPUT or ./nlsctl-out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config without computing anything.
    Validate { config: PathBuf },
    /// List experiment names; with --template, print a starting config.
    ListExperiments {
        #[arg(long)]
        template: Option<String>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::InvalidSpec(_) | Error::EmptySlabs => 2,
        Error::Io(_) | Error::Format(_) => 3,
        Error::CgStalled { .. }
        | Error::IterationCap(_)
        | Error::PicardDiverged { .. }
        | Error::BlowupDetected { .. }
        | Error::CorrectorDiverged { .. }
        | Error::JInversionFailed { .. }
        | Error::BallExceeded { .. }
        | Error::LegFailed { .. }
        | Error::HalfFailed { .. }
        | Error::DegenerateFit(_) => 4,
        Error::Invariant(_) | Error::SupportViolation(_) | Error::EmptyRegion => 5,
        _ => 1,
    }
}

fn fail(e: &Error) -> ExitCode {
    let code = exit_code(e);
    let kind = format!("{e:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error");
    eprintln!("{}", json!({"error": kind, "message": e.to_string(), "exit_code": code}));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            return fail(&Error::InvalidArgument(e.to_string()));
        }
    }
    match cli.command {
        Command::ListExperiments { template: None } => {
            for k in ExperimentKind::ALL {
                println!("{:<14} {}", k.name(), k.description());
            }
            ExitCode::SUCCESS
        }
        Command::ListExperiments { template: Some(name) } => {
            match ExperimentKind::ALL.iter().find(|k| k.name() == name) {
                Some(k) => {
                    print!("{}", experiment::template(*k));
                    ExitCode::SUCCESS
                }
                None => fail(&Error::Config { path: "template".into(), message: format!("unknown experiment `{name}`") }),
            }
        }
        Command::Validate { config } => {
            let cfg = match experiment::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let diags = cfg.validate();
            if diags.is_empty() {
                println!("{}", json!({"ok": true, "experiment": cfg.experiment.name()}));
                ExitCode::SUCCESS
            } else {
                println!("{}", json!({"ok": false, "diagnostics": diags}));
                ExitCode::from(2)
            }
        }
        Command::Run { config, out } => {
            let cfg = match experiment::load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let root = out.unwrap_or_else(experiment::default_output_root);
            match experiment::run(&cfg, &root) {
                Ok(o) => {
                    println!("{}", json!({"ok": true, "dir": o.dir, "files": o.files}));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
