//! Runs a bundled experiment template in-process and prints its summary.
//!
//!     cargo run --example run_experiment -- gcc

use nls_control::experiment::{parse_config, run, template, ExperimentKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "sphere".into());
    let kind = ExperimentKind::ALL.into_iter().find(|k| k.name() == name).ok_or(format!("unknown experiment {name}"))?;
    let cfg = parse_config(template(kind))?;
    let out = tempfile::tempdir()?;
    let outcome = run(&cfg, out.path())?;
    println!("{}", serde_json::to_string_pretty(&outcome.summary)?);
    println!("files: {:?}", outcome.files);
    Ok(())
}
