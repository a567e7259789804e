//! Load an experiment config, apply overrides and print the summary table.
//!
//! cargo run --example experiment_from_config -- examples/configs/fixed_c.toml replications=200

use std::path::PathBuf;

use gpplab::harness::{run_experiment, ExperimentConfig};

fn main() -> gpplab::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        [
            env!("CARGO_MANIFEST_DIR"),
            "examples",
            "configs",
            "fixed_c.toml",
        ]
        .iter()
        .collect()
    });
    let overrides: Vec<String> = args.collect();
    let config = ExperimentConfig::load(&path, &overrides)?;
    let out = run_experiment(&config)?;
    for s in &out.summaries {
        println!(
            "n={:<8} {:<18} mean {:+9.4} (target {:+8.4})  var {:9.4} (target {:9.4})  {}",
            s.n,
            s.quantity,
            s.mean,
            s.target_mean,
            s.variance,
            s.target_variance,
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    for t in &out.residual_trends {
        println!(
            "xi={}: median |residual| {:?} pass={}",
            t.xi, t.median_abs_residual, t.pass
        );
    }
    println!("overall: {}", if out.pass() { "pass" } else { "fail" });
    Ok(())
}
