//! Fig.-2-style sweep on the 3-UAV, 30-user preset: served-user fraction
//! for several message sizes plus the random-walk baseline.
//!
//! One seed by default (a few minutes in release mode). Pass
//! `--run.seeds=[0,1,2,3,4]` for the full comparison; outputs land in
//! `runs/example_sweep/`.

use ecmarl::experiment::{is_override, run_sweep, ExperimentConfig};

fn main() -> ecmarl::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).filter(|a| is_override(a)).collect();
    let mut cfg = ExperimentConfig::load(None, Some("fig2"), &overrides)?;
    if !overrides.iter().any(|o| o.starts_with("--run.seeds")) {
        cfg.run.seeds = vec![0];
    }
    let out = cfg.output_root().join("example_sweep");
    let summary = run_sweep(&cfg, &[0, 4, 16], &out)?;
    println!("{:>8} {:>10} {:>10}", "m", "coverage", "std");
    for row in &summary {
        let c = row.coverage.as_ref().expect("uav runs report coverage");
        println!("{:>8} {:>10.4} {:>10.4}", row.comm_size, c.mean, c.std);
    }
    println!("csv files in {}", out.display());
    Ok(())
}
