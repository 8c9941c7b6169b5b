//! Retrains the attention learner with Gaussian channel noise and compares
//! final coverage against the same run without noise and without messages.

use ecmarl::experiment::{is_override, train_seed, ExperimentConfig};

fn main() -> ecmarl::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).filter(|a| is_override(a)).collect();
    let base = ExperimentConfig::load(None, Some("fig2"), &overrides)?;
    let seed = base.run.seeds[0];
    for (label, m, sigma) in [("no-comm", 0, 0.0), ("comm", 16, 0.0), ("comm, sigma 0.1", 16, 0.1)] {
        let mut cfg = base.clone();
        cfg.comm.message_dim = m;
        cfg.comm.noise_sigma = sigma;
        let run = train_seed(&cfg, seed, |_| {})?;
        let c = run.final_metrics.final_coverage.expect("uav runs report coverage");
        println!("{label:<16} coverage {c:.4}");
    }
    Ok(())
}
