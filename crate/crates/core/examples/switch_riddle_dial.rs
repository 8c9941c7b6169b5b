//! Trains DIAL-style prisoners on the switch riddle (one seed by default)
//! and compares them against the exact oracle values.
//!
//! `cargo run --release --example switch_riddle_dial -- --run.seeds=[0,1]`

use ecmarl::experiment::{is_override, switch_oracle, train_seed, ExperimentConfig};

fn main() -> ecmarl::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).filter(|a| is_override(a)).collect();
    let mut cfg = ExperimentConfig::load(None, Some("switch"), &overrides)?;
    if !overrides.iter().any(|o| o.starts_with("--run.seeds")) {
        cfg.run.seeds = vec![0];
    }
    let oracle = switch_oracle(3, Some(6), 0, 0)?;
    let bar = oracle.best_no_comm.unwrap_or(0.0);
    println!("designated counter {:.4}, best no-comm {:.4}", oracle.designated_counter, bar);
    for &seed in &cfg.run.seeds {
        let run = train_seed(&cfg, seed, |row| {
            if row.epoch % 500 == 0 {
                println!("  seed {seed} epoch {:>4} mean return {:+.3}", row.epoch, row.mean_return);
            }
        })?;
        let r = run.final_metrics.final_return;
        println!("seed {seed}: evaluation reward {r:.4} ({})", if r > bar { "beats no-comm" } else { "below no-comm" });
    }
    Ok(())
}
