//! Trains briefly, saves a checkpoint, reloads it and evaluates the restored
//! policy with decentralized execution.

use ecmarl::experiment::{evaluate_checkpoint, is_override, run_train, ExperimentConfig};

fn main() -> ecmarl::Result<()> {
    let mut overrides: Vec<String> = std::env::args().skip(1).filter(|a| is_override(a)).collect();
    overrides.insert(0, "--run.seeds=[3]".into());
    let cfg = ExperimentConfig::load(None, Some("referential"), &overrides)?;
    let dir = std::env::temp_dir().join("ecmarl_checkpoint_example");
    let summary = run_train(&cfg, &dir)?;
    println!("trained accuracy {:.3}", summary.final_return.mean);
    let ckpt = dir.join("seed3").join("checkpoint.json");
    let m = evaluate_checkpoint(&ckpt, 500, 11)?;
    println!("restored from {}: accuracy {:.3} over {} episodes", ckpt.display(), m.mean_return, m.episodes);
    Ok(())
}
