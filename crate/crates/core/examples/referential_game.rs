//! Speaker/listener game: only the speaker sees the target, only the
//! listener acts, so every bit of reward has to cross the channel.

use ecmarl::env::REFERENTIAL_NO_COMM_VALUE;
use ecmarl::experiment::{is_override, train_seed_with_stats, ExperimentConfig};

fn main() -> ecmarl::Result<()> {
    let overrides: Vec<String> = std::env::args().skip(1).filter(|a| is_override(a)).collect();
    let cfg = ExperimentConfig::load(None, Some("referential"), &overrides)?;
    println!("guessing without messages scores {REFERENTIAL_NO_COMM_VALUE}");
    for &seed in &cfg.run.seeds {
        let mut speaker_grad_min = f64::INFINITY;
        let run = train_seed_with_stats(&cfg, seed, |_, stats| {
            for u in &stats.updates {
                speaker_grad_min = speaker_grad_min.min(u.message_grad_norms[0]);
            }
        })?;
        println!(
            "seed {seed}: accuracy {:.3}, smallest speaker message-head gradient {:.2e}",
            run.final_metrics.final_return, speaker_grad_min
        );
    }
    Ok(())
}
