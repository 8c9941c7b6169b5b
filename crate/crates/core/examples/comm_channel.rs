//! One exchange step by hand: route messages, pass them through a noisy
//! channel and aggregate them with attention.

use ecmarl::comm::{aggregate, apply_channel, attention_weights, route, CommConfig, MessageVector, Mode, Topology};
use ecmarl::tensor::{Graph, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ecmarl::Result<()> {
    let cfg = CommConfig {
        noise_sigma: 0.1,
        ..CommConfig::tarmac(2, 2)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut g = Graph::new();
    let msgs: Vec<MessageVector> = (0..3)
        .map(|i| {
            let v = g.input(Tensor::vector(vec![i as f64, 1.0 - i as f64]));
            let k = g.input(Tensor::vector(vec![1.0, i as f64 * 0.5]));
            MessageVector::new(v).with_key(k)
        })
        .collect::<Vec<_>>();
    let noisy = msgs
        .into_iter()
        .map(|m| apply_channel(&mut g, m, &cfg, Mode::Train, &mut rng))
        .collect::<ecmarl::Result<Vec<_>>>()?;
    let inboxes = route(&noisy, Topology::Broadcast, None)?;

    let query = g.input(Tensor::vector(vec![0.3, -0.2]));
    let keys: Vec<_> = inboxes[0].iter().map(|(_, m)| m.key.expect("tarmac keys")).collect();
    let alpha = attention_weights(&mut g, query, &keys)?;
    let senders: Vec<usize> = inboxes[0].iter().map(|(j, _)| *j).collect();
    println!("agent 0 hears {senders:?} with weights {:?}", g.value(alpha).data());

    let agg = aggregate(&mut g, &inboxes[0], &cfg, 3, Some(query))?;
    println!("aggregate for agent 0: {:?}", g.value(agg).data());

    // gradients reach the senders' message values through the channel
    let loss = g.sum(agg);
    g.backward(loss)?;
    println!("d loss / d message values of agent 1: {:?}", g.grad(noisy[1].values).unwrap_or_default());
    Ok(())
}
