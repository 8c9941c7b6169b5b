use super::{CommConfig, Gating, MessageVector, Mode};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor};
use rand::Rng;

fn check_shape(g: &Graph, msg: &MessageVector, cfg: &CommConfig) -> Result<()> {
    let got = g.value(msg.values).numel();
    if got != cfg.message_dim {
        return Err(Error::Dimension {
            op: "message",
            lhs: vec![cfg.message_dim],
            rhs: g.value(msg.values).shape().to_vec(),
        });
    }
    if cfg.uses_keys() {
        match msg.key {
            Some(k) if g.value(k).numel() == cfg.key_dim => {}
            Some(k) => {
                return Err(Error::Dimension {
                    op: "message key",
                    lhs: vec![cfg.key_dim],
                    rhs: g.value(k).shape().to_vec(),
                })
            }
            None => return Err(Error::contract("attention channel needs a message key")),
        }
    }
    Ok(())
}

/// Passes one message through the medium.
///
/// Training adds Gaussian noise and, for discretized channels, squashes
/// through a sigmoid so gradients survive. Execution thresholds discretized
/// messages at zero and only adds noise to continuous ones.
pub fn apply_channel<R: Rng + ?Sized>(
    g: &mut Graph,
    msg: MessageVector,
    cfg: &CommConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<MessageVector> {
    check_shape(g, &msg, cfg)?;
    let values = match (mode, cfg.discretize) {
        (Mode::Train, true) => {
            let noisy = g.gaussian_noise(msg.values, cfg.noise_sigma, rng);
            g.sigmoid(noisy)
        }
        (Mode::Execute, true) => {
            let bits = g
                .value(msg.values)
                .data()
                .iter()
                .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
                .collect();
            g.constant(Tensor::vector(bits))
        }
        (_, false) => g.gaussian_noise(msg.values, cfg.noise_sigma, rng),
    };
    Ok(MessageVector { values, ..msg })
}

/// Applies learned transmission gates. Training scales each message by its
/// gate; execution drops messages whose gate is below one half.
pub fn gate_messages(
    g: &mut Graph,
    messages: &[MessageVector],
    cfg: &CommConfig,
    mode: Mode,
) -> Result<Vec<MessageVector>> {
    if cfg.gating == Gating::Always {
        return Ok(messages.to_vec());
    }
    messages
        .iter()
        .map(|m| {
            let gate = m
                .gate
                .ok_or_else(|| Error::contract("learned gating needs a gate on every message"))?;
            let values = match mode {
                Mode::Train => g.mul(m.values, gate)?,
                Mode::Execute if g.value(gate).item() < 0.5 => {
                    let shape = g.value(m.values).shape().to_vec();
                    g.constant(Tensor::zeros(&shape))
                }
                Mode::Execute => m.values,
            };
            Ok(MessageVector { values, ..*m })
        })
        .collect()
}
