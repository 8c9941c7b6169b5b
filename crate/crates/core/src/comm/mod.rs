//! Differentiable message channel between agents.
//!
//! One exchange runs `emit -> gate -> channel -> route -> aggregate`. The
//! pieces are plain functions over values that live on a caller-owned
//! [`Graph`](crate::tensor::Graph), so gradients flow from a receiver's loss
//! back into the sender's message head.

mod aggregate;
mod channel;
mod exchange;
mod route;

pub use aggregate::{aggregate, attention_weights};
pub use channel::{apply_channel, gate_messages};
pub use exchange::{exchange_round, Exchange, RoundTrace};
pub use route::{route, ConnectivityMask, Inbox};

use crate::error::{Error, Result};
use crate::tensor::{GradCheck, Var};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Broadcast,
    Mask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Concat,
    Mean,
    Sum,
    Attention,
}

/// Where received messages enter the networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integration {
    ValueLevel,
    PolicyLevel,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gating {
    Always,
    Learned,
}

/// Training uses the soft, differentiable channel; execution the hard one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Execute,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CommConfig {
    /// Message length. Zero turns communication off.
    pub message_dim: usize,
    pub topology: Topology,
    pub aggregation: Aggregation,
    pub integration: Integration,
    pub rounds: usize,
    pub gating: Gating,
    pub noise_sigma: f64,
    pub discretize: bool,
    pub key_dim: usize,
}

impl Default for CommConfig {
    fn default() -> Self {
        CommConfig {
            message_dim: 0,
            topology: Topology::Broadcast,
            aggregation: Aggregation::Mean,
            integration: Integration::PolicyLevel,
            rounds: 1,
            gating: Gating::Always,
            noise_sigma: 0.0,
            discretize: false,
            key_dim: 8,
        }
    }
}

impl CommConfig {
    pub fn disabled() -> Self {
        CommConfig::default()
    }

    /// Discretized channel whose received bits feed both the acting network
    /// and the critic.
    pub fn dial(message_dim: usize) -> Self {
        CommConfig {
            message_dim,
            aggregation: Aggregation::Sum,
            integration: Integration::Both,
            discretize: true,
            ..CommConfig::default()
        }
    }

    /// Continuous channel averaged at the receiver, policy-level hookup.
    pub fn commnet(message_dim: usize) -> Self {
        CommConfig {
            message_dim,
            aggregation: Aggregation::Mean,
            integration: Integration::PolicyLevel,
            ..CommConfig::default()
        }
    }

    /// Keyed soft attention feeding both policy and critic.
    pub fn tarmac(message_dim: usize, key_dim: usize) -> Self {
        CommConfig {
            message_dim,
            aggregation: Aggregation::Attention,
            integration: Integration::Both,
            key_dim,
            ..CommConfig::default()
        }
    }

    pub fn enabled(&self) -> bool {
        self.message_dim > 0
    }

    pub fn uses_keys(&self) -> bool {
        self.enabled() && self.aggregation == Aggregation::Attention
    }

    pub fn uses_gates(&self) -> bool {
        self.enabled() && self.gating == Gating::Learned
    }

    pub fn policy_level(&self) -> bool {
        self.enabled() && matches!(self.integration, Integration::PolicyLevel | Integration::Both)
    }

    pub fn value_level(&self) -> bool {
        self.enabled() && matches!(self.integration, Integration::ValueLevel | Integration::Both)
    }

    /// Length of the aggregated inbox vector for `n_agents` agents.
    pub fn aggregate_dim(&self, n_agents: usize) -> usize {
        match self.aggregation {
            _ if !self.enabled() => 0,
            Aggregation::Concat => n_agents.saturating_sub(1) * self.message_dim,
            _ => self.message_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("comm.rounds must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::config(format!(
                "comm.noise_sigma must be a finite non-negative number, got {}",
                self.noise_sigma
            )));
        }
        if self.aggregation == Aggregation::Attention && self.key_dim == 0 {
            return Err(Error::config("comm.key_dim must be positive for attention"));
        }
        Ok(())
    }
}

/// One agent's outgoing message. All parts are tape nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MessageVector {
    pub values: Var,
    pub key: Option<Var>,
    /// Transmission probability in `[0, 1]`; absent means always transmit.
    pub gate: Option<Var>,
}

impl MessageVector {
    pub fn new(values: Var) -> Self {
        MessageVector {
            values,
            key: None,
            gate: None,
        }
    }

    pub fn with_key(mut self, key: Var) -> Self {
        self.key = Some(key);
        self
    }

    pub fn with_gate(mut self, gate: Var) -> Self {
        self.gate = Some(gate);
        self
    }
}

/// Finite-difference checks for the differentiable channel pieces.
pub fn comm_checks() -> Vec<GradCheck> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn msgs(v: &[Var], n: usize, keyed: bool) -> Vec<(usize, MessageVector)> {
        (0..n)
            .map(|j| {
                let m = MessageVector::new(v[j]);
                (j + 1, if keyed { m.with_key(v[n + j]) } else { m })
            })
            .collect()
    }

    vec![
        GradCheck::new("channel_discretize_train", vec![vec![4]], |g, v| {
            let cfg = CommConfig {
                noise_sigma: 0.5,
                ..CommConfig::dial(4)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            Ok(apply_channel(g, MessageVector::new(v[0]), &cfg, Mode::Train, &mut rng)?.values)
        }),
        GradCheck::new("channel_noise", vec![vec![3]], |g, v| {
            let cfg = CommConfig {
                noise_sigma: 0.3,
                ..CommConfig::commnet(3)
            };
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let out = apply_channel(g, MessageVector::new(v[0]), &cfg, Mode::Train, &mut rng)?;
            Ok(g.tanh(out.values))
        }),
        GradCheck::new("gate_soft", vec![vec![3], vec![]], |g, v| {
            let cfg = CommConfig {
                gating: Gating::Learned,
                ..CommConfig::commnet(3)
            };
            let gate = g.sigmoid(v[1]);
            let m = MessageVector::new(v[0]).with_gate(gate);
            Ok(gate_messages(g, &[m], &cfg, Mode::Train)?[0].values)
        }),
        GradCheck::new("aggregate_mean", vec![vec![3], vec![3], vec![3]], |g, v| {
            let inbox = msgs(v, 3, false);
            aggregate(g, &inbox, &CommConfig::commnet(3), 4, None)
        }),
        GradCheck::new("aggregate_concat", vec![vec![2], vec![2]], |g, v| {
            let inbox = msgs(v, 2, false);
            let cfg = CommConfig {
                aggregation: Aggregation::Concat,
                ..CommConfig::commnet(2)
            };
            aggregate(g, &inbox, &cfg, 3, None)
        }),
        GradCheck::new(
            "aggregate_attention",
            vec![vec![3], vec![3], vec![2], vec![2], vec![2]],
            |g, v| {
                let inbox = msgs(v, 2, true);
                let cfg = CommConfig::tarmac(3, 2);
                aggregate(g, &inbox, &cfg, 3, Some(v[4]))
            },
        ),
    ]
}
