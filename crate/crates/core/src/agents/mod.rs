//! Actor networks, central critic and the centralized-training loop.
//!
//! Each agent maps its observation and received messages to action logits
//! and an outgoing message. A single critic sees every observation during
//! training only. Execution uses nothing but local inputs and the channel.

mod checkpoint;
mod eval;
mod net;
mod rollout;
mod train;

pub use checkpoint::{config_hash, Checkpoint, ParamRecord, RngState, CHECKPOINT_FORMAT};
pub use eval::{evaluate, mean_and_std, Controller, EvalMetrics};
pub use net::{ActorCritic, AgentParams, CriticParams, Dense, NetShape};
pub use rollout::{rollout, RandomWalk, StepRecord, Trajectory};
pub use train::{
    ctde_update, discounted_returns, EpochStats, LossParts, Trainer, TrainerConfig, UpdateStats,
};
