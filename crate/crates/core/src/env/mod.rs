//! Partially observable cooperative environments.
//!
//! Every environment hands each agent its own observation vector and one
//! shared scalar reward per step.

mod bandit;
mod referential;
mod switch_riddle;

pub use bandit::Bandit;
pub use referential::{Referential, REFERENTIAL_NO_COMM_VALUE, REFERENTIAL_OBS_DIM};
pub use switch_riddle::{
    best_no_comm_value, designated_counter_reward, switch_riddle_oracle, OracleValue,
    SwitchRiddle, ANNOUNCE, SWITCH_OBS_DIM,
};

use crate::comm::ConnectivityMask;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvStep {
    pub observations: Vec<Vec<f64>>,
    pub reward: f64,
    pub done: bool,
    pub info: BTreeMap<String, f64>,
}

impl EnvStep {
    pub fn new(observations: Vec<Vec<f64>>, reward: f64, done: bool) -> Self {
        EnvStep {
            observations,
            reward,
            done,
            info: BTreeMap::new(),
        }
    }

    pub fn with_info(mut self, key: &str, value: f64) -> Self {
        self.info.insert(key.to_string(), value);
        self
    }
}

pub trait Environment {
    fn name(&self) -> &'static str;
    fn n_agents(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Longest possible episode.
    fn horizon(&self) -> usize;

    /// Starts a new episode. Everything random about the episode is drawn
    /// from `seed`.
    fn reset(&mut self, seed: u64) -> EnvStep;

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep>;

    /// Who will hear the messages emitted at the current step. `None` means
    /// the channel's own topology decides.
    fn delivery_mask(&self) -> Option<ConnectivityMask> {
        None
    }

    /// Fraction of users served after the last step, where that applies.
    fn coverage(&self) -> Option<f64> {
        None
    }
}

pub fn check_actions(actions: &[usize], n_agents: usize, n_actions: usize) -> Result<()> {
    if actions.len() != n_agents {
        return Err(Error::contract(format!(
            "expected {n_agents} actions, got {}",
            actions.len()
        )));
    }
    if let Some((i, a)) = actions.iter().enumerate().find(|(_, &a)| a >= n_actions) {
        return Err(Error::contract(format!(
            "agent {i} chose action {a}, valid range is 0..{n_actions}"
        )));
    }
    Ok(())
}
