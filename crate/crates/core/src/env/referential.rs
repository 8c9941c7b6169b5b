//! Two-agent referential game.
//!
//! On the first step the speaker (agent 0) sees a random bit. On the second
//! step the listener (agent 1) must name that bit. The listener never sees
//! the bit itself, so without a channel the best it can do is guess.

use super::{check_actions, EnvStep, Environment};
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REFERENTIAL_OBS_DIM: usize = 3;

/// Accuracy of the best listener that cannot hear the speaker.
pub const REFERENTIAL_NO_COMM_VALUE: f64 = 0.5;

#[derive(Clone, Debug, Default)]
pub struct Referential {
    bit: usize,
    t: usize,
    done: bool,
}

impl Referential {
    pub fn new() -> Self {
        Referential {
            done: true,
            ..Default::default()
        }
    }

    pub fn bit(&self) -> usize {
        self.bit
    }

    /// `[is_speaker, bit (speaker only, first step only), t / 2]`.
    pub fn observation(&self, agent: usize) -> Vec<f64> {
        let speaker = agent == 0;
        let shown = if speaker && self.t == 0 { self.bit as f64 } else { 0.0 };
        vec![f64::from(u8::from(speaker)), shown, self.t as f64 / 2.0]
    }

    fn observe(&self, reward: f64, done: bool) -> EnvStep {
        EnvStep::new(vec![self.observation(0), self.observation(1)], reward, done)
    }
}

impl Environment for Referential {
    fn name(&self) -> &'static str {
        "referential"
    }

    fn n_agents(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        REFERENTIAL_OBS_DIM
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        2
    }

    fn reset(&mut self, seed: u64) -> EnvStep {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.bit = rng.random_range(0..2);
        self.t = 0;
        self.done = false;
        self.observe(0.0, false)
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::contract("step after episode end"));
        }
        check_actions(actions, 2, 2)?;
        if self.t == 0 {
            self.t = 1;
            return Ok(self.observe(0.0, false));
        }
        self.done = true;
        let correct = actions[1] == self.bit;
        let r = if correct { 1.0 } else { 0.0 };
        Ok(self.observe(r, true).with_info("correct", r))
    }
}
