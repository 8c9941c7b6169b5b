use super::{check_actions, EnvStep, Environment};
use crate::error::{Error, Result};

/// One agent, one pull, deterministic payoff per arm.
#[derive(Clone, Debug)]
pub struct Bandit {
    payoffs: Vec<f64>,
    done: bool,
}

impl Bandit {
    pub fn new(payoffs: Vec<f64>) -> Result<Self> {
        if payoffs.is_empty() || payoffs.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("bandit needs at least one finite payoff"));
        }
        Ok(Bandit {
            payoffs,
            done: true,
        })
    }

    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.payoffs.iter().enumerate() {
            if *p > self.payoffs[best] {
                best = i;
            }
        }
        best
    }
}

impl Environment for Bandit {
    fn name(&self) -> &'static str {
        "bandit"
    }

    fn n_agents(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn n_actions(&self) -> usize {
        self.payoffs.len()
    }

    fn horizon(&self) -> usize {
        1
    }

    fn reset(&mut self, _seed: u64) -> EnvStep {
        self.done = false;
        EnvStep::new(vec![vec![1.0]], 0.0, false)
    }

    fn step(&mut self, actions: &[usize]) -> Result<EnvStep> {
        if self.done {
            return Err(Error::contract("step after episode end"));
        }
        check_actions(actions, 1, self.payoffs.len())?;
        self.done = true;
        Ok(EnvStep::new(vec![vec![1.0]], self.payoffs[actions[0]], true))
    }
}
