use super::net::ActorCritic;
use super::rollout::{rollout, RandomWalk, Trajectory};
use crate::comm::Mode;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::tensor::ParameterStore;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What drives the agents during evaluation.
#[derive(Clone, Copy, Debug)]
pub enum Controller<'a> {
    Learned {
        net: &'a ActorCritic,
        store: &'a ParameterStore,
    },
    RandomWalk(RandomWalk),
}

impl Controller<'_> {
    pub fn play<R: rand::Rng + ?Sized>(
        &self,
        env: &mut dyn Environment,
        env_seed: u64,
        rng: &mut R,
    ) -> Result<Trajectory> {
        match self {
            Controller::Learned { net, store } => {
                rollout(env, net, store, Mode::Execute, env_seed, rng)
            }
            Controller::RandomWalk(w) => w.rollout(env, env_seed, rng),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub episodes: usize,
    pub mean_return: f64,
    /// Sample standard deviation of the episode returns.
    pub std_return: f64,
    pub mean_coverage: Option<f64>,
    pub gate_rate: f64,
}

pub fn mean_and_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Decentralized evaluation over `n_episodes`, each with its own derived
/// environment seed and sampling stream.
pub fn evaluate(
    env: &mut dyn Environment,
    controller: &Controller,
    n_episodes: usize,
    seed: u64,
) -> Result<EvalMetrics> {
    if n_episodes == 0 {
        return Err(Error::contract("evaluation needs at least one episode"));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut returns = Vec::with_capacity(n_episodes);
    let mut coverage = Vec::new();
    let mut gates = Vec::new();
    for _ in 0..n_episodes {
        let env_seed = master.next_u64();
        let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
        let ep = controller.play(env, env_seed, &mut rng)?;
        returns.push(ep.total_return());
        if let Some(c) = ep.mean_coverage() {
            coverage.push(c);
        }
        gates.push(ep.gate_rate());
    }
    let (mean_return, std_return) = mean_and_std(&returns);
    Ok(EvalMetrics {
        episodes: n_episodes,
        mean_return,
        std_return,
        mean_coverage: (!coverage.is_empty()).then(|| mean_and_std(&coverage).0),
        gate_rate: mean_and_std(&gates).0,
    })
}
