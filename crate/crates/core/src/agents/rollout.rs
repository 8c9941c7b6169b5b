use super::net::ActorCritic;
use crate::comm::{exchange_round, MessageVector, Mode};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::tensor::{Graph, ParameterStore, Tensor, Var};
use rand::Rng;

/// Everything observed and chosen at one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub observations: Vec<Vec<f64>>,
    /// Aggregated inbox each agent acted on.
    pub received: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    /// Messages emitted this step, before the channel.
    pub messages: Vec<Vec<f64>>,
    pub gates: Vec<f64>,
    pub reward: f64,
    /// Critic estimate; zero in execute mode.
    pub value: f64,
    pub coverage: Option<f64>,
}

pub(crate) struct TapeRefs {
    pub log_probs: Vec<Var>,
    pub entropies: Vec<Var>,
    pub value: Var,
}

/// One episode. Training rollouts keep their tape for the update.
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub(crate) tape: Option<(Graph, Vec<TapeRefs>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.reward).collect()
    }

    /// Undiscounted sum of rewards.
    pub fn total_return(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Served fraction averaged over the steps of the episode.
    pub fn mean_coverage(&self) -> Option<f64> {
        let c: Vec<f64> = self.steps.iter().filter_map(|s| s.coverage).collect();
        if c.is_empty() {
            None
        } else {
            Some(c.iter().sum::<f64>() / c.len() as f64)
        }
    }

    /// Fraction of emitted messages that would pass an execution-time gate.
    pub fn gate_rate(&self) -> f64 {
        let g: Vec<f64> = self.steps.iter().flat_map(|s| s.gates.iter().copied()).collect();
        if g.is_empty() {
            0.0
        } else {
            g.iter().filter(|&&x| x >= 0.5).count() as f64 / g.len() as f64
        }
    }

    pub fn has_tape(&self) -> bool {
        self.tape.is_some()
    }
}

fn check_env(env: &dyn Environment, net: &ActorCritic) -> Result<()> {
    let s = &net.shape;
    if env.n_agents() != s.n_agents || env.obs_dim() != s.obs_dim || env.n_actions() != s.n_actions {
        return Err(Error::contract(format!(
            "environment {} has {} agents, obs {} and {} actions; network expects {}, {} and {}",
            env.name(),
            env.n_agents(),
            env.obs_dim(),
            env.n_actions(),
            s.n_agents,
            s.obs_dim,
            s.n_actions
        )));
    }
    Ok(())
}

/// Plays one episode with the learned networks.
///
/// At every step each agent encodes its observation, receives what the
/// channel delivered from the previous step's messages (plus any extra
/// rounds), samples an action and emits a new message. In training mode the
/// central critic is evaluated too and the tape is kept for the update; in
/// execute mode each agent uses only its own observation and inbox.
pub fn rollout<R: Rng + ?Sized>(
    env: &mut dyn Environment,
    net: &ActorCritic,
    store: &ParameterStore,
    mode: Mode,
    env_seed: u64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_env(env, net)?;
    let n = env.n_agents();
    let comm = net.comm().clone();
    let mut g = Graph::new();
    let mut steps = Vec::with_capacity(env.horizon());
    let mut refs = Vec::with_capacity(env.horizon());

    let mut current = env.reset(env_seed);
    let mut previous: Option<Vec<MessageVector>> = None;
    let mut previous_mask = None;
    for _ in 0..env.horizon() {
        let obs: Vec<Var> = current
            .observations
            .iter()
            .map(|o| g.constant(Tensor::vector(o.clone())))
            .collect();
        let hs = (0..n)
            .map(|i| net.encode(&mut g, store, i, obs[i]))
            .collect::<Result<Vec<_>>>()?;
        let queries = (0..n)
            .map(|i| net.query(&mut g, store, i, hs[i]))
            .collect::<Result<Vec<_>>>()?;
        let exchange = exchange_round(
            &mut g,
            n,
            previous.as_deref(),
            previous_mask.as_ref(),
            &queries,
            &comm,
            mode,
            rng,
            |g, i, received| {
                let z = net.fuse(g, store, i, hs[i], received)?;
                net.message(g, store, i, z)?
                    .ok_or_else(|| Error::contract("extra rounds need a message head"))
            },
        )?;

        let mut actions = Vec::with_capacity(n);
        let mut log_probs = Vec::with_capacity(n);
        let mut entropies = Vec::with_capacity(n);
        let mut emitted = Vec::with_capacity(n);
        for i in 0..n {
            let z = net.fuse(&mut g, store, i, hs[i], exchange.aggregates[i])?;
            let logits = net.logits(&mut g, store, i, z)?;
            let sample = g.categorical_sample(logits, rng)?;
            actions.push(sample.index);
            log_probs.push(sample.log_prob);
            if mode == Mode::Train {
                let p = g.exp(sample.log_probs);
                let pl = g.mul(p, sample.log_probs)?;
                let s = g.sum(pl);
                entropies.push(g.scale(s, -1.0));
            }
            if let Some(m) = net.message(&mut g, store, i, z)? {
                emitted.push(m);
            }
        }

        let value = if mode == Mode::Train {
            Some(net.value(&mut g, store, &obs, &exchange.delivered)?)
        } else {
            None
        };
        let mask = env.delivery_mask();
        let next = env.step(&actions)?;

        steps.push(StepRecord {
            observations: current.observations.clone(),
            received: exchange
                .aggregates
                .iter()
                .map(|a| g.value(*a).data().to_vec())
                .collect(),
            actions,
            log_probs: log_probs.iter().map(|v| g.value(*v).item()).collect(),
            messages: emitted.iter().map(|m| g.value(m.values).data().to_vec()).collect(),
            gates: emitted
                .iter()
                .map(|m| m.gate.map_or(1.0, |v| g.value(v).item()))
                .collect(),
            reward: next.reward,
            value: value.map_or(0.0, |v| g.value(v).item()),
            coverage: env.coverage(),
        });
        if let Some(value) = value {
            refs.push(TapeRefs {
                log_probs,
                entropies,
                value,
            });
        }
        let done = next.done;
        current = next;
        if done {
            break;
        }
        if comm.enabled() {
            previous = Some(emitted);
            previous_mask = mask;
        }
    }
    let tape = (mode == Mode::Train).then_some((g, refs));
    Ok(Trajectory { steps, tape })
}

/// Uniformly random moves with silent zero messages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomWalk {
    pub n_actions: usize,
    pub message_dim: usize,
}

impl RandomWalk {
    pub fn new(n_actions: usize, message_dim: usize) -> Result<Self> {
        if n_actions == 0 {
            return Err(Error::contract("random walk needs at least one action"));
        }
        Ok(RandomWalk {
            n_actions,
            message_dim,
        })
    }

    pub fn act<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.n_actions)
    }

    pub fn message(&self) -> Vec<f64> {
        vec![0.0; self.message_dim]
    }

    pub fn rollout<R: Rng + ?Sized>(
        &self,
        env: &mut dyn Environment,
        env_seed: u64,
        rng: &mut R,
    ) -> Result<Trajectory> {
        if env.n_actions() != self.n_actions {
            return Err(Error::contract("random walk action count differs from environment"));
        }
        let n = env.n_agents();
        let mut current = env.reset(env_seed);
        let mut steps = Vec::with_capacity(env.horizon());
        for _ in 0..env.horizon() {
            let actions: Vec<usize> = (0..n).map(|_| self.act(rng)).collect();
            let next = env.step(&actions)?;
            steps.push(StepRecord {
                observations: current.observations.clone(),
                received: vec![vec![]; n],
                actions,
                log_probs: vec![-(self.n_actions as f64).ln(); n],
                messages: vec![self.message(); n],
                gates: Vec::new(),
                reward: next.reward,
                value: 0.0,
                coverage: env.coverage(),
            });
            let done = next.done;
            current = next;
            if done {
                break;
            }
        }
        Ok(Trajectory { steps, tape: None })
    }
}
