use super::net::{ActorCritic, NetShape};
use super::rollout::{rollout, TapeRefs, Trajectory};
use crate::comm::{CommConfig, Mode};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::tensor::{clip_global_norm, Adam, Graph, ParameterStore, Tensor, Var};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerConfig {
    pub gamma: f64,
    pub epochs: usize,
    pub episodes_per_epoch: usize,
    /// Episodes whose gradients are pooled into one optimizer step.
    pub batch_episodes: usize,
    pub entropy_coef: f64,
    /// When set, the entropy weight moves linearly from `entropy_coef` at the
    /// first epoch to this value at the last.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy_coef_final: Option<f64>,
    pub value_coef: f64,
    pub lr: f64,
    pub grad_clip: f64,
    pub hidden: usize,
    pub parameter_sharing: bool,
    pub seed: u64,
    /// Episodes used for the final evaluation of each run.
    pub eval_episodes: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            gamma: 0.9,
            epochs: 100,
            episodes_per_epoch: 32,
            batch_episodes: 8,
            entropy_coef: 0.01,
            entropy_coef_final: None,
            value_coef: 0.5,
            lr: 1e-3,
            grad_clip: 5.0,
            hidden: 64,
            parameter_sharing: true,
            seed: 0,
            eval_episodes: 100,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!(
                "trainer.gamma must lie strictly between 0 and 1, got {}",
                self.gamma
            )));
        }
        for (name, v) in [
            ("episodes_per_epoch", self.episodes_per_epoch),
            ("eval_episodes", self.eval_episodes),
            ("batch_episodes", self.batch_episodes),
            ("hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::config(format!("trainer.{name} must be at least 1")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::config("trainer.lr must be positive"));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::config("trainer.grad_clip must be positive"));
        }
        let final_ok = self.entropy_coef_final.is_none_or(|c| c >= 0.0);
        if !(self.entropy_coef >= 0.0 && self.value_coef >= 0.0 && final_ok) {
            return Err(Error::config("trainer loss coefficients must be non-negative"));
        }
        Ok(())
    }

    /// Entropy weight used during the given zero-based epoch.
    pub fn entropy_coef_at(&self, epoch: usize) -> f64 {
        match self.entropy_coef_final {
            Some(end) if self.epochs > 1 => {
                let f = (epoch.min(self.epochs - 1)) as f64 / (self.epochs - 1) as f64;
                self.entropy_coef + f * (end - self.entropy_coef)
            }
            _ => self.entropy_coef,
        }
    }
}

/// `G_t = r_t + γ G_{t+1}`, computed back to front.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossParts {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LossWeights {
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Multiplies the whole episode loss, e.g. `1 / episodes_in_batch`.
    pub scale: f64,
}

/// Actor-critic loss of one episode on its own tape.
///
/// Advantages `G_t − V_t` treat the critic as a constant. Policy and entropy
/// terms are averaged over steps and agents, the squared value error over
/// steps.
pub(crate) fn episode_loss(
    g: &mut Graph,
    refs: &[TapeRefs],
    returns: &[f64],
    w: LossWeights,
) -> Result<(Var, LossParts)> {
    let t_len = refs.len();
    let n = refs.first().map_or(0, |r| r.log_probs.len());
    if t_len == 0 || n == 0 || returns.len() != t_len {
        return Err(Error::contract("episode loss needs a non-empty trajectory"));
    }
    let wp = w.scale / (t_len * n) as f64;
    let wv = w.scale / t_len as f64;
    let mut terms = Vec::with_capacity(t_len * (2 * n + 1));
    let mut parts = LossParts::default();
    for (r, &ret) in refs.iter().zip(returns) {
        let v = g.value(r.value).item();
        let adv = ret - v;
        for (&lp, &h) in r.log_probs.iter().zip(&r.entropies) {
            parts.policy -= adv * g.value(lp).item();
            parts.entropy += g.value(h).item();
            terms.push(g.scale(lp, -adv * wp));
            if w.entropy_coef > 0.0 {
                terms.push(g.scale(h, -w.entropy_coef * wp));
            }
        }
        parts.value += (ret - v) * (ret - v);
        if w.value_coef > 0.0 {
            let target = g.constant(Tensor::scalar(ret));
            let d = g.sub(r.value, target)?;
            let sq = g.mul(d, d)?;
            terms.push(g.scale(sq, w.value_coef * wv));
        }
    }
    parts.policy /= (t_len * n) as f64;
    parts.entropy /= (t_len * n) as f64;
    parts.value /= t_len as f64;
    let stacked = g.concat(&terms)?;
    let loss = g.sum(stacked);
    Ok((loss, parts))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: LossParts,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    /// Message-head gradient norm per agent, before clipping.
    pub message_grad_norms: Vec<f64>,
}

/// One centralized update from finished training episodes: backpropagate
/// each episode's loss, pool the gradients, clip and take one Adam step.
pub fn ctde_update(
    episodes: Vec<Trajectory>,
    net: &ActorCritic,
    store: &mut ParameterStore,
    cfg: &TrainerConfig,
    adam: &Adam,
) -> Result<UpdateStats> {
    if episodes.is_empty() {
        return Err(Error::contract("update needs at least one episode"));
    }
    let b = episodes.len() as f64;
    let weights = LossWeights {
        entropy_coef: cfg.entropy_coef,
        value_coef: cfg.value_coef,
        scale: 1.0 / b,
    };
    let mut total = LossParts::default();
    store.zero_grads();
    for ep in episodes {
        let returns = discounted_returns(&ep.rewards(), cfg.gamma);
        let (mut g, refs) = ep
            .tape
            .ok_or_else(|| Error::contract("update needs training-mode rollouts"))?;
        let (loss, parts) = episode_loss(&mut g, &refs, &returns, weights)?;
        if !g.value(loss).all_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss: policy={} value={} entropy={}",
                parts.policy, parts.value, parts.entropy
            )));
        }
        g.backward(loss)?;
        store.accumulate(&g);
        total.policy += parts.policy / b;
        total.value += parts.value / b;
        total.entropy += parts.entropy / b;
    }
    let message_grad_norms = (0..net.shape.n_agents)
        .map(|i| store.grad_norm_with_prefix(&format!("{}/msg/", net.shape.agent_prefix(i))))
        .collect();
    let grad_norm = clip_global_norm(store, cfg.grad_clip);
    if !grad_norm.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite gradient norm; policy={} value={} entropy={}",
            total.policy, total.value, total.entropy
        )));
    }
    adam.step(store)?;
    Ok(UpdateStats {
        loss: total,
        grad_norm,
        message_grad_norms,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_return: f64,
    pub coverage: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub updates: Vec<UpdateStats>,
}

/// Owns the networks, optimizer state and random stream of one run.
pub struct Trainer {
    pub net: ActorCritic,
    pub store: ParameterStore,
    pub cfg: TrainerConfig,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub epoch: usize,
}

impl Trainer {
    pub fn new(env: &dyn Environment, comm: CommConfig, cfg: TrainerConfig) -> Result<Self> {
        cfg.validate()?;
        comm.validate()?;
        let shape = NetShape {
            n_agents: env.n_agents(),
            obs_dim: env.obs_dim(),
            n_actions: env.n_actions(),
            hidden: cfg.hidden,
            parameter_sharing: cfg.parameter_sharing,
            comm,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut store = ParameterStore::new();
        let net = ActorCritic::new(shape, &mut store, &mut rng)?;
        Ok(Trainer {
            net,
            store,
            adam: Adam::with_lr(cfg.lr),
            cfg,
            rng,
            epoch: 0,
        })
    }

    /// Plays `episodes_per_epoch` training episodes, updating after every
    /// `batch_episodes` of them (and once more for any remainder).
    pub fn train_epoch(&mut self, env: &mut dyn Environment) -> Result<EpochStats> {
        let mut returns = Vec::new();
        let mut coverage = Vec::new();
        let mut updates = Vec::new();
        let mut batch = Vec::with_capacity(self.cfg.batch_episodes);
        let step_cfg = TrainerConfig {
            entropy_coef: self.cfg.entropy_coef_at(self.epoch),
            ..self.cfg.clone()
        };
        for k in 0..self.cfg.episodes_per_epoch {
            let env_seed = self.rng.next_u64();
            let ep = rollout(env, &self.net, &self.store, Mode::Train, env_seed, &mut self.rng)?;
            returns.push(ep.total_return());
            if let Some(c) = ep.mean_coverage() {
                coverage.push(c);
            }
            batch.push(ep);
            if batch.len() == self.cfg.batch_episodes || k + 1 == self.cfg.episodes_per_epoch {
                let eps = std::mem::take(&mut batch);
                updates.push(ctde_update(eps, &self.net, &mut self.store, &step_cfg, &self.adam)?);
            }
        }
        self.epoch += 1;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let per_update = |f: fn(&UpdateStats) -> f64| {
            updates.iter().map(f).sum::<f64>() / updates.len() as f64
        };
        Ok(EpochStats {
            epoch: self.epoch,
            mean_return: mean(&returns),
            coverage: (!coverage.is_empty()).then(|| mean(&coverage)),
            policy_loss: per_update(|u| u.loss.policy),
            value_loss: per_update(|u| u.loss.value),
            entropy: per_update(|u| u.loss.entropy),
            updates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Bandit, Referential};
    use crate::tensor::ParamId;
    use proptest::prelude::*;

    #[test]
    fn returns_of_three_ones() {
        let g = discounted_returns(&[1.0, 1.0, 1.0], 0.9);
        assert!((g[0] - 2.71).abs() < 1e-12);
        assert!((g[1] - 1.9).abs() < 1e-12);
        assert_eq!(g[2], 1.0);
        assert_eq!(discounted_returns(&[0.0; 5], 0.9), vec![0.0; 5]);
    }

    proptest! {
        #[test]
        fn returns_match_double_loop(rewards in proptest::collection::vec(-5.0f64..5.0, 20), gamma in 0.01f64..0.99) {
            let fast = discounted_returns(&rewards, gamma);
            for t in 0..20 {
                let slow: f64 = (t..20).map(|k| gamma.powi((k - t) as i32) * rewards[k]).sum();
                prop_assert!((fast[t] - slow).abs() < 1e-12);
            }
        }
    }

    fn actor_grads(trainer: &Trainer, entropy_coef: f64) -> Vec<(ParamId, Vec<f64>)> {
        let mut env = Referential::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ep = rollout(&mut env, &trainer.net, &trainer.store, Mode::Train, 1, &mut rng).unwrap();
        let (mut g, refs) = ep.tape.unwrap();
        // returns equal to the critic's estimates: every advantage is zero
        let returns: Vec<f64> = refs.iter().map(|r| g.value(r.value).item()).collect();
        let w = LossWeights {
            entropy_coef,
            value_coef: 0.5,
            scale: 1.0,
        };
        let (loss, parts) = episode_loss(&mut g, &refs, &returns, w).unwrap();
        assert_eq!(parts.policy, 0.0);
        g.backward(loss).unwrap();
        let mut store = trainer.store.clone();
        store.accumulate(&g);
        store
            .ids()
            .filter(|&id| store.name(id).starts_with("agent"))
            .map(|id| (id, store.grad(id).map(|s| s.to_vec()).unwrap_or_default()))
            .collect()
    }

    #[test]
    fn zero_advantage_leaves_only_entropy_gradient() {
        let env = Referential::new();
        let trainer = Trainer::new(&env, CommConfig::commnet(2), TrainerConfig::default()).unwrap();
        let without = actor_grads(&trainer, 0.0);
        assert!(without.iter().all(|(_, g)| g.iter().all(|&v| v == 0.0)));
        let with = actor_grads(&trainer, 0.01);
        assert!(with.iter().any(|(_, g)| g.iter().any(|&v| v != 0.0)));
    }

    #[test]
    fn bandit_learns_best_arm() {
        let mut env = Bandit::new(vec![0.1, 1.0, 0.4]).unwrap();
        let cfg = TrainerConfig {
            episodes_per_epoch: 1,
            batch_episodes: 1,
            epochs: 2000,
            lr: 1e-2,
            hidden: 8,
            seed: 3,
            ..TrainerConfig::default()
        };
        let mut t = Trainer::new(&env, CommConfig::disabled(), cfg).unwrap();
        let mut early = 0.0;
        let mut late = 0.0;
        for e in 0..2000 {
            let s = t.train_epoch(&mut env).unwrap();
            if e < 100 {
                early += s.entropy;
            }
            if e >= 1900 {
                late += s.entropy;
            }
        }
        assert!(late < early);
        let logits = t.net.logits_for(&t.store, 0, &[1.0], &[]).unwrap();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - m).exp()).sum();
        let p_best = (logits[1] - m).exp() / z;
        assert!(p_best > 0.95, "{p_best}");
    }

    #[test]
    fn invalid_trainer_config() {
        for bad in [
            TrainerConfig { gamma: 1.0, ..TrainerConfig::default() },
            TrainerConfig { batch_episodes: 0, ..TrainerConfig::default() },
            TrainerConfig { lr: 0.0, ..TrainerConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }
}
