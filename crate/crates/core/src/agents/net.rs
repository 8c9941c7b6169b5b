use crate::comm::{CommConfig, MessageVector};
use crate::error::{Error, Result};
use crate::tensor::{Graph, ParamId, ParameterStore, Tensor, Var};
use rand::Rng;

/// Weight and bias of one dense layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub w: ParamId,
    pub b: ParamId,
}

impl Dense {
    fn create<R: Rng + ?Sized>(
        store: &mut ParameterStore,
        name: &str,
        fan_in: usize,
        fan_out: usize,
        rng: &mut R,
    ) -> Result<Self> {
        Ok(Dense {
            w: store.weight(&format!("{name}/w"), fan_in, fan_out, rng)?,
            b: store.bias(&format!("{name}/b"), fan_out)?,
        })
    }

    fn bind(store: &ParameterStore, name: &str, fan_in: usize, fan_out: usize) -> Result<Self> {
        let find = |suffix: &str, shape: &[usize]| -> Result<ParamId> {
            let full = format!("{name}/{suffix}");
            let id = store
                .id(&full)
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {full}")))?;
            if store.value(id).shape() != shape {
                return Err(Error::Checkpoint(format!(
                    "parameter {full} has shape {:?}, network expects {:?}",
                    store.value(id).shape(),
                    shape
                )));
            }
            Ok(id)
        };
        Ok(Dense {
            w: find("w", &[fan_in, fan_out])?,
            b: find("b", &[fan_out])?,
        })
    }

    pub fn forward(&self, g: &mut Graph, store: &ParameterStore, x: Var) -> Result<Var> {
        let w = g.param(store, self.w);
        let b = g.param(store, self.b);
        g.linear(x, w, b)
    }
}

/// One agent's action and message networks.
///
/// The encoder turns the observation into `h`. A fusion layer mixes `h` with
/// the received aggregate (policy-level integration) into `z`, from which
/// the action logits and the outgoing message are read. The attention query
/// comes from `h` alone because it is needed before anything is received.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentParams {
    pub prefix: String,
    pub enc: Dense,
    pub fuse: Dense,
    pub act: Dense,
    pub msg: Option<Dense>,
    pub key: Option<Dense>,
    pub gate: Option<Dense>,
    pub query: Option<Dense>,
}

/// Central value network over every agent's observation, plus the messages
/// in flight when the critic is wired for value-level integration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticParams {
    pub l1: Dense,
    pub l2: Dense,
    pub out: Dense,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetShape {
    pub n_agents: usize,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub hidden: usize,
    pub parameter_sharing: bool,
    pub comm: CommConfig,
}

impl NetShape {
    pub fn agent_prefix(&self, agent: usize) -> String {
        if self.parameter_sharing {
            "agent".to_string()
        } else {
            format!("agent{agent}")
        }
    }

    fn fuse_in(&self) -> usize {
        self.hidden
            + if self.comm.policy_level() {
                self.comm.aggregate_dim(self.n_agents)
            } else {
                0
            }
    }

    pub fn critic_in(&self) -> usize {
        self.n_agents * self.obs_dim
            + if self.comm.value_level() {
                self.n_agents * self.comm.message_dim
            } else {
                0
            }
    }

    fn layers(&self) -> Vec<(&'static str, usize, usize)> {
        let h = self.hidden;
        let c = &self.comm;
        let mut l = vec![
            ("enc", self.obs_dim, h),
            ("fuse", self.fuse_in(), h),
            ("act", h, self.n_actions),
        ];
        if c.enabled() {
            l.push(("msg", h, c.message_dim));
        }
        if c.uses_keys() {
            l.push(("key", h, c.key_dim));
            l.push(("query", h, c.key_dim));
        }
        if c.uses_gates() {
            l.push(("gate", h, 1));
        }
        l
    }
}

/// Actor networks for every agent plus the central critic.
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCritic {
    pub shape: NetShape,
    pub agents: Vec<AgentParams>,
    pub critic: CriticParams,
}

impl ActorCritic {
    /// Creates all parameters in `store`, drawing initial weights from `rng`.
    pub fn new<R: Rng + ?Sized>(
        shape: NetShape,
        store: &mut ParameterStore,
        rng: &mut R,
    ) -> Result<Self> {
        Self::build(shape, |name, i, o| Dense::create(store, name, i, o, rng))
    }

    /// Looks up existing parameters, failing with the mismatching name and
    /// shapes if `store` was made for a different network.
    pub fn bind(shape: NetShape, store: &ParameterStore) -> Result<Self> {
        Self::build(shape, |name, i, o| Dense::bind(store, name, i, o))
    }

    fn build(
        shape: NetShape,
        mut layer: impl FnMut(&str, usize, usize) -> Result<Dense>,
    ) -> Result<Self> {
        if shape.n_agents == 0 || shape.obs_dim == 0 || shape.n_actions == 0 || shape.hidden == 0 {
            return Err(Error::contract("network dimensions must be positive"));
        }
        let mut agents: Vec<AgentParams> = Vec::with_capacity(shape.n_agents);
        for i in 0..shape.n_agents {
            let prefix = shape.agent_prefix(i);
            if shape.parameter_sharing && i > 0 {
                agents.push(agents[0].clone());
                continue;
            }
            let mut dense = std::collections::BTreeMap::new();
            for (name, fi, fo) in shape.layers() {
                dense.insert(name, layer(&format!("{prefix}/{name}"), fi, fo)?);
            }
            agents.push(AgentParams {
                prefix,
                enc: dense["enc"],
                fuse: dense["fuse"],
                act: dense["act"],
                msg: dense.get("msg").copied(),
                key: dense.get("key").copied(),
                gate: dense.get("gate").copied(),
                query: dense.get("query").copied(),
            });
        }
        let h = shape.hidden;
        let critic = CriticParams {
            l1: layer("critic/l1", shape.critic_in(), h)?,
            l2: layer("critic/l2", h, h)?,
            out: layer("critic/out", h, 1)?,
        };
        Ok(ActorCritic {
            shape,
            agents,
            critic,
        })
    }

    pub fn comm(&self) -> &CommConfig {
        &self.shape.comm
    }

    /// Encoder output `h` for one observation.
    pub fn encode(&self, g: &mut Graph, store: &ParameterStore, agent: usize, obs: Var) -> Result<Var> {
        let x = self.agents[agent].enc.forward(g, store, obs)?;
        Ok(g.tanh(x))
    }

    pub fn query(&self, g: &mut Graph, store: &ParameterStore, agent: usize, h: Var) -> Result<Option<Var>> {
        match self.agents[agent].query {
            Some(q) => Ok(Some(q.forward(g, store, h)?)),
            None => Ok(None),
        }
    }

    /// Fusion layer output `z` given `h` and the received aggregate.
    pub fn fuse(
        &self,
        g: &mut Graph,
        store: &ParameterStore,
        agent: usize,
        h: Var,
        received: Var,
    ) -> Result<Var> {
        let input = if self.shape.comm.policy_level() {
            g.concat(&[h, received])?
        } else {
            h
        };
        let x = self.agents[agent].fuse.forward(g, store, input)?;
        Ok(g.tanh(x))
    }

    pub fn logits(&self, g: &mut Graph, store: &ParameterStore, agent: usize, z: Var) -> Result<Var> {
        self.agents[agent].act.forward(g, store, z)
    }

    /// Outgoing message read from `z`. Continuous messages are squashed by
    /// `tanh`; discretized ones stay linear so the channel's own sigmoid or
    /// threshold does the squashing.
    pub fn message(
        &self,
        g: &mut Graph,
        store: &ParameterStore,
        agent: usize,
        z: Var,
    ) -> Result<Option<MessageVector>> {
        let p = &self.agents[agent];
        let Some(head) = p.msg else { return Ok(None) };
        let raw = head.forward(g, store, z)?;
        let values = if self.shape.comm.discretize { raw } else { g.tanh(raw) };
        let mut m = MessageVector::new(values);
        if let Some(k) = p.key {
            m = m.with_key(k.forward(g, store, z)?);
        }
        if let Some(gate) = p.gate {
            let s = gate.forward(g, store, z)?;
            let s = g.sigmoid(s);
            m = m.with_gate(g.pick(s, 0)?);
        }
        Ok(Some(m))
    }

    /// Central value estimate from all observations and, when value-level
    /// integration is on, all delivered messages.
    pub fn value(
        &self,
        g: &mut Graph,
        store: &ParameterStore,
        observations: &[Var],
        messages: &[Var],
    ) -> Result<Var> {
        let mut parts = observations.to_vec();
        if self.shape.comm.value_level() {
            if self.shape.comm.policy_level() {
                // the actors already train the messages; the critic only reads them
                for &m in messages {
                    let d = g.detach(m);
                    parts.push(d);
                }
            } else {
                parts.extend_from_slice(messages);
            }
        }
        let x = g.concat(&parts)?;
        let c = &self.critic;
        let a = c.l1.forward(g, store, x)?;
        let a = g.tanh(a);
        let b = c.l2.forward(g, store, a)?;
        let b = g.tanh(b);
        let v = c.out.forward(g, store, b)?;
        g.pick(v, 0)
    }

    /// Action logits for a single agent with no tape bookkeeping beyond a
    /// scratch graph.
    pub fn logits_for(&self, store: &ParameterStore, agent: usize, obs: &[f64], received: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let o = g.constant(Tensor::vector(obs.to_vec()));
        let r = g.constant(Tensor::vector(received.to_vec()));
        let h = self.encode(&mut g, store, agent, o)?;
        let z = self.fuse(&mut g, store, agent, h, r)?;
        let l = self.logits(&mut g, store, agent, z)?;
        Ok(g.value(l).data().to_vec())
    }
}
