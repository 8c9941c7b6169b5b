use super::{aggregate, apply_channel, gate_messages, route, CommConfig, ConnectivityMask};
use super::{Inbox, MessageVector, Mode};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};
use rand::Rng;

/// One pass of `gate -> channel -> route -> aggregate`.
#[derive(Clone, Debug)]
pub struct RoundTrace {
    pub emitted: Vec<MessageVector>,
    /// Messages after gating and the channel, indexed by sender.
    pub delivered: Vec<MessageVector>,
    pub inboxes: Vec<Inbox>,
    pub aggregates: Vec<Var>,
}

/// Result of all exchange rounds within one environment step.
#[derive(Clone, Debug)]
pub struct Exchange {
    /// Final aggregated inbox per agent.
    pub aggregates: Vec<Var>,
    /// Final-round channel outputs per sender; zeros when nothing was sent.
    pub delivered: Vec<Var>,
    pub rounds: Vec<RoundTrace>,
}

#[allow(clippy::too_many_arguments)]
fn run_round<R: Rng + ?Sized>(
    g: &mut Graph,
    emitted: Vec<MessageVector>,
    mask: Option<&ConnectivityMask>,
    queries: &[Option<Var>],
    cfg: &CommConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<RoundTrace> {
    let n = emitted.len();
    let gated = gate_messages(g, &emitted, cfg, mode)?;
    let delivered = gated
        .into_iter()
        .map(|m| apply_channel(g, m, cfg, mode, rng))
        .collect::<Result<Vec<_>>>()?;
    let inboxes = route(&delivered, cfg.topology, mask)?;
    let aggregates = inboxes
        .iter()
        .zip(queries)
        .map(|(inbox, q)| aggregate(g, inbox, cfg, n, *q))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundTrace {
        emitted,
        delivered,
        inboxes,
        aggregates,
    })
}

/// Runs `cfg.rounds` exchanges inside one environment step.
///
/// Round one carries `previous`, the messages emitted on the prior step
/// (`None` on the first step, where every agent receives zeros). Each later
/// round asks `emit(graph, agent, aggregate)` for a fresh message conditioned
/// on that agent's latest aggregate.
#[allow(clippy::too_many_arguments)]
pub fn exchange_round<R, F>(
    g: &mut Graph,
    n_agents: usize,
    previous: Option<&[MessageVector]>,
    mask: Option<&ConnectivityMask>,
    queries: &[Option<Var>],
    cfg: &CommConfig,
    mode: Mode,
    rng: &mut R,
    mut emit: F,
) -> Result<Exchange>
where
    R: Rng + ?Sized,
    F: FnMut(&mut Graph, usize, Var) -> Result<MessageVector>,
{
    if cfg.rounds == 0 {
        return Err(Error::contract("exchange needs at least one round"));
    }
    if queries.len() != n_agents {
        return Err(Error::contract(format!(
            "{} queries for {n_agents} agents",
            queries.len()
        )));
    }
    if !cfg.enabled() {
        let empty: Vec<Var> = (0..n_agents)
            .map(|_| g.constant(Tensor::vector(vec![])))
            .collect();
        return Ok(Exchange {
            aggregates: empty.clone(),
            delivered: empty,
            rounds: Vec::new(),
        });
    }

    let mut rounds = Vec::with_capacity(cfg.rounds);
    let mut aggregates = match previous {
        Some(msgs) => {
            if msgs.len() != n_agents {
                return Err(Error::contract(format!(
                    "{} messages for {n_agents} agents",
                    msgs.len()
                )));
            }
            let r = run_round(g, msgs.to_vec(), mask, queries, cfg, mode, rng)?;
            let a = r.aggregates.clone();
            rounds.push(r);
            a
        }
        None => {
            let width = cfg.aggregate_dim(n_agents);
            (0..n_agents)
                .map(|_| g.constant(Tensor::zeros(&[width])))
                .collect()
        }
    };
    for _ in 1..cfg.rounds {
        let emitted = (0..n_agents)
            .map(|i| emit(g, i, aggregates[i]))
            .collect::<Result<Vec<_>>>()?;
        let r = run_round(g, emitted, mask, queries, cfg, mode, rng)?;
        aggregates = r.aggregates.clone();
        rounds.push(r);
    }
    let delivered = match rounds.last() {
        Some(r) => r.delivered.iter().map(|m| m.values).collect(),
        None => (0..n_agents)
            .map(|_| g.constant(Tensor::zeros(&[cfg.message_dim])))
            .collect(),
    };
    Ok(Exchange {
        aggregates,
        delivered,
        rounds,
    })
}
