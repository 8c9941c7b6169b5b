use super::{Aggregation, CommConfig, Inbox};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Attention weights `softmax(q·k_j / sqrt(key_dim))` over `keys`.
pub fn attention_weights(g: &mut Graph, query: Var, keys: &[Var]) -> Result<Var> {
    let key_dim = g.value(query).numel();
    let scores = keys
        .iter()
        .map(|&k| g.dot(query, k))
        .collect::<Result<Vec<_>>>()?;
    let scores = g.concat(&scores)?;
    g.softmax(scores, (key_dim as f64).sqrt())
}

/// Reduces an inbox to one fixed-length vector.
///
/// `n_agents` fixes the concat width. An empty inbox gives zeros of the
/// configured width, so "nobody spoke" is an ordinary input.
pub fn aggregate(
    g: &mut Graph,
    inbox: &Inbox,
    cfg: &CommConfig,
    n_agents: usize,
    query: Option<Var>,
) -> Result<Var> {
    let width = cfg.aggregate_dim(n_agents);
    if !cfg.enabled() {
        return Ok(g.constant(Tensor::vector(vec![])));
    }
    if cfg.aggregation == Aggregation::Concat {
        let need = n_agents.saturating_sub(1);
        if inbox.len() != need {
            return Err(Error::contract(format!(
                "concat aggregation needs {need} messages, inbox holds {}",
                inbox.len()
            )));
        }
    }
    if inbox.is_empty() {
        return Ok(g.constant(Tensor::zeros(&[width])));
    }
    let values: Vec<Var> = inbox.iter().map(|(_, m)| m.values).collect();
    match cfg.aggregation {
        Aggregation::Concat => g.concat(&values),
        Aggregation::Sum | Aggregation::Mean => {
            let mut acc = values[0];
            for &v in &values[1..] {
                acc = g.add(acc, v)?;
            }
            if cfg.aggregation == Aggregation::Mean {
                acc = g.scale(acc, 1.0 / values.len() as f64);
            }
            Ok(acc)
        }
        Aggregation::Attention => {
            let query = query.ok_or_else(|| Error::contract("attention needs a query"))?;
            let keys = inbox
                .iter()
                .map(|(j, m)| {
                    m.key
                        .ok_or_else(|| Error::contract(format!("message from {j} has no key")))
                })
                .collect::<Result<Vec<_>>>()?;
            let alpha = attention_weights(g, query, &keys)?;
            let v = g.stack(&values)?;
            g.matmul(alpha, v)
        }
    }
}
