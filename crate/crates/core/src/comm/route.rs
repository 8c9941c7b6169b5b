use super::{MessageVector, Topology};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Received messages of one agent as `(sender, message)`, senders ascending.
pub type Inbox = Vec<(usize, MessageVector)>;

/// Who hears whom: `get(i, j)` is true when a message from `j` reaches `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityMask {
    n: usize,
    bits: Vec<bool>,
}

impl ConnectivityMask {
    /// Builds a mask from rows. Rows must form a square matrix; the diagonal
    /// is checked when the mask is used for routing.
    pub fn from_rows(rows: Vec<Vec<bool>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::contract("connectivity mask must be square"));
        }
        Ok(ConnectivityMask {
            n,
            bits: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..n * n).map(|k| f(k / n, k % n)).collect();
        ConnectivityMask { n, bits }
    }

    /// Every agent hears every other agent.
    pub fn broadcast(n: usize) -> Self {
        Self::from_fn(n, |i, j| i != j)
    }

    /// Nobody hears anybody.
    pub fn silent(n: usize) -> Self {
        Self::from_fn(n, |_, _| false)
    }

    /// A single link from `sender` to `receiver`.
    pub fn unicast(n: usize, sender: usize, receiver: usize) -> Self {
        Self::from_fn(n, |i, j| i == receiver && j == sender && i != j)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, receiver: usize, sender: usize) -> bool {
        self.bits[receiver * self.n + sender]
    }

    pub fn set(&mut self, receiver: usize, sender: usize, on: bool) {
        self.bits[receiver * self.n + sender] = on;
    }

    pub fn senders_of(&self, receiver: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.get(receiver, j)).collect()
    }

    fn check(&self, n_agents: usize) -> Result<()> {
        if self.n != n_agents {
            return Err(Error::contract(format!(
                "connectivity mask is {0}x{0} but there are {1} agents",
                self.n, n_agents
            )));
        }
        if let Some(i) = (0..self.n).find(|&i| self.get(i, i)) {
            return Err(Error::contract(format!(
                "connectivity mask delivers agent {i}'s message to itself"
            )));
        }
        Ok(())
    }
}

/// Builds every agent's inbox. Broadcast delivers all other agents' messages;
/// the mask topology delivers exactly what the mask allows.
pub fn route(
    messages: &[MessageVector],
    topology: Topology,
    mask: Option<&ConnectivityMask>,
) -> Result<Vec<Inbox>> {
    let n = messages.len();
    match topology {
        Topology::Broadcast => Ok((0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i)
                    .map(|j| (j, messages[j]))
                    .collect()
            })
            .collect()),
        Topology::Mask => {
            let mask = mask.ok_or_else(|| Error::contract("mask topology without a mask"))?;
            mask.check(n)?;
            Ok((0..n)
                .map(|i| {
                    mask.senders_of(i)
                        .into_iter()
                        .map(|j| (j, messages[j]))
                        .collect()
                })
                .collect())
        }
    }
}
