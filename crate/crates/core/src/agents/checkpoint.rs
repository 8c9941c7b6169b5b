use crate::error::{Error, Result};
use crate::tensor::{ParameterStore, Tensor};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "ecmarl-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub stream: u64,
    /// Word position as a decimal string; it does not fit in a JSON number.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: hex::encode(rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        use rand::SeedableRng;
        let bytes = hex::decode(&self.seed)
            .map_err(|e| Error::Checkpoint(format!("bad rng seed: {e}")))?;
        let seed: [u8; 32] = bytes
            .try_into()
            .map_err(|_| Error::Checkpoint("rng seed must be 32 bytes".into()))?;
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|e| Error::Checkpoint(format!("bad rng position: {e}")))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// SHA-256 of the compact JSON form of `config`.
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("json value serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Versioned snapshot of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub optimizer_step: u64,
    pub params: Vec<ParamRecord>,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn capture(config: serde_json::Value, store: &ParameterStore, rng: &ChaCha8Rng) -> Self {
        let params = store
            .params()
            .iter()
            .map(|p| ParamRecord {
                name: p.name.clone(),
                shape: p.value.shape().to_vec(),
                values: p.value.data().to_vec(),
                m: p.m.clone(),
                v: p.v.clone(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            config_hash: config_hash(&config),
            config,
            optimizer_step: store.step_count(),
            params,
            rng: RngState::capture(rng),
        }
    }

    /// Rebuilds the parameter store after checking format, version, hash and
    /// per-parameter sizes.
    pub fn store(&self) -> Result<ParameterStore> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if config_hash(&self.config) != self.config_hash {
            return Err(Error::Checkpoint(
                "config hash does not match the embedded config".into(),
            ));
        }
        let mut params = Vec::with_capacity(self.params.len());
        for p in &self.params {
            let n = p.values.len();
            if p.m.len() != n || p.v.len() != n {
                return Err(Error::Checkpoint(format!(
                    "optimizer state of {} does not match its {} values",
                    p.name, n
                )));
            }
            let value = Tensor::new(p.shape.clone(), p.values.clone()).map_err(|_| {
                Error::Checkpoint(format!(
                    "parameter {} declares shape {:?} but holds {} values",
                    p.name, p.shape, n
                ))
            })?;
            params.push(crate::tensor::Parameter {
                name: p.name.clone(),
                value,
                grad: None,
                m: p.m.clone(),
                v: p.v.clone(),
            });
        }
        Ok(ParameterStore::from_parts(params, self.optimizer_step))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}
