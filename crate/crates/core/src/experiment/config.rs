use crate::agents::TrainerConfig;
use crate::comm::CommConfig;
use crate::env::{Environment, Referential, SwitchRiddle};
use crate::error::{Error, Result};
use crate::uav::{Placement, RadioParams, UavConfig, UavEnv};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Which environment to build, with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvConfig {
    SwitchRiddle {
        #[serde(default = "default_prisoners")]
        n: usize,
        /// Defaults to `4n − 6`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        horizon: Option<usize>,
    },
    Referential {},
    UavCoverage(UavSection),
}

/// UAV environment keys as they appear in the `[env]` table. Radio values
/// other than the threshold are fixed at their defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavSection {
    pub n_uavs: usize,
    pub n_users: usize,
    pub snr_threshold_db: f64,
    pub sensing_radius_m: f64,
    pub placement: Placement,
    pub horizon: usize,
    pub capacity: usize,
}

impl Default for UavSection {
    fn default() -> Self {
        UavSection::from(&UavConfig::default())
    }
}

impl From<&UavConfig> for UavSection {
    fn from(c: &UavConfig) -> Self {
        UavSection {
            n_uavs: c.n_uavs,
            n_users: c.n_users,
            snr_threshold_db: c.radio.snr_threshold_db,
            sensing_radius_m: c.sensing_radius_m,
            placement: c.placement,
            horizon: c.horizon,
            capacity: c.capacity,
        }
    }
}

impl UavSection {
    pub fn to_config(&self) -> UavConfig {
        UavConfig {
            n_uavs: self.n_uavs,
            n_users: self.n_users,
            sensing_radius_m: self.sensing_radius_m,
            placement: self.placement,
            horizon: self.horizon,
            capacity: self.capacity,
            radio: RadioParams {
                snr_threshold_db: self.snr_threshold_db,
                ..RadioParams::default()
            },
        }
    }
}

fn default_prisoners() -> usize {
    3
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig::UavCoverage(UavSection::default())
    }
}

impl EnvConfig {
    pub fn build(&self) -> Result<Box<dyn Environment + Send>> {
        Ok(match self {
            EnvConfig::SwitchRiddle { n, horizon: None } => Box::new(SwitchRiddle::new(*n)?),
            EnvConfig::SwitchRiddle {
                n,
                horizon: Some(h),
            } => Box::new(SwitchRiddle::with_horizon(*n, *h)?),
            EnvConfig::Referential {} => Box::new(Referential::new()),
            EnvConfig::UavCoverage(u) => Box::new(UavEnv::new(u.to_config())?),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvConfig::SwitchRiddle { .. } => "switch_riddle",
            EnvConfig::Referential {} => "referential",
            EnvConfig::UavCoverage(_) => "uav_coverage",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// One training run per seed. Each run's trainer seed is taken from here.
    pub seeds: Vec<u64>,
    /// Output root; `ECMARL_OUTPUT_DIR` and then `runs/` are used when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Fill the `seconds` column with wall-clock time. Off by default so
    /// outputs stay byte-identical between repeated runs.
    pub timing: bool,
    pub parallel_seeds: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seeds: vec![0, 1, 2, 3, 4],
            output_dir: None,
            preset: None,
            timing: false,
            parallel_seeds: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    pub comm: CommConfig,
    pub trainer: TrainerConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.comm.validate()?;
        self.trainer.validate()?;
        if self.run.seeds.is_empty() {
            return Err(Error::config("run.seeds must list at least one seed"));
        }
        let mut seen = self.run.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.run.seeds.len() {
            return Err(Error::config("run.seeds contains duplicates"));
        }
        if let EnvConfig::UavCoverage(u) = &self.env {
            u.to_config().validate()?;
        }
        // construction checks the remaining env parameters
        self.env.build().map(|_| ())
    }

    /// The trainer settings for one seed of this experiment.
    pub fn trainer_for(&self, seed: u64) -> TrainerConfig {
        TrainerConfig {
            seed,
            ..self.trainer.clone()
        }
    }

    pub fn output_root(&self) -> PathBuf {
        if let Some(dir) = &self.run.output_dir {
            return dir.clone();
        }
        std::env::var_os("ECMARL_OUTPUT_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to toml")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes to json")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(value.clone())
            .map_err(|e| Error::config(format!("embedded config: {e}")))
    }

    /// Reads an optional config file, layers it over a preset (named by
    /// `preset` or by the file's `run.preset`) and applies dotted overrides.
    pub fn load(path: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let file_preset = file
            .get("run")
            .and_then(|r| r.get("preset"))
            .and_then(|p| p.as_str())
            .map(str::to_string);
        let mut doc = match preset.map(str::to_string).or(file_preset) {
            Some(name) => {
                let base = super::presets::preset(&name)?;
                toml::Table::try_from(&base).expect("preset serializes to toml")
            }
            None => toml::Table::new(),
        };
        merge(&mut doc, file);
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Recursive table merge; `top` wins on conflicts. Replacing the env name
/// drops the preset's env parameters, which belong to a different variant.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => {
                let renamed = t.get("name").is_some_and(|n| b.get("name") != Some(n));
                if renamed {
                    *b = t;
                } else {
                    merge(b, t);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies one `section.key=value` (leading dashes allowed) override. The
/// value is read as a TOML value when it parses as one, else as a string.
pub fn apply_override(doc: &mut toml::Table, arg: &str) -> Result<()> {
    let body = arg.trim_start_matches('-');
    let (key, raw) = body
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override {arg} must look like --section.key=value")))?;
    let path: Vec<&str> = key.split('.').collect();
    if path.len() < 2 || path.iter().any(|p| p.is_empty()) {
        return Err(Error::config(format!(
            "override {arg} must name a section and a key"
        )));
    }
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut table = doc;
    for part in &path[..path.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("{key}: {part} is not a section")))?;
    }
    table.insert(path[path.len() - 1].to_string(), value);
    Ok(())
}

/// True for arguments shaped like `--section.key=value`.
pub fn is_override(arg: &str) -> bool {
    arg.strip_prefix("--")
        .and_then(|b| b.split_once('='))
        .is_some_and(|(k, _)| k.contains('.'))
}
