use super::config::{EnvConfig, ExperimentConfig, RunConfig, UavSection};
use crate::agents::TrainerConfig;
use crate::comm::{CommConfig, Topology};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 4] = ["fig2", "table2", "switch", "referential"];

/// Sensing radius for the UAV presets. At the library default each UAV
/// already sees most of what a neighbour could tell it.
pub const UAV_PRESET_SENSING_RADIUS_M: f64 = 300.0;

/// SNR threshold for the UAV presets, about a 128 m service radius at 40 m
/// altitude. Far lower thresholds let one UAV cover the whole grid.
pub const UAV_PRESET_SNR_THRESHOLD_DB: f64 = 64.0;

fn uav(n_uavs: usize, n_users: usize) -> EnvConfig {
    EnvConfig::UavCoverage(UavSection {
        n_uavs,
        n_users,
        snr_threshold_db: UAV_PRESET_SNR_THRESHOLD_DB,
        sensing_radius_m: UAV_PRESET_SENSING_RADIUS_M,
        ..UavSection::default()
    })
}

fn uav_trainer() -> TrainerConfig {
    TrainerConfig {
        batch_episodes: 4,
        ..TrainerConfig::default()
    }
}

fn named(name: &str, env: EnvConfig, comm: CommConfig, trainer: TrainerConfig) -> ExperimentConfig {
    ExperimentConfig {
        env,
        comm,
        trainer,
        run: RunConfig {
            preset: Some(name.to_string()),
            ..RunConfig::default()
        },
    }
}

/// Built-in experiment setups.
///
/// * `fig2`: 3 UAVs, 30 users, attention messages of size 16.
/// * `table2`: 5 UAVs, 120 users, same learner.
/// * `switch`: 3-prisoner riddle with a one-bit discretized message to the
///   next visitor.
/// * `referential`: two-step speaker/listener game.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    Ok(match name {
        "fig2" => named(
            name,
            uav(3, 30),
            CommConfig::tarmac(16, 8),
            uav_trainer(),
        ),
        "table2" => named(
            name,
            uav(5, 120),
            CommConfig::tarmac(16, 8),
            uav_trainer(),
        ),
        "switch" => named(
            name,
            EnvConfig::SwitchRiddle { n: 3, horizon: None },
            CommConfig {
                topology: Topology::Mask,
                noise_sigma: 2.0,
                ..CommConfig::dial(1)
            },
            TrainerConfig {
                gamma: 0.99,
                epochs: 3000,
                episodes_per_epoch: 32,
                batch_episodes: 32,
                lr: 5e-3,
                hidden: 32,
                entropy_coef: 0.2,
                entropy_coef_final: Some(0.0),
                eval_episodes: 2000,
                ..TrainerConfig::default()
            },
        ),
        "referential" => named(
            name,
            EnvConfig::Referential {},
            CommConfig::dial(1),
            TrainerConfig {
                epochs: 200,
                episodes_per_epoch: 32,
                batch_episodes: 32,
                lr: 1e-2,
                hidden: 16,
                parameter_sharing: false,
                eval_episodes: 1000,
                ..TrainerConfig::default()
            },
        ),
        other => {
            return Err(Error::config(format!(
                "unknown preset {other}; known presets: {}",
                PRESETS.join(", ")
            )))
        }
    })
}
