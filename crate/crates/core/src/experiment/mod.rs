//! Experiment configuration, presets and the run/sweep/evaluate drivers
//! behind the `ecmarl` command.

mod config;
mod presets;
mod runner;
mod verify;

pub use config::{apply_override, is_override, EnvConfig, ExperimentConfig, RunConfig, UavSection};
pub use presets::{preset, PRESETS, UAV_PRESET_SNR_THRESHOLD_DB};
pub use runner::{
    check_sizes, eval_seed, evaluate_checkpoint, final_csv, metrics_json,
    parse_record_csv, random_walk_metrics, record_csv, run_sweep, run_train, sweep_csv,
    sweep_summary_csv, train_seed, train_seed_with_stats, write_metrics, EpochRow, FinalMetrics, SeedRun, Stat,
    SweepRow, SweepSummaryRow, TrainSummary, RECORD_COLUMNS, RECORD_SCHEMA,
};
pub use verify::{
    association_oracle, gradcheck_report, switch_oracle, AssociationOracleReport,
    SwitchOracleReport, GRADCHECK_TRIALS,
};
