use super::config::ExperimentConfig;
use crate::agents::{
    evaluate, mean_and_std, ActorCritic, Checkpoint, Controller, EpochStats, EvalMetrics,
    NetShape,
    RandomWalk, Trainer,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const RECORD_SCHEMA: &str = "# ecmarl-record v1";
pub const RECORD_COLUMNS: &str = "epoch,mean_return,coverage,policy_loss,value_loss,entropy,seconds";

/// XOR-ed into the run seed to pick the evaluation episodes, so that every
/// configuration trained with a given seed is scored on the same episodes.
const EVAL_SALT: u64 = 0x00e7_a1ed;

pub fn eval_seed(seed: u64) -> u64 {
    seed ^ EVAL_SALT
}

/// One row of the per-epoch training record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub mean_return: f64,
    /// Empty for environments without a coverage notion.
    pub coverage: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMetrics {
    pub seed: u64,
    pub final_return: f64,
    pub final_return_std: f64,
    pub final_coverage: Option<f64>,
    pub gate_rate: f64,
}

impl FinalMetrics {
    fn from_eval(seed: u64, m: &EvalMetrics) -> Self {
        FinalMetrics {
            seed,
            final_return: m.mean_return,
            final_return_std: m.std_return,
            final_coverage: m.mean_coverage,
            gate_rate: m.gate_rate,
        }
    }
}

pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<EpochRow>,
    pub final_metrics: FinalMetrics,
    pub trainer: Trainer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation across seeds.
    pub std: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, std) = mean_and_std(xs);
        Stat { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    pub final_return: Stat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_coverage: Option<Stat>,
    pub per_seed: Vec<FinalMetrics>,
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

pub fn record_csv(rows: &[EpochRow]) -> String {
    let mut s = format!("{RECORD_SCHEMA}\n{RECORD_COLUMNS}\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.epoch,
            fmt_f(r.mean_return),
            fmt_opt(r.coverage),
            fmt_f(r.policy_loss),
            fmt_f(r.value_loss),
            fmt_f(r.entropy),
            fmt_f(r.seconds)
        )
        .expect("write to string");
    }
    s
}

/// Parses a record file written by [`record_csv`].
pub fn parse_record_csv(text: &str) -> Result<Vec<EpochRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORD_SCHEMA) || lines.next() != Some(RECORD_COLUMNS) {
        return Err(Error::config("not an ecmarl record file"));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::config(format!("bad number {s:?} in record")))
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::config(format!("record row has {} fields", f.len())));
            }
            Ok(EpochRow {
                epoch: num(f[0])? as usize,
                mean_return: num(f[1])?,
                coverage: if f[2].is_empty() { None } else { Some(num(f[2])?) },
                policy_loss: num(f[3])?,
                value_loss: num(f[4])?,
                entropy: num(f[5])?,
                seconds: num(f[6])?,
            })
        })
        .collect()
}

pub fn final_csv(rows: &[FinalMetrics]) -> String {
    let mut s = String::from("seed,final_return,final_return_std,final_coverage,gate_rate\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.seed,
            fmt_f(r.final_return),
            fmt_f(r.final_return_std),
            fmt_opt(r.final_coverage),
            fmt_f(r.gate_rate)
        )
        .expect("write to string");
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    write(path, &text)
}

/// Trains one seed of `cfg` in memory. `on_epoch` sees every row as it is
/// produced.
pub fn train_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochRow),
) -> Result<SeedRun> {
    train_seed_with_stats(cfg, seed, |row, _| on_epoch(row))
}

/// Like [`train_seed`], but the callback also sees the full epoch statistics,
/// including per-update gradient norms.
pub fn train_seed_with_stats(
    cfg: &ExperimentConfig,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochRow, &EpochStats),
) -> Result<SeedRun> {
    let mut env = cfg.env.build()?;
    let mut trainer = Trainer::new(env.as_ref(), cfg.comm.clone(), cfg.trainer_for(seed))?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(cfg.trainer.epochs);
    for _ in 0..cfg.trainer.epochs {
        let s = trainer.train_epoch(env.as_mut())?;
        let row = EpochRow {
            epoch: s.epoch,
            mean_return: s.mean_return,
            coverage: s.coverage,
            policy_loss: s.policy_loss,
            value_loss: s.value_loss,
            entropy: s.entropy,
            seconds: if cfg.run.timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        on_epoch(&row, &s);
        records.push(row);
    }
    let controller = Controller::Learned {
        net: &trainer.net,
        store: &trainer.store,
    };
    let m = evaluate(
        env.as_mut(),
        &controller,
        cfg.trainer.eval_episodes,
        eval_seed(seed),
    )?;
    Ok(SeedRun {
        seed,
        records,
        final_metrics: FinalMetrics::from_eval(seed, &m),
        trainer,
    })
}

/// Random-walk baseline scored on the same evaluation episodes as a trained
/// run with `seed`.
pub fn random_walk_metrics(cfg: &ExperimentConfig, seed: u64) -> Result<FinalMetrics> {
    let mut env = cfg.env.build()?;
    let walk = RandomWalk::new(env.n_actions(), cfg.comm.message_dim)?;
    let m = evaluate(
        env.as_mut(),
        &Controller::RandomWalk(walk),
        cfg.trainer.eval_episodes,
        eval_seed(seed),
    )?;
    Ok(FinalMetrics::from_eval(seed, &m))
}

fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed{seed}"))
}

/// Trains one seed and writes `record.csv` and `checkpoint.json` under
/// `out/seed<seed>/`. A numeric failure leaves `diagnostics.json` behind.
fn train_and_write(cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<FinalMetrics> {
    let dir = seed_dir(out, seed);
    let mut seen = Vec::new();
    match train_seed(cfg, seed, |r| seen.push(r.clone())) {
        Ok(run) => {
            write(&dir.join("record.csv"), &record_csv(&run.records))?;
            let ck = Checkpoint::capture(cfg.to_json(), &run.trainer.store, &run.trainer.rng);
            ck.save(&dir.join("checkpoint.json"))?;
            Ok(run.final_metrics)
        }
        Err(e @ Error::Numeric(_)) => {
            let dump = serde_json::json!({
                "seed": seed,
                "error": e.to_string(),
                "epochs_completed": seen.len(),
                "records": seen,
            });
            write_json(&dir.join("diagnostics.json"), &dump)?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn summarize(cfg: &ExperimentConfig, per_seed: Vec<FinalMetrics>) -> TrainSummary {
    let returns: Vec<f64> = per_seed.iter().map(|m| m.final_return).collect();
    let coverage: Option<Vec<f64>> = per_seed.iter().map(|m| m.final_coverage).collect();
    TrainSummary {
        config: cfg.to_json(),
        seeds: per_seed.iter().map(|m| m.seed).collect(),
        eval_episodes: cfg.trainer.eval_episodes,
        final_return: Stat::of(&returns),
        final_coverage: coverage.map(|c| Stat::of(&c)),
        per_seed,
    }
}

/// Trains every seed of `cfg` and writes the per-seed records and
/// checkpoints, `final.csv`, `summary.json` and the resolved `config.toml`
/// under `out`.
pub fn run_train(cfg: &ExperimentConfig, out: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    let per_seed: Vec<FinalMetrics> = if cfg.run.parallel_seeds {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .run
                .seeds
                .iter()
                .map(|&seed| s.spawn(move || train_and_write(cfg, seed, out)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        cfg.run
            .seeds
            .iter()
            .map(|&seed| train_and_write(cfg, seed, out))
            .collect::<Result<Vec<_>>>()?
    };
    let summary = summarize(cfg, per_seed);
    write(&out.join("config.toml"), &cfg.to_toml())?;
    write(&out.join("final.csv"), &final_csv(&summary.per_seed))?;
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Message dimension, or `"random"` for the random-walk baseline.
    pub comm_size: String,
    pub seed: u64,
    pub final_coverage: Option<f64>,
    pub final_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummaryRow {
    pub comm_size: String,
    pub seeds: usize,
    pub coverage: Option<Stat>,
    pub final_return: Stat,
}

pub fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::config("--comm-sizes needs at least one size"));
    }
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() != sizes.len() {
        return Err(Error::config("--comm-sizes contains duplicates"));
    }
    Ok(())
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("comm_size,seed,final_coverage,final_return\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{},{}",
            r.comm_size,
            r.seed,
            fmt_opt(r.final_coverage),
            fmt_f(r.final_return)
        )
        .expect("write to string");
    }
    s
}

pub fn sweep_summary_csv(rows: &[SweepSummaryRow]) -> String {
    let mut s = String::from(
        "comm_size,seeds,mean_coverage,std_coverage,mean_return,std_return\n",
    );
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            r.comm_size,
            r.seeds,
            fmt_opt(r.coverage.as_ref().map(|c| c.mean)),
            fmt_opt(r.coverage.as_ref().map(|c| c.std)),
            fmt_f(r.final_return.mean),
            fmt_f(r.final_return.std)
        )
        .expect("write to string");
    }
    s
}

fn summary_row(comm_size: &str, rows: &[&SweepRow]) -> SweepSummaryRow {
    let returns: Vec<f64> = rows.iter().map(|r| r.final_return).collect();
    let coverage: Option<Vec<f64>> = rows.iter().map(|r| r.final_coverage).collect();
    SweepSummaryRow {
        comm_size: comm_size.to_string(),
        seeds: rows.len(),
        coverage: coverage.map(|c| Stat::of(&c)),
        final_return: Stat::of(&returns),
    }
}

/// Trains `cfg` once per message size (each under `out/m<size>/`) and adds
/// random-walk rows, then writes `sweep.csv` and `sweep_summary.csv`.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    sizes: &[usize],
    out: &Path,
) -> Result<Vec<SweepSummaryRow>> {
    check_sizes(sizes)?;
    cfg.validate()?;
    let mut rows = Vec::new();
    for &m in sizes {
        let mut c = cfg.clone();
        c.comm.message_dim = m;
        let summary = run_train(&c, &out.join(format!("m{m}")))?;
        rows.extend(summary.per_seed.iter().map(|f| SweepRow {
            comm_size: m.to_string(),
            seed: f.seed,
            final_coverage: f.final_coverage,
            final_return: f.final_return,
        }));
    }
    for &seed in &cfg.run.seeds {
        let f = random_walk_metrics(cfg, seed)?;
        rows.push(SweepRow {
            comm_size: "random".into(),
            seed,
            final_coverage: f.final_coverage,
            final_return: f.final_return,
        });
    }
    let mut labels: Vec<String> = sizes.iter().map(|m| m.to_string()).collect();
    labels.push("random".into());
    let summary: Vec<SweepSummaryRow> = labels
        .iter()
        .map(|l| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| &r.comm_size == l).collect();
            summary_row(l, &group)
        })
        .collect();
    write(&out.join("sweep.csv"), &sweep_csv(&rows))?;
    write(&out.join("sweep_summary.csv"), &sweep_summary_csv(&summary))?;
    Ok(summary)
}

/// Decentralized evaluation of a saved checkpoint. The environment and
/// network are rebuilt from the config embedded in the checkpoint.
pub fn evaluate_checkpoint(path: &Path, episodes: usize, seed: u64) -> Result<EvalMetrics> {
    if episodes == 0 {
        return Err(Error::config("--episodes must be at least 1"));
    }
    let ck = Checkpoint::load(path)?;
    let store = ck.store()?;
    let cfg = ExperimentConfig::from_json(&ck.config)?;
    let mut env = cfg.env.build()?;
    let shape = NetShape {
        n_agents: env.n_agents(),
        obs_dim: env.obs_dim(),
        n_actions: env.n_actions(),
        hidden: cfg.trainer.hidden,
        parameter_sharing: cfg.trainer.parameter_sharing,
        comm: cfg.comm.clone(),
    };
    let net = ActorCritic::bind(shape, &store)?;
    evaluate(
        env.as_mut(),
        &Controller::Learned {
            net: &net,
            store: &store,
        },
        episodes,
        seed,
    )
}

pub fn metrics_json(m: &EvalMetrics) -> String {
    serde_json::to_string_pretty(m).expect("metrics serialize") + "\n"
}

pub fn write_metrics(path: &Path, m: &EvalMetrics) -> Result<()> {
    write(path, &metrics_json(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::presets::preset;

    fn tiny() -> ExperimentConfig {
        let mut cfg = preset("referential").unwrap();
        cfg.trainer.epochs = 3;
        cfg.trainer.episodes_per_epoch = 4;
        cfg.trainer.eval_episodes = 20;
        cfg.run.seeds = vec![0, 1];
        cfg
    }

    #[test]
    fn record_round_trip() {
        let rows = vec![
            EpochRow {
                epoch: 1,
                mean_return: 0.5,
                coverage: None,
                policy_loss: -0.1,
                value_loss: 0.25,
                entropy: 0.69,
                seconds: 0.0,
            },
            EpochRow {
                epoch: 2,
                mean_return: 1.0 / 3.0,
                coverage: Some(0.4),
                policy_loss: 1e-17,
                value_loss: 2.0,
                entropy: 0.5,
                seconds: 0.0,
            },
        ];
        assert_eq!(parse_record_csv(&record_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn train_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let s = run_train(&cfg, dir.path()).unwrap();
        for seed in [0, 1] {
            let text = std::fs::read_to_string(dir.path().join(format!("seed{seed}/record.csv"))).unwrap();
            let rows = parse_record_csv(&text).unwrap();
            assert_eq!(rows.len(), 3);
            assert!(rows.iter().all(|r| r.mean_return.is_finite() && r.seconds == 0.0));
            assert!(dir.path().join(format!("seed{seed}/checkpoint.json")).exists());
        }
        let direct = Stat::of(&[s.per_seed[0].final_return, s.per_seed[1].final_return]);
        assert!((direct.mean - s.final_return.mean).abs() < 1e-12);
        assert!((direct.std - s.final_return.std).abs() < 1e-12);
        assert!(dir.path().join("final.csv").exists());
    }

    #[test]
    fn sweep_size_validation() {
        assert!(matches!(check_sizes(&[]), Err(Error::Config(_))));
        assert!(matches!(check_sizes(&[4, 0, 4]), Err(Error::Config(_))));
        assert!(check_sizes(&[0, 4, 16]).is_ok());
    }

    #[test]
    fn parallel_seeds_match_sequential() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = tiny();
        run_train(&cfg, a.path()).unwrap();
        let mut par = cfg.clone();
        par.run.parallel_seeds = true;
        run_train(&par, b.path()).unwrap();
        for f in ["seed0/record.csv", "seed1/record.csv", "final.csv"] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}
