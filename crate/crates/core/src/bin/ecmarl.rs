use clap::{Parser, Subcommand};
use ecmarl::experiment::{
    association_oracle, evaluate_checkpoint, gradcheck_report, is_override, metrics_json,
    run_sweep, run_train, switch_oracle, ExperimentConfig,
};
use ecmarl::uav::RadioParams;
use ecmarl::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Emergent-communication multi-agent RL experiments.
///
/// Config overrides are passed as `--section.key=value`, e.g.
/// `--comm.message_dim=0` or `--run.seeds=[0,1]`.
#[derive(Parser)]
#[command(name = "ecmarl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of an experiment.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// fig2, table2, switch or referential.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train once per message size, plus random-walk rows.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        comm_sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decentralized evaluation of a checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Metrics JSON path; defaults to metrics.json next to the checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Finite-difference check of every differentiable op.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Add a deliberately wrong backward rule to the suite.
        #[arg(long)]
        corrupt: bool,
    },
    /// Exact or exhaustive reference values for small instances.
    Oracle {
        #[command(subcommand)]
        env: OracleEnv,
    },
}

#[derive(Subcommand)]
enum OracleEnv {
    /// Designated-counter value and best no-message value.
    SwitchRiddle {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        horizon: Option<usize>,
        /// Monte-Carlo rollouts for n = 4.
        #[arg(long, default_value_t = 100_000)]
        rollouts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Greedy against exhaustive single-UAV association.
    UavCoverage {
        #[arg(long, default_value_t = 6)]
        users: usize,
        #[arg(long, default_value_t = 1000)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        capacity: usize,
        #[arg(long, default_value_t = 64.0)]
        snr_threshold_db: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| {
        let name = cfg.run.preset.clone().unwrap_or_else(|| cfg.env.name().to_string());
        cfg.output_root().join(name)
    })
}

fn run(command: Command, overrides: &[String]) -> ecmarl::Result<bool> {
    if !overrides.is_empty() && !matches!(command, Command::Train { .. } | Command::Sweep { .. }) {
        return Err(Error::Config("config overrides only apply to train and sweep".into()));
    }
    match command {
        Command::Train { config, preset, out } => {
            let cfg = ExperimentConfig::load(config.as_deref(), preset.as_deref(), overrides)?;
            let out = output_dir(&cfg, out);
            let s = run_train(&cfg, &out)?;
            for m in &s.per_seed {
                println!(
                    "seed {}: return {:.4}{}",
                    m.seed,
                    m.final_return,
                    m.final_coverage.map(|c| format!(", coverage {c:.4}")).unwrap_or_default()
                );
            }
            println!(
                "mean return {:.4} ± {:.4} over {} seeds; outputs in {}",
                s.final_return.mean,
                s.final_return.std,
                s.seeds.len(),
                out.display()
            );
            Ok(true)
        }
        Command::Sweep {
            config,
            preset,
            comm_sizes,
            out,
        } => {
            let cfg = ExperimentConfig::load(config.as_deref(), preset.as_deref(), overrides)?;
            let out = output_dir(&cfg, out).join("sweep");
            for r in run_sweep(&cfg, &comm_sizes, &out)? {
                let cov = r
                    .coverage
                    .map(|c| format!("coverage {:.4} ± {:.4}, ", c.mean, c.std))
                    .unwrap_or_default();
                println!(
                    "{:>6}: {cov}return {:.4} ± {:.4}",
                    r.comm_size, r.final_return.mean, r.final_return.std
                );
            }
            println!("outputs in {}", out.display());
            Ok(true)
        }
        Command::Evaluate {
            checkpoint,
            episodes,
            seed,
            out,
        } => {
            let m = evaluate_checkpoint(&checkpoint, episodes, seed)?;
            let path = out.unwrap_or_else(|| {
                checkpoint
                    .parent()
                    .unwrap_or(Path::new("."))
                    .join("metrics.json")
            });
            ecmarl::experiment::write_metrics(&path, &m)?;
            print!("{}", metrics_json(&m));
            Ok(true)
        }
        Command::Gradcheck { seed, corrupt } => {
            let report = gradcheck_report(corrupt, seed);
            print!("{}", report.render());
            let ok = report.passed();
            println!("{}", if ok { "all ops passed" } else { "gradcheck FAILED" });
            Ok(ok)
        }
        Command::Oracle { env } => match env {
            OracleEnv::SwitchRiddle {
                n,
                horizon,
                rollouts,
                seed,
            } => {
                print!("{}", switch_oracle(n, horizon, rollouts, seed)?.render());
                Ok(true)
            }
            OracleEnv::UavCoverage {
                users,
                instances,
                capacity,
                snr_threshold_db,
                seed,
            } => {
                let radio = RadioParams {
                    snr_threshold_db,
                    ..RadioParams::default()
                };
                radio.validate()?;
                let r = association_oracle(users, instances, &radio, capacity, seed)?;
                println!(
                    "uav_coverage single-UAV association: {} instances of {} users, {} mismatches",
                    r.instances, r.users, r.mismatches
                );
                Ok(r.mismatches == 0)
            }
        },
    }
}

fn main() -> ExitCode {
    let (overrides, args): (Vec<String>, Vec<String>) =
        std::env::args().partition(|a| is_override(a));
    let cli = Cli::parse_from(args);
    match run(cli.command, &overrides) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config(_)) { 2 } else { 1 })
        }
    }
}
