//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! process fails if any criterion fails.
//!
//! Criteria 6 and 7 train 20 UAV runs and take most of the wall time.

use ecmarl::comm::{aggregate, attention_weights, route, Aggregation, CommConfig, ConnectivityMask, MessageVector, Topology};
use ecmarl::env::{best_no_comm_value, Environment};
use ecmarl::experiment::{
    preset, random_walk_metrics, train_seed, train_seed_with_stats, ExperimentConfig, GRADCHECK_TRIALS,
};
use ecmarl::tensor::{Graph, Tensor, Var};
use ecmarl::uav::{associate_users, exhaustive_association, path_loss_db, RadioParams, UavConfig, UavEnv, GRID_M, N_MOVES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const BIN: &str = env!("CARGO_BIN_EXE_ecmarl");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Standard error of a difference of two means over the same number of seeds.
fn pooled_se(a: &[f64], b: &[f64]) -> f64 {
    ((sample_std(a).powi(2) + sample_std(b).powi(2)) / a.len() as f64).sqrt()
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(BIN).args(args).output().expect("run ecmarl binary");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn gradcheck() -> Outcome {
    let start = Instant::now();
    let (code, stdout) = cli(&["gradcheck"]);
    let rows: Vec<(&str, usize, f64)> = stdout
        .lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let op = it.next()?;
            let trials = it.next()?.strip_prefix("trials=")?.parse().ok()?;
            let err = it.next()?.strip_prefix("max_rel_err=")?.parse().ok()?;
            Some((op, trials, err))
        })
        .collect();
    let worst = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let all_trials = rows.iter().all(|r| r.1 >= GRADCHECK_TRIALS && r.1 >= 20);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        code == 0 && !rows.is_empty() && worst < 1e-4 && all_trials && secs < 10.0,
        format!("{} ops, worst relative error {worst:.2e}, exit {code}, {secs:.1}s", rows.len()),
    )
}

fn random_messages(g: &mut Graph, rng: &mut ChaCha8Rng, n: usize, dim: usize, key_dim: usize) -> Vec<MessageVector> {
    (0..n)
        .map(|_| {
            let v = g.input(Tensor::vector((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect()));
            let k = g.input(Tensor::vector((0..key_dim).map(|_| rng.random_range(-2.0..2.0)).collect()));
            MessageVector::new(v).with_key(k)
        })
        .collect()
}

fn channel_algebra() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);

    let mut simplex_err: f64 = 0.0;
    for _ in 0..2000 {
        let mut g = Graph::new();
        let n = rng.random_range(1..9);
        let d = rng.random_range(1..6);
        let q = g.input(Tensor::vector((0..d).map(|_| rng.random_range(-5.0..5.0)).collect()));
        let keys: Vec<Var> = (0..n)
            .map(|_| g.input(Tensor::vector((0..d).map(|_| rng.random_range(-5.0..5.0)).collect())))
            .collect();
        let w = attention_weights(&mut g, q, &keys).expect("attention");
        let w = g.value(w).data();
        simplex_err = simplex_err.max((w.iter().sum::<f64>() - 1.0).abs());
        if w.iter().any(|&x| x < 0.0) {
            simplex_err = f64::INFINITY;
        }
    }

    let mut self_deliveries = 0;
    let mut rejected = 0;
    for call in 0..10_000 {
        let mut g = Graph::new();
        let n = rng.random_range(1..8);
        let msgs = random_messages(&mut g, &mut rng, n, 2, 2);
        let inboxes = if call % 2 == 0 {
            route(&msgs, Topology::Broadcast, None)
        } else {
            let p: f64 = rng.random_range(0.0..1.0);
            let bits: Vec<bool> = (0..n * n).map(|_| rng.random_bool(p)).collect();
            let mask = ConnectivityMask::from_fn(n, |i, j| bits[i * n + j]);
            route(&msgs, Topology::Mask, Some(&mask))
        };
        match inboxes {
            Ok(inboxes) => {
                self_deliveries += inboxes
                    .iter()
                    .enumerate()
                    .filter(|(i, inbox)| inbox.iter().any(|(j, _)| j == i))
                    .count();
            }
            Err(_) => rejected += 1,
        }
    }

    let mut perm_err: f64 = 0.0;
    for aggregation in [Aggregation::Mean, Aggregation::Sum, Aggregation::Attention] {
        let cfg = CommConfig {
            aggregation,
            ..CommConfig::tarmac(3, 4)
        };
        for _ in 0..300 {
            let mut g = Graph::new();
            let n = rng.random_range(2..8);
            let msgs = random_messages(&mut g, &mut rng, n, 3, 4);
            let q = g.input(Tensor::vector((0..4).map(|_| rng.random_range(-2.0..2.0)).collect()));
            let inbox: Vec<(usize, MessageVector)> = msgs.into_iter().enumerate().collect();
            let mut shuffled = inbox.clone();
            for i in (1..shuffled.len()).rev() {
                shuffled.swap(i, rng.random_range(0..=i));
            }
            let a = aggregate(&mut g, &inbox, &cfg, n + 1, Some(q)).expect("aggregate");
            let b = aggregate(&mut g, &shuffled, &cfg, n + 1, Some(q)).expect("aggregate");
            for (x, y) in g.value(a).data().iter().zip(g.value(b).data()) {
                perm_err = perm_err.max((x - y).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        simplex_err < 1e-9 && self_deliveries == 0 && perm_err < 1e-9 && secs < 10.0,
        format!(
            "simplex error {simplex_err:.1e}, {self_deliveries} self-deliveries in 10000 calls ({rejected} masks with a self-loop rejected), permutation error {perm_err:.1e}, {secs:.1}s"
        ),
    )
}

fn referential() -> Outcome {
    let start = Instant::now();
    let cfg = preset("referential").expect("preset");
    let mut accs = Vec::new();
    let mut min_grad = f64::INFINITY;
    let mut updates = 0;
    for seed in SEEDS {
        let run = train_seed_with_stats(&cfg, seed, |_, stats| {
            for u in &stats.updates {
                min_grad = min_grad.min(u.message_grad_norms[0]);
                updates += 1;
            }
        })
        .expect("referential training");
        accs.push(run.final_metrics.final_return);
    }
    let acc = mean(&accs);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        min_grad > 0.0 && acc >= 0.5 + 0.20 && secs < 300.0,
        format!("accuracy {acc:.4} (bar 0.70), speaker gradient min {min_grad:.2e} over {updates} updates, {secs:.0}s"),
    )
}

fn switch_riddle() -> Outcome {
    let start = Instant::now();
    let (code, stdout) = cli(&["oracle", "switch-riddle", "--n", "3", "--horizon", "6"]);
    let oracle: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("designated_counter "))
        .and_then(|rest| rest.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .unwrap_or(f64::NAN);
    let exact = code == 0 && oracle == 122.0 / 729.0;
    let no_comm = best_no_comm_value(3, 6).expect("no-comm enumeration");
    let cfg = preset("switch").expect("preset");
    let rewards: Vec<f64> = SEEDS
        .iter()
        .map(|&s| train_seed(&cfg, s, |_| {}).expect("switch training").final_metrics.final_return)
        .collect();
    let r = mean(&rewards);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        exact && r >= 0.7 * oracle && r > no_comm && secs < 900.0,
        format!(
            "oracle {oracle:.6} (122/729 {}), trained {r:.4} vs 70% bar {:.4} and no-comm {no_comm:.4}, {secs:.0}s",
            if exact { "exact" } else { "MISMATCH" },
            0.7 * oracle
        ),
    )
}

fn uav_model() -> Outcome {
    let start = Instant::now();
    let radio = RadioParams::default();
    // free-space formula written out independently
    let c = 299_792_458.0;
    let fspl = |d: f64, f: f64| 20.0 * d.log10() + 20.0 * f.log10() + 20.0 * (4.0 * std::f64::consts::PI / c).log10();
    let expected_pl = fspl(40.0, 2e9);
    let pl = path_loss_db(40.0, 2e9).expect("path loss");
    let snr = radio.snr_db((500.0, 500.0), (500.0, 500.0));
    let expected_snr = radio.tx_power_dbm - expected_pl - radio.noise_power_dbm;
    let radio_ok = (pl - expected_pl).abs() < 0.1
        && (pl - 70.5).abs() < 0.1
        && (snr - expected_snr).abs() < 0.1
        && (snr - 74.5).abs() < 0.1;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut instances = 0;
    for users in 1..=6 {
        for _ in 0..500 {
            let r = RadioParams {
                snr_threshold_db: rng.random_range(50.0..75.0),
                ..RadioParams::default()
            };
            let cap = rng.random_range(1..=users);
            let uav = (rng.random_range(0.0..GRID_M), rng.random_range(0.0..GRID_M));
            let pts: Vec<(f64, f64)> = (0..users)
                .map(|_| {
                    (
                        (uav.0 + rng.random_range(-300.0..300.0)).clamp(0.0, GRID_M),
                        (uav.1 + rng.random_range(-300.0..300.0)).clamp(0.0, GRID_M),
                    )
                })
                .collect();
            let best = exhaustive_association(uav, &pts, &r, cap).expect("oracle");
            let greedy = associate_users(&[uav], &pts, &r, cap);
            instances += 1;
            if greedy.iter().map(Option::is_some).ne(best.iter().copied()) {
                mismatches += 1;
            }
        }
    }

    let mut env = UavEnv::new(UavConfig {
        n_users: 120,
        n_uavs: 5,
        radio: RadioParams {
            snr_threshold_db: 50.0,
            ..RadioParams::default()
        },
        ..UavConfig::default()
    })
    .expect("uav env");
    let cap = env.config().capacity;
    let mut steps = 0;
    let mut max_load = 0;
    let mut episode = 0;
    env.reset(episode);
    while steps < 10_000 {
        let actions: Vec<usize> = (0..5).map(|_| rng.random_range(0..N_MOVES)).collect();
        let s = env.step(&actions).expect("step");
        steps += 1;
        for u in 0..5 {
            max_load = max_load.max(env.state().load(u));
        }
        if s.done {
            episode += 1;
            env.reset(episode);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        radio_ok && mismatches == 0 && cap == 12 && max_load <= cap && secs < 30.0,
        format!(
            "FSPL {pl:.2} dB, nadir SNR {snr:.2} dB, {mismatches}/{instances} association mismatches, max load {max_load}/{cap} over {steps} steps, {secs:.1}s"
        ),
    )
}

struct CoverageRuns {
    values: Vec<f64>,
    seconds: f64,
}

fn coverage_runs(cfg: &ExperimentConfig) -> CoverageRuns {
    let start = Instant::now();
    let values = SEEDS
        .iter()
        .map(|&s| {
            train_seed(cfg, s, |_| {})
                .expect("uav training")
                .final_metrics
                .final_coverage
                .expect("coverage")
        })
        .collect();
    CoverageRuns {
        values,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn with_comm(m: usize, sigma: f64) -> ExperimentConfig {
    let mut cfg = preset("fig2").expect("preset");
    cfg.comm.message_dim = m;
    cfg.comm.noise_sigma = sigma;
    cfg
}

fn fig2_trend(no_comm: &CoverageRuns, comm: &CoverageRuns) -> Outcome {
    let mid = coverage_runs(&with_comm(4, 0.0));
    let start = Instant::now();
    let cfg = with_comm(0, 0.0);
    let walk: Vec<f64> = SEEDS
        .iter()
        .map(|&s| random_walk_metrics(&cfg, s).expect("random walk").final_coverage.expect("coverage"))
        .collect();
    let secs = no_comm.seconds + mid.seconds + comm.seconds + start.elapsed().as_secs_f64();
    let (c0, c4, c16, rw) = (mean(&no_comm.values), mean(&mid.values), mean(&comm.values), mean(&walk));
    let se_16_0 = pooled_se(&comm.values, &no_comm.values);
    let se_0_rw = pooled_se(&no_comm.values, &walk);
    let se_4_0 = pooled_se(&mid.values, &no_comm.values);
    let se_16_4 = pooled_se(&comm.values, &mid.values);
    let ordered = c16 - c0 > se_16_0 && c0 - rw > se_0_rw;
    let monotone = c4 >= c0 - se_4_0 && c16 >= c4 - se_16_4;
    outcome(
        ordered && monotone && secs <= 3600.0,
        format!(
            "coverage m16 {c16:.4} > m0 {c0:.4} (SE {se_16_0:.4}) > random {rw:.4} (SE {se_0_rw:.4}); m4 {c4:.4}; {secs:.0}s"
        ),
    )
}

fn noise_robustness(no_comm: &CoverageRuns) -> Outcome {
    let noisy = coverage_runs(&with_comm(16, 0.1));
    let (c, c0) = (mean(&noisy.values), mean(&no_comm.values));
    let se = pooled_se(&noisy.values, &no_comm.values);
    outcome(
        c - c0 > se && noisy.seconds <= 1800.0,
        format!("sigma 0.1 coverage {c:.4} vs no-comm {c0:.4}, gap {:.4} > SE {se:.4}; {:.0}s", c - c0, noisy.seconds),
    )
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("read dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("prefix").display().to_string();
                out.push((rel, std::fs::read(&p).expect("read file")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let run = |tag: &str| -> Option<Vec<(String, Vec<u8>)>> {
        let root = tmp.path().join(tag);
        let s = |p: &Path| p.to_str().expect("utf-8 path").to_string();
        let small = ["--trainer.epochs=2", "--trainer.episodes_per_epoch=4", "--trainer.eval_episodes=8", "--run.seeds=[0,1]"];
        let train_uav = root.join("fig2");
        let mut args = vec!["train", "--preset", "fig2", "--out"];
        let p = s(&train_uav);
        args.push(&p);
        args.extend(small);
        if cli(&args).0 != 0 {
            return None;
        }
        let train_sw = root.join("switch");
        let p = s(&train_sw);
        let mut args = vec!["train", "--preset", "switch", "--out", &p];
        args.extend(small);
        if cli(&args).0 != 0 {
            return None;
        }
        let sweep = root.join("sweep");
        let p = s(&sweep);
        let mut args = vec!["sweep", "--preset", "fig2", "--comm-sizes", "0,4", "--out", &p];
        args.extend(small);
        if cli(&args).0 != 0 {
            return None;
        }
        let ckpt = s(&train_sw.join("seed1").join("checkpoint.json"));
        let metrics = s(&root.join("metrics.json"));
        if cli(&["evaluate", "--checkpoint", &ckpt, "--episodes", "50", "--seed", "9", "--out", &metrics]).0 != 0 {
            return None;
        }
        Some(files_of(&root))
    };
    match (run("a"), run("b")) {
        (Some(a), Some(b)) => {
            let names_match = a.iter().map(|f| &f.0).eq(b.iter().map(|f| &f.0));
            let differing: Vec<&str> = a
                .iter()
                .zip(&b)
                .filter(|(x, y)| x.1 != y.1)
                .map(|(x, _)| x.0.as_str())
                .collect();
            let csv_json = a.iter().filter(|f| f.0.ends_with(".csv") || f.0.ends_with(".json")).count();
            outcome(
                names_match && differing.is_empty() && csv_json > 0,
                format!("{} files ({csv_json} CSV/JSON) compared, differing: {differing:?}", a.len()),
            )
        }
        _ => outcome(false, "a CLI invocation failed"),
    }
}

fn main() {
    let wall = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("criterion {n} {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "autodiff gradcheck", gradcheck());
    report(2, "channel algebra", channel_algebra());
    report(5, "uav radio and association", uav_model());
    report(8, "determinism", determinism());
    report(3, "referential gradient flow", referential());
    report(4, "switch riddle", switch_riddle());
    // the no-comm and m=16 runs are shared by criteria 6 and 7
    let no_comm = coverage_runs(&with_comm(0, 0.0));
    let comm = coverage_runs(&with_comm(16, 0.0));
    report(6, "fig2 coverage trend", fig2_trend(&no_comm, &comm));
    report(7, "noise robustness", noise_robustness(&no_comm));
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.0?}",
        results.len() - failed.len(),
        results.len(),
        Duration::from_secs(wall.elapsed().as_secs())
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
