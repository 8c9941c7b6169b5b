use ecmarl::env::{Environment, SwitchRiddle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::{Command, Output};

fn ecmarl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecmarl"))
        .args(args)
        .output()
        .expect("run ecmarl")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn fresh_switch_checkpoint(dir: &Path) -> std::path::PathBuf {
    let o = ecmarl(&[
        "train",
        "--preset",
        "switch",
        "--out",
        p(dir),
        "--trainer.epochs=0",
        "--run.seeds=[5]",
        "--trainer.eval_episodes=10",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join("seed5").join("checkpoint.json")
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[trainer]\nlearning_rate = 0.1\n").unwrap();
    let o = ecmarl(&["train", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));
}

#[test]
fn sweep_rejects_bad_size_lists() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecmarl(&["sweep", "--preset", "fig2", "--comm-sizes", "4,4", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = ecmarl(&["sweep", "--preset", "fig2", "--comm-sizes", "", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn gradcheck_passes_and_corruption_fails() {
    let o = ecmarl(&["gradcheck"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let ops: Vec<&str> = out
        .lines()
        .filter(|l| l.contains("trials="))
        .map(|l| l.split_whitespace().next().unwrap())
        .collect();
    let mut unique = ops.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), ops.len(), "an op is listed twice");
    assert_ne!(code(&ecmarl(&["gradcheck", "--corrupt"])), 0);
}

#[test]
fn oracle_guards_and_values() {
    let o = ecmarl(&["oracle", "switch-riddle", "--n", "3", "--horizon", "6"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8_lossy(&o.stdout).into_owned();
    let v: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("designated_counter "))
        .and_then(|r| r.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(v, 122.0 / 729.0);
    assert_ne!(code(&ecmarl(&["oracle", "switch-riddle", "--n", "10"])), 0);
    assert_eq!(code(&ecmarl(&["oracle", "uav-coverage", "--users", "5", "--instances", "200"])), 0);
    assert_ne!(code(&ecmarl(&["oracle", "uav-coverage", "--users", "20"])), 0);
}

/// Random prisoners announce with probability one half each time they are in
/// the room; their value is estimated here without the learner.
fn random_policy_switch_value(episodes: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut env = SwitchRiddle::with_horizon(3, 6).unwrap();
    let mut total = 0.0;
    for e in 0..episodes {
        env.reset(e as u64);
        loop {
            let actions: Vec<usize> = (0..3).map(|_| rng.random_range(0..env.n_actions())).collect();
            let s = env.step(&actions).unwrap();
            total += s.reward;
            if s.done {
                break;
            }
        }
    }
    total / episodes as f64
}

#[test]
fn fresh_checkpoint_scores_like_a_random_policy() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = fresh_switch_checkpoint(dir.path());
    let out = dir.path().join("m.json");
    let o = ecmarl(&["evaluate", "--checkpoint", p(&ckpt), "--episodes", "4000", "--seed", "1", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let got = m["mean_return"].as_f64().unwrap();
    let oracle = random_policy_switch_value(20_000);
    // an untrained policy is near uniform, not exactly uniform
    assert!((got - oracle).abs() < 0.15, "fresh {got} vs random {oracle}");
}

#[test]
fn evaluate_is_repeatable_and_validates_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = fresh_switch_checkpoint(dir.path());
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = ecmarl(&["evaluate", "--checkpoint", p(&ckpt), "--episodes", "200", "--seed", "4", "--out", p(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (o.stdout, std::fs::read(out).unwrap())
    };
    assert_eq!(run("a.json"), run("b.json"));
    let o = ecmarl(&["evaluate", "--checkpoint", p(&ckpt), "--episodes", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn checkpoint_with_mismatched_shapes_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = fresh_switch_checkpoint(dir.path());
    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&ckpt).unwrap()).unwrap();
    let first = &mut doc["params"][0];
    first["shape"] = serde_json::json!([999]);
    std::fs::write(&ckpt, serde_json::to_vec(&doc).unwrap()).unwrap();
    let o = ecmarl(&["evaluate", "--checkpoint", p(&ckpt)]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("shape") || stderr(&o).contains("999"), "{}", stderr(&o));
}

#[test]
fn train_writes_versioned_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecmarl(&[
        "train",
        "--preset",
        "fig2",
        "--out",
        p(dir.path()),
        "--trainer.epochs=2",
        "--trainer.episodes_per_epoch=2",
        "--trainer.eval_episodes=2",
        "--run.seeds=[0]",
        "--comm.message_dim=0",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("seed0").join("record.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# ecmarl-record v1");
    assert_eq!(lines[1], "epoch,mean_return,coverage,policy_loss,value_loss,entropy,seconds");
    assert_eq!(lines.len(), 4);
    for f in ["summary.json", "final.csv", "config.toml"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}
