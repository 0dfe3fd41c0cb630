use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fp4-rollout");

fn run(config: &Path, args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.arg("run").arg(config);
    for a in args {
        cmd.args(["--set", a]);
    }
    match workers {
        Some(w) => cmd.env("FP4RL_WORKERS", w),
        None => cmd.env_remove("FP4RL_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(
        &path,
        "schema = 1\n# short run\nn = 16\nk = 4\ncontexts_per_iter = 2\niterations = 6\neval_every = 3\neval_seeds = 32\n",
    )
    .unwrap();
    path
}

#[test]
fn run_writes_directory_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&cfg, &[&format!("output_dir={}", out.display())], None);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["config.snapshot", "metrics.csv", "steps.csv", "policy.ckpt"] {
        assert!(a.join(f).exists(), "missing {f}");
    }
    assert_eq!(
        std::fs::read(a.join("metrics.csv")).unwrap(),
        std::fs::read(b.join("metrics.csv")).unwrap()
    );
    let metrics = std::fs::read_to_string(a.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 7);
    assert!(metrics
        .starts_with("iteration,mode,eval_reward,mean_true_reward_selected,sigma_R,rollout_cost_units,wallclock_ms\n"));
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let mut outputs = Vec::new();
    for w in ["1", "3"] {
        let out = dir.path().join(format!("w{w}"));
        let o = run(&cfg, &[&format!("output_dir={}", out.display())], Some(w));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(out.join("metrics.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    for text in [
        "schema = 1\nk = 7\n",
        "schema = 1\nbogus = 3\n",
        "n = 96\n",
        "schema = 1\nn = 8\nn = 8\n",
    ] {
        std::fs::write(&bad, text).unwrap();
        let o = run(&bad, &[], None);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{text:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let cfg = small_config(dir.path());
    assert_eq!(run(&cfg, &["mode=fast"], None).status.code(), Some(2));
    assert_eq!(run(&cfg, &[], Some("many")).status.code(), Some(2));
    assert_eq!(run(&dir.path().join("missing.cfg"), &[], None).status.code(), Some(2));
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("div");
    let o = run(
        &cfg,
        &[
            "optimizer=sgd",
            "learning_rate=1e30",
            "max_grad_norm=1e300",
            &format!("output_dir={}", out.display()),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("divergence"));
}

#[test]
fn zero_iterations_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("empty");
    let o = run(&cfg, &["iterations=0", &format!("output_dir={}", out.display())], None);
    assert!(o.status.success());
    let metrics = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
}

#[test]
fn report_subcommands_write_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cost = dir.path().join("cost");
    let o = Command::new(BIN).args(["cost", "--out"]).arg(&cost).output().unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("rollout_speedup=2.5"));
    assert!(cost.join("cost.csv").exists());

    let evt = dir.path().join("evt");
    let o = Command::new(BIN)
        .args(["evt", "--trials", "200", "--out"])
        .arg(&evt)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(evt.join("evt.csv")).unwrap().lines().count(), 5);

    let cfg = small_config(dir.path());
    let o = Command::new(BIN)
        .arg("rank-report")
        .arg(&cfg)
        .args(["--groups", "4", "--k", "2,4", "--set"])
        .arg(format!("output_dir={}", dir.path().join("rank").display()))
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("rank/ranking.csv").exists());
    assert!(dir.path().join("rank/density_map.csv").exists());
}
