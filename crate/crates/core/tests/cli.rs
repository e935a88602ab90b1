use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ot_distill::experiment::ExperimentConfig;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ot-distill")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn asset(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join(rel)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A fast variant of a shipped config, written into `dir`.
fn tiny_config(dir: &Path, env: &str, checkpoints: bool) -> PathBuf {
    let mut cfg = ExperimentConfig::load(&asset(&format!("configs/{env}.toml"))).unwrap();
    cfg.map = asset(&format!("maps/{env}.map"));
    cfg.seeds = vec![0, 1];
    cfg.timesteps = 600;
    cfg.final_window = 300;
    cfg.eval_cadence = 0;
    cfg.checkpoints = checkpoints;
    cfg.sac.hidden_width = 16;
    cfg.sac.hidden_layers = 2;
    cfg.sac.batch_size = 32;
    cfg.sac.warmup = 100;
    let path = dir.join(format!("{env}.toml"));
    fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn run_into(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    bin(&args)
}

#[test]
fn validate_accepts_shipped_configs() {
    for env in ["room5", "zigzag", "separated", "maze"] {
        let o = bin(&["validate", "--config", asset(&format!("configs/{env}.toml")).to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{env}: {}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).contains("optimal return"));
    }
}

#[test]
fn room_smoke_run_writes_episode_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("room");
    let o = run_into(&asset("configs/room5.toml"), &out, &["--mode", "no_sharing", "--seeds", "0", "--steps", "5000"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("episodes.csv")).unwrap();
    assert!(csv.starts_with("seed,task,episode,env_steps,return"));
    assert!(csv.lines().count() > 10);
    assert!(out.join("config.toml").exists());
    assert!(out.join("checkpoints/seed_0/task_1/policy.mlp").exists());
}

#[test]
fn missing_map_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load(&asset("configs/zigzag.toml")).unwrap();
    cfg.map = PathBuf::from("/nonexistent/nowhere.map");
    let path = tmp.path().join("c.toml");
    fs::write(&path, cfg.to_toml()).unwrap();
    let o = run_into(&path, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/nonexistent/nowhere.map"));
}

#[test]
fn bad_config_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(asset("configs/zigzag.toml")).unwrap().replace("horizon = 100", "horizon = 100\nhorizn = 3");
    let path = tmp.path().join("c.toml");
    fs::write(&path, text).unwrap();
    let o = bin(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("horizn") && msg.contains("line"), "{msg}");
    assert_eq!(bin(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(bin(&["validate", "--config", path.to_str().unwrap(), "--mode", "bogus"]).status.code(), Some(2));
}

#[test]
fn unknown_mode_override_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_into(&asset("configs/zigzag.toml"), tmp.path(), &["--mode", "fancy"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_runs_produce_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "zigzag", false);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(run_into(&cfg, d, &["--mode", "ot_sharing"]).status.code(), Some(0));
    }
    for f in ["episodes.csv", "config.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(!a.join("evals.csv").exists());
}

#[test]
fn table_heatmap_and_their_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "zigzag", true);
    let mut dirs = Vec::new();
    for mode in ["no_sharing", "distral", "ot_sharing"] {
        let d = tmp.path().join(mode);
        let o = run_into(&cfg, &d, &["--mode", mode]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        dirs.push(d.to_str().unwrap().to_owned());
    }
    let mut args = vec!["table"];
    args.extend(dirs.iter().map(String::as_str));
    let o = bin(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    for col in ["No-share", "Distral", "OT-sharing", "Opt", "avg"] {
        assert!(table.contains(col), "{col} missing from\n{table}");
    }

    let heat = tmp.path().join("heat");
    let o = bin(&["heatmap", &dirs[2], "--out", heat.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(heat.join("heatmap_zigzag_ot_sharing.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.lines().next().unwrap().starts_with(",,,"));
    assert!(heat.join("heatmap_zigzag_ot_sharing.svg").exists());

    // a seed without checkpoints
    let o = bin(&["heatmap", &dirs[2], "--out", heat.to_str().unwrap(), "--seeds", "7"]);
    assert_eq!(o.status.code(), Some(2));

    // incomplete run: drop seed 1 from the episode log
    let episodes = Path::new(&dirs[1]).join("episodes.csv");
    let text = fs::read_to_string(&episodes).unwrap();
    let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("1,")).collect();
    fs::write(&episodes, kept.join("\n") + "\n").unwrap();
    let o = bin(&args);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("seed 1"), "{}", stderr(&o));

    // runs of different environments
    let maze_cfg = tiny_config(tmp.path(), "maze", false);
    let maze = tmp.path().join("maze");
    assert_eq!(run_into(&maze_cfg, &maze, &["--mode", "no_sharing", "--seeds", "0"]).status.code(), Some(0));
    let o = bin(&["table", &dirs[0], maze.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn single_seed_table_renders_zero_std() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "zigzag", false);
    let d = tmp.path().join("one");
    assert_eq!(run_into(&cfg, &d, &["--mode", "no_sharing", "--seeds", "0"]).status.code(), Some(0));
    let out = tmp.path().join("tables");
    let o = bin(&["table", d.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("±0.0"));
    assert!(out.join("table_zigzag.txt").exists());
}

#[test]
fn thread_cap_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path(), "maze", false);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |d: &Path| {
        vec!["run".to_owned(), "--config".into(), cfg.to_str().unwrap().into(), "--out".into(), d.to_str().unwrap().into(), "--mode".into(), "distral".into()]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_ot-distill")).args(args(&a)).env("OT_DISTILL_THREADS", "1").output().unwrap();
    let two = Command::new(env!("CARGO_BIN_EXE_ot-distill")).args(args(&b)).env("OT_DISTILL_THREADS", "2").output().unwrap();
    assert!(one.status.success() && two.status.success());
    assert_eq!(fs::read(a.join("episodes.csv")).unwrap(), fs::read(b.join("episodes.csv")).unwrap());
}

#[test]
fn bad_thread_cap_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_ot-distill"))
        .args(["run", "--config", asset("configs/zigzag.toml").to_str().unwrap(), "--out", "/tmp/never-written"])
        .env("OT_DISTILL_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
