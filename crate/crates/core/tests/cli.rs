//! End-to-end tests of the command-line interface: subcommands, exit codes,
//! output files, and the quiet flag.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedbatch"))
}

/// A config small enough that full training finishes in milliseconds.
const SMALL_CFG: &str = "m = 5\nn_samples = 600\nn_features = 6\nn_classes = 3\n\
                         n_test = 150\nmin_shard = 30\nrounds = 5\nb_min = 4\n\
                         b_max = 32\nseed = 9\n";

fn write_cfg(dir: &Path, content: &str) -> std::path::PathBuf {
    let path = dir.join("test.cfg");
    std::fs::write(&path, content).unwrap();
    path
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn validate_prints_the_builtin_defaults() {
    let out = bin().arg("validate").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    for line in ["m = 10", "f = 0.5", "b_min = 4", "b_max = 64", "strategy = rasba"] {
        assert!(text.contains(line), "missing '{line}' in:\n{text}");
    }
}

#[test]
fn validate_resolves_a_config_file_with_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "m = 7\nseed = 1\n");
    let out = bin()
        .args(["validate", "--config"])
        .arg(&cfg)
        .args(["--seed", "4242"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("m = 7"), "{text}");
    assert!(text.contains("seed = 4242"), "{text}");
}

#[test]
fn inverted_window_exits_one_and_names_both_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "b_min = 80\nb_max = 64\n");
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("b_min"), "{err}");
    assert!(err.contains("b_max"), "{err}");
    assert!(!dir.path().join("out").exists(), "nothing may be written on a config error");
}

#[test]
fn unknown_key_exits_one_with_line_context() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "m = 5\nbatch_size = 32\n");
    let out = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("batch_size"), "{err}");
}

#[test]
fn missing_config_file_exits_one() {
    let out = bin()
        .args(["validate", "--config", "/definitely/not/here.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn diverging_training_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // An absurd learning rate overflows the parameters to infinity; the run
    // must stop with a runtime diagnostic, not a panic.
    let cfg = write_cfg(dir.path(), &format!("{SMALL_CFG}lr = 1e308\nlocal_epochs = 3\n"));
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(stderr_of(&out).contains("finite"), "{}", stderr_of(&out));
}

#[test]
fn run_writes_trace_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out_dir = dir.path().join("results");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "round,sim_time_s,lo,hi,oom_events,updates,loss,accuracy"
    );
    assert_eq!(lines.count(), 5, "one row per round");
    let resolved = std::fs::read_to_string(out_dir.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("m = 5"), "{resolved}");
    assert!(resolved.contains("seed = 9"), "{resolved}");
    // Progress went to stderr, not stdout.
    assert!(stdout_of(&out).is_empty());
    assert!(!stderr_of(&out).is_empty());
}

#[test]
fn quiet_silences_progress() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).is_empty());
    assert!(stderr_of(&out).is_empty());
}

#[test]
fn seed_override_changes_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let mut traces = Vec::new();
    for seed in ["101", "102"] {
        let out_dir = dir.path().join(seed);
        let out = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .args(["--seed", seed, "--quiet"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        traces.push(std::fs::read(out_dir.join("trace.csv")).unwrap());
    }
    assert_ne!(traces[0], traces[1], "different seeds must explore differently");
}

#[test]
fn sweep_writes_the_table_and_per_strategy_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out_dir = dir.path().join("sweep");
    let out = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--quiet")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let table = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,total_time_s,speedup,final_accuracy,rounds_to_convergence"
    );
    assert_eq!(lines.count(), 8, "seven fixed rows plus the search strategy");
    for name in ["trace_fixed_4.csv", "trace_fixed_256.csv", "trace_rasba.csv"] {
        assert!(out_dir.join(name).exists(), "missing {name}");
    }
}

#[test]
fn monte_carlo_writes_the_distribution_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out_dir = dir.path().join("mc");
    let out = bin()
        .args(["monte-carlo", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .args(["--seeds", "40", "--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let table = std::fs::read_to_string(out_dir.join("monte_carlo.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,seeds,rounds_mean,rounds_std,rounds_median,rounds_p95,batch_mean,batch_median,batch_p95"
    );
    // m = 5 admits searcher counts 1, 2, and 5 from the ladder.
    assert_eq!(lines.count(), 3);
}

#[test]
fn monte_carlo_rejects_a_fixed_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{SMALL_CFG}strategy = fixed(8)\n"));
    let out = bin()
        .args(["monte-carlo", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("mc"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("strategy"), "{}", stderr_of(&out));
}

#[test]
fn reruns_overwrite_outputs_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SMALL_CFG);
    let out_dir = dir.path().join("out");
    for _ in 0..2 {
        let out = bin()
            .args(["run", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .arg("--quiet")
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    let names: Vec<String> = std::fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(sorted, vec!["resolved.cfg".to_string(), "trace.csv".to_string()]);
}
