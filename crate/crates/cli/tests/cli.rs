use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_WORLD: &str = "[world]\nwidth = 16\nheight = 16\nstart_distance = 8\nsteps = 64\n";

fn mfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = mfb(args);
    assert!(
        out.status.success(),
        "mfb {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn evolve(dir: &Path, name: &str, config: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec![
        "evolve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn evolve_writes_one_row_per_generation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL_WORLD);
    let run = evolve(
        tmp.path(),
        "run",
        &cfg,
        &["--generations", "50", "--population", "20", "--seed", "7"],
    );
    let stats = fs::read_to_string(run.join("stats.csv")).unwrap();
    assert!(stats.starts_with("# seed=7\n"));
    let lines = data_lines(&stats);
    assert_eq!(lines.len(), 51);
    assert!(lines[0].starts_with("generation,max_W_log,"));
    assert!(lines[50].starts_with("49,"));
    for name in ["config.toml", "ancestry.csv", "lod.jsonl"] {
        let text = fs::read_to_string(run.join(name)).unwrap();
        assert!(text.starts_with("# seed=7\n"), "{name}");
    }
    assert!(run.join("genomes").is_dir());
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("[run]\npopulation = 12\ngenerations = 8\n{SMALL_WORLD}"));
    let a = evolve(tmp.path(), "a", &cfg, &["--workers", "1"]);
    let b = evolve(tmp.path(), "b", &cfg, &["--workers", "3"]);
    for name in ["stats.csv", "lod.jsonl", "ancestry.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn deterministic_gates_only_never_count_feedback() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("[run]\npopulation = 12\ngenerations = 10\n{SMALL_WORLD}"));
    let run = evolve(tmp.path(), "d", &cfg, &["--gates", "d"]);
    let stats = fs::read_to_string(run.join("stats.csv")).unwrap();
    let lines = data_lines(&stats);
    let col = lines[0].split(',').position(|h| h == "mean_fb_gates").unwrap();
    for row in &lines[1..] {
        assert_eq!(row.split(',').nth(col).unwrap().parse::<f64>().unwrap(), 0.0, "{row}");
    }
}

#[test]
fn rejects_bad_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = mfb(&["evolve", "--out", tmp.path().join("x").to_str().unwrap(), "--gates", "q"]);
    assert!(!out.status.success());

    let cfg = write_config(tmp.path(), "[run]\npopulation = 0\n");
    let out = mfb(&["evolve", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("y").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("population"));
}

/// Runs with the default 512 steps per trial, kept short otherwise.
fn replay_run(tmp: &Path) -> PathBuf {
    let cfg = write_config(
        tmp,
        "[run]\npopulation = 8\ngenerations = 3\n[world]\nwidth = 16\nheight = 16\nstart_distance = 8\n",
    );
    evolve(tmp, "run", &cfg, &[])
}

#[test]
fn replay_traces_every_step_reproducibly() {
    let tmp = tempfile::tempdir().unwrap();
    let run = replay_run(tmp.path());
    let run_s = run.to_str().unwrap();
    let first = tmp.path().join("t1.csv");
    let second = tmp.path().join("t2.csv");
    ok(&["replay", "--run", run_s, "--mapping", "5", "--out", first.to_str().unwrap()]);
    ok(&["replay", "--run", run_s, "--mapping", "5", "--out", second.to_str().unwrap()]);
    let text = fs::read_to_string(&first).unwrap();
    assert_eq!(text, fs::read_to_string(&second).unwrap());
    let lines = data_lines(&text);
    assert!(lines[0].starts_with("generation,mapping,step,"));
    assert_eq!(lines.len() - 1, 512);
    assert!(lines[1].starts_with("2,5,0,"));

    // Default output lands in the run directory.
    ok(&["replay", "--run", run_s, "--mapping", "0", "--generation", "1"]);
    assert!(run.join("trace_g1_m0.csv").exists());
}

#[test]
fn replay_rejects_mapping_out_of_range() {
    let tmp = tempfile::tempdir().unwrap();
    let run = replay_run(tmp.path());
    let out = mfb(&["replay", "--run", run.to_str().unwrap(), "--mapping", "24"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("mapping"));
}

#[test]
fn lod_analyze_and_ablate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("[run]\npopulation = 10\ngenerations = 6\n[analysis]\nrepeats = 2\n{SMALL_WORLD}"),
    );
    let a = evolve(tmp.path(), "a", &cfg, &["--seed", "1"]);
    let b = evolve(tmp.path(), "b", &cfg, &["--seed", "2"]);
    let c = evolve(tmp.path(), "c", &cfg, &["--seed", "3"]);
    let runs = [a.to_str().unwrap(), b.to_str().unwrap(), c.to_str().unwrap()];

    let lod = String::from_utf8(ok(&["lod", "--run", runs[0]]).stdout).unwrap();
    let lines = data_lines(&lod);
    assert!(lines[0].starts_with("generation,id,parent_id,"));
    assert_eq!(lines.len(), 1 + 6);

    let report = tmp.path().join("report");
    let mut args = vec!["analyze", "--out", report.to_str().unwrap(), "--run"];
    args.extend_from_slice(&runs);
    ok(&args);
    for name in [
        "fig2_performance.csv",
        "fig3_tables.csv",
        "fig4_mi.csv",
        "fig4_mi_bins.csv",
        "fig5_gates.csv",
        "fig6_actions.csv",
    ] {
        let text = fs::read_to_string(report.join(name)).unwrap();
        assert!(text.starts_with("# seed=1;2;3\n"), "{name}");
    }
    let mi = fs::read_to_string(report.join("fig4_mi.csv")).unwrap();
    assert_eq!(data_lines(&mi).len(), 1 + 3);

    let mut args = vec!["ablate", "--run"];
    args.extend_from_slice(&runs);
    let text = String::from_utf8(ok(&args).stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("# sign_test positive="));
    assert_eq!(data_lines(&text).len(), 1 + 3);
}

#[test]
fn help_lists_config_keys() {
    let out = ok(&["evolve", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("world.start_distance"));
    assert!(text.contains("analysis.repeats"));
}
