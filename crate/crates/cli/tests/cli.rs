use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bubblex(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblex")).args(args).current_dir(dir).output().expect("spawn bubblex")
}

fn ok(out: &Output) -> bool {
    if !out.status.success() {
        eprintln!("stdout:\n{}\nstderr:\n{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn gen_room(dir: &Path) {
    assert!(ok(&bubblex(dir, &["gen-scenario", "empty", "--size", "8x8x3", "--floor", "true", "--name", "room"])));
}

fn sha(path: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

#[test]
fn run_writes_artifacts_and_rejects_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_room(d);
    let out = bubblex(d, &["run", "room.toml", "--out", "r", "--time-limit", "60"]);
    assert!(ok(&out));
    for f in ["metrics.csv", "timing.csv", "summary.json", "timing.json", "rounds.csv", "trajectory.txt", "map_occupied.txt"] {
        assert!(d.join("r").join(f).is_file(), "{f}");
    }
    let head = fs::read_to_string(d.join("r/metrics.csv")).unwrap();
    assert!(head.starts_with("t,explored_volume,flight_distance\n"));

    assert!(!bubblex(d, &["run", "nope.toml"]).status.success());
    fs::remove_file(d.join("room.vox")).unwrap();
    let out = bubblex(d, &["run", "room.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("room.vox"));
}

#[test]
fn seeded_runs_hash_identically() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_room(d);
    for k in ["a", "b"] {
        assert!(ok(&bubblex(d, &["run", "room.toml", "--seed", "7", "--frontend", "baseline", "--time-limit", "40", "--out", k])));
    }
    for f in ["metrics.csv", "rounds.csv", "summary.json", "trajectory.txt", "map_occupied.txt"] {
        assert_eq!(sha(&d.join("a").join(f)), sha(&d.join("b").join(f)), "{f}");
    }
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(s["seed"], 7);
    assert_eq!(s["frontend"], "baseline");
}

#[test]
fn overrides_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_room(d);
    assert!(!bubblex(d, &["run", "room.toml", "--set", "warp_speed=9"]).status.success());
    assert!(!bubblex(d, &["run", "room.toml", "--set", "v_max=-1"]).status.success());
    assert!(ok(&bubblex(d, &["run", "room.toml", "--set", "queue_size=4", "--time-limit", "0", "--out", "z"])));
}

#[test]
fn generated_forest_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for sub in ["a", "b"] {
        let args = ["gen-scenario", "forest", "--size", "40x40x5", "--density", "0.1", "--seed", "1", "--out", sub];
        assert!(ok(&bubblex(d, &args)));
    }
    for f in ["forest.toml", "forest.vox"] {
        assert_eq!(sha(&d.join("a").join(f)), sha(&d.join("b").join(f)));
    }
    assert!(!bubblex(d, &["gen-scenario", "forest", "--size", "40x40"]).status.success());
    assert!(!bubblex(d, &["gen-scenario", "castle"]).status.success());
}

#[test]
fn empty_world_without_floor_has_no_voxels() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(ok(&bubblex(d, &["gen-scenario", "empty", "--size", "10x10x3"])));
    let vox = fs::read_to_string(d.join("empty.vox")).unwrap();
    // header only: dims, res, origin
    assert_eq!(vox.lines().count(), 3, "{vox}");
}

/// Comparison CSV column by header name.
fn column(csv: &str, row: usize, name: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.nth(row).unwrap().split(',').nth(k).unwrap().to_string()
}

#[test]
fn bench_counts_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_room(d);
    fs::write(d.join("m.toml"), "out = \"b\"\n[[scenarios]]\nfile = \"room.toml\"\nrepeats = 2\n").unwrap();
    assert!(ok(&bubblex(d, &["bench", "m.toml", "--jobs", "2", "--time-limit", "60"])));
    let mut summaries = Vec::new();
    for arm in ["bubble", "baseline"] {
        for seed in [1, 2] {
            let p = d.join(format!("b/room/{arm}/seed_{seed}/summary.json"));
            summaries.push(serde_json::from_str::<serde_json::Value>(&fs::read_to_string(p).unwrap()).unwrap());
        }
    }
    assert_eq!(summaries.len(), 4);
    let csv = fs::read_to_string(d.join("b/comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    // rows are sorted by front-end name: baseline, then bubble
    for (row, arm) in [(0, "baseline"), (1, "bubble")] {
        assert_eq!(column(&csv, row, "frontend"), arm);
        assert_eq!(column(&csv, row, "seeds"), "1 2");
        let runs: Vec<&serde_json::Value> = summaries.iter().filter(|s| s["frontend"] == arm).collect();
        let mean = |k: &str| runs.iter().map(|r| r[k].as_f64().unwrap()).sum::<f64>() / runs.len() as f64;
        let got: f64 = column(&csv, row, "flight_distance_mean").parse().unwrap();
        assert!((got - mean("flight_distance")).abs() <= 5e-4);
        let got: f64 = column(&csv, row, "raycasts_mean").parse().unwrap();
        assert!((got - mean("raycast_count")).abs() <= 5e-4);
    }
    assert!(d.join("b/timing_comparison.csv").is_file());
}

#[test]
fn bench_with_missing_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("m.toml"), "[[scenarios]]\nfile = \"ghost.toml\"\n").unwrap();
    assert!(!bubblex(d, &["bench", "m.toml"]).status.success());
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = bubblex(dir.path(), &["verify", "nn"]);
    assert!(ok(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 mismatches"));
    assert!(!bubblex(dir.path(), &["verify", "bogus"]).status.success());
}
