use std::fs;
use std::path::Path;

use bubble_core::bench::{self, ComparisonRow, RunManifest};
use bubble_core::worldgen::{self, WorldKind, WorldSpec};

fn setup(dir: &Path, manifest: &str) -> RunManifest {
    let spec = WorldSpec { floor: true, ..WorldSpec::new(WorldKind::Empty, [8.0, 8.0, 3.0], 1) };
    worldgen::write_world(&spec, dir, "room").unwrap();
    fs::write(dir.join("m.toml"), manifest).unwrap();
    RunManifest::load(&dir.join("m.toml")).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn two_arms_two_seeds_give_four_runs_and_matching_means() {
    let dir = tempfile::tempdir().unwrap();
    let m = setup(dir.path(), "[[scenarios]]\nfile = \"room.toml\"\nseeds = [3, 8]\noverrides = [\"time_limit=60\"]\n");
    let out = dir.path().join("out");
    let outcome = bench::run_bench(&m, &out, 2, &[]).unwrap();
    assert_eq!(outcome.jobs.len(), 4);
    let summaries: Vec<_> = outcome.jobs.iter().map(|j| j.dir.join("summary.json")).collect();
    assert!(summaries.iter().all(|p| p.is_file()));
    assert!(out.join(bench::COMPARISON_CSV).is_file());
    assert!(out.join(bench::TIMING_COMPARISON_CSV).is_file());
    assert_eq!(fs::read_to_string(out.join(bench::COMPARISON_CSV)).unwrap().lines().count(), 3);

    let rows: Vec<ComparisonRow> = serde_json::from_str(&fs::read_to_string(out.join(bench::COMPARISON_JSON)).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].seeds, rows[1].seeds);
    assert_eq!(rows[0].seeds, vec![3, 8]);
    for row in &rows {
        // recompute from the per-run files, independently of the aggregator
        let runs: Vec<serde_json::Value> = ["3", "8"]
            .iter()
            .map(|s| json(&out.join("room").join(&row.frontend).join(format!("seed_{s}")).join("summary.json")))
            .collect();
        let mean = |k: &str| runs.iter().map(|r| r[k].as_f64().unwrap()).sum::<f64>() / runs.len() as f64;
        assert!((row.flight_distance.mean - mean("flight_distance")).abs() < 1e-9);
        assert!((row.raycast_count.mean - mean("raycast_count")).abs() < 1e-9);
        assert!((row.end_time.mean - mean("end_time")).abs() < 1e-9);
        let done: Vec<f64> = runs.iter().filter_map(|r| r["completion_time"].as_f64()).collect();
        assert_eq!(row.completed, done.len());
        if let Some(ct) = row.completion_time {
            assert!((ct.mean - done.iter().sum::<f64>() / done.len() as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn missing_map_aborts_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let m = setup(dir.path(), "[[scenarios]]\nfile = \"room.toml\"\nrepeats = 1\n");
    fs::remove_file(dir.path().join("room.vox")).unwrap();
    let out = dir.path().join("out");
    assert!(bench::run_bench(&m, &out, 1, &[]).is_err());
    assert!(!out.exists());
}

#[test]
fn bad_override_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let m = setup(dir.path(), "[[scenarios]]\nfile = \"room.toml\"\nrepeats = 1\n");
    assert!(bench::plan_jobs(&m, &dir.path().join("out"), &["nope=1".into()]).is_err());
    let jobs = bench::plan_jobs(&m, &dir.path().join("out"), &["seed=9".into()]).unwrap();
    // manifest seeds win over a seed override
    assert!(jobs.iter().all(|j| j.cfg.seed == 1));
}

#[test]
fn manifest_needs_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.toml"), "scenarios = []\n").unwrap();
    assert!(RunManifest::load(&dir.path().join("m.toml")).is_err());
    fs::write(dir.path().join("m.toml"), "bogus = 1\n[[scenarios]]\nfile = \"x.toml\"\n").unwrap();
    assert!(RunManifest::load(&dir.path().join("m.toml")).is_err());
}
