//! Paired-seed benchmarks over scenarios and front-ends.
//!
//! A manifest lists scenarios, the front-end arms and the seeds; every arm
//! runs the same seeds so rows compare like with like. Episodes run on a
//! worker pool, each writes its own artifacts, and the comparison table is
//! then aggregated only from the `summary.json` / `timing.json` files on disk.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapio;
use crate::report::{self, RunSummary, TimingSummary};
use crate::scenario::{FrontEnd, ScenarioConfig};
use crate::sim::{self, Completion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestScenario {
    /// Scenario file, relative to the manifest.
    pub file: String,
    /// Explicit seeds; when empty, `1..=repeats`.
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// `key=value` overrides applied after loading.
    #[serde(default)]
    pub overrides: Vec<String>,
}

fn default_repeats() -> usize {
    4
}

fn default_arms() -> Vec<FrontEnd> {
    vec![FrontEnd::Bubble, FrontEnd::Baseline]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default = "default_arms")]
    pub arms: Vec<FrontEnd>,
    pub scenarios: Vec<ManifestScenario>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut m: RunManifest = toml::from_str(&text)
            .map_err(|e| Error::Scenario { path: path.display().to_string(), msg: e.to_string() })?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if m.arms.is_empty() || m.scenarios.is_empty() {
            return Err(Error::Config("manifest needs at least one arm and one scenario".into()));
        }
        Ok(m)
    }

    pub fn seeds(s: &ManifestScenario) -> Vec<u64> {
        if s.seeds.is_empty() {
            (1..=s.repeats as u64).collect()
        } else {
            s.seeds.clone()
        }
    }
}

/// One (scenario, arm, seed) episode.
#[derive(Debug, Clone)]
pub struct BenchJob {
    pub cfg: ScenarioConfig,
    pub dir: PathBuf,
}

/// Resolve and validate every episode of the manifest before anything runs.
///
/// `extra` overrides apply to all scenarios after the manifest's own.
pub fn plan_jobs(manifest: &RunManifest, out: &Path, extra: &[String]) -> Result<Vec<BenchJob>> {
    let mut jobs = Vec::new();
    for s in &manifest.scenarios {
        let path = manifest.base_dir.join(&s.file);
        let mut base = ScenarioConfig::load(&path)?;
        for o in s.overrides.iter().chain(extra) {
            base.apply_override(o)?;
        }
        base.validate()?;
        if !base.map_path().is_file() {
            return Err(Error::MapFormat { path: base.map_path().display().to_string(), msg: "map file not found".into() });
        }
        for &arm in &manifest.arms {
            for seed in RunManifest::seeds(s) {
                let mut cfg = base.clone();
                cfg.frontend = arm;
                cfg.seed = seed;
                let dir = out.join(&cfg.name).join(arm.to_string()).join(format!("seed_{seed}"));
                jobs.push(BenchJob { cfg, dir });
            }
        }
    }
    Ok(jobs)
}

/// Run the jobs on `jobs` worker threads. Results come back in job order.
pub fn run_jobs(jobs: &[BenchJob], threads: usize) -> Vec<Result<RunSummary>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool");
    pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let truth = mapio::load_truth(&j.cfg.map_path(), &j.cfg.grid_config()?)?;
                let result = sim::run_episode_on(&j.cfg, &truth)?;
                report::write_run_artifacts(&j.dir, &j.cfg, &result)
            })
            .collect()
    })
}

/// Mean, min and max of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Option<Stat> {
        if xs.is_empty() {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Stat { mean, min, max })
    }
}

/// Aggregate of one (scenario, arm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub scenario: String,
    pub frontend: String,
    pub seeds: Vec<u64>,
    pub runs: usize,
    pub completed: usize,
    /// Over completed runs only.
    pub completion_time: Option<Stat>,
    pub end_time: Stat,
    pub flight_distance: Stat,
    pub raycast_count: Stat,
    pub coverage: Stat,
}

/// Wall-clock aggregate of one (scenario, arm) cell: per-run mean component
/// times, then mean/min/max over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub scenario: String,
    pub frontend: String,
    pub frontier_time: Stat,
    pub viewpoint_time: Stat,
    pub costmat_time: Stat,
    pub tsp_time: Stat,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Group run directories by (scenario, frontend) in sorted order.
fn grouped(jobs: &[BenchJob]) -> BTreeMap<(String, String), Vec<&BenchJob>> {
    let mut groups: BTreeMap<(String, String), Vec<&BenchJob>> = BTreeMap::new();
    for j in jobs {
        groups.entry((j.cfg.name.clone(), j.cfg.frontend.to_string())).or_default().push(j);
    }
    for v in groups.values_mut() {
        v.sort_by_key(|j| j.cfg.seed);
    }
    groups
}

/// Comparison rows recomputed from the per-run summaries on disk.
pub fn aggregate(jobs: &[BenchJob]) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for ((scenario, frontend), js) in grouped(jobs) {
        let runs: Vec<RunSummary> =
            js.iter().map(|j| read_json(&j.dir.join(report::SUMMARY_JSON))).collect::<Result<_>>()?;
        let col = |f: fn(&RunSummary) -> f64| -> Vec<f64> { runs.iter().map(f).collect() };
        let done: Vec<f64> = runs.iter().filter_map(|r| r.completion_time).collect();
        rows.push(ComparisonRow {
            scenario,
            frontend,
            seeds: runs.iter().map(|r| r.seed).collect(),
            runs: runs.len(),
            completed: runs.iter().filter(|r| r.completion == Completion::Completed).count(),
            completion_time: Stat::of(&done),
            end_time: Stat::of(&col(|r| r.end_time)).expect("non-empty group"),
            flight_distance: Stat::of(&col(|r| r.flight_distance)).expect("non-empty group"),
            raycast_count: Stat::of(&col(|r| r.raycast_count as f64)).expect("non-empty group"),
            coverage: Stat::of(&col(|r| r.coverage)).expect("non-empty group"),
        });
    }
    Ok(rows)
}

pub fn aggregate_timing(jobs: &[BenchJob]) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::new();
    for ((scenario, frontend), js) in grouped(jobs) {
        let runs: Vec<TimingSummary> =
            js.iter().map(|j| read_json(&j.dir.join(report::TIMING_JSON))).collect::<Result<_>>()?;
        let col = |f: fn(&TimingSummary) -> f64| -> Stat {
            Stat::of(&runs.iter().map(f).collect::<Vec<_>>()).expect("non-empty group")
        };
        rows.push(TimingRow {
            scenario,
            frontend,
            frontier_time: col(|t| t.mean.frontier_time),
            viewpoint_time: col(|t| t.mean.viewpoint_time),
            costmat_time: col(|t| t.mean.costmat_time),
            tsp_time: col(|t| t.mean.tsp_time),
        });
    }
    Ok(rows)
}

fn stat_cells(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.3},{:.3},{:.3}", s.mean, s.min, s.max),
        None => ",,".into(),
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut s = String::from(
        "scenario,frontend,seeds,runs,completed,\
         completion_time_mean,completion_time_min,completion_time_max,\
         end_time_mean,end_time_min,end_time_max,\
         flight_distance_mean,flight_distance_min,flight_distance_max,\
         raycasts_mean,raycasts_min,raycasts_max,coverage_mean,coverage_min,coverage_max\n",
    );
    for r in rows {
        let seeds: Vec<String> = r.seeds.iter().map(u64::to_string).collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.frontend,
            seeds.join(" "),
            r.runs,
            r.completed,
            stat_cells(r.completion_time),
            stat_cells(Some(r.end_time)),
            stat_cells(Some(r.flight_distance)),
            stat_cells(Some(r.raycast_count)),
            format_args!("{:.5},{:.5},{:.5}", r.coverage.mean, r.coverage.min, r.coverage.max),
        )
        .unwrap();
    }
    s
}

pub fn timing_comparison_csv(rows: &[TimingRow]) -> String {
    let mut s = String::from("scenario,frontend,component,mean_s,min_s,max_s\n");
    for r in rows {
        for (name, st) in [
            ("frontier", r.frontier_time),
            ("viewpoint", r.viewpoint_time),
            ("costmat", r.costmat_time),
            ("tsp", r.tsp_time),
        ] {
            writeln!(s, "{},{},{name},{:.6},{:.6},{:.6}", r.scenario, r.frontend, st.mean, st.min, st.max).unwrap();
        }
    }
    s
}

pub const COMPARISON_CSV: &str = "comparison.csv";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const TIMING_COMPARISON_CSV: &str = "timing_comparison.csv";

/// Outcome of a full bench.
#[derive(Debug)]
pub struct BenchOutcome {
    pub jobs: Vec<BenchJob>,
    pub rows: Vec<ComparisonRow>,
    pub timing: Vec<TimingRow>,
}

/// Plan, run and aggregate. Any failed episode aborts after the pool drains,
/// reporting which cells finished.
pub fn run_bench(manifest: &RunManifest, out: &Path, threads: usize, extra: &[String]) -> Result<BenchOutcome> {
    let jobs = plan_jobs(manifest, out, extra)?;
    let results = run_jobs(&jobs, threads);
    let failed: Vec<String> = jobs
        .iter()
        .zip(&results)
        .filter_map(|(j, r)| r.as_ref().err().map(|e| format!("{} {} seed {}: {e}", j.cfg.name, j.cfg.frontend, j.cfg.seed)))
        .collect();
    if !failed.is_empty() {
        let done = results.iter().filter(|r| r.is_ok()).count();
        return Err(Error::Config(format!(
            "{} of {} episodes failed ({done} completed):\n{}",
            failed.len(),
            jobs.len(),
            failed.join("\n")
        )));
    }
    let rows = aggregate(&jobs)?;
    let timing = aggregate_timing(&jobs)?;
    fs::create_dir_all(out)?;
    fs::write(out.join(COMPARISON_CSV), comparison_csv(&rows))?;
    fs::write(out.join(COMPARISON_JSON), serde_json::to_string_pretty(&rows)? + "\n")?;
    fs::write(out.join(TIMING_COMPARISON_CSV), timing_comparison_csv(&timing))?;
    Ok(BenchOutcome { jobs, rows, timing })
}
