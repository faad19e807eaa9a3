//! Run artifacts: metric streams, summaries and plotting files.
//!
//! Everything except `timing.csv` and `timing.json` is a pure function of the
//! scenario and seed, so reruns produce byte-identical files. Wall-clock
//! timings live only in those two files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::VoxelState;
use crate::mapio;
use crate::scenario::ScenarioConfig;
use crate::sim::{Completion, EpisodeResult, RoundTiming};

pub const METRICS_CSV: &str = "metrics.csv";
pub const ROUNDS_CSV: &str = "rounds.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const TIMING_CSV: &str = "timing.csv";
pub const TIMING_JSON: &str = "timing.json";
pub const TRAJECTORY_TXT: &str = "trajectory.txt";
pub const MAP_TXT: &str = "map_occupied.txt";

/// Deterministic per-run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub frontend: String,
    pub seed: u64,
    pub completion: Completion,
    /// Simulated time at completion; absent for timeouts and stalls.
    pub completion_time: Option<f64>,
    pub end_time: f64,
    pub flight_distance: f64,
    pub explored_volume: f64,
    pub coverage: f64,
    pub raycast_count: u64,
    pub planning_rounds: usize,
    pub viewpoints_generated: usize,
    pub max_speed: f64,
    pub max_fd_accel: f64,
    pub hard_stops: usize,
    pub suppressed_frontiers: usize,
    pub accounting_mismatches: usize,
    pub start: [f64; 3],
}

impl RunSummary {
    pub fn new(cfg: &ScenarioConfig, result: &EpisodeResult) -> Self {
        let m = &result.metrics;
        Self {
            scenario: cfg.name.clone(),
            frontend: cfg.frontend.to_string(),
            seed: cfg.seed,
            completion: m.completion,
            completion_time: (m.completion == Completion::Completed).then_some(m.end_time),
            end_time: m.end_time,
            flight_distance: m.flight_distance,
            explored_volume: m.explored_volume,
            coverage: m.coverage,
            raycast_count: m.raycast_count,
            planning_rounds: m.rounds.len(),
            viewpoints_generated: m.rounds.iter().map(|r| r.viewpoints).sum(),
            max_speed: m.max_speed,
            max_fd_accel: m.max_fd_accel,
            hard_stops: m.hard_stops,
            suppressed_frontiers: m.suppressed_frontiers,
            accounting_mismatches: m.accounting_mismatches,
            start: result.start.into(),
        }
    }
}

/// Mean and max of each timing component, seconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingSummary {
    pub rounds: usize,
    pub mean: RoundTiming,
    pub max: RoundTiming,
}

impl TimingSummary {
    pub fn new(timings: &[RoundTiming]) -> Self {
        let mut mean = RoundTiming::default();
        let mut max = RoundTiming::default();
        for t in timings {
            for (acc, hi, v) in [
                (&mut mean.frontier_time, &mut max.frontier_time, t.frontier_time),
                (&mut mean.viewpoint_time, &mut max.viewpoint_time, t.viewpoint_time),
                (&mut mean.costmat_time, &mut max.costmat_time, t.costmat_time),
                (&mut mean.tsp_time, &mut max.tsp_time, t.tsp_time),
            ] {
                *acc += v;
                *hi = hi.max(v);
            }
        }
        if !timings.is_empty() {
            let n = timings.len() as f64;
            mean.frontier_time /= n;
            mean.viewpoint_time /= n;
            mean.costmat_time /= n;
            mean.tsp_time /= n;
        }
        Self { rounds: timings.len(), mean, max }
    }
}

pub fn metrics_csv(result: &EpisodeResult) -> String {
    let mut s = String::from("t,explored_volume,flight_distance\n");
    for m in &result.metrics.samples {
        writeln!(s, "{},{:.6},{:.6}", m.t, m.explored_volume, m.flight_distance).unwrap();
    }
    s
}

pub fn rounds_csv(result: &EpisodeResult) -> String {
    let mut s = String::from("t,frontier_cells,center_candidates,viewpoints,surface_viewpoints,raycasts,planned\n");
    for r in &result.metrics.rounds {
        writeln!(
            s,
            "{:.2},{},{},{},{},{},{}",
            r.t, r.frontier_cells, r.center_candidates, r.viewpoints, r.surface_viewpoints, r.raycasts, r.planned as u8
        )
        .unwrap();
    }
    s
}

pub fn timing_csv(result: &EpisodeResult) -> String {
    let mut s = String::from("round,t,frontier_time,viewpoint_time,costmat_time,tsp_time\n");
    for (k, (r, t)) in result.metrics.rounds.iter().zip(&result.metrics.timings).enumerate() {
        writeln!(
            s,
            "{k},{:.2},{:.9},{:.9},{:.9},{:.9}",
            r.t, t.frontier_time, t.viewpoint_time, t.costmat_time, t.tsp_time
        )
        .unwrap();
    }
    s
}

/// Executed positions with time and yaw, one `t x y z yaw` line per sample.
pub fn trajectory_txt(result: &EpisodeResult) -> String {
    let mut s = String::new();
    for st in &result.executed {
        let p = st.position;
        writeln!(s, "{:.2} {:.9} {:.9} {:.9} {:.6}", st.time, p.x, p.y, p.z, st.yaw).unwrap();
    }
    s
}

/// Write all artifacts of one run into `dir`, returning the summary.
pub fn write_run_artifacts(dir: &Path, cfg: &ScenarioConfig, result: &EpisodeResult) -> Result<RunSummary> {
    fs::create_dir_all(dir)?;
    let summary = RunSummary::new(cfg, result);
    fs::write(dir.join(METRICS_CSV), metrics_csv(result))?;
    fs::write(dir.join(ROUNDS_CSV), rounds_csv(result))?;
    fs::write(dir.join(SUMMARY_JSON), serde_json::to_string_pretty(&summary)? + "\n")?;
    fs::write(dir.join(TIMING_CSV), timing_csv(result))?;
    let timing = TimingSummary::new(&result.metrics.timings);
    fs::write(dir.join(TIMING_JSON), serde_json::to_string_pretty(&timing)? + "\n")?;
    fs::write(dir.join(TRAJECTORY_TXT), trajectory_txt(result))?;
    fs::write(dir.join(MAP_TXT), mapio::cells_points_string(&result.final_map, VoxelState::Occupied))?;
    Ok(summary)
}

/// Files whose bytes are reproducible for a fixed scenario and seed.
pub fn deterministic_artifacts() -> [&'static str; 5] {
    [METRICS_CSV, ROUNDS_CSV, SUMMARY_JSON, TRAJECTORY_TXT, MAP_TXT]
}
