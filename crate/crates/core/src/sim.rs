//! Deterministic exploration episodes.
//!
//! Each sensor period the simulated LiDAR scans the ground truth, the online
//! map, obstacle index, inflation layer and frontier are updated, and, when a
//! replan is due, the selected front-end and the tour back-end produce a new
//! target whose first leg is time-parameterized and followed. All randomness
//! comes from the scenario seed; wall-clock timings are collected separately
//! and never influence the episode.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baseline;
use crate::bubble::{self, FrontEndOutput, Viewpoint};
use crate::error::{Error, Result};
use crate::frontier::FrontierSet;
use crate::grid::{InflationLayer, OccupancyGrid, VoxelState};
use crate::mapio;
use crate::motion::{check_replan, time_parameterize_from, MotionState, Trajectory};
use crate::obstacle_index::ObstacleIndex;
use crate::scenario::{FrontEnd, ScenarioConfig};
use crate::sensor::{FovKind, SensorSpec};
use crate::tour::{plan_global_tour, PathPlanner, PlanningGraph, VehicleConfig};
use crate::worldgen::reachable_free;
use crate::Vec3;

/// One simulated beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub endpoint: Vec3,
    pub hit: bool,
}

/// Beam layout of the simulated LiDAR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPattern {
    pub rays_h: usize,
    pub rays_v: usize,
    /// Standard deviation of additive range noise on hits, m.
    pub range_noise_sigma: f64,
}

/// Cast one fan of rays against the ground truth.
///
/// The fan is a regular `rays_h x rays_v` angular grid shifted by a random
/// sub-step offset drawn once per scan, so successive scans interleave.
pub fn simulate_scan(
    truth: &OccupancyGrid,
    position: &Vec3,
    yaw: f64,
    sensor: &SensorSpec,
    pattern: &ScanPattern,
    rng: &mut ChaCha8Rng,
) -> Vec<Ray> {
    let jh: f64 = rng.random();
    let jv: f64 = rng.random();
    let (az0, az_span) = match sensor.kind {
        FovKind::Panoramic => (0.0, 2.0 * std::f64::consts::PI),
        FovKind::Cone => (yaw - 0.5 * sensor.horizontal_fov, sensor.horizontal_fov),
    };
    let noise = (pattern.range_noise_sigma > 0.0)
        .then(|| Normal::new(0.0, pattern.range_noise_sigma).expect("sigma is finite"));
    let cfg = truth.config();
    let mut rays = Vec::with_capacity(pattern.rays_h * pattern.rays_v);
    for iv in 0..pattern.rays_v {
        let el = -0.5 * sensor.vertical_fov + sensor.vertical_fov * (iv as f64 + jv) / pattern.rays_v as f64;
        for ih in 0..pattern.rays_h {
            let az = az0 + az_span * (ih as f64 + jh) / pattern.rays_h as f64;
            let dir = Vec3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin());
            let far = position + dir * sensor.max_range;
            let mut hit_t = None;
            cfg.traverse(position, &far, |c, t0, t1| {
                if truth.state_linear(cfg.linear(c)) == VoxelState::Occupied {
                    hit_t = Some(0.5 * (t0 + t1));
                    std::ops::ControlFlow::Break(())
                } else {
                    std::ops::ControlFlow::Continue(())
                }
            });
            rays.push(match hit_t {
                Some(t) => {
                    let mut range = t * sensor.max_range;
                    if let Some(n) = &noise {
                        range = (range + n.sample(rng)).clamp(0.0, sensor.max_range);
                    }
                    Ray { endpoint: position + dir * range, hit: true }
                }
                None => Ray { endpoint: far, hit: false },
            });
        }
    }
    rays
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Completion {
    Completed,
    Timeout,
    Stalled,
}

/// Explored volume and distance flown at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub t: f64,
    pub explored_volume: f64,
    pub flight_distance: f64,
}

/// Deterministic record of one planning round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: f64,
    pub frontier_cells: usize,
    pub center_candidates: usize,
    pub viewpoints: usize,
    /// Viewpoints from the sphere surface (zero for the baseline).
    pub surface_viewpoints: usize,
    pub raycasts: u64,
    /// Whether a reachable target came out of the round.
    pub planned: bool,
}

/// Wall-clock cost of one planning round, seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RoundTiming {
    pub frontier_time: f64,
    pub viewpoint_time: f64,
    pub costmat_time: f64,
    pub tsp_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub samples: Vec<MetricSample>,
    pub rounds: Vec<RoundRecord>,
    pub timings: Vec<RoundTiming>,
    pub raycast_count: u64,
    pub completion: Completion,
    pub end_time: f64,
    pub flight_distance: f64,
    pub explored_volume: f64,
    /// Known share of the truth free space 6-connected to the start.
    pub coverage: f64,
    pub max_speed: f64,
    /// Largest second finite difference of executed positions, m/s^2.
    pub max_fd_accel: f64,
    /// Emergency stops where the next sample left known free space.
    pub hard_stops: usize,
    pub suppressed_frontiers: usize,
    /// Samples where the cached known count disagreed with a full recount.
    pub accounting_mismatches: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub metrics: EpisodeMetrics,
    pub start: Vec3,
    /// Executed states at the motion step.
    pub executed: Vec<MotionState>,
    pub final_map: OccupancyGrid,
}

/// Load the scenario's map and run it.
pub fn run_episode(cfg: &ScenarioConfig) -> Result<EpisodeResult> {
    cfg.validate()?;
    let truth = mapio::load_truth(&cfg.map_path(), &cfg.grid_config()?)?;
    run_episode_on(cfg, &truth)
}

/// Start position for the scenario seed: the nominal start shifted
/// horizontally by up to `start_jitter`, kept in truth free space.
pub fn start_position(cfg: &ScenarioConfig, truth: &OccupancyGrid) -> Result<Vec3> {
    let nominal = Vec3::from(cfg.start);
    if truth.state_at(&nominal) != VoxelState::Free {
        return Err(Error::Config(format!("start {:?} is not in free space", cfg.start)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5157_4152_54);
    if cfg.start_jitter > 0.0 {
        for _ in 0..32 {
            let r = cfg.start_jitter * rng.random::<f64>().sqrt();
            let a = rng.random::<f64>() * std::f64::consts::TAU;
            let p = nominal + Vec3::new(r * a.cos(), r * a.sin(), 0.0);
            let clear = truth.state_at(&p) == VoxelState::Free
                && !truth.raycast_occluded(&nominal, &p);
            if clear {
                return Ok(p);
            }
        }
    }
    Ok(nominal)
}

struct Planned {
    traj: Trajectory,
    target: Viewpoint,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    truth: &'a OccupancyGrid,
    grid: OccupancyGrid,
    index: ObstacleIndex,
    inflation: InflationLayer,
    frontier: FrontierSet,
    planner: PathPlanner,
    scan_rng: ChaCha8Rng,
    sensor: SensorSpec,
    planning_sensor: SensorSpec,
    pattern: ScanPattern,
    visits: HashMap<usize, usize>,
    suppressed: HashSet<usize>,
    frontier_secs: f64,
    raycasts: u64,
}

impl Sim<'_> {
    fn scan(&mut self, state: &MotionState) {
        let rays = simulate_scan(self.truth, &state.position, state.yaw, &self.sensor, &self.pattern, &mut self.scan_rng);
        let mut changed = Vec::new();
        for r in &rays {
            self.grid.integrate_ray_into(&state.position, &r.endpoint, r.hit, &mut changed);
        }
        let cfg = self.grid.config().clone();
        let mut new_obstacles = Vec::new();
        for &i in &changed {
            if self.grid.state_linear(i) == VoxelState::Occupied {
                self.inflation.add_obstacle(cfg.delinear(i));
                new_obstacles.push(cfg.center_of_linear(i));
            }
        }
        self.index.insert_batch(new_obstacles);
        let t0 = Instant::now();
        changed.sort_unstable();
        changed.dedup();
        self.frontier.update(&self.grid, &changed);
        self.frontier_secs += t0.elapsed().as_secs_f64();
    }

    fn free_for_motion(&self, p: &Vec3) -> bool {
        self.grid.state_at(p) == VoxelState::Free && self.index.clearance(p) >= 0.5 * self.cfg.d_safe
    }

    /// Greedy line-of-sight shortcutting over known-free, uninflated cells.
    fn shortcut(&self, pts: &[Vec3]) -> Vec<Vec3> {
        if pts.len() <= 2 {
            return pts.to_vec();
        }
        let cfg = self.grid.config();
        let clear = |a: &Vec3, b: &Vec3| {
            let n = ((b - a).norm() / (0.5 * cfg.resolution)).ceil().max(1.0) as usize;
            (0..=n).all(|k| {
                let p = a + (b - a) * (k as f64 / n as f64);
                match cfg.cell_of(&p) {
                    Some(c) => {
                        let i = cfg.linear(c);
                        self.grid.state_linear(i) == VoxelState::Free && !self.inflation.is_inflated(i)
                    }
                    None => false,
                }
            })
        };
        let mut out = vec![pts[0]];
        let mut i = 0;
        while i < pts.len() - 1 {
            let mut j = pts.len() - 1;
            while j > i + 1 && !clear(&pts[i], &pts[j]) {
                j -= 1;
            }
            out.push(pts[j]);
            i = j;
        }
        out
    }

    /// Nearest traversable planning node reachable through known-free space,
    /// for when the vehicle sits inside the inflation margin.
    fn escape_point(&self, graph: &PlanningGraph, from: &Vec3) -> Option<Vec3> {
        let start = graph.node_of(from)?;
        if graph.traversable(start) {
            return None;
        }
        let reach = (2.0 * self.cfg.d_safe / graph.step()).ceil() as i32 + 1;
        let mut best: Option<(f64, Vec3)> = None;
        for z in -reach..=reach {
            for y in -reach..=reach {
                for x in -reach..=reach {
                    let c = [start[0] + x, start[1] + y, start[2] + z];
                    if !graph.traversable(c) {
                        continue;
                    }
                    let p = graph.node_center(c);
                    if self.grid.raycast_occluded(from, &p) {
                        continue;
                    }
                    let d = (p - from).norm();
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, p));
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    }

    fn front_end(&self) -> FrontEndOutput {
        let fs = if self.suppressed.is_empty() {
            self.frontier.clone()
        } else {
            self.frontier.filtered(|i| !self.suppressed.contains(&i))
        };
        match self.cfg.frontend {
            FrontEnd::Bubble => {
                bubble::generate_viewpoints(&fs, &self.grid, &self.index, &self.planning_sensor, &self.cfg.bubble_params())
            }
            FrontEnd::Baseline => baseline::generate_viewpoints(
                &fs,
                &self.grid,
                &self.index,
                &self.planning_sensor,
                &self.cfg.baseline_params(),
            ),
        }
    }

    /// One planning round from `state`.
    fn plan(&mut self, state: &MotionState, t: f64) -> (Option<Planned>, RoundRecord, RoundTiming) {
        let mut timing = RoundTiming { frontier_time: std::mem::take(&mut self.frontier_secs), ..Default::default() };
        let t0 = Instant::now();
        let out = self.front_end();
        timing.viewpoint_time = t0.elapsed().as_secs_f64();
        self.raycasts += out.stats.raycasts;
        let mut record = RoundRecord {
            t,
            frontier_cells: self.frontier.len(),
            center_candidates: out.stats.center_candidates,
            viewpoints: out.viewpoints.len(),
            surface_viewpoints: out.stats.surface_viewpoints,
            raycasts: out.stats.raycasts,
            planned: false,
        };
        if out.viewpoints.is_empty() {
            return (None, record, timing);
        }
        let graph = PlanningGraph::with_options(&self.grid, Some(&self.inflation), self.cfg.astar_coarsen);
        let escape = self.escape_point(&graph, &state.position);
        let from = escape.unwrap_or(state.position);
        let xi = VehicleConfig { position: from, yaw: state.yaw, velocity: state.velocity };
        let plan = plan_global_tour(&out.viewpoints, &xi, &graph, &mut self.planner, &self.cfg.gain_params());
        let Ok(plan) = plan else {
            return (None, record, timing);
        };
        timing.costmat_time = plan.timing.cost_matrix_secs;
        timing.tsp_time = plan.timing.tsp_secs;
        let Some((q, leg)) = &plan.first_leg else {
            return (None, record, timing);
        };
        let mut pts = Vec::with_capacity(leg.waypoints.len() + 1);
        pts.push(state.position);
        pts.extend(leg.waypoints.iter().copied());
        let pts = self.shortcut(&pts);
        let target = plan.queue[*q].clone();
        let traj = time_parameterize_from(
            state,
            &pts,
            Some(target.yaw),
            &self.cfg.motion_limits(),
            &self.cfg.motion_config(),
            &|p| self.free_for_motion(p),
        );
        record.planned = true;
        (Some(Planned { traj, target }), record, timing)
    }

    /// Count an arrival at `target`; cells it claimed that are still frontier
    /// are suppressed after `frontier_max_visits` arrivals.
    fn arrived(&mut self, target: &Viewpoint) {
        if self.cfg.frontier_max_visits == 0 {
            return;
        }
        for &c in &target.covered_frontiers {
            if self.frontier.contains(c) {
                let v = self.visits.entry(c).or_insert(0);
                *v += 1;
                if *v >= self.cfg.frontier_max_visits {
                    self.suppressed.insert(c);
                }
            }
        }
    }
}

/// Run one episode against an in-memory ground truth.
pub fn run_episode_on(cfg: &ScenarioConfig, truth: &OccupancyGrid) -> Result<EpisodeResult> {
    cfg.validate()?;
    let gcfg = cfg.grid_config()?;
    if truth.config() != &gcfg {
        return Err(Error::Config("ground truth does not match the scenario grid".into()));
    }
    let start = start_position(cfg, truth)?;
    let mut sim = Sim {
        cfg,
        truth,
        grid: OccupancyGrid::new(gcfg.clone()),
        index: ObstacleIndex::new(),
        inflation: InflationLayer::new(gcfg.clone(), cfg.d_safe),
        frontier: FrontierSet::new(),
        planner: PathPlanner::new(),
        scan_rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        sensor: cfg.sensor(),
        planning_sensor: cfg.planning_sensor(),
        pattern: ScanPattern {
            rays_h: cfg.sensor_rays_h,
            rays_v: cfg.sensor_rays_v,
            range_noise_sigma: cfg.range_noise_sigma,
        },
        visits: HashMap::new(),
        suppressed: HashSet::new(),
        frontier_secs: 0.0,
        raycasts: 0,
    };

    let dt = cfg.dt;
    let steps_per_scan = (1.0 / (cfg.sensor_rate_hz * dt)).round() as usize;
    let max_steps = (cfg.time_limit / dt + 1e-9).floor() as usize;
    let res3 = gcfg.resolution.powi(3);

    let mut state = MotionState::at_rest(start, cfg.start_yaw_deg.to_radians(), 0.0);
    let mut traj = Trajectory::hold(state, dt);
    let mut traj_idx = 0usize;
    let mut target: Option<Viewpoint> = None;
    let mut leg_pending = false;
    let mut force_replan = true;
    let mut last_round: Option<usize> = None;
    let mut quiet = 0usize;
    let mut executed = vec![state];
    let mut flight = 0.0;
    let mut samples = Vec::new();
    let mut rounds = Vec::new();
    let mut timings = Vec::new();
    let mut hard_stops = 0;
    let mut mismatches = 0;
    let mut next_sample = 0usize;
    let replan_steps = (cfg.replan_period / dt).round().max(1.0) as usize;
    let mut step = 0usize;

    let completion = loop {
        if step % steps_per_scan == 0 {
            // metrics, one sample per whole second
            let t = step as f64 * dt;
            while next_sample as f64 <= t + 1e-9 {
                if sim.grid.recount_known() != sim.grid.known_count() {
                    mismatches += 1;
                }
                samples.push(MetricSample {
                    t: next_sample as f64,
                    explored_volume: sim.grid.known_count() as f64 * res3,
                    flight_distance: flight,
                });
                next_sample += 1;
            }
            if step >= max_steps {
                break Completion::Timeout;
            }
            sim.scan(&state);

            let finished = traj_idx + 1 >= traj.samples.len();
            if finished && leg_pending {
                leg_pending = false;
                force_replan = true;
                if let Some(tg) = &target {
                    if (tg.position - state.position).norm() < 0.3 {
                        let tg = tg.clone();
                        sim.arrived(&tg);
                    }
                }
            }
            let periodic = last_round.is_none_or(|r| step - r >= replan_steps);
            let blocked = check_replan(&traj, traj_idx, &sim.grid, &sim.index, 0.5 * cfg.d_safe, false);
            if force_replan || periodic || blocked {
                force_replan = false;
                last_round = Some(step);
                let (planned, record, timing) = sim.plan(&state, t);
                rounds.push(record);
                timings.push(timing);
                match planned {
                    Some(p) => {
                        quiet = 0;
                        traj = p.traj;
                        traj_idx = 0;
                        target = Some(p.target);
                        leg_pending = true;
                    }
                    None => {
                        quiet += 1;
                        if quiet >= cfg.quiet_rounds {
                            let moving = traj_idx + 1 < traj.samples.len();
                            if !moving {
                                let boxed = record.viewpoints > 0 && record.frontier_cells > 0 && {
                                    let graph = PlanningGraph::with_options(&sim.grid, Some(&sim.inflation), cfg.astar_coarsen);
                                    graph.node_of(&state.position).is_some_and(|n| !graph.traversable(n))
                                        && sim.escape_point(&graph, &state.position).is_none()
                                };
                                break if boxed { Completion::Stalled } else { Completion::Completed };
                            }
                        }
                    }
                }
            }
        }

        // advance one motion step
        if traj_idx + 1 < traj.samples.len() {
            let next = traj.samples[traj_idx + 1];
            let safe = sim.grid.state_at(&next.position) == VoxelState::Free
                && truth.state_at(&next.position) != VoxelState::Occupied;
            if safe {
                flight += (next.position - state.position).norm();
                state = next;
                traj_idx += 1;
            } else {
                hard_stops += 1;
                state.velocity = Vec3::zeros();
                traj = Trajectory::hold(state, dt);
                traj_idx = 0;
                force_replan = true;
            }
        } else {
            state.velocity = Vec3::zeros();
        }
        step += 1;
        state.time = step as f64 * dt;
        executed.push(state);
    };

    let end_time = (step as f64 * dt).min(cfg.time_limit.max(0.0));
    let reach = reachable_free(truth, &start);
    let reach_total = reach.iter().filter(|&&r| r).count();
    let reach_known =
        reach.iter().enumerate().filter(|(i, &r)| r && sim.grid.state_linear(*i) != VoxelState::Unknown).count();
    let coverage = if reach_total == 0 { 1.0 } else { reach_known as f64 / reach_total as f64 };
    let max_speed = executed.iter().map(|s| s.velocity.norm()).fold(0.0, f64::max);
    let max_fd_accel = executed
        .windows(3)
        .map(|w| ((w[2].position - w[1].position * 2.0 + w[0].position) / (dt * dt)).norm())
        .fold(0.0, f64::max);

    let metrics = EpisodeMetrics {
        samples,
        rounds,
        timings,
        raycast_count: sim.raycasts,
        completion,
        end_time,
        flight_distance: flight,
        explored_volume: sim.grid.known_count() as f64 * res3,
        coverage,
        max_speed,
        max_fd_accel,
        hard_stops,
        suppressed_frontiers: sim.suppressed.len(),
        accounting_mismatches: mismatches,
    };
    Ok(EpisodeResult { metrics, start, executed, final_map: sim.grid })
}
