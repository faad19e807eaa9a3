//! Oracle-equivalence suites: each production component checked against the
//! brute-force reference in [`crate::oracle`] on seeded random inputs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bubble::{self, BubbleParams, ViewpointSource};
use crate::error::{Error, Result};
use crate::frontier::FrontierSet;
use crate::grid::{CellIdx, GridConfig, OccupancyGrid, VoxelState};
use crate::obstacle_index::ObstacleIndex;
use crate::oracle;
use crate::sensor::SensorSpec;
use crate::sim::{simulate_scan, ScanPattern};
use crate::tour::atsp::{path_cost, solve_atsp, solve_exact, solve_heuristic};
use crate::tour::{CostMatrix, PathPlanner, PlanningGraph};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Nn,
    Rays,
    Astar,
    Atsp,
    Occlusion,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Nn, Suite::Rays, Suite::Astar, Suite::Atsp, Suite::Occlusion];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Nn => "nn",
            Suite::Rays => "rays",
            Suite::Astar => "astar",
            Suite::Atsp => "atsp",
            Suite::Occlusion => "occlusion",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}` (nn, rays, astar, atsp, occlusion)")))
    }
}

/// Outcome of one suite.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub checks: u64,
    pub mismatches: u64,
    /// First few counterexamples.
    pub counterexamples: Vec<String>,
    /// Suite-specific numbers, e.g. the worst heuristic gap.
    pub notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: Suite) -> Self {
        Self { suite: suite.to_string(), ..Default::default() }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.mismatches += 1;
            if self.counterexamples.len() < 5 {
                self.counterexamples.push(what());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{}: {} cases, {} checks, {} mismatches",
            self.suite, self.cases, self.checks, self.mismatches
        )?;
        for n in &self.notes {
            writeln!(f, "  {n}")?;
        }
        for c in &self.counterexamples {
            writeln!(f, "  counterexample: {c}")?;
        }
        Ok(())
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match suite {
        Suite::Nn => nn_suite(&mut rng),
        Suite::Rays => rays_suite(&mut rng),
        Suite::Astar => astar_suite(&mut rng),
        Suite::Atsp => atsp_suite(&mut rng),
        Suite::Occlusion => occlusion_suite(&mut rng),
    }
}

fn rand_point(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3) -> Vec3 {
    Vec3::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y), rng.random_range(lo.z..hi.z))
}

/// 1000 indices of up to 1000 points, filled in random batches, each queried
/// 1000 times against a linear scan. Every fourth case uses points on an
/// integer lattice so that exact ties occur.
fn nn_suite(rng: &mut ChaCha8Rng) -> SuiteReport {
    let mut rep = SuiteReport::new(Suite::Nn);
    let lo = Vec3::repeat(-10.0);
    let hi = Vec3::repeat(10.0);
    for case in 0..1000 {
        rep.cases += 1;
        let lattice = case % 4 == 0;
        let n = rng.random_range(1..=1000);
        let pts: Vec<Vec3> = (0..n)
            .map(|_| {
                let p = rand_point(rng, &lo, &hi);
                if lattice {
                    p.map(f64::round)
                } else {
                    p
                }
            })
            .collect();
        let mut index = ObstacleIndex::new();
        let mut inserted = 0;
        while inserted < pts.len() {
            let b = rng.random_range(1..=(pts.len() - inserted).min(200));
            index.insert_batch(pts[inserted..inserted + b].iter().copied());
            inserted += b;
        }
        let mut unique = pts.clone();
        unique.sort_by(|a, b| (a.x, a.y, a.z).partial_cmp(&(b.x, b.y, b.z)).expect("finite"));
        unique.dedup();
        rep.check(index.len() == unique.len(), || format!("case {case}: len {} vs {}", index.len(), unique.len()));
        for _ in 0..1000 {
            let mut q = rand_point(rng, &(lo * 1.2), &(hi * 1.2));
            if lattice {
                q = (q * 2.0).map(f64::round) * 0.5;
            }
            let got = index.nearest(&q).map(|r| (r.point, r.dist));
            let want = oracle::nearest_linear(&pts, &q);
            rep.check(got == want, || format!("case {case}: q {q:?}: index {got:?}, scan {want:?}"));
        }
    }
    rep
}

fn random_grid_config(rng: &mut ChaCha8Rng) -> GridConfig {
    let res = [0.1, 0.2, 0.25, 0.5, 1.0][rng.random_range(0..5)];
    let dims = [rng.random_range(4..40), rng.random_range(4..40), rng.random_range(2..20)];
    let origin = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-2.0..2.0));
    GridConfig::new(origin, res, dims).expect("valid config")
}

/// 10^4 segments on random grids (a quarter reaching outside the box):
/// dense-sampled cells must be a subset of the walked cells, walked cells
/// must all meet the segment, and every cell the segment crosses over a
/// non-degenerate length must be walked, in order of entry. `raycast_occluded`
/// is checked against the same overlap computation.
fn rays_suite(rng: &mut ChaCha8Rng) -> SuiteReport {
    const MIN_OVERLAP: f64 = 1e-7;
    let mut rep = SuiteReport::new(Suite::Rays);
    let mut cfg = random_grid_config(rng);
    let mut grid = OccupancyGrid::from_occupied(cfg.clone(), std::iter::empty());
    for k in 0..10_000 {
        if k % 100 == 0 {
            cfg = random_grid_config(rng);
            let occ: Vec<CellIdx> = (0..cfg.num_cells())
                .filter(|_| rng.random_bool(0.1))
                .map(|i| cfg.delinear(i))
                .collect();
            grid = OccupancyGrid::from_occupied(cfg.clone(), occ);
        }
        rep.cases += 1;
        let lo = cfg.origin;
        let hi = cfg.max_corner();
        let margin = if k % 4 == 0 { (hi - lo) * 0.3 } else { Vec3::zeros() };
        let a = rand_point(rng, &(lo - margin), &(hi + margin));
        let b = rand_point(rng, &(lo - margin), &(hi + margin));

        let mut walked: Vec<(CellIdx, f64)> = Vec::new();
        cfg.traverse(&a, &b, |c, t0, _| {
            walked.push((c, t0));
            std::ops::ControlFlow::Continue(())
        });
        let walked_set: std::collections::BTreeSet<CellIdx> = walked.iter().map(|w| w.0).collect();
        rep.check(walked_set.len() == walked.len(), || format!("segment {a:?}->{b:?}: a cell was walked twice"));
        rep.check(walked.windows(2).all(|w| w[0].1 <= w[1].1), || format!("segment {a:?}->{b:?}: entries out of order"));

        let sampled = oracle::dense_sample_cells(&cfg, &a, &b, 0.1);
        let missing: Vec<_> = sampled.difference(&walked_set).collect();
        rep.check(missing.is_empty(), || format!("segment {a:?}->{b:?}: sampled cells {missing:?} not walked"));

        let slab = oracle::slab_cells(&cfg, &a, &b);
        let touched: std::collections::BTreeSet<CellIdx> = slab.iter().map(|s| s.0).collect();
        let stray: Vec<_> = walked_set.difference(&touched).collect();
        rep.check(stray.is_empty(), || format!("segment {a:?}->{b:?}: walked cells {stray:?} do not meet it"));
        let skipped: Vec<_> = slab.iter().filter(|(c, l)| *l > MIN_OVERLAP && !walked_set.contains(c)).collect();
        rep.check(skipped.is_empty(), || format!("segment {a:?}->{b:?}: crossed cells {skipped:?} not walked"));

        let occluded = grid.raycast_occluded(&a, &b);
        let blocked = oracle::segment_blocked(&grid, &a, &b, MIN_OVERLAP);
        let touches_occ = slab.iter().any(|(c, _)| grid.state(*c) == VoxelState::Occupied);
        rep.check(!blocked || occluded, || format!("segment {a:?}->{b:?}: blocked but not reported occluded"));
        rep.check(!occluded || touches_occ, || format!("segment {a:?}->{b:?}: occluded with no occupied cell on it"));
    }
    rep
}

/// 50 random maps (Free/Occupied/Unknown mix) x 50 start-goal pairs of Free
/// cells: A* and the multi-goal search against plain Dijkstra.
fn astar_suite(rng: &mut ChaCha8Rng) -> SuiteReport {
    let mut rep = SuiteReport::new(Suite::Astar);
    let mut planner = PathPlanner::new();
    let mut worst = 0.0f64;
    let mut reachable = 0;
    for map in 0..50 {
        let res = [0.2, 0.5, 1.0][map % 3];
        let dims = [rng.random_range(8..24), rng.random_range(8..24), rng.random_range(3..10)];
        let cfg = GridConfig::new(Vec3::zeros(), res, dims).expect("valid config");
        let mut grid = OccupancyGrid::new(cfg.clone());
        let p_occ = rng.random_range(0.05..0.35);
        let p_unknown = rng.random_range(0.0..0.1);
        for i in 0..cfg.num_cells() {
            let u: f64 = rng.random();
            if u < p_occ {
                grid.set_linear(i, VoxelState::Occupied);
            } else if u >= p_occ + p_unknown {
                grid.set_linear(i, VoxelState::Free);
            }
        }
        let free: Vec<usize> = (0..cfg.num_cells()).filter(|&i| grid.state_linear(i) == VoxelState::Free).collect();
        if free.len() < 2 {
            continue;
        }
        let graph = PlanningGraph::new(&grid);
        for _ in 0..50 {
            rep.cases += 1;
            let s = cfg.delinear(free[rng.random_range(0..free.len())]);
            let t = cfg.delinear(free[rng.random_range(0..free.len())]);
            let (a, b) = (cfg.center(s), cfg.center(t));
            let want = oracle::lattice_shortest_path(&grid, s, t);
            let got = planner.astar(&graph, &a, &b).map(|p| p.length);
            let many = planner.paths_to_many(&graph, &a, &[b]).pop().flatten().map(|p| p.length);
            reachable += want.is_some() as usize;
            for (name, g) in [("astar", got), ("multi-goal", many)] {
                let ok = match (g, want) {
                    (Some(x), Some(y)) => {
                        worst = worst.max((x - y).abs());
                        (x - y).abs() <= 1e-9
                    }
                    (None, None) => true,
                    _ => false,
                };
                rep.check(ok, || format!("map {map}: {name} {s:?}->{t:?}: {g:?} vs dijkstra {want:?}"));
            }
        }
    }
    rep.notes.push(format!("{reachable} reachable pairs, worst length difference {worst:.3e} m"));
    rep
}

/// Asymmetric matrices shaped like detour-inflated path lengths between
/// random points (column 0 zero, as in tour planning).
fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
    let pts: Vec<Vec3> = (0..=n).map(|_| rand_point(rng, &Vec3::zeros(), &Vec3::new(30.0, 30.0, 5.0))).collect();
    let rows = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| if j == 0 || i == j { 0.0 } else { (pts[i] - pts[j]).norm() * rng.random_range(1.0..1.4) })
                .collect()
        })
        .collect();
    CostMatrix::from_rows(rows)
}

/// Heuristic gap against the subset DP on 100 ten-viewpoint matrices, and
/// exact agreement of the solver for every size up to its exact limit.
fn atsp_suite(rng: &mut ChaCha8Rng) -> SuiteReport {
    const MAX_GAP: f64 = 0.05;
    let mut rep = SuiteReport::new(Suite::Atsp);
    let mut worst_gap = 0.0f64;
    let mut gap_sum = 0.0;
    for case in 0..100 {
        rep.cases += 1;
        let m = random_matrix(rng, 10);
        let opt = oracle::subset_dp_path_cost(&m);
        let heur = path_cost(&m, &solve_heuristic(&m));
        let gap = (heur - opt) / opt;
        worst_gap = worst_gap.max(gap);
        gap_sum += gap;
        rep.check(gap <= MAX_GAP && gap >= -1e-9, || format!("matrix {case}: heuristic {heur} vs optimum {opt}"));
        let exact = path_cost(&m, &solve_exact(&m));
        rep.check((exact - opt).abs() <= 1e-9, || format!("matrix {case}: exact {exact} vs dp {opt}"));
    }
    for n in 1..=crate::tour::atsp::EXACT_LIMIT {
        for rep_k in 0..3 {
            rep.cases += 1;
            let m = random_matrix(rng, n);
            let opt = oracle::subset_dp_path_cost(&m);
            let order = solve_atsp(&m);
            let mut sorted = order.clone();
            sorted.sort_unstable();
            rep.check(sorted == (1..=n).collect::<Vec<_>>(), || format!("n={n} #{rep_k}: order {order:?} is not a permutation"));
            let got = path_cost(&m, &order);
            rep.check((got - opt).abs() <= 1e-9, || format!("n={n} #{rep_k}: solver {got} vs dp {opt}"));
            if n <= 7 {
                let bf = oracle::brute_force_path_cost(&m);
                rep.check((bf - opt).abs() <= 1e-9, || format!("n={n} #{rep_k}: dp {opt} vs permutations {bf}"));
            }
        }
    }
    rep.notes.push(format!("heuristic gap on n=10: max {:.3}%, mean {:.3}%", 100.0 * worst_gap, 100.0 * gap_sum / 100.0));
    rep
}

/// Occupancy scene for the occlusion suite: random boxes over a floor,
/// observed by a few panoramic scans from random free positions.
pub struct Scene {
    pub truth: OccupancyGrid,
    pub map: OccupancyGrid,
    pub index: ObstacleIndex,
    pub frontier: FrontierSet,
}

pub fn random_scene(rng: &mut ChaCha8Rng) -> Scene {
    let cfg = GridConfig::new(Vec3::zeros(), 0.2, [40, 40, 15]).expect("valid config");
    let size = cfg.max_corner();
    let mut occ: Vec<CellIdx> = Vec::new();
    for x in 0..40 {
        for y in 0..40 {
            occ.push([x, y, 0]);
        }
    }
    for _ in 0..rng.random_range(3..10) {
        let lo = [rng.random_range(0..36), rng.random_range(0..36), rng.random_range(0..12)];
        let ext = [rng.random_range(1..10), rng.random_range(1..10), rng.random_range(1..12)];
        for z in lo[2]..(lo[2] + ext[2]).min(15) {
            for y in lo[1]..(lo[1] + ext[1]).min(40) {
                for x in lo[0]..(lo[0] + ext[0]).min(40) {
                    occ.push([x, y, z]);
                }
            }
        }
    }
    let truth = OccupancyGrid::from_occupied(cfg.clone(), occ);
    let mut map = OccupancyGrid::new(cfg.clone());
    let sensor = SensorSpec::panoramic(std::f64::consts::FRAC_PI_2, rng.random_range(3.0..8.0));
    let pattern = ScanPattern { rays_h: 96, rays_v: 12, range_noise_sigma: 0.0 };
    let scans = rng.random_range(1..4);
    let mut done = 0;
    for _ in 0..200 {
        if done == scans {
            break;
        }
        let p = rand_point(rng, &Vec3::new(0.5, 0.5, 0.5), &(size - Vec3::repeat(0.5)));
        if truth.state_at(&p) != VoxelState::Free {
            continue;
        }
        for r in simulate_scan(&truth, &p, 0.0, &sensor, &pattern, rng) {
            map.integrate_ray(&p, &r.endpoint, r.hit);
        }
        done += 1;
    }
    let mut index = ObstacleIndex::new();
    index.insert_batch(
        (0..cfg.num_cells()).filter(|&i| map.state_linear(i) == VoxelState::Occupied).map(|i| cfg.center_of_linear(i)),
    );
    let frontier = FrontierSet::from_full_scan(&map);
    Scene { truth, map, index, frontier }
}

/// 1000 random scenes through the sphere front-end. Every covered frontier
/// cell of every viewpoint must be seen without crossing an Occupied cell of
/// the online map (slab oracle), lie in range and field of view, and the
/// viewpoint must be flyable.
fn occlusion_suite(rng: &mut ChaCha8Rng) -> SuiteReport {
    let mut rep = SuiteReport::new(Suite::Occlusion);
    let params = BubbleParams::default();
    let mut surface = 0;
    let mut fallback = 0;
    let mut covered_checked = 0u64;
    for k in 0..1000 {
        rep.cases += 1;
        let scene = random_scene(rng);
        let sensor = if k % 2 == 0 {
            SensorSpec::panoramic(std::f64::consts::FRAC_PI_2, 7.2)
        } else {
            SensorSpec::cone(80f64.to_radians(), 60f64.to_radians(), 5.0)
        };
        let out = bubble::generate_viewpoints(&scene.frontier, &scene.map, &scene.index, &sensor, &params);
        let cfg = scene.map.config();
        let obstacles: Vec<Vec3> = scene.index.iter().copied().collect();
        for v in &out.viewpoints {
            match v.source {
                ViewpointSource::Surface => surface += 1,
                _ => fallback += 1,
            }
            rep.check(
                scene.map.state_at(&v.position) == VoxelState::Free
                    && oracle::nearest_linear(&obstacles, &v.position)
                        .is_none_or(|(_, d)| d >= params.d_safe),
                || format!("scene {k}: viewpoint {:?} not flyable", v.position),
            );
            for &c in &v.covered_frontiers {
                covered_checked += 1;
                let target = cfg.center_of_linear(c);
                rep.check(!oracle::segment_blocked(&scene.map, &v.position, &target, 1e-9), || {
                    format!("scene {k}: {:?} viewpoint {:?} sees cell {target:?} through an obstacle", v.source, v.position)
                });
                rep.check(sensor.in_fov(&v.position, v.yaw, &target), || {
                    format!("scene {k}: cell {target:?} outside the field of view of {:?}", v.position)
                });
            }
        }
    }
    rep.notes.push(format!(
        "{surface} sphere-surface and {fallback} fallback viewpoints, {covered_checked} covered cells checked"
    ));
    rep
}
