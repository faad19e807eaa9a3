//! Occlusion-free-sphere front-end.
//!
//! A bubble is centred on a frontier cell with radius equal to the distance to
//! the nearest obstacle point, so its open ball holds no obstacle. Viewpoints
//! sampled on the bubble surface see every frontier cell inside it along
//! segments that stay in the ball, which lets coverage be scored from the FoV
//! alone. Bubbles below `r_fallback` are handled by a shell sampler that does
//! ray-cast its coverage.
//!
//! Obstacles are voxels rather than points, so an occupied voxel whose center
//! sits exactly on the sphere can still poke up to half a voxel diagonal into
//! the ball. Surface sampling and coverage therefore use
//! [`Bubble::interior_radius`], which subtracts that margin.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::frontier::FrontierSet;
use crate::grid::{OccupancyGrid, VoxelState};
use crate::obstacle_index::{dist2, lex_cmp, ObstacleIndex};
use crate::sensor::{wrap_angle, FovKind, SensorSpec};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    /// Frontier downsampling leaf edge, m.
    pub leaf_size: f64,
    /// Cap on the sphere radius, m.
    pub r_max: f64,
    /// Bubbles smaller than this use the ray-cast shell sampler, m.
    pub r_fallback: f64,
    pub n_az: usize,
    pub n_pol: usize,
    /// Polar-angle band of surface samples, radians from +z.
    pub polar_min: f64,
    pub polar_max: f64,
    pub n_yaw: usize,
    /// Minimum viewpoint distance to any obstacle point, m.
    pub d_safe: f64,
    pub fallback_az: usize,
    pub fallback_radii: usize,
    pub fallback_polar: usize,
    /// Surface radius is capped at this fraction of the sensor range.
    pub surface_range_fraction: f64,
    /// Skip ray casts for fallback candidates that cannot win.
    pub prune_scoring: bool,
}

impl Default for BubbleParams {
    fn default() -> Self {
        Self {
            leaf_size: crate::frontier::DEFAULT_LEAF_SIZE,
            r_max: 8.0,
            r_fallback: 1.0,
            n_az: 16,
            n_pol: 5,
            polar_min: 60f64.to_radians(),
            polar_max: 120f64.to_radians(),
            n_yaw: 36,
            d_safe: 0.6,
            fallback_az: 12,
            fallback_radii: 3,
            fallback_polar: 3,
            surface_range_fraction: 0.95,
            prune_scoring: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewpointSource {
    Surface,
    Fallback,
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bubble {
    pub center: Vec3,
    pub center_cell: usize,
    pub radius: f64,
    /// Frontier cells strictly inside the ball, ascending linear index.
    pub contained_frontiers: Vec<usize>,
}

impl Bubble {
    /// Radius of the sub-ball guaranteed free of every occupied voxel's volume.
    pub fn interior_radius(&self, resolution: f64) -> f64 {
        (self.radius - 0.5 * 3f64.sqrt() * resolution - 1e-6).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Viewpoint {
    pub position: Vec3,
    pub yaw: f64,
    /// Covered frontier cells (linear indices).
    pub covered_frontiers: Vec<usize>,
    /// Covered sphere-center candidates.
    pub covered_centers: Vec<Vec3>,
    pub source_bubble_radius: f64,
    pub source: ViewpointSource,
}

/// Work counters for one front-end invocation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontEndStats {
    pub center_candidates: usize,
    pub iterations: usize,
    pub raycasts: u64,
    pub surface_viewpoints: usize,
    pub fallback_viewpoints: usize,
    pub dormant_cells: usize,
}

#[derive(Debug, Clone, Default)]
pub struct FrontEndOutput {
    pub viewpoints: Vec<Viewpoint>,
    /// Frontier cells that found no viewpoint this round.
    pub dormant: Vec<usize>,
    pub stats: FrontEndStats,
}

/// Mutable copy of the frontier used while viewpoints are generated, with a
/// bucket hash for radius queries.
#[derive(Debug, Clone)]
pub struct WorkingFrontier {
    cells: Vec<(usize, Vec3)>,
    active: Vec<bool>,
    slot_of: HashMap<usize, u32>,
    buckets: HashMap<[i64; 3], Vec<u32>>,
    bucket: f64,
}

impl WorkingFrontier {
    pub fn new(fs: &FrontierSet) -> Self {
        let bucket = 1.0;
        let cells: Vec<(usize, Vec3)> = fs.iter().collect();
        let mut buckets: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        let mut slot_of = HashMap::with_capacity(cells.len());
        for (k, (i, p)) in cells.iter().enumerate() {
            buckets.entry(bucket_key(p, bucket)).or_default().push(k as u32);
            slot_of.insert(*i, k as u32);
        }
        let active = vec![true; cells.len()];
        Self { cells, active, slot_of, buckets, bucket }
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.slot_of.get(&cell).is_some_and(|&k| self.active[k as usize])
    }

    pub fn position(&self, cell: usize) -> Option<Vec3> {
        self.slot_of.get(&cell).map(|&k| self.cells[k as usize].1)
    }

    pub fn remove(&mut self, cell: usize) {
        if let Some(&k) = self.slot_of.get(&cell) {
            self.active[k as usize] = false;
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Active cells with `|p - c| < r` (or `<= r` when `closed`), ascending
    /// linear index.
    pub fn within(&self, c: &Vec3, r: f64, closed: bool) -> Vec<(usize, Vec3)> {
        let lo = bucket_key(&(c - Vec3::repeat(r)), self.bucket);
        let hi = bucket_key(&(c + Vec3::repeat(r)), self.bucket);
        let r2 = r * r;
        let mut out: Vec<u32> = Vec::new();
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let Some(list) = self.buckets.get(&[x, y, z]) else { continue };
                    for &k in list {
                        if !self.active[k as usize] {
                            continue;
                        }
                        let d2 = dist2(&self.cells[k as usize].1, c);
                        if d2 < r2 || (closed && d2 == r2) {
                            out.push(k);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.into_iter().map(|k| self.cells[k as usize]).collect()
    }
}

fn bucket_key(p: &Vec3, size: f64) -> [i64; 3] {
    [(p.x / size).floor() as i64, (p.y / size).floor() as i64, (p.z / size).floor() as i64]
}

/// Build the occlusion-free sphere centred at `center`.
pub fn generate_new_sphere(
    center: Vec3,
    center_cell: usize,
    index: &ObstacleIndex,
    frontier: &WorkingFrontier,
    params: &BubbleParams,
) -> Bubble {
    let radius = index.nearest(&center).map_or(params.r_max, |n| n.dist.min(params.r_max));
    let contained_frontiers =
        frontier.within(&center, radius, false).into_iter().map(|(i, _)| i).collect();
    Bubble { center, center_cell, radius, contained_frontiers }
}

/// The candidate seeing the most `cells`, as scored by `score`, ties to the
/// lowest index. `score` gets the indices of in-range cells with a clear ray
/// and must return a count no larger than their number; candidates seeing
/// nothing are skipped. Returns `(candidate, visible, extra)`.
///
/// With `prune`, candidates are visited by their in-range count and casting
/// stops once a candidate can no longer win; the answer is the same as
/// scoring every candidate in full. Every cast is counted.
#[allow(clippy::too_many_arguments)]
pub fn best_candidate<T>(
    cands: &[Vec3],
    cells: &[Vec3],
    grid: &OccupancyGrid,
    sensor: &SensorSpec,
    prune: bool,
    raycasts: &mut u64,
    mut score: impl FnMut(&Vec3, &[usize]) -> (usize, T),
) -> Option<(usize, Vec<usize>, T)> {
    let test = sensor.range_test();
    let in_range: Vec<Vec<usize>> =
        cands.iter().map(|c| (0..cells.len()).filter(|&k| test.contains(c, &cells[k])).collect()).collect();
    let mut order: Vec<usize> = (0..cands.len()).filter(|&i| !in_range[i].is_empty()).collect();
    if prune {
        order.sort_by(|&a, &b| in_range[b].len().cmp(&in_range[a].len()).then(a.cmp(&b)));
    }
    let mut best: Option<(usize, usize, Vec<usize>, T)> = None;
    for i in order {
        let cand = &cands[i];
        let ub = in_range[i].len();
        // a win needs strictly more than `floor` visible cells
        let floor = match &best {
            _ if !prune => None,
            None => None,
            Some((bi, bs, ..)) => {
                if ub < *bs {
                    break;
                }
                if i < *bi {
                    bs.checked_sub(1)
                } else {
                    Some(*bs)
                }
            }
        };
        if floor.is_some_and(|f| ub <= f) {
            continue;
        }
        let mut visible = Vec::new();
        let mut pruned = false;
        for (n, &k) in in_range[i].iter().enumerate() {
            *raycasts += 1;
            if !grid.raycast_occluded(cand, &cells[k]) {
                visible.push(k);
            }
            if floor.is_some_and(|f| visible.len() + (ub - n - 1) <= f) {
                pruned = true;
                break;
            }
        }
        if pruned || visible.is_empty() {
            continue;
        }
        let (sc, extra) = score(cand, &visible);
        if best.as_ref().is_none_or(|(bi, bs, ..)| sc > *bs || (sc == *bs && i < *bi)) {
            best = Some((i, sc, visible, extra));
        }
    }
    best.map(|(i, _, v, t)| (i, v, t))
}

/// Whether a viewpoint position is flyable: in bounds, known Free, and at
/// least `d_safe` from every obstacle point.
pub fn viewpoint_admissible(p: &Vec3, grid: &OccupancyGrid, index: &ObstacleIndex, d_safe: f64) -> bool {
    grid.state_at(p) == VoxelState::Free && !index.any_within(p, d_safe)
}

fn spherical(center: &Vec3, r: f64, polar: f64, az: f64) -> Vec3 {
    center + Vec3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()) * r
}

/// Candidate positions on the bubble surface that survive the free-space and
/// clearance filters, in (polar, azimuth) order.
pub fn sample_surface_viewpoints(
    b: &Bubble,
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BubbleParams,
) -> Vec<Vec3> {
    let r = b
        .interior_radius(grid.resolution())
        .min(params.surface_range_fraction * sensor.max_range);
    if r <= 0.0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(params.n_az * params.n_pol);
    for ip in 0..params.n_pol {
        let polar = if params.n_pol == 1 {
            0.5 * (params.polar_min + params.polar_max)
        } else {
            params.polar_min
                + (params.polar_max - params.polar_min) * ip as f64 / (params.n_pol - 1) as f64
        };
        for ia in 0..params.n_az {
            let az = 2.0 * PI * ia as f64 / params.n_az as f64;
            let p = spherical(&b.center, r, polar, az);
            if viewpoint_admissible(&p, grid, index, params.d_safe) {
                out.push(p);
            }
        }
    }
    out
}

/// Best yaw for a position and the indices (into `cells`) it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct YawChoice {
    pub yaw: f64,
    pub covered: Vec<usize>,
}

/// Yaw heading candidates, ascending in `(-pi, pi]`.
pub fn yaw_candidates(n_yaw: usize) -> impl Iterator<Item = f64> {
    (0..n_yaw).map(move |k| -PI + 2.0 * PI * (k + 1) as f64 / n_yaw as f64)
}

/// Sweep `n_yaw` headings and keep the one covering the most cells.
///
/// Equal counts prefer the heading that centres the covered cells (smallest
/// summed absolute bearing offset), then the smallest yaw. Panoramic sensors
/// always report yaw 0.
pub fn optimize_yaw(position: &Vec3, cells: &[Vec3], sensor: &SensorSpec, n_yaw: usize) -> YawChoice {
    if sensor.kind == FovKind::Panoramic {
        let test = sensor.range_test();
        let covered = (0..cells.len()).filter(|&k| test.contains(position, &cells[k])).collect();
        return YawChoice { yaw: 0.0, covered };
    }
    let eligible: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(k, c)| sensor.bearing(position, c).map(|(az, _, _)| (k, az)))
        .collect();
    if eligible.is_empty() {
        return YawChoice { yaw: 0.0, covered: eligible.into_iter().map(|(k, _)| k).collect() };
    }
    let half = 0.5 * sensor.horizontal_fov + 1e-12;
    let mut best: Option<(usize, f64, f64)> = None;
    for yaw in yaw_candidates(n_yaw.max(1)) {
        let mut count = 0usize;
        let mut spread = 0.0;
        for &(_, az) in &eligible {
            let off = wrap_angle(az - yaw).abs();
            if off <= half {
                count += 1;
                spread += off;
            }
        }
        let better = match best {
            None => true,
            Some((bc, bs, _)) => count > bc || (count == bc && spread < bs - 1e-12),
        };
        if better {
            best = Some((count, spread, yaw));
        }
    }
    let (_, _, yaw) = best.expect("n_yaw >= 1");
    let covered = eligible
        .into_iter()
        .filter(|&(_, az)| wrap_angle(az - yaw).abs() <= half)
        .map(|(k, _)| k)
        .collect();
    YawChoice { yaw, covered }
}

/// A sphere center still waiting in the priority queue.
#[derive(Debug, Clone, Copy)]
pub struct QueuedCenter {
    pub id: usize,
    pub cell: usize,
    pub position: Vec3,
}

#[derive(Debug, Clone)]
pub struct GeneratedViewpoint {
    pub viewpoint: Viewpoint,
    /// Ids of the queued centers the viewpoint covers.
    pub covered_center_ids: Vec<usize>,
}

/// Best viewpoint for bubble `b`.
///
/// Bubbles of at least `r_fallback` are scored on the surface by FoV alone;
/// smaller ones, and larger ones whose surface yields nothing, go through the
/// ray-cast shell sampler.
#[allow(clippy::too_many_arguments)]
pub fn generate_viewpoint(
    b: &Bubble,
    frontier: &WorkingFrontier,
    queue: &[QueuedCenter],
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BubbleParams,
    stats: &mut FrontEndStats,
) -> Option<GeneratedViewpoint> {
    if b.radius >= params.r_fallback {
        if let Some(v) = surface_viewpoint(b, frontier, queue, grid, index, sensor, params) {
            stats.surface_viewpoints += 1;
            return Some(v);
        }
    }
    let v = fallback_viewpoint(b, frontier, queue, grid, index, sensor, params, stats)?;
    stats.fallback_viewpoints += 1;
    Some(v)
}

fn surface_viewpoint(
    b: &Bubble,
    frontier: &WorkingFrontier,
    queue: &[QueuedCenter],
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BubbleParams,
) -> Option<GeneratedViewpoint> {
    let r_in = b.interior_radius(grid.resolution());
    let cells: Vec<(usize, Vec3)> = b
        .contained_frontiers
        .iter()
        .filter(|&&i| frontier.is_active(i))
        .filter_map(|&i| frontier.position(i).map(|p| (i, p)))
        .filter(|(_, p)| dist2(p, &b.center) < r_in * r_in)
        .collect();
    if cells.is_empty() {
        return None;
    }
    let positions: Vec<Vec3> = cells.iter().map(|c| c.1).collect();
    let mut best: Option<(Vec3, YawChoice)> = None;
    for cand in sample_surface_viewpoints(b, grid, index, sensor, params) {
        let choice = optimize_yaw(&cand, &positions, sensor, params.n_yaw);
        if best.as_ref().is_none_or(|(_, bc)| choice.covered.len() > bc.covered.len()) {
            best = Some((cand, choice));
        }
    }
    let (position, choice) = best?;
    if choice.covered.is_empty() {
        return None;
    }
    let covered_frontiers: Vec<usize> = choice.covered.iter().map(|&k| cells[k].0).collect();
    let mut covered_center_ids = Vec::new();
    let mut covered_centers = Vec::new();
    for q in queue {
        let in_fv = covered_frontiers.binary_search(&q.cell).is_ok();
        let in_ball_view = dist2(&q.position, &b.center) <= r_in * r_in
            && sensor.in_fov(&position, choice.yaw, &q.position);
        if in_fv || in_ball_view {
            covered_center_ids.push(q.id);
            covered_centers.push(q.position);
        }
    }
    Some(GeneratedViewpoint {
        viewpoint: Viewpoint {
            position,
            yaw: choice.yaw,
            covered_frontiers,
            covered_centers,
            source_bubble_radius: b.radius,
            source: ViewpointSource::Surface,
        },
        covered_center_ids,
    })
}

/// Shell sampler around small bubbles: radii from `s` to `3s` where
/// `s = min(radius, r_fallback)`, coverage checked by ray casting against
/// active frontier cells within `3s` of the center.
#[allow(clippy::too_many_arguments)]
pub fn fallback_viewpoint(
    b: &Bubble,
    frontier: &WorkingFrontier,
    queue: &[QueuedCenter],
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BubbleParams,
    stats: &mut FrontEndStats,
) -> Option<GeneratedViewpoint> {
    let base = b.radius.min(params.r_fallback).max(grid.resolution());
    let nearby = frontier.within(&b.center, 3.0 * base, true);
    if nearby.is_empty() {
        return None;
    }
    let polar_at = |k: usize| -> f64 {
        if params.fallback_polar == 1 {
            0.5 * PI
        } else {
            PI * (k + 1) as f64 / (params.fallback_polar + 1) as f64
        }
    };
    let nearby_pos: Vec<Vec3> = nearby.iter().map(|(_, p)| *p).collect();
    let mut cands = Vec::new();
    for ir in 0..params.fallback_radii {
        let r = if params.fallback_radii == 1 {
            base
        } else {
            base * (1.0 + 2.0 * ir as f64 / (params.fallback_radii - 1) as f64)
        };
        for ip in 0..params.fallback_polar {
            for ia in 0..params.fallback_az {
                let az = 2.0 * PI * ia as f64 / params.fallback_az as f64;
                let cand = spherical(&b.center, r, polar_at(ip), az);
                if viewpoint_admissible(&cand, grid, index, params.d_safe) {
                    cands.push(cand);
                }
            }
        }
    }
    let (ci, visible, choice) =
        best_candidate(&cands, &nearby_pos, grid, sensor, params.prune_scoring, &mut stats.raycasts, |cand, visible| {
            let pos: Vec<Vec3> = visible.iter().map(|&k| nearby_pos[k]).collect();
            let choice = optimize_yaw(cand, &pos, sensor, params.n_yaw);
            (choice.covered.len(), choice)
        })?;
    let (position, yaw) = (cands[ci], choice.yaw);
    let cov: Vec<usize> = choice.covered.iter().map(|&j| visible[j]).collect();
    if cov.is_empty() {
        return None;
    }
    let mut covered_frontiers: Vec<usize> = cov.iter().map(|&k| nearby[k].0).collect();
    covered_frontiers.sort_unstable();
    let mut covered_center_ids = Vec::new();
    let mut covered_centers = Vec::new();
    for q in queue {
        if covered_frontiers.binary_search(&q.cell).is_ok() {
            covered_center_ids.push(q.id);
            covered_centers.push(q.position);
        }
    }
    Some(GeneratedViewpoint {
        viewpoint: Viewpoint {
            position,
            yaw,
            covered_frontiers,
            covered_centers,
            source_bubble_radius: b.radius,
            source: ViewpointSource::Fallback,
        },
        covered_center_ids,
    })
}

/// The full front-end: downsample, one bubble per center, then repeatedly
/// take the largest remaining bubble, generate its viewpoint, and drop the
/// frontier cells and sphere centers it covers.
pub fn generate_viewpoints(
    fs: &FrontierSet,
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BubbleParams,
) -> FrontEndOutput {
    let mut out = FrontEndOutput::default();
    if fs.is_empty() {
        return out;
    }
    let centers = fs.downsample(grid.config(), params.leaf_size);
    out.stats.center_candidates = centers.len();
    let mut work = WorkingFrontier::new(fs);
    let bubbles: Vec<Bubble> = centers
        .centers
        .iter()
        .map(|c| generate_new_sphere(c.position, c.cell, index, &work, params))
        .collect();

    let mut order: Vec<usize> = (0..bubbles.len()).collect();
    order.sort_by(|&a, &b| {
        bubbles[b]
            .radius
            .total_cmp(&bubbles[a].radius)
            .then_with(|| lex_cmp(&bubbles[a].center, &bubbles[b].center))
    });
    let mut queued = vec![true; bubbles.len()];

    for &id in &order {
        if !queued[id] {
            continue;
        }
        queued[id] = false;
        out.stats.iterations += 1;
        let b = &bubbles[id];
        let rest: Vec<QueuedCenter> = order
            .iter()
            .filter(|&&j| queued[j])
            .map(|&j| QueuedCenter { id: j, cell: bubbles[j].center_cell, position: bubbles[j].center })
            .collect();
        match generate_viewpoint(b, &work, &rest, grid, index, sensor, params, &mut out.stats) {
            Some(g) => {
                for &c in &g.viewpoint.covered_frontiers {
                    work.remove(c);
                }
                for j in g.covered_center_ids {
                    queued[j] = false;
                }
                out.viewpoints.push(g.viewpoint);
            }
            None => {
                for &c in &b.contained_frontiers {
                    if work.is_active(c) {
                        work.remove(c);
                        out.dormant.push(c);
                    }
                }
            }
        }
    }
    out.dormant.sort_unstable();
    out.stats.dormant_cells = out.dormant.len();
    out
}
