//! Ray-casting comparison front-end.
//!
//! Frontier cells are grouped into 26-connected clusters, large clusters are
//! split along their principal axis, and each cluster gets the best of a
//! cylindrical grid of candidate positions around its centroid. Candidates are
//! scored by the cluster cells they can see, checked by ray casting.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::bubble::{optimize_yaw, viewpoint_admissible, best_candidate, FrontEndOutput, Viewpoint, ViewpointSource};
use crate::frontier::FrontierSet;
use crate::grid::{CellIdx, GridConfig, OccupancyGrid};
use crate::obstacle_index::ObstacleIndex;
use crate::sensor::SensorSpec;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineParams {
    /// Clusters longer than this along their principal axis are split, m.
    pub split_len: f64,
    pub n_radii: usize,
    pub n_az: usize,
    pub n_heights: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Spacing of the candidate heights around the centroid, m.
    pub height_step: f64,
    pub n_yaw: usize,
    pub d_safe: f64,
    /// Candidates are scored on cluster cells thinned to one per cube of
    /// this many voxels per side.
    pub eval_stride: usize,
    /// Gain radius assigned to every baseline viewpoint.
    pub gain_radius: f64,
    /// Skip ray casts for candidates that cannot win.
    pub prune_scoring: bool,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            split_len: 4.0,
            n_radii: 4,
            n_az: 12,
            n_heights: 3,
            radius_min: 1.5,
            radius_max: 4.5,
            height_step: 1.0,
            n_yaw: 36,
            d_safe: 0.6,
            eval_stride: 1,
            gain_radius: 1.0,
            prune_scoring: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    /// Linear cell indices, ascending.
    pub cells: Vec<usize>,
    pub centroid: Vec3,
    /// Spread along the first principal axis, m.
    pub extent: f64,
}

fn neighbors26() -> impl Iterator<Item = CellIdx> {
    (-1..=1).flat_map(|x| (-1..=1).flat_map(move |y| (-1..=1).map(move |z| [x, y, z])))
        .filter(|d| *d != [0, 0, 0])
}

/// Dense per-cell stamps reused across component searches.
struct Marks {
    stamp: Vec<u32>,
    epoch: u32,
}

/// 26-connected components of `cells` (ascending input, ascending output).
fn components(cfg: &GridConfig, cells: &[usize], marks: &mut Marks) -> Vec<Vec<usize>> {
    // stamp == epoch marks a member not yet reached
    marks.epoch += 1;
    let epoch = marks.epoch;
    for &i in cells {
        marks.stamp[i] = epoch;
    }
    let mut out = Vec::new();
    for &seed in cells {
        if marks.stamp[seed] != epoch {
            continue;
        }
        marks.stamp[seed] = 0;
        let mut comp = vec![seed];
        let mut queue = VecDeque::from([seed]);
        while let Some(i) = queue.pop_front() {
            let c = cfg.delinear(i);
            for d in neighbors26() {
                let n = [c[0] + d[0], c[1] + d[1], c[2] + d[2]];
                if !cfg.in_bounds(n) {
                    continue;
                }
                let j = cfg.linear(n);
                if marks.stamp[j] == epoch {
                    marks.stamp[j] = 0;
                    comp.push(j);
                    queue.push_back(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Centroid, unit principal axis and extent along it.
fn principal_axis(cfg: &GridConfig, cells: &[usize]) -> (Vec3, Vec3, f64) {
    let pts: Vec<Vec3> = cells.iter().map(|&i| cfg.center_of_linear(i)).collect();
    let n = pts.len() as f64;
    let centroid = pts.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut cov = Matrix3::zeros();
    for p in &pts {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let k = eig.eigenvalues.imax();
    let mut axis: Vec3 = eig.eigenvectors.column(k).into_owned();
    // fix the sign so the split does not depend on the solver's choice
    let big = axis.iamax();
    if axis[big] < 0.0 {
        axis = -axis;
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = (p - centroid).dot(&axis);
        (lo.min(s), hi.max(s))
    });
    (centroid, axis, hi - lo)
}

/// Region-grow the frontier into 26-connected clusters, then recursively
/// bisect any cluster longer than `split_len` through its centroid normal to
/// its principal axis.
pub fn cluster_frontiers(fs: &FrontierSet, cfg: &GridConfig, split_len: f64) -> Vec<FrontierCluster> {
    let cells: Vec<usize> = fs.indices().collect();
    let mut marks = Marks { stamp: vec![0; cfg.num_cells()], epoch: 0 };
    let mut pending: Vec<Vec<usize>> = components(cfg, &cells, &mut marks);
    pending.reverse();
    let mut out = Vec::new();
    while let Some(comp) = pending.pop() {
        let (centroid, axis, extent) = principal_axis(cfg, &comp);
        if extent <= split_len || comp.len() < 2 {
            out.push(FrontierCluster { cells: comp, centroid, extent });
            continue;
        }
        let (a, b): (Vec<usize>, Vec<usize>) =
            comp.iter().partition(|&&i| (cfg.center_of_linear(i) - centroid).dot(&axis) <= 0.0);
        if a.is_empty() || b.is_empty() {
            out.push(FrontierCluster { cells: comp, centroid, extent });
            continue;
        }
        let mut parts = components(cfg, &a, &mut marks);
        parts.extend(components(cfg, &b, &mut marks));
        parts.reverse();
        pending.extend(parts);
    }
    out
}

/// Candidate positions around a cluster centroid, radius-major order.
pub fn cylindrical_candidates(centroid: &Vec3, params: &BaselineParams) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(params.n_radii * params.n_az * params.n_heights);
    for ir in 0..params.n_radii {
        let r = if params.n_radii == 1 {
            params.radius_min
        } else {
            params.radius_min + (params.radius_max - params.radius_min) * ir as f64 / (params.n_radii - 1) as f64
        };
        for ih in 0..params.n_heights {
            let dz = (ih as f64 - (params.n_heights - 1) as f64 / 2.0) * params.height_step;
            for ia in 0..params.n_az {
                let az = 2.0 * PI * ia as f64 / params.n_az as f64;
                out.push(centroid + Vec3::new(r * az.cos(), r * az.sin(), dz));
            }
        }
    }
    out
}

/// One representative cell per `stride`-voxel cube, the one with the
/// smallest index.
fn thin(cfg: &GridConfig, cells: &[usize], stride: usize) -> Vec<usize> {
    if stride <= 1 {
        return cells.to_vec();
    }
    let s = stride as i32;
    let mut by_block: BTreeMap<[i32; 3], usize> = BTreeMap::new();
    for &i in cells {
        let c = cfg.delinear(i);
        by_block.entry([c[0].div_euclid(s), c[1].div_euclid(s), c[2].div_euclid(s)]).or_insert(i);
    }
    let mut out: Vec<usize> = by_block.into_values().collect();
    out.sort_unstable();
    out
}

/// Cells of `cells` in range of `p` with a clear ray; counts every cast.
fn visible_cells(p: &Vec3, cells: &[Vec3], grid: &OccupancyGrid, sensor: &SensorSpec, raycasts: &mut u64) -> Vec<usize> {
    let test = sensor.range_test();
    let mut out = Vec::new();
    for (k, c) in cells.iter().enumerate() {
        if !test.contains(p, c) {
            continue;
        }
        *raycasts += 1;
        if !grid.raycast_occluded(p, c) {
            out.push(k);
        }
    }
    out
}

/// Best candidate around `cluster`: the one seeing the most (thinned)
/// cluster cells at its best yaw. The returned coverage lists every cluster
/// cell in the FoV at that yaw with a clear ray.
pub fn sample_cylindrical_viewpoints(
    cluster: &FrontierCluster,
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BaselineParams,
    raycasts: &mut u64,
) -> Option<Viewpoint> {
    let cfg = grid.config();
    let probe: Vec<Vec3> =
        thin(cfg, &cluster.cells, params.eval_stride).into_iter().map(|i| cfg.center_of_linear(i)).collect();
    let cands: Vec<Vec3> = cylindrical_candidates(&cluster.centroid, params)
        .into_iter()
        .filter(|c| viewpoint_admissible(c, grid, index, params.d_safe))
        .collect();
    let (ci, _, _) = best_candidate(&cands, &probe, grid, sensor, params.prune_scoring, raycasts, |cand, vis| {
        let pos: Vec<Vec3> = vis.iter().map(|&k| probe[k]).collect();
        (optimize_yaw(cand, &pos, sensor, params.n_yaw).covered.len(), ())
    })?;
    let position = cands[ci];
    let all: Vec<Vec3> = cluster.cells.iter().map(|&i| cfg.center_of_linear(i)).collect();
    let vis = visible_cells(&position, &all, grid, sensor, raycasts);
    let pos: Vec<Vec3> = vis.iter().map(|&k| all[k]).collect();
    let choice = optimize_yaw(&position, &pos, sensor, params.n_yaw);
    if choice.covered.is_empty() {
        return None;
    }
    let covered_frontiers: Vec<usize> = choice.covered.iter().map(|&j| cluster.cells[vis[j]]).collect();
    Some(Viewpoint {
        position,
        yaw: choice.yaw,
        covered_frontiers,
        covered_centers: vec![cluster.centroid],
        source_bubble_radius: params.gain_radius,
        source: ViewpointSource::Baseline,
    })
}

/// Cluster the frontier and sample one viewpoint per cluster.
pub fn generate_viewpoints(
    fs: &FrontierSet,
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    sensor: &SensorSpec,
    params: &BaselineParams,
) -> FrontEndOutput {
    let mut out = FrontEndOutput::default();
    let clusters = cluster_frontiers(fs, grid.config(), params.split_len);
    out.stats.center_candidates = clusters.len();
    for cluster in &clusters {
        out.stats.iterations += 1;
        match sample_cylindrical_viewpoints(cluster, grid, index, sensor, params, &mut out.stats.raycasts) {
            Some(v) => out.viewpoints.push(v),
            None => out.dormant.extend_from_slice(&cluster.cells),
        }
    }
    out.dormant.sort_unstable();
    out.stats.dormant_cells = out.dormant.len();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelState;

    fn grid(n: [usize; 3]) -> OccupancyGrid {
        OccupancyGrid::new(GridConfig::new(Vec3::zeros(), 0.2, n).unwrap())
    }

    #[test]
    fn empty_frontier_has_no_clusters() {
        let g = grid([5, 5, 5]);
        assert!(cluster_frontiers(&FrontierSet::new(), g.config(), 4.0).is_empty());
    }

    #[test]
    fn far_apart_groups_are_separate() {
        let mut g = grid([80, 10, 10]);
        for x in [5, 6, 60, 61] {
            let i = g.config().linear([x, 5, 5]);
            g.set_linear(i, VoxelState::Free);
        }
        let fs = FrontierSet::from_full_scan(&g);
        let cl = cluster_frontiers(&fs, g.config(), 4.0);
        assert_eq!(cl.len(), 2);
        assert_eq!(cl[0].cells.len(), 2);
    }

    #[test]
    fn candidate_grid_shape() {
        let c = cylindrical_candidates(&Vec3::zeros(), &BaselineParams::default());
        assert_eq!(c.len(), 144);
        let r: Vec<f64> = c.iter().map(|p| p.xy().norm()).collect();
        assert!((r[0] - 1.5).abs() < 1e-12 && (r[143] - 4.5).abs() < 1e-12);
        assert!(c.iter().all(|p| [-1.0, 0.0, 1.0].iter().any(|z| (p.z - z).abs() < 1e-12)));
    }
}
