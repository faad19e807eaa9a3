//! Tri-state voxel occupancy grid.
//!
//! Cells start `Unknown` and only ever gain knowledge: `Unknown -> Free`,
//! `Unknown -> Occupied` or `Free -> Occupied`. Rays are walked with an exact
//! voxel-stepping traversal (Amanatides & Woo), so thin walls are never skipped
//! and identical inputs always visit identical cells.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Integer voxel coordinate `(ix, iy, iz)`.
pub type CellIdx = [i32; 3];

/// The six face-adjacent offsets.
pub const FACE_NEIGHBORS: [CellIdx; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoxelState {
    Unknown,
    Free,
    Occupied,
}

/// Placement and resolution of the voxel lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub origin: Vec3,
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridConfig {
    pub fn new(origin: Vec3, resolution: f64, dims: [usize; 3]) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::Config(format!("resolution must be > 0, got {resolution}")));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Config(format!("grid dims must all be >= 1, got {dims:?}")));
        }
        if dims.iter().any(|&d| d > i32::MAX as usize / 2) {
            return Err(Error::Config(format!("grid dims too large: {dims:?}")));
        }
        Ok(Self { origin, resolution, dims })
    }

    /// Grid spanning the axis-aligned box `[min, max]`, rounding the extent up
    /// to whole voxels.
    pub fn from_bounds(min: Vec3, max: Vec3, resolution: f64) -> Result<Self> {
        let ext = max - min;
        let dims = [0, 1, 2].map(|a| ((ext[a] / resolution) - 1e-9).ceil().max(1.0) as usize);
        Self::new(min, resolution, dims)
    }

    pub fn num_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    /// Upper corner of the bounded volume.
    pub fn max_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64)
                * self.resolution
    }

    #[inline]
    pub fn in_bounds(&self, c: CellIdx) -> bool {
        c[0] >= 0
            && c[1] >= 0
            && c[2] >= 0
            && (c[0] as usize) < self.dims[0]
            && (c[1] as usize) < self.dims[1]
            && (c[2] as usize) < self.dims[2]
    }

    /// Voxel containing `p`, without a bounds check.
    #[inline]
    pub fn cell_of_unchecked(&self, p: &Vec3) -> CellIdx {
        let g = (p - self.origin) / self.resolution;
        [g.x.floor() as i32, g.y.floor() as i32, g.z.floor() as i32]
    }

    #[inline]
    pub fn cell_of(&self, p: &Vec3) -> Option<CellIdx> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return None;
        }
        let c = self.cell_of_unchecked(p);
        self.in_bounds(c).then_some(c)
    }

    #[inline]
    pub fn center(&self, c: CellIdx) -> Vec3 {
        self.origin
            + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.resolution
    }

    /// Row-major linear index, x fastest. Caller guarantees `in_bounds(c)`.
    #[inline]
    pub fn linear(&self, c: CellIdx) -> usize {
        (c[2] as usize * self.dims[1] + c[1] as usize) * self.dims[0] + c[0] as usize
    }

    #[inline]
    pub fn delinear(&self, i: usize) -> CellIdx {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        [x as i32, y as i32, z as i32]
    }

    pub fn center_of_linear(&self, i: usize) -> Vec3 {
        self.center(self.delinear(i))
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        self.cell_of(p).is_some()
    }

    /// Walk every voxel the segment `a -> b` passes through, in order.
    ///
    /// The segment is clipped to the grid volume first. `visit` receives the
    /// cell together with the segment parameters `t` (0 at `a`, 1 at `b`) at
    /// which the segment enters and leaves that cell; returning
    /// `ControlFlow::Break` stops the walk.
    pub fn traverse<F>(&self, a: &Vec3, b: &Vec3, mut visit: F)
    where
        F: FnMut(CellIdx, f64, f64) -> ControlFlow<()>,
    {
        let ga = (a - self.origin) / self.resolution;
        let gb = (b - self.origin) / self.resolution;
        let d = gb - ga;
        let dims = [self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64];

        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for ax in 0..3 {
            if d[ax] == 0.0 {
                if ga[ax] < 0.0 || ga[ax] >= dims[ax] {
                    return;
                }
            } else {
                let ta = (0.0 - ga[ax]) / d[ax];
                let tb = (dims[ax] - ga[ax]) / d[ax];
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
        }
        if t0 > t1 || !t0.is_finite() || !t1.is_finite() {
            return;
        }

        let clamp_cell = |g: Vec3| -> CellIdx {
            [0, 1, 2].map(|ax| (g[ax].floor() as i64).clamp(0, self.dims[ax] as i64 - 1) as i32)
        };
        let mut cell = clamp_cell(ga + d * t0);
        let end = clamp_cell(ga + d * t1);

        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for ax in 0..3 {
            if d[ax] > 0.0 {
                step[ax] = 1;
                t_delta[ax] = 1.0 / d[ax];
                t_max[ax] = (cell[ax] as f64 + 1.0 - ga[ax]) / d[ax];
            } else if d[ax] < 0.0 {
                step[ax] = -1;
                t_delta[ax] = -1.0 / d[ax];
                t_max[ax] = (cell[ax] as f64 - ga[ax]) / d[ax];
            }
        }

        let budget = (0..3).map(|ax| (end[ax] - cell[ax]).unsigned_abs() as usize).sum::<usize>() + 4;
        let mut t_enter = t0;
        for _ in 0..budget {
            let ax = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            let t_exit = t_max[ax].min(t1);
            if visit(cell, t_enter, t_exit).is_break() || cell == end || t_max[ax] > t1 {
                return;
            }
            cell[ax] += step[ax];
            if !self.in_bounds(cell) {
                return;
            }
            t_enter = t_max[ax];
            t_max[ax] += t_delta[ax];
        }
    }
}

/// The planner's world model: one [`VoxelState`] per cell of a bounded box.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    config: GridConfig,
    cells: Vec<VoxelState>,
    known_count: usize,
}

impl OccupancyGrid {
    pub fn new(config: GridConfig) -> Self {
        let n = config.num_cells();
        Self { config, cells: vec![VoxelState::Unknown; n], known_count: 0 }
    }

    /// Fully known grid: the listed cells Occupied, everything else Free.
    /// Used for ground-truth worlds.
    pub fn from_occupied<I: IntoIterator<Item = CellIdx>>(config: GridConfig, occupied: I) -> Self {
        let n = config.num_cells();
        let mut cells = vec![VoxelState::Free; n];
        for c in occupied {
            if config.in_bounds(c) {
                cells[config.linear(c)] = VoxelState::Occupied;
            }
        }
        Self { config, cells, known_count: n }
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn resolution(&self) -> f64 {
        self.config.resolution
    }

    pub fn known_count(&self) -> usize {
        self.known_count
    }

    pub fn cells(&self) -> &[VoxelState] {
        &self.cells
    }

    #[inline]
    pub fn state(&self, c: CellIdx) -> VoxelState {
        if self.config.in_bounds(c) {
            self.cells[self.config.linear(c)]
        } else {
            VoxelState::Unknown
        }
    }

    #[inline]
    pub fn state_linear(&self, i: usize) -> VoxelState {
        self.cells[i]
    }

    /// State of the voxel containing `p`; anything outside the box is Unknown.
    pub fn state_at(&self, p: &Vec3) -> VoxelState {
        match self.config.cell_of(p) {
            Some(c) => self.cells[self.config.linear(c)],
            None => VoxelState::Unknown,
        }
    }

    pub fn is_known_free(&self, p: &Vec3) -> bool {
        self.state_at(p) == VoxelState::Free
    }

    /// Apply a monotone state transition. Returns whether the cell changed.
    pub fn set_linear(&mut self, i: usize, new: VoxelState) -> bool {
        let old = self.cells[i];
        let allowed = matches!(
            (old, new),
            (VoxelState::Unknown, VoxelState::Free)
                | (VoxelState::Unknown, VoxelState::Occupied)
                | (VoxelState::Free, VoxelState::Occupied)
        );
        if allowed {
            if old == VoxelState::Unknown {
                self.known_count += 1;
            }
            self.cells[i] = new;
        }
        allowed
    }

    /// Free cell with at least one in-bounds Unknown face neighbour.
    pub fn is_frontier(&self, c: CellIdx) -> bool {
        if self.state(c) != VoxelState::Free {
            return false;
        }
        FACE_NEIGHBORS.iter().any(|o| {
            let n = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            self.config.in_bounds(n) && self.cells[self.config.linear(n)] == VoxelState::Unknown
        })
    }

    /// Integrate one sensor ray, returning the linear indices whose state
    /// changed (in traversal order).
    pub fn integrate_ray(&mut self, origin: &Vec3, endpoint: &Vec3, hit: bool) -> Vec<usize> {
        let mut changed = Vec::new();
        self.integrate_ray_into(origin, endpoint, hit, &mut changed);
        changed
    }

    /// As [`integrate_ray`](Self::integrate_ray), appending to `changed`.
    ///
    /// Cells along the ray become Free; with `hit` the endpoint voxel becomes
    /// Occupied. An endpoint outside the box is clipped and counts as a miss.
    pub fn integrate_ray_into(
        &mut self,
        origin: &Vec3,
        endpoint: &Vec3,
        hit: bool,
        changed: &mut Vec<usize>,
    ) {
        let hit_cell = if hit { self.config.cell_of(endpoint) } else { None };
        let cfg = self.config.clone();
        cfg.traverse(origin, endpoint, |c, _, _| {
            if Some(c) != hit_cell {
                let i = cfg.linear(c);
                if self.set_linear(i, VoxelState::Free) {
                    changed.push(i);
                }
            }
            ControlFlow::Continue(())
        });
        if let Some(c) = hit_cell {
            let i = cfg.linear(c);
            if self.set_linear(i, VoxelState::Occupied) {
                changed.push(i);
            }
        }
    }

    /// True iff some voxel on the digital line between `a` and `b` is Occupied.
    /// Unknown voxels do not occlude.
    pub fn raycast_occluded(&self, a: &Vec3, b: &Vec3) -> bool {
        let mut occluded = false;
        self.config.traverse(a, b, |c, _, _| {
            if self.cells[self.config.linear(c)] == VoxelState::Occupied {
                occluded = true;
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        occluded
    }

    /// Full-scan recount of non-Unknown cells.
    pub fn recount_known(&self) -> usize {
        self.cells.iter().filter(|&&s| s != VoxelState::Unknown).count()
    }
}

/// Voxelised clearance map: a cell is inflated when its center lies strictly
/// closer than `radius` to the center of some Occupied voxel.
#[derive(Debug, Clone)]
pub struct InflationLayer {
    config: GridConfig,
    radius: f64,
    offsets: Vec<CellIdx>,
    inflated: Vec<bool>,
}

impl InflationLayer {
    pub fn new(config: GridConfig, radius: f64) -> Self {
        let reach = (radius / config.resolution).ceil() as i32;
        let r2 = (radius / config.resolution).powi(2);
        let mut offsets = Vec::new();
        for z in -reach..=reach {
            for y in -reach..=reach {
                for x in -reach..=reach {
                    if ((x * x + y * y + z * z) as f64) < r2 - 1e-12 {
                        offsets.push([x, y, z]);
                    }
                }
            }
        }
        let n = config.num_cells();
        Self { config, radius, offsets, inflated: vec![false; n] }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Mark the neighbourhood of a newly occupied cell.
    pub fn add_obstacle(&mut self, c: CellIdx) {
        for o in &self.offsets {
            let n = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            if self.config.in_bounds(n) {
                let i = self.config.linear(n);
                self.inflated[i] = true;
            }
        }
    }

    #[inline]
    pub fn is_inflated(&self, i: usize) -> bool {
        self.inflated[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> OccupancyGrid {
        OccupancyGrid::new(GridConfig::new(Vec3::zeros(), 1.0, [n, n, n]).unwrap())
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(GridConfig::new(Vec3::zeros(), 0.0, [1, 1, 1]).is_err());
        assert!(GridConfig::new(Vec3::zeros(), -1.0, [1, 1, 1]).is_err());
        assert!(GridConfig::new(Vec3::zeros(), 1.0, [1, 0, 1]).is_err());
    }

    #[test]
    fn index_center_round_trip() {
        let cfg = GridConfig::new(Vec3::new(-1.3, 2.0, 0.1), 0.2, [7, 5, 3]).unwrap();
        for i in 0..cfg.num_cells() {
            let c = cfg.delinear(i);
            assert_eq!(cfg.linear(c), i);
            assert_eq!(cfg.cell_of(&cfg.center(c)), Some(c));
        }
    }

    #[test]
    fn single_voxel_ray() {
        let mut g = grid(4);
        let changed =
            g.integrate_ray(&Vec3::new(1.2, 1.2, 1.2), &Vec3::new(1.7, 1.6, 1.4), false);
        assert_eq!(changed.len(), 1);
        assert_eq!(g.state([1, 1, 1]), VoxelState::Free);
        assert_eq!(g.known_count(), 1);
    }

    #[test]
    fn axis_aligned_ray_into_wall() {
        let mut g = grid(12);
        let changed = g.integrate_ray(&Vec3::new(0.5, 3.5, 3.5), &Vec3::new(9.5, 3.5, 3.5), true);
        assert_eq!(changed.len(), 10);
        for x in 0..9 {
            assert_eq!(g.state([x, 3, 3]), VoxelState::Free);
        }
        assert_eq!(g.state([9, 3, 3]), VoxelState::Occupied);
        assert_eq!(g.known_count(), 10);
    }

    #[test]
    fn out_of_bounds_endpoint_is_clipped_miss() {
        let mut g = grid(5);
        g.integrate_ray(&Vec3::new(0.5, 0.5, 0.5), &Vec3::new(20.5, 0.5, 0.5), true);
        for x in 0..5 {
            assert_eq!(g.state([x, 0, 0]), VoxelState::Free);
        }
        assert_eq!(g.known_count(), 5);
    }

    #[test]
    fn occupied_is_terminal_and_free_can_become_occupied() {
        let mut g = grid(5);
        let i = g.config().linear([2, 2, 2]);
        assert!(g.set_linear(i, VoxelState::Free));
        assert!(g.set_linear(i, VoxelState::Occupied));
        assert!(!g.set_linear(i, VoxelState::Free));
        assert!(!g.set_linear(i, VoxelState::Unknown));
        assert_eq!(g.state([2, 2, 2]), VoxelState::Occupied);
        assert_eq!(g.known_count(), 1);
    }

    #[test]
    fn state_queries() {
        let mut g = grid(5);
        assert_eq!(g.state_at(&Vec3::new(2.5, 2.5, 2.5)), VoxelState::Unknown);
        assert_eq!(g.state_at(&Vec3::new(-0.5, 2.5, 2.5)), VoxelState::Unknown);
        assert_eq!(g.state_at(&Vec3::new(2.5, 2.5, 7.0)), VoxelState::Unknown);
        g.integrate_ray(&Vec3::new(0.5, 0.5, 0.5), &Vec3::new(2.5, 0.5, 0.5), false);
        assert!(g.is_known_free(&g.config().center([1, 0, 0])));
    }

    #[test]
    fn occlusion_queries() {
        let mut g = grid(10);
        let a = Vec3::new(1.3, 4.2, 5.1);
        let b = Vec3::new(8.7, 5.9, 4.4);
        assert!(!g.raycast_occluded(&a, &b));
        for y in 0..10 {
            for z in 0..10 {
                let i = g.config().linear([5, y, z]);
                g.set_linear(i, VoxelState::Occupied);
            }
        }
        assert!(g.raycast_occluded(&a, &b));
        assert!(g.raycast_occluded(&b, &a));
    }

    #[test]
    fn frontier_requires_in_bounds_unknown() {
        let mut g = grid(3);
        let corner = g.config().linear([0, 0, 0]);
        g.set_linear(corner, VoxelState::Free);
        assert!(g.is_frontier([0, 0, 0]));
        for i in 0..g.config().num_cells() {
            g.set_linear(i, VoxelState::Free);
        }
        // the box skin never counts as frontier
        assert!(!g.is_frontier([0, 0, 0]));
    }

    #[test]
    fn inflation_is_strict_ball() {
        let cfg = GridConfig::new(Vec3::zeros(), 0.2, [20, 20, 20]).unwrap();
        let mut inf = InflationLayer::new(cfg.clone(), 0.6);
        inf.add_obstacle([10, 10, 10]);
        assert!(inf.is_inflated(cfg.linear([10, 10, 10])));
        assert!(inf.is_inflated(cfg.linear([12, 10, 10])));
        assert!(!inf.is_inflated(cfg.linear([13, 10, 10])));
        assert!(inf.is_inflated(cfg.linear([12, 11, 10])));
    }
}
