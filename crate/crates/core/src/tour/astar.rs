//! Shortest paths over known-free voxels.
//!
//! The graph is the 26-connected voxel lattice (optionally coarsened so that
//! one planning node covers a `k x k x k` block of map voxels). Diagonal moves
//! may not cut corners: every cell of the box spanned by a move must be
//! traversable. Edge weights are center-to-center Euclidean distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::grid::{CellIdx, InflationLayer, OccupancyGrid, VoxelState};
use crate::Vec3;

/// A collision-free polyline and its length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Vec3>,
    pub length: f64,
}

/// The 26 neighbour offsets in a fixed order.
pub fn neighbor_offsets() -> Vec<CellIdx> {
    let mut v = Vec::with_capacity(26);
    for z in -1..=1 {
        for y in -1..=1 {
            for x in -1..=1 {
                if (x, y, z) != (0, 0, 0) {
                    v.push([x, y, z]);
                }
            }
        }
    }
    v
}

/// Tight admissible, consistent heuristic for the 26-connected lattice with
/// Euclidean edge weights (exact in free space), in node units.
pub fn octile_distance(a: CellIdx, b: CellIdx) -> f64 {
    let mut d = [(a[0] - b[0]).abs(), (a[1] - b[1]).abs(), (a[2] - b[2]).abs()];
    d.sort_unstable();
    let (lo, mid, hi) = (d[0] as f64, d[1] as f64, d[2] as f64);
    3f64.sqrt() * lo + 2f64.sqrt() * (mid - lo) + (hi - mid)
}

/// Traversability view over an occupancy grid.
#[derive(Clone)]
pub struct PlanningGraph<'a> {
    grid: &'a OccupancyGrid,
    coarsen: usize,
    dims: [usize; 3],
    free: Vec<bool>,
    /// Per node, bit `k` set when the move along `neighbor_offsets()[k]` is
    /// allowed with no endpoint exemptions.
    moves: Vec<u32>,
}

impl<'a> PlanningGraph<'a> {
    /// Native-resolution graph over known-Free cells.
    pub fn new(grid: &'a OccupancyGrid) -> Self {
        Self::with_options(grid, None, 1)
    }

    /// Graph that also excludes inflated cells and groups `coarsen^3` voxels
    /// per node (a node is traversable only if all of its voxels are).
    pub fn with_options(grid: &'a OccupancyGrid, inflation: Option<&'a InflationLayer>, coarsen: usize) -> Self {
        let k = coarsen.max(1);
        let d = grid.config().dims;
        let dims = [d[0].div_ceil(k), d[1].div_ceil(k), d[2].div_ceil(k)];
        let mut g = Self { grid, coarsen: k, dims, free: Vec::new(), moves: Vec::new() };
        g.free = (0..g.node_count()).map(|i| g.node_free(g.delinear(i), inflation)).collect();
        g.moves = g.move_masks();
        g
    }

    /// Allowed-move masks from each node's 3x3x3 traversability pattern.
    fn move_masks(&self) -> Vec<u32> {
        let slot = |o: CellIdx| ((o[2] + 1) * 9 + (o[1] + 1) * 3 + (o[0] + 1)) as u32;
        // cells (as 27-bit neighbourhood slots) each move needs, itself included
        let required: Vec<u32> = neighbor_offsets()
            .iter()
            .map(|off| {
                let mut m = 0u32;
                for z in off[2].min(0)..=off[2].max(0) {
                    for y in off[1].min(0)..=off[1].max(0) {
                        for x in off[0].min(0)..=off[0].max(0) {
                            if [x, y, z] != [0, 0, 0] {
                                m |= 1 << slot([x, y, z]);
                            }
                        }
                    }
                }
                m
            })
            .collect();
        let offsets = neighbor_offsets();
        (0..self.node_count())
            .map(|i| {
                if !self.free[i] {
                    return 0;
                }
                let c = self.delinear(i);
                let mut nb = 0u32;
                for o in &offsets {
                    if self.traversable([c[0] + o[0], c[1] + o[1], c[2] + o[2]]) {
                        nb |= 1 << slot(*o);
                    }
                }
                required.iter().enumerate().fold(0u32, |m, (k, &r)| if nb & r == r { m | 1 << k } else { m })
            })
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn step(&self) -> f64 {
        self.grid.resolution() * self.coarsen as f64
    }

    #[inline]
    fn in_bounds(&self, c: CellIdx) -> bool {
        c.iter().zip(self.dims).all(|(&v, d)| v >= 0 && (v as usize) < d)
    }

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

    pub fn node_of(&self, p: &Vec3) -> Option<CellIdx> {
        let c = self.grid.config().cell_of(p)?;
        let k = self.coarsen as i32;
        Some([c[0] / k, c[1] / k, c[2] / k])
    }

    pub fn node_center(&self, c: CellIdx) -> Vec3 {
        let s = self.step();
        self.grid.config().origin
            + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * s
    }

    /// Whether every map voxel of node `c` is known Free (and not inflated).
    #[inline]
    pub fn traversable(&self, c: CellIdx) -> bool {
        self.in_bounds(c) && self.free[self.linear(c)]
    }

    fn node_free(&self, c: CellIdx, inflation: Option<&InflationLayer>) -> bool {
        let cfg = self.grid.config();
        let k = self.coarsen as i32;
        for z in 0..k {
            for y in 0..k {
                for x in 0..k {
                    let v = [c[0] * k + x, c[1] * k + y, c[2] * k + z];
                    if !cfg.in_bounds(v) {
                        return false;
                    }
                    let i = cfg.linear(v);
                    if self.grid.state_linear(i) != VoxelState::Free {
                        return false;
                    }
                    if inflation.is_some_and(|inf| inf.is_inflated(i)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Bit `k` set when move `k` of [`neighbor_offsets`] from `from` is
    /// allowed. `exempt` nodes skip the traversability test for themselves
    /// (start and goal); away from them the precomputed mask answers.
    #[inline]
    fn allowed_moves(&self, from: CellIdx, offsets: &[CellIdx], exempt: &[CellIdx]) -> u32 {
        let near_exempt = exempt.iter().any(|e| (0..3).all(|a| (e[a] - from[a]).abs() <= 1));
        if !near_exempt {
            return self.moves[self.linear(from)];
        }
        offsets
            .iter()
            .enumerate()
            .fold(0u32, |m, (k, off)| if self.move_allowed(from, *off, exempt) { m | 1 << k } else { m })
    }

    /// Whether the move `from -> from + off` is allowed. `exempt` nodes skip
    /// the traversability test for themselves (start and goal).
    fn move_allowed(&self, from: CellIdx, off: CellIdx, exempt: &[CellIdx]) -> bool {
        let to = [from[0] + off[0], from[1] + off[1], from[2] + off[2]];
        if !self.in_bounds(to) {
            return false;
        }
        let ok = |c: CellIdx| exempt.contains(&c) || self.traversable(c);
        if !ok(to) {
            return false;
        }
        let nz = off.iter().filter(|&&o| o != 0).count();
        if nz <= 1 {
            return true;
        }
        // every proper sub-step of the move
        for mask in 1u8..7 {
            let sub = [
                if mask & 1 != 0 { off[0] } else { 0 },
                if mask & 2 != 0 { off[1] } else { 0 },
                if mask & 4 != 0 { off[2] } else { 0 },
            ];
            if sub == [0, 0, 0] || sub == off {
                continue;
            }
            if !ok([from[0] + sub[0], from[1] + sub[1], from[2] + sub[2]]) {
                return false;
            }
        }
        true
    }
}

/// Heap entry. Costs are non-negative, so their bit patterns order the
/// same way as the values and compare as integers.
#[derive(Clone, Copy, PartialEq, Eq)]
struct OpenEntry {
    f: u64,
    g: u64,
    node: u32,
}

impl OpenEntry {
    #[inline]
    fn new(f: f64, g: f64, node: usize) -> Self {
        debug_assert!(f >= 0.0 && g >= 0.0);
        Self { f: f.to_bits(), g: g.to_bits(), node: node as u32 }
    }

    #[inline]
    fn g(&self) -> f64 {
        f64::from_bits(self.g)
    }
}

impl Ord for OpenEntry {
    // max-heap: smallest f first, then larger g, then smaller node id
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.cmp(&self.f).then(self.g.cmp(&other.g)).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable search state; stamps avoid clearing the dense arrays per query.
#[derive(Debug, Default)]
pub struct PathPlanner {
    g: Vec<f64>,
    parent: Vec<u32>,
    stamp: Vec<u32>,
    closed: Vec<u32>,
    epoch: u32,
    offsets: Vec<CellIdx>,
    weights: Vec<f64>,
    /// Nodes expanded since construction.
    pub expansions: u64,
}

const NO_PARENT: u32 = u32::MAX;

impl PathPlanner {
    pub fn new() -> Self {
        let offsets = neighbor_offsets();
        let weights = offsets
            .iter()
            .map(|o| ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt())
            .collect();
        Self { offsets, weights, ..Default::default() }
    }

    fn reset(&mut self, n: usize) {
        if self.stamp.len() != n {
            self.g = vec![0.0; n];
            self.parent = vec![NO_PARENT; n];
            self.stamp = vec![0; n];
            self.closed = vec![0; n];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.closed.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    #[inline]
    fn g_of(&self, i: usize) -> f64 {
        if self.stamp[i] == self.epoch {
            self.g[i]
        } else {
            f64::INFINITY
        }
    }

    /// Shortest path from `a` to `b`. `None` when unreachable or either end
    /// lies outside the grid.
    pub fn astar(&mut self, graph: &PlanningGraph, a: &Vec3, b: &Vec3) -> Option<Path> {
        let s = graph.node_of(a)?;
        let t = graph.node_of(b)?;
        if s == t {
            return Some(direct_path(a, b));
        }
        let n = graph.node_count();
        self.reset(n);
        let step = graph.step();
        let exempt = [s, t];
        let si = graph.linear(s);
        let ti = graph.linear(t);
        let mut open = BinaryHeap::new();
        self.g[si] = 0.0;
        self.stamp[si] = self.epoch;
        self.parent[si] = NO_PARENT;
        open.push(OpenEntry::new(octile_distance(s, t) * step, 0.0, si));
        while let Some(e) = open.pop() {
            let (g, node) = (e.g(), e.node);
            let ni = node as usize;
            if self.closed[ni] == self.epoch || g > self.g_of(ni) {
                continue;
            }
            self.closed[ni] = self.epoch;
            self.expansions += 1;
            if ni == ti {
                return Some(self.extract(graph, si, ti, a, b));
            }
            let c = graph.delinear(ni);
            let mut mask = graph.allowed_moves(c, &self.offsets, &exempt);
            while mask != 0 {
                let k = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                let off = self.offsets[k];
                let nc = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
                let nj = graph.linear(nc);
                if self.closed[nj] == self.epoch {
                    continue;
                }
                let ng = g + self.weights[k] * step;
                if ng < self.g_of(nj) {
                    self.g[nj] = ng;
                    self.stamp[nj] = self.epoch;
                    self.parent[nj] = node;
                    open.push(OpenEntry::new(ng + octile_distance(nc, t) * step, ng, nj));
                }
            }
        }
        None
    }

    /// Single-source Dijkstra from node `s` until every goal node is settled.
    fn settle_goals(&mut self, graph: &PlanningGraph, s: CellIdx, goal_nodes: &[Option<CellIdx>]) {
        let n = graph.node_count();
        self.reset(n);
        let step = graph.step();
        let mut exempt: Vec<CellIdx> = vec![s];
        exempt.extend(goal_nodes.iter().flatten().copied());
        let si = graph.linear(s);
        let mut remaining: Vec<usize> =
            goal_nodes.iter().flatten().map(|&c| graph.linear(c)).filter(|&i| i != si).collect();
        remaining.sort_unstable();
        remaining.dedup();
        self.g[si] = 0.0;
        self.stamp[si] = self.epoch;
        self.parent[si] = NO_PARENT;
        let mut open = BinaryHeap::new();
        open.push(OpenEntry::new(0.0, 0.0, si));
        while !remaining.is_empty() {
            let Some(e) = open.pop() else { break };
            let (g, node) = (e.g(), e.node);
            let ni = node as usize;
            if self.closed[ni] == self.epoch || g > self.g_of(ni) {
                continue;
            }
            self.closed[ni] = self.epoch;
            self.expansions += 1;
            if let Ok(pos) = remaining.binary_search(&ni) {
                remaining.remove(pos);
            }
            let c = graph.delinear(ni);
            // goals are exempt only as endpoints, not as corridors
            if ni != si && !graph.traversable(c) {
                continue;
            }
            let mut mask = graph.allowed_moves(c, &self.offsets, &exempt);
            while mask != 0 {
                let k = mask.trailing_zeros() as usize;
                mask &= mask - 1;
                let off = self.offsets[k];
                let nc = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
                let nj = graph.linear(nc);
                if self.closed[nj] == self.epoch {
                    continue;
                }
                let ng = g + self.weights[k] * step;
                if ng < self.g_of(nj) {
                    self.g[nj] = ng;
                    self.stamp[nj] = self.epoch;
                    self.parent[nj] = node;
                    open.push(OpenEntry::new(ng, ng, nj));
                }
            }
        }
    }

    /// Single-source Dijkstra from `a` that stops once every goal node is
    /// settled. Returns one path (or `None`) per goal.
    pub fn paths_to_many(&mut self, graph: &PlanningGraph, a: &Vec3, goals: &[Vec3]) -> Vec<Option<Path>> {
        let Some(s) = graph.node_of(a) else { return vec![None; goals.len()] };
        let goal_nodes: Vec<Option<CellIdx>> = goals.iter().map(|g| graph.node_of(g)).collect();
        self.settle_goals(graph, s, &goal_nodes);
        let si = graph.linear(s);
        goals
            .iter()
            .zip(&goal_nodes)
            .map(|(b, gn)| {
                let t = (*gn)?;
                if t == s {
                    return Some(direct_path(a, b));
                }
                let ti = graph.linear(t);
                (self.closed[ti] == self.epoch).then(|| self.extract(graph, si, ti, a, b))
            })
            .collect()
    }

    fn extract(&self, graph: &PlanningGraph, si: usize, ti: usize, a: &Vec3, b: &Vec3) -> Path {
        let mut nodes = vec![ti];
        let mut cur = ti;
        while cur != si {
            cur = self.parent[cur] as usize;
            nodes.push(cur);
        }
        nodes.reverse();
        let mut waypoints = Vec::with_capacity(nodes.len() + 2);
        waypoints.push(*a);
        for &i in &nodes {
            let c = graph.node_center(graph.delinear(i));
            if waypoints.last() != Some(&c) {
                waypoints.push(c);
            }
        }
        if waypoints.last() != Some(b) {
            waypoints.push(*b);
        }
        Path { length: polyline_length(&waypoints), waypoints }
    }
}

fn direct_path(a: &Vec3, b: &Vec3) -> Path {
    if a == b {
        Path { waypoints: vec![*a], length: 0.0 }
    } else {
        Path { waypoints: vec![*a, *b], length: (b - a).norm() }
    }
}

pub fn polyline_length(pts: &[Vec3]) -> f64 {
    pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Convenience wrapper: shortest path over known-Free voxels at native
/// resolution.
pub fn astar_path(grid: &OccupancyGrid, a: &Vec3, b: &Vec3) -> Option<Path> {
    PathPlanner::new().astar(&PlanningGraph::new(grid), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridConfig;

    fn free_grid(n: usize, res: f64) -> OccupancyGrid {
        let mut g = OccupancyGrid::new(GridConfig::new(Vec3::zeros(), res, [n, n, n]).unwrap());
        for i in 0..g.config().num_cells() {
            g.set_linear(i, VoxelState::Free);
        }
        g
    }

    #[test]
    fn same_point_is_zero_length() {
        let g = free_grid(5, 1.0);
        let p = Vec3::new(2.5, 2.5, 2.5);
        let path = astar_path(&g, &p, &p).unwrap();
        assert_eq!(path.length, 0.0);
        assert_eq!(path.waypoints.len(), 1);
    }

    #[test]
    fn straight_corridor() {
        let g = free_grid(20, 0.2);
        let a = g.config().center([3, 5, 5]);
        let b = g.config().center([13, 5, 5]);
        let path = astar_path(&g, &a, &b).unwrap();
        assert!((path.length - 2.0).abs() < 1e-9, "{}", path.length);
    }

    #[test]
    fn no_corner_cutting() {
        let mut g = free_grid(3, 1.0);
        // block (1,0,0): the diagonal (0,0,0)->(1,1,0) must detour
        let cfg = g.config().clone();
        let mut g2 = OccupancyGrid::new(cfg.clone());
        for i in 0..cfg.num_cells() {
            let s = if cfg.delinear(i) == [1, 0, 0] { VoxelState::Occupied } else { VoxelState::Free };
            g2.set_linear(i, s);
        }
        g = g2;
        let a = cfg.center([0, 0, 0]);
        let b = cfg.center([1, 1, 0]);
        let path = astar_path(&g, &a, &b).unwrap();
        assert!((path.length - 2.0).abs() < 1e-9, "{}", path.length);
    }

    #[test]
    fn unknown_space_blocks() {
        let mut g = OccupancyGrid::new(GridConfig::new(Vec3::zeros(), 1.0, [6, 1, 1]).unwrap());
        for x in [0, 1, 2, 4, 5] {
            let i = g.config().linear([x, 0, 0]);
            g.set_linear(i, VoxelState::Free);
        }
        assert!(astar_path(&g, &Vec3::new(0.5, 0.5, 0.5), &Vec3::new(5.5, 0.5, 0.5)).is_none());
    }

    #[test]
    fn many_goals_match_pairwise() {
        let g = free_grid(12, 0.5);
        let a = Vec3::new(0.3, 0.4, 0.2);
        let goals = vec![Vec3::new(5.1, 3.3, 2.2), Vec3::new(1.0, 5.7, 0.3), Vec3::new(0.3, 0.4, 0.2)];
        let mut pp = PathPlanner::new();
        let graph = PlanningGraph::new(&g);
        let many = pp.paths_to_many(&graph, &a, &goals);
        for (b, m) in goals.iter().zip(many) {
            let single = pp.astar(&graph, &a, b).unwrap();
            assert!((single.length - m.unwrap().length).abs() < 1e-9);
        }
    }

    #[test]
    fn octile_is_exact_in_free_space() {
        let g = free_grid(10, 1.0);
        let cfg = g.config();
        let a = cfg.center([1, 2, 3]);
        let b = cfg.center([8, 4, 9]);
        let path = astar_path(&g, &a, &b).unwrap();
        assert!((path.length - octile_distance([1, 2, 3], [8, 4, 9])).abs() < 1e-9);
    }
}
