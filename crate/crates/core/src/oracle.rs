//! Brute-force reference implementations used by the verification suites and
//! tests. Each one is written independently of the production code path it
//! checks and favours obviousness over speed.

use std::collections::BTreeSet;

use crate::grid::{CellIdx, GridConfig, OccupancyGrid, VoxelState};
use crate::tour::CostMatrix;
use crate::Vec3;

/// Nearest point by linear scan; ties go to the lexicographically smallest.
pub fn nearest_linear(points: &[Vec3], q: &Vec3) -> Option<(Vec3, f64)> {
    let mut best: Option<(Vec3, f64)> = None;
    for p in points {
        let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
        let d2 = dx * dx + dy * dy + dz * dz;
        let better = match best {
            None => true,
            Some((bp, bd2)) => {
                d2 < bd2 || (d2 == bd2 && (p.x, p.y, p.z).partial_cmp(&(bp.x, bp.y, bp.z)) == Some(std::cmp::Ordering::Less))
            }
        };
        if better {
            best = Some((*p, d2));
        }
    }
    best.map(|(p, d2)| (p, d2.sqrt()))
}

fn floor_cell(cfg: &GridConfig, p: &Vec3) -> CellIdx {
    let g = (p - cfg.origin) / cfg.resolution;
    [g.x.floor() as i32, g.y.floor() as i32, g.z.floor() as i32]
}

/// In-bounds cells hit by points sampled every `step_frac * resolution`
/// along `a -> b` (both ends included).
pub fn dense_sample_cells(cfg: &GridConfig, a: &Vec3, b: &Vec3, step_frac: f64) -> BTreeSet<CellIdx> {
    let len = (b - a).norm();
    let n = (len / (step_frac * cfg.resolution)).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| a + (b - a) * (k as f64 / n as f64))
        .map(|p| floor_cell(cfg, &p))
        .filter(|&c| cfg.in_bounds(c))
        .collect()
}

/// Length of the part of `a -> b` inside the closed box of cell `c` (slab
/// method), in meters.
pub fn segment_cell_overlap(cfg: &GridConfig, a: &Vec3, b: &Vec3, c: CellIdx) -> f64 {
    let lo = cfg.origin + Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64) * cfg.resolution;
    let hi = lo + Vec3::repeat(cfg.resolution);
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for ax in 0..3 {
        if d[ax].abs() < 1e-15 {
            if a[ax] < lo[ax] || a[ax] > hi[ax] {
                return 0.0;
            }
        } else {
            let ta = (lo[ax] - a[ax]) / d[ax];
            let tb = (hi[ax] - a[ax]) / d[ax];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    ((t1 - t0).max(0.0)) * d.norm()
}

/// Cells whose closed box the segment meets, found by testing every cell of
/// the segment's bounding box, with the overlap length of each.
pub fn slab_cells(cfg: &GridConfig, a: &Vec3, b: &Vec3) -> Vec<(CellIdx, f64)> {
    let ca = floor_cell(cfg, a);
    let cb = floor_cell(cfg, b);
    let mut out = Vec::new();
    for z in ca[2].min(cb[2]) - 1..=ca[2].max(cb[2]) + 1 {
        for y in ca[1].min(cb[1]) - 1..=ca[1].max(cb[1]) + 1 {
            for x in ca[0].min(cb[0]) - 1..=ca[0].max(cb[0]) + 1 {
                let c = [x, y, z];
                if !cfg.in_bounds(c) {
                    continue;
                }
                let l = segment_cell_overlap(cfg, a, b, c);
                let touches = l > 0.0 || {
                    // zero-length contact, or a degenerate segment inside the box
                    let lo = cfg.origin + Vec3::new(x as f64, y as f64, z as f64) * cfg.resolution;
                    let hi = lo + Vec3::repeat(cfg.resolution);
                    let inside = |p: &Vec3| (0..3).all(|k| p[k] >= lo[k] && p[k] <= hi[k]);
                    inside(a) || inside(b) || touches_box(a, b, &lo, &hi)
                };
                if touches {
                    out.push((c, l));
                }
            }
        }
    }
    out
}

fn touches_box(a: &Vec3, b: &Vec3, lo: &Vec3, hi: &Vec3) -> bool {
    let d = b - a;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for ax in 0..3 {
        if d[ax].abs() < 1e-15 {
            if a[ax] < lo[ax] || a[ax] > hi[ax] {
                return false;
            }
        } else {
            let ta = (lo[ax] - a[ax]) / d[ax];
            let tb = (hi[ax] - a[ax]) / d[ax];
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
    }
    t0 <= t1
}

/// Whether some Occupied cell overlaps `a -> b` over more than `min_len`
/// meters. Grazing contacts (edges, corners) do not count.
///
/// Candidates are the 27-neighbourhoods of points sampled every half cell:
/// every point of the segment lies within a quarter cell of a sample, so
/// every cell the segment meets is adjacent to some sample's cell.
pub fn segment_blocked(grid: &OccupancyGrid, a: &Vec3, b: &Vec3, min_len: f64) -> bool {
    let cfg = grid.config();
    let n = ((b - a).norm() / (0.5 * cfg.resolution)).ceil().max(1.0) as usize;
    let mut last = None;
    for k in 0..=n {
        let p = a + (b - a) * (k as f64 / n as f64);
        let c = floor_cell(cfg, &p);
        if last == Some(c) {
            continue;
        }
        last = Some(c);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if cfg.in_bounds(q)
                        && grid.state(q) == VoxelState::Occupied
                        && segment_cell_overlap(cfg, a, b, q) > min_len
                    {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Frontier cells by definition: Free with an in-bounds Unknown face
/// neighbour.
pub fn frontier_cells(grid: &OccupancyGrid) -> BTreeSet<usize> {
    let cfg = grid.config();
    let mut out = BTreeSet::new();
    for z in 0..cfg.dims[2] as i32 {
        for y in 0..cfg.dims[1] as i32 {
            for x in 0..cfg.dims[0] as i32 {
                let c = [x, y, z];
                if grid.state(c) != VoxelState::Free {
                    continue;
                }
                let unknown_nb = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]]
                    .iter()
                    .map(|o| [x + o[0], y + o[1], z + o[2]])
                    .any(|n| cfg.in_bounds(n) && grid.state(n) == VoxelState::Unknown);
                if unknown_nb {
                    out.insert(cfg.linear(c));
                }
            }
        }
    }
    out
}

/// Dijkstra on the 26-connected lattice of known-Free cells.
///
/// A diagonal move is allowed only if every cell of the axis-aligned box it
/// spans is Free. The endpoints themselves are exempt from the Free test.
/// Returns the length in meters between the two cell centers.
pub fn lattice_shortest_path(grid: &OccupancyGrid, s: CellIdx, t: CellIdx) -> Option<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let cfg = grid.config();
    if !cfg.in_bounds(s) || !cfg.in_bounds(t) {
        return None;
    }
    let ok = |c: CellIdx| cfg.in_bounds(c) && (c == s || c == t || grid.state(c) == VoxelState::Free);
    let mut dist = vec![f64::INFINITY; cfg.num_cells()];
    dist[cfg.linear(s)] = 0.0;
    // non-negative f64 bit patterns order like the values
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0.0f64.to_bits(), cfg.linear(s))));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let du = f64::from_bits(bits);
        if du > dist[u] {
            continue;
        }
        let c = cfg.delinear(u);
        if c == t {
            return Some(du);
        }
        if c != s && grid.state(c) != VoxelState::Free {
            continue;
        }
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if (dx, dy, dz) == (0, 0, 0) {
                        continue;
                    }
                    let v = [c[0] + dx, c[1] + dy, c[2] + dz];
                    let mut box_ok = true;
                    for bz in c[2].min(v[2])..=c[2].max(v[2]) {
                        for by in c[1].min(v[1])..=c[1].max(v[1]) {
                            for bx in c[0].min(v[0])..=c[0].max(v[0]) {
                                if [bx, by, bz] != c && !ok([bx, by, bz]) {
                                    box_ok = false;
                                }
                            }
                        }
                    }
                    if !box_ok {
                        continue;
                    }
                    let vi = cfg.linear(v);
                    let w = ((dx * dx + dy * dy + dz * dz) as f64).sqrt() * cfg.resolution;
                    if du + w < dist[vi] {
                        dist[vi] = du + w;
                        heap.push(Reverse(((du + w).to_bits(), vi)));
                    }
                }
            }
        }
    }
    None
}

/// Exhaustive minimum over all permutations of the open path from node 0.
/// Only sensible for small matrices.
pub fn brute_force_path_cost(m: &CostMatrix) -> f64 {
    fn rec(m: &CostMatrix, prev: usize, left: &mut Vec<usize>, acc: f64, best: &mut f64) {
        if left.is_empty() {
            *best = best.min(acc);
            return;
        }
        for k in 0..left.len() {
            let j = left.swap_remove(k);
            rec(m, j, left, acc + m.get(prev, j), best);
            left.push(j);
            let last = left.len() - 1;
            left.swap(k, last);
        }
    }
    let mut left: Vec<usize> = (1..m.size()).collect();
    let mut best = f64::INFINITY;
    rec(m, 0, &mut left, 0.0, &mut best);
    if m.size() == 1 {
        0.0
    } else {
        best
    }
}

/// Subset dynamic program for the open path from node 0, written from
/// scratch (bitmask over nodes `1..n`, `cost[mask][last]`).
pub fn subset_dp_path_cost(m: &CostMatrix) -> f64 {
    let n = m.size() - 1;
    if n == 0 {
        return 0.0;
    }
    let full = 1usize << n;
    let mut cost = vec![f64::INFINITY; full * n];
    for j in 0..n {
        cost[(1 << j) * n + j] = m.get(0, j + 1);
    }
    for mask in 1..full {
        for last in 0..n {
            let c = cost[mask * n + last];
            if !c.is_finite() || mask & (1 << last) == 0 {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let nm = mask | (1 << next);
                let v = c + m.get(last + 1, next + 1);
                if v < cost[nm * n + next] {
                    cost[nm * n + next] = v;
                }
            }
        }
    }
    (0..n).map(|j| cost[(full - 1) * n + j]).fold(f64::INFINITY, f64::min)
}

/// Cells reachable from `start` through truth free space (6-connected BFS).
pub fn reachable_cells(truth: &OccupancyGrid, start: CellIdx) -> BTreeSet<usize> {
    let cfg = truth.config();
    let mut seen = BTreeSet::new();
    if !cfg.in_bounds(start) || truth.state(start) == VoxelState::Occupied {
        return seen;
    }
    let mut stack = vec![start];
    seen.insert(cfg.linear(start));
    while let Some(c) = stack.pop() {
        for o in [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]] {
            let n = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            if cfg.in_bounds(n) && truth.state(n) != VoxelState::Occupied && seen.insert(cfg.linear(n)) {
                stack.push(n);
            }
        }
    }
    seen
}
