//! Incremental frontier tracking and uniform downsampling into sphere-center
//! candidates.

use std::collections::BTreeMap;

use crate::grid::{CellIdx, GridConfig, OccupancyGrid, FACE_NEIGHBORS};
use crate::obstacle_index::{dist2, lex_cmp};
use crate::Vec3;

/// Default downsampling leaf edge, meters.
pub const DEFAULT_LEAF_SIZE: f64 = 2.0;

/// Current frontier cells keyed by linear index, each with its world center.
#[derive(Debug, Clone, Default)]
pub struct FrontierSet {
    cells: BTreeMap<usize, Vec3>,
    dirty_region: Option<(CellIdx, CellIdx)>,
}

impl FrontierSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Frontier set of `grid` computed by scanning every cell.
    pub fn from_full_scan(grid: &OccupancyGrid) -> Self {
        let cfg = grid.config();
        let cells = (0..cfg.num_cells())
            .filter(|&i| grid.is_frontier(cfg.delinear(i)))
            .map(|i| (i, cfg.center_of_linear(i)))
            .collect();
        Self { cells, dirty_region: None }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.cells.contains_key(&i)
    }

    pub fn center(&self, i: usize) -> Option<Vec3> {
        self.cells.get(&i).copied()
    }

    /// Cells in ascending linear-index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, Vec3)> + '_ {
        self.cells.iter().map(|(&i, &p)| (i, p))
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells.keys().copied()
    }

    /// Copy holding only the cells accepted by `keep`.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> FrontierSet {
        let cells = self.cells.iter().filter(|(&i, _)| keep(i)).map(|(&i, &p)| (i, p)).collect();
        Self { cells, dirty_region: None }
    }

    /// Bounding box of cells re-examined by the last update.
    pub fn dirty_region(&self) -> Option<(CellIdx, CellIdx)> {
        self.dirty_region
    }

    /// Re-examine every changed cell and its face neighbours.
    pub fn update(&mut self, grid: &OccupancyGrid, changed: &[usize]) {
        let cfg = grid.config();
        let mut lo = [i32::MAX; 3];
        let mut hi = [i32::MIN; 3];
        for &i in changed {
            let c = cfg.delinear(i);
            for off in std::iter::once(&[0, 0, 0]).chain(FACE_NEIGHBORS.iter()) {
                let n = [c[0] + off[0], c[1] + off[1], c[2] + off[2]];
                if !cfg.in_bounds(n) {
                    continue;
                }
                for ax in 0..3 {
                    lo[ax] = lo[ax].min(n[ax]);
                    hi[ax] = hi[ax].max(n[ax]);
                }
                let j = cfg.linear(n);
                if grid.is_frontier(n) {
                    self.cells.entry(j).or_insert_with(|| cfg.center(n));
                } else {
                    self.cells.remove(&j);
                }
            }
        }
        self.dirty_region = (lo[0] <= hi[0]).then_some((lo, hi));
    }

    /// One representative frontier cell per occupied cubic leaf.
    pub fn downsample(&self, cfg: &GridConfig, leaf_size: f64) -> CenterCandidates {
        let mut leaves: BTreeMap<[i64; 3], Vec<(usize, Vec3)>> = BTreeMap::new();
        for (i, p) in self.iter() {
            let g = (p - cfg.origin) / leaf_size;
            let key = [g.x.floor() as i64, g.y.floor() as i64, g.z.floor() as i64];
            leaves.entry(key).or_default().push((i, p));
        }
        let centers = leaves
            .into_values()
            .map(|members| {
                let centroid =
                    members.iter().fold(Vec3::zeros(), |acc, (_, p)| acc + p) / members.len() as f64;
                let (cell, position) = members
                    .into_iter()
                    .min_by(|a, b| {
                        dist2(&a.1, &centroid)
                            .total_cmp(&dist2(&b.1, &centroid))
                            .then_with(|| lex_cmp(&a.1, &b.1))
                    })
                    .expect("leaf has members");
                CenterCandidate { cell, position }
            })
            .collect();
        CenterCandidates { leaf_size, centers }
    }
}

/// A downsampled frontier representative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterCandidate {
    pub cell: usize,
    pub position: Vec3,
}

#[derive(Debug, Clone, Default)]
pub struct CenterCandidates {
    pub leaf_size: f64,
    pub centers: Vec<CenterCandidate>,
}

impl CenterCandidates {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}
