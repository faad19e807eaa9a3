//! Incremental exact nearest-neighbour index over obstacle points.
//!
//! Points live in a logarithmic stack of static, median-split k-d trees
//! (each level more than twice the size of the next). Inserting a batch merges
//! it with every level that is not more than twice its size and rebuilds that
//! one tree, so rebuild work is amortised `O(log n)` per point and queries
//! visit `O(log n)` trees.

use std::cmp::Ordering;
use std::collections::HashSet;

use crate::Vec3;

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub point: Vec3,
    pub dist: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ObstacleIndex {
    levels: Vec<KdTree>,
    seen: HashSet<[u64; 3]>,
    len: usize,
}

impl ObstacleIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Insert points; points already present are ignored.
    pub fn insert_batch<I: IntoIterator<Item = Vec3>>(&mut self, pts: I) {
        let mut fresh: Vec<Vec3> = Vec::new();
        for p in pts {
            if self.seen.insert(point_key(&p)) {
                fresh.push(p);
            }
        }
        if fresh.is_empty() {
            return;
        }
        self.len += fresh.len();
        while let Some(last) = self.levels.last() {
            if last.pts.len() > 2 * fresh.len() {
                break;
            }
            let last = self.levels.pop().expect("checked non-empty");
            fresh.extend(last.pts);
        }
        self.levels.push(KdTree::build(fresh));
    }

    pub fn insert(&mut self, p: Vec3) {
        self.insert_batch(std::iter::once(p));
    }

    /// Exact nearest obstacle point to `q`; `None` when the index is empty.
    /// Equidistant points resolve to the lexicographically smallest.
    pub fn nearest(&self, q: &Vec3) -> Option<Nearest> {
        let mut best = Best { d2: f64::INFINITY, point: None };
        for tree in &self.levels {
            tree.search(q, &mut best);
        }
        best.point.map(|p| Nearest { point: p, dist: best.d2.sqrt() })
    }

    /// Distance to the nearest obstacle, infinite when there is none.
    pub fn clearance(&self, q: &Vec3) -> f64 {
        self.nearest(q).map_or(f64::INFINITY, |n| n.dist)
    }

    /// Whether some obstacle point lies strictly closer than `r` to `q`.
    /// Same answer as `clearance(q) < r`, without finding the nearest.
    pub fn any_within(&self, q: &Vec3, r: f64) -> bool {
        let bound = r * r * (1.0 + 1e-9);
        self.levels.iter().any(|t| any_rec(&t.pts, &t.axes, q, r, bound))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec3> {
        self.levels.iter().flat_map(|t| t.pts.iter())
    }
}

fn point_key(p: &Vec3) -> [u64; 3] {
    // +0.0 folds -0.0 onto 0.0
    [(p.x + 0.0).to_bits(), (p.y + 0.0).to_bits(), (p.z + 0.0).to_bits()]
}

/// Squared distance in a fixed summation order so every caller (including
/// brute-force checks) gets bit-identical values.
#[inline]
pub fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Lexicographic order on coordinates; -0.0 and 0.0 compare equal.
#[inline]
pub fn lex_cmp(a: &Vec3, b: &Vec3) -> Ordering {
    let c = |u: f64, v: f64| (u + 0.0).total_cmp(&(v + 0.0));
    c(a.x, b.x).then(c(a.y, b.y)).then(c(a.z, b.z))
}

struct Best {
    d2: f64,
    point: Option<Vec3>,
}

impl Best {
    #[inline]
    fn offer(&mut self, p: &Vec3, d2: f64) {
        let better = match &self.point {
            None => true,
            Some(cur) => d2 < self.d2 || (d2 == self.d2 && lex_cmp(p, cur) == Ordering::Less),
        };
        if better {
            self.d2 = d2;
            self.point = Some(*p);
        }
    }
}

/// Static k-d tree stored implicitly: the node of a slice is its middle
/// element, with the left and right halves as children.
#[derive(Debug, Clone)]
struct KdTree {
    pts: Vec<Vec3>,
    axes: Vec<u8>,
}

impl KdTree {
    fn build(mut pts: Vec<Vec3>) -> Self {
        let mut axes = vec![0u8; pts.len()];
        build_rec(&mut pts, &mut axes);
        Self { pts, axes }
    }

    fn search(&self, q: &Vec3, best: &mut Best) {
        search_rec(&self.pts, &self.axes, q, best);
    }
}

fn build_rec(pts: &mut [Vec3], axes: &mut [u8]) {
    if pts.is_empty() {
        return;
    }
    let mut lo = pts[0];
    let mut hi = pts[0];
    for p in pts.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let spread = hi - lo;
    let ax = if spread.x >= spread.y && spread.x >= spread.z {
        0
    } else if spread.y >= spread.z {
        1
    } else {
        2
    };
    let mid = pts.len() / 2;
    pts.select_nth_unstable_by(mid, |a, b| a[ax].total_cmp(&b[ax]).then_with(|| lex_cmp(a, b)));
    axes[mid] = ax as u8;
    let (lp, rp) = pts.split_at_mut(mid);
    let (la, ra) = axes.split_at_mut(mid);
    build_rec(lp, la);
    build_rec(&mut rp[1..], &mut ra[1..]);
}

fn search_rec(pts: &[Vec3], axes: &[u8], q: &Vec3, best: &mut Best) {
    if pts.is_empty() {
        return;
    }
    let mid = pts.len() / 2;
    let p = &pts[mid];
    best.offer(p, dist2(q, p));
    let ax = axes[mid] as usize;
    let diff = q[ax] - p[ax];
    let (left, right) = (&pts[..mid], &pts[mid + 1..]);
    let (la, ra) = (&axes[..mid], &axes[mid + 1..]);
    if diff <= 0.0 {
        search_rec(left, la, q, best);
        if diff * diff <= best.d2 {
            search_rec(right, ra, q, best);
        }
    } else {
        search_rec(right, ra, q, best);
        if diff * diff <= best.d2 {
            search_rec(left, la, q, best);
        }
    }
}

fn any_rec(pts: &[Vec3], axes: &[u8], q: &Vec3, r: f64, bound: f64) -> bool {
    if pts.is_empty() {
        return false;
    }
    let mid = pts.len() / 2;
    let p = &pts[mid];
    if dist2(q, p).sqrt() < r {
        return true;
    }
    let ax = axes[mid] as usize;
    let diff = q[ax] - p[ax];
    let (left, right) = (&pts[..mid], &pts[mid + 1..]);
    let (la, ra) = (&axes[..mid], &axes[mid + 1..]);
    let (near, na, far, fa) = if diff <= 0.0 { (left, la, right, ra) } else { (right, ra, left, la) };
    any_rec(near, na, q, r, bound) || (diff * diff <= bound && any_rec(far, fa, q, r, bound))
}
