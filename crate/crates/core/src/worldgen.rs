//! Synthetic ground-truth worlds.
//!
//! * `building`: two storeys of rooms and corridors from a binary space
//!   partition, doors of at least 2 m on both floors, slab openings between
//!   the floors and an open double-height courtyard with a few trees.
//! * `forest`: Poisson-disk distributed cylindrical trunks over a ground
//!   layer, `density` trunks per square meter.
//! * `empty`: nothing but optional floor and ceiling layers.
//!
//! Generation is a pure function of the spec (including its seed).

use std::collections::VecDeque;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapio;
use crate::scenario::ScenarioConfig;
use crate::grid::{GridConfig, OccupancyGrid, VoxelState, FACE_NEIGHBORS};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorldKind {
    Building,
    Forest,
    Empty,
}

impl fmt::Display for WorldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WorldKind::Building => "building",
            WorldKind::Forest => "forest",
            WorldKind::Empty => "empty",
        })
    }
}

impl FromStr for WorldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "building" => Ok(WorldKind::Building),
            "forest" => Ok(WorldKind::Forest),
            "empty" => Ok(WorldKind::Empty),
            other => Err(Error::Config(format!("unknown world kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub kind: WorldKind,
    /// Extent in meters; the world box starts at the origin.
    pub size: [f64; 3],
    pub resolution: f64,
    /// Trunks per square meter (forest only).
    pub density: f64,
    pub seed: u64,
    pub floor: bool,
    pub ceiling: bool,
}

impl WorldSpec {
    pub fn new(kind: WorldKind, size: [f64; 3], seed: u64) -> Self {
        Self {
            kind,
            size,
            resolution: 0.2,
            density: 0.1,
            seed,
            floor: kind != WorldKind::Empty,
            ceiling: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    pub truth: OccupancyGrid,
    pub start: Vec3,
    /// Layout attempts needed to pass the connectivity check.
    pub attempts: u32,
}

/// Share of free voxels 6-connected to the start that a building must reach.
pub const MIN_REACHABLE_FRACTION: f64 = 0.9;
const MAX_ATTEMPTS: u32 = 50;

/// Cell indices along `ax` whose centers lie in `[lo, hi)`.
fn cell_range(cfg: &GridConfig, lo: &Vec3, hi: &Vec3, ax: usize) -> std::ops::Range<i64> {
    let (r, o) = (cfg.resolution, cfg.origin[ax]);
    let a = ((lo[ax] - o) / r - 0.5).ceil().max(0.0) as i64;
    let b = ((hi[ax] - o) / r - 0.5).ceil().min(cfg.dims[ax] as f64) as i64;
    a..b.max(a)
}

struct Canvas {
    cfg: GridConfig,
    occ: Vec<bool>,
}

impl Canvas {
    fn new(cfg: GridConfig) -> Self {
        let n = cfg.num_cells();
        Self { cfg, occ: vec![false; n] }
    }

    /// Set every cell whose center lies in the half-open box `[lo, hi)`.
    fn fill(&mut self, lo: Vec3, hi: Vec3, value: bool) {
        let range = |ax: usize| cell_range(&self.cfg, &lo, &hi, ax);
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let i = self.cfg.linear([x as i32, y as i32, z as i32]);
                    self.occ[i] = value;
                }
            }
        }
    }

    fn cylinder(&mut self, cx: f64, cy: f64, radius: f64, z0: f64, z1: f64) {
        let lo = Vec3::new(cx - radius, cy - radius, z0);
        let hi = Vec3::new(cx + radius, cy + radius, z1);
        let range = |ax: usize| cell_range(&self.cfg, &lo, &hi, ax);
        for z in range(2) {
            for y in range(1) {
                for x in range(0) {
                    let c = [x as i32, y as i32, z as i32];
                    let p = self.cfg.center(c);
                    if (p.x - cx).powi(2) + (p.y - cy).powi(2) < radius * radius {
                        let i = self.cfg.linear(c);
                        self.occ[i] = true;
                    }
                }
            }
        }
    }

    fn into_grid(self) -> OccupancyGrid {
        let cfg = self.cfg.clone();
        OccupancyGrid::from_occupied(
            self.cfg,
            self.occ.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| cfg.delinear(i)),
        )
    }
}

/// Free voxels 6-connected to `start` in a fully known grid (boolean mask).
pub fn reachable_free(truth: &OccupancyGrid, start: &Vec3) -> Vec<bool> {
    let cfg = truth.config();
    let mut seen = vec![false; cfg.num_cells()];
    let Some(s) = cfg.cell_of(start) else { return seen };
    let si = cfg.linear(s);
    if truth.state_linear(si) != VoxelState::Free {
        return seen;
    }
    seen[si] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(c) = queue.pop_front() {
        for o in FACE_NEIGHBORS {
            let n = [c[0] + o[0], c[1] + o[1], c[2] + o[2]];
            if !cfg.in_bounds(n) {
                continue;
            }
            let i = cfg.linear(n);
            if !seen[i] && truth.state_linear(i) == VoxelState::Free {
                seen[i] = true;
                queue.push_back(n);
            }
        }
    }
    seen
}

fn reachable_fraction(truth: &OccupancyGrid, start: &Vec3) -> f64 {
    let reach = reachable_free(truth, start).iter().filter(|&&r| r).count();
    let free = truth.cells().iter().filter(|&&s| s == VoxelState::Free).count();
    if free == 0 {
        0.0
    } else {
        reach as f64 / free as f64
    }
}

fn attempt_seed(seed: u64, attempt: u32) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(attempt as u64)
}

pub fn generate(spec: &WorldSpec) -> Result<World> {
    if spec.size.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Config(format!("world size must be positive, got {:?}", spec.size)));
    }
    let cfg = GridConfig::from_bounds(Vec3::zeros(), Vec3::from(spec.size), spec.resolution)?;
    match spec.kind {
        WorldKind::Empty => Ok(empty(spec, cfg)),
        WorldKind::Forest => {
            if !(spec.density >= 0.0) {
                return Err(Error::Config("forest density must be non-negative".into()));
            }
            Ok(forest(spec, cfg))
        }
        WorldKind::Building => {
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(spec.seed, attempt));
                let world = building(spec, cfg.clone(), &mut rng, attempt + 1);
                if reachable_fraction(&world.truth, &world.start) >= MIN_REACHABLE_FRACTION {
                    return Ok(world);
                }
            }
            Err(Error::Config(format!("no connected building layout after {MAX_ATTEMPTS} attempts")))
        }
    }
}

fn ground(spec: &WorldSpec, canvas: &mut Canvas) {
    let [sx, sy, sz] = spec.size;
    let t = spec.resolution;
    if spec.floor {
        canvas.fill(Vec3::zeros(), Vec3::new(sx, sy, t), true);
    }
    if spec.ceiling {
        canvas.fill(Vec3::new(0.0, 0.0, sz - t), Vec3::new(sx, sy, sz), true);
    }
}

fn empty(spec: &WorldSpec, cfg: GridConfig) -> World {
    let mut canvas = Canvas::new(cfg);
    ground(spec, &mut canvas);
    let [sx, sy, sz] = spec.size;
    World { truth: canvas.into_grid(), start: Vec3::new(sx / 2.0, sy / 2.0, sz / 2.0), attempts: 1 }
}

/// Bridson Poisson-disk samples in `[lo, hi]` with spacing `d`, in
/// generation order.
pub fn poisson_disk(rng: &mut ChaCha8Rng, lo: [f64; 2], hi: [f64; 2], d: f64, max_points: usize) -> Vec<[f64; 2]> {
    let w = hi[0] - lo[0];
    let h = hi[1] - lo[1];
    if w <= 0.0 || h <= 0.0 || max_points == 0 {
        return Vec::new();
    }
    let cell = d / 2f64.sqrt();
    let gw = (w / cell).ceil() as usize + 1;
    let gh = (h / cell).ceil() as usize + 1;
    let mut grid: Vec<Option<usize>> = vec![None; gw * gh];
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let slot = |p: [f64; 2]| (((p[1] - lo[1]) / cell) as usize) * gw + ((p[0] - lo[0]) / cell) as usize;
    let fits = |p: [f64; 2], pts: &[[f64; 2]], grid: &[Option<usize>]| -> bool {
        let gx = ((p[0] - lo[0]) / cell) as i64;
        let gy = ((p[1] - lo[1]) / cell) as i64;
        for yy in (gy - 2).max(0)..=(gy + 2).min(gh as i64 - 1) {
            for xx in (gx - 2).max(0)..=(gx + 2).min(gw as i64 - 1) {
                if let Some(j) = grid[yy as usize * gw + xx as usize] {
                    let q = pts[j];
                    if (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) < d * d {
                        return false;
                    }
                }
            }
        }
        true
    };
    let first = [lo[0] + rng.random::<f64>() * w, lo[1] + rng.random::<f64>() * h];
    grid[slot(first)] = Some(0);
    pts.push(first);
    active.push(0);
    while !active.is_empty() && pts.len() < max_points {
        let k = rng.random_range(0..active.len());
        let base = pts[active[k]];
        let mut placed = false;
        for _ in 0..30 {
            let ang = rng.random::<f64>() * std::f64::consts::TAU;
            let rad = d * (1.0 + rng.random::<f64>());
            let p = [base[0] + rad * ang.cos(), base[1] + rad * ang.sin()];
            if p[0] < lo[0] || p[0] > hi[0] || p[1] < lo[1] || p[1] > hi[1] {
                continue;
            }
            if fits(p, &pts, &grid) {
                grid[slot(p)] = Some(pts.len());
                active.push(pts.len());
                pts.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(k);
        }
    }
    pts
}

fn forest(spec: &WorldSpec, cfg: GridConfig) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(attempt_seed(spec.seed, 0));
    let mut canvas = Canvas::new(cfg);
    ground(spec, &mut canvas);
    let [sx, sy, sz] = spec.size;
    let start = Vec3::new(sx / 2.0, sy / 2.0, 1.5f64.min(sz / 2.0));
    let target = (spec.density * sx * sy).round() as usize;
    if target > 0 {
        let spacing = 0.75 / spec.density.sqrt();
        // oversample so trunks dropped near the start can be replaced
        let pts = poisson_disk(&mut rng, [0.0, 0.0], [sx, sy], spacing, target + target / 4 + 8);
        let mut placed = 0;
        for p in pts {
            if placed == target {
                break;
            }
            if (p[0] - start.x).powi(2) + (p[1] - start.y).powi(2) < 2.5 * 2.5 {
                continue;
            }
            let r = rng.random_range(0.15..0.35);
            canvas.cylinder(p[0], p[1], r, 0.0, sz);
            placed += 1;
        }
    }
    World { truth: canvas.into_grid(), start, attempts: 1 }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

impl Rect {
    fn w(&self) -> f64 {
        self.x1 - self.x0
    }
    fn h(&self) -> f64 {
        self.y1 - self.y0
    }
}

/// Vertical wall slab: `axis` 0 is the plane `x = coord` spanning y in
/// `[lo, hi]`, axis 1 the plane `y = coord` spanning x.
#[derive(Debug, Clone, Copy)]
struct Wall {
    axis: usize,
    coord: f64,
    lo: f64,
    hi: f64,
}

const WALL_T: f64 = 0.4;
const DOOR_W: f64 = 2.0;
const DOOR_H: f64 = 2.2;
const MIN_ROOM: f64 = 6.0;
const CORRIDOR_W: f64 = 2.4;
const OPENING: f64 = 2.4;

fn wall_box(w: &Wall, z0: f64, z1: f64) -> (Vec3, Vec3) {
    let half = WALL_T / 2.0;
    if w.axis == 0 {
        (Vec3::new(w.coord - half, w.lo, z0), Vec3::new(w.coord + half, w.hi, z1))
    } else {
        (Vec3::new(w.lo, w.coord - half, z0), Vec3::new(w.hi, w.coord + half, z1))
    }
}

fn split(rect: Rect, depth: usize, rng: &mut ChaCha8Rng, walls: &mut Vec<Wall>, rooms: &mut Vec<Rect>) {
    let can_x = rect.w() >= 2.0 * MIN_ROOM;
    let can_y = rect.h() >= 2.0 * MIN_ROOM;
    if !can_x && !can_y {
        rooms.push(rect);
        return;
    }
    let axis = if can_x && (!can_y || rect.w() >= rect.h()) { 0 } else { 1 };
    let (lo, hi) = if axis == 0 { (rect.x0, rect.x1) } else { (rect.y0, rect.y1) };
    let corridor = depth == 0 && hi - lo >= 2.0 * MIN_ROOM + CORRIDOR_W;
    let margin = MIN_ROOM + if corridor { CORRIDOR_W / 2.0 } else { 0.0 };
    let pos = rng.random_range(lo + margin..=hi - margin);
    let (span_lo, span_hi) = if axis == 0 { (rect.y0, rect.y1) } else { (rect.x0, rect.x1) };
    let cuts = if corridor {
        vec![pos - CORRIDOR_W / 2.0, pos + CORRIDOR_W / 2.0]
    } else {
        vec![pos]
    };
    for &c in &cuts {
        walls.push(Wall { axis, coord: c, lo: span_lo, hi: span_hi });
    }
    let (a, b) = (cuts[0], *cuts.last().unwrap());
    let (first, second) = if axis == 0 {
        (Rect { x1: a, ..rect }, Rect { x0: b, ..rect })
    } else {
        (Rect { y1: a, ..rect }, Rect { y0: b, ..rect })
    };
    if corridor {
        let strip = if axis == 0 { Rect { x0: a, x1: b, ..rect } } else { Rect { y0: a, y1: b, ..rect } };
        rooms.push(strip);
    }
    split(first, depth + 1, rng, walls, rooms);
    split(second, depth + 1, rng, walls, rooms);
}

/// Door centers along `w`, kept clear of abutting perpendicular walls.
fn door_positions(w: &Wall, walls: &[Wall], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let clear = DOOR_W / 2.0 + WALL_T / 2.0 + 0.3;
    let mut blocked: Vec<f64> = vec![w.lo, w.hi];
    for v in walls {
        if v.axis != w.axis
            && v.coord >= w.lo - 1e-9
            && v.coord <= w.hi + 1e-9
            && ((v.lo - w.coord).abs() <= WALL_T || (v.hi - w.coord).abs() <= WALL_T || (v.lo < w.coord && v.hi > w.coord))
        {
            blocked.push(v.coord);
        }
    }
    let ok = |c: f64| blocked.iter().all(|b| (c - b).abs() >= clear);
    let len = w.hi - w.lo;
    let n = ((len / 7.0).round() as usize).max(1);
    let part = len / n as f64;
    let mut out = Vec::new();
    for k in 0..n {
        let (a, b) = (w.lo + part * k as f64, w.lo + part * (k + 1) as f64);
        let found = (0..40).map(|_| rng.random_range(a..=b)).find(|&c| ok(c));
        if let Some(c) = found {
            out.push(c);
        }
    }
    out
}

fn building(spec: &WorldSpec, cfg: GridConfig, rng: &mut ChaCha8Rng, attempts: u32) -> World {
    let [sx, sy, sz] = spec.size;
    let mut canvas = Canvas::new(cfg);
    let floor_top = spec.resolution.max(0.2);
    canvas.fill(Vec3::zeros(), Vec3::new(sx, sy, floor_top), true);
    let storey = sz / 2.0;
    let slab_t = 0.2;

    // courtyard
    let cw = rng.random_range(10.0..=14.0f64).min(sx - 2.0);
    let ch = rng.random_range(10.0..=14.0f64).min(sy - 2.0);
    let ccx = (sx / 2.0 + rng.random_range(-3.0..=3.0)).clamp(cw / 2.0 + 1.0, sx - cw / 2.0 - 1.0);
    let ccy = (sy / 2.0 + rng.random_range(-3.0..=3.0)).clamp(ch / 2.0 + 1.0, sy - ch / 2.0 - 1.0);
    let court = Rect { x0: ccx - cw / 2.0, y0: ccy - ch / 2.0, x1: ccx + cw / 2.0, y1: ccy + ch / 2.0 };

    // outer walls
    let outer = [
        Wall { axis: 0, coord: WALL_T / 2.0, lo: 0.0, hi: sy },
        Wall { axis: 0, coord: sx - WALL_T / 2.0, lo: 0.0, hi: sy },
        Wall { axis: 1, coord: WALL_T / 2.0, lo: 0.0, hi: sx },
        Wall { axis: 1, coord: sy - WALL_T / 2.0, lo: 0.0, hi: sx },
    ];
    let inner = Rect { x0: WALL_T, y0: WALL_T, x1: sx - WALL_T, y1: sy - WALL_T };
    let mut walls = Vec::new();
    let mut rooms = Vec::new();
    split(inner, 0, rng, &mut walls, &mut rooms);

    for w in outer.iter().chain(&walls) {
        let (lo, hi) = wall_box(w, 0.0, sz);
        canvas.fill(lo, hi, true);
    }
    // second-floor slab
    canvas.fill(Vec3::new(0.0, 0.0, storey), Vec3::new(sx, sy, storey + slab_t), true);

    // doors on both floors
    let mut all = outer.to_vec();
    all.extend(&walls);
    for w in &walls {
        for c in door_positions(w, &all, rng) {
            for z0 in [floor_top, storey + slab_t] {
                let door = Wall { lo: c - DOOR_W / 2.0, hi: c + DOOR_W / 2.0, ..*w };
                let (lo, hi) = wall_box(&door, z0, z0 + DOOR_H);
                canvas.fill(lo, hi, false);
            }
        }
    }

    // slab openings between the floors
    let mut openings = 0;
    let candidates: Vec<Rect> = rooms.iter().copied().filter(|r| r.w() > OPENING + 1.0 && r.h() > OPENING + 1.0).collect();
    for (k, r) in candidates.iter().enumerate() {
        let force = openings < 2 && candidates.len() - k <= 2 - openings;
        if force || rng.random::<f64>() < 0.35 {
            let x = rng.random_range(r.x0 + 0.5..=r.x1 - 0.5 - OPENING);
            let y = rng.random_range(r.y0 + 0.5..=r.y1 - 0.5 - OPENING);
            canvas.fill(Vec3::new(x, y, storey), Vec3::new(x + OPENING, y + OPENING, storey + slab_t), false);
            openings += 1;
        }
    }

    // courtyard: open to the sky, walls and slab removed, a few trees
    canvas.fill(Vec3::new(court.x0, court.y0, floor_top), Vec3::new(court.x1, court.y1, sz), false);
    let start = Vec3::new(ccx, ccy, 1.5f64.min(storey - 0.5));
    let trees = poisson_disk(rng, [court.x0 + 1.0, court.y0 + 1.0], [court.x1 - 1.0, court.y1 - 1.0], 3.0, 12);
    let mut planted = 0;
    for p in trees {
        if planted == 5 {
            break;
        }
        if (p[0] - start.x).powi(2) + (p[1] - start.y).powi(2) < 2.5 * 2.5 {
            continue;
        }
        canvas.cylinder(p[0], p[1], 0.25, 0.0, sz);
        planted += 1;
    }
    World { truth: canvas.into_grid(), start, attempts }
}

/// Scenario matching a generated world: bounds, resolution and start taken
/// from it, every other key at its default.
pub fn scenario_for(spec: &WorldSpec, world: &World, name: &str, map_file: &str) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        map: map_file.to_string(),
        bounds_min: [0.0; 3],
        bounds_max: spec.size,
        resolution: spec.resolution,
        start: world.start.into(),
        seed: spec.seed,
        ..ScenarioConfig::default()
    }
}

/// Generate a world and write `<name>.vox` and `<name>.toml` into `dir`.
/// Returns the scenario path.
pub fn write_world(spec: &WorldSpec, dir: &Path, name: &str) -> Result<PathBuf> {
    let world = generate(spec)?;
    std::fs::create_dir_all(dir)?;
    let map_file = format!("{name}.vox");
    std::fs::write(dir.join(&map_file), mapio::voxel_list_string(&world.truth))?;
    let scenario = scenario_for(spec, &world, name, &map_file);
    let path = dir.join(format!("{name}.toml"));
    scenario.save(&path)?;
    Ok(path)
}
