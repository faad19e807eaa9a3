//! Kinodynamically limited path following.
//!
//! A waypoint polyline is turned into straight pieces joined by circular
//! fillets. Straight pieces get trapezoidal speed profiles (tangential
//! acceleration <= `a_max`); fillets are flown at constant speed with
//! centripetal acceleration <= `a_max`, so the acceleration vector never
//! exceeds the limit and velocity is continuous. Sharp turns slow to the
//! corner speed, near reversals stop. When the vehicle is already moving the
//! trajectory starts with a braking line and a turning arc tangent to the
//! current velocity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{OccupancyGrid, VoxelState};
use crate::obstacle_index::ObstacleIndex;
use crate::sensor::wrap_angle;
use crate::tour::astar::polyline_length;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits {
    pub v_max: f64,
    pub a_max: f64,
    pub yaw_rate_max: f64,
    /// Receding-horizon arc length, m.
    pub horizon: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self { v_max: 2.5, a_max: 2.5, yaw_rate_max: 1.5, horizon: 15.0 }
    }
}

impl MotionLimits {
    pub fn is_valid(&self) -> bool {
        [self.v_max, self.a_max, self.yaw_rate_max, self.horizon].iter().all(|v| *v > 0.0 && v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Sample period, s.
    pub dt: f64,
    /// Speed through turns sharper than `corner_angle`, m/s.
    pub corner_speed: f64,
    pub corner_angle: f64,
    /// Largest distance a fillet may stray from its corner, m.
    pub max_corner_deviation: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self { dt: 0.02, corner_speed: 0.5, corner_angle: PI / 4.0, max_corner_deviation: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
    pub time: f64,
}

impl MotionState {
    pub fn at_rest(position: Vec3, yaw: f64, time: f64) -> Self {
        Self { position, velocity: Vec3::zeros(), yaw, time }
    }
}

/// Samples at a fixed period; the last sample is at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub samples: Vec<MotionState>,
    pub arc_length: f64,
}

impl Trajectory {
    pub fn hold(state: MotionState, dt: f64) -> Self {
        let s = MotionState { velocity: Vec3::zeros(), ..state };
        Self { dt, samples: vec![s], arc_length: 0.0 }
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |l| l.time) - self.samples.first().map_or(0.0, |f| f.time)
    }

    pub fn end(&self) -> &MotionState {
        self.samples.last().expect("trajectory has at least one sample")
    }
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Line { start: Vec3, dir: Vec3, len: f64 },
    Arc { center: Vec3, e1: Vec3, e2: Vec3, radius: f64, angle: f64, speed: f64 },
}

impl Piece {
    fn len(&self) -> f64 {
        match *self {
            Piece::Line { len, .. } => len,
            Piece::Arc { radius, angle, .. } => radius * angle,
        }
    }

    fn point(&self, s: f64) -> (Vec3, Vec3) {
        match *self {
            Piece::Line { start, dir, .. } => (start + dir * s, dir),
            Piece::Arc { center, e1, e2, radius, .. } => {
                let phi = s / radius;
                let (sn, cs) = phi.sin_cos();
                (center + (e1 * cs + e2 * sn) * radius, -e1 * sn + e2 * cs)
            }
        }
    }

    fn end_point(&self) -> Vec3 {
        self.point(self.len()).0
    }
}

fn unit(v: Vec3) -> Option<Vec3> {
    let n = v.norm();
    (n > 1e-9).then(|| v / n)
}

fn dedup(points: &[Vec3]) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|l| (p - l).norm() > 1e-9) {
            out.push(*p);
        }
    }
    out
}

fn truncate_polyline(points: &[Vec3], max_len: f64) -> Vec<Vec3> {
    let mut out = vec![points[0]];
    let mut acc = 0.0;
    for w in points.windows(2) {
        let l = (w[1] - w[0]).norm();
        if acc + l >= max_len {
            let f = ((max_len - acc) / l).clamp(0.0, 1.0);
            out.push(w[0] + (w[1] - w[0]) * f);
            return dedup(&out);
        }
        acc += l;
        out.push(w[1]);
    }
    out
}

/// Straight pieces with fillets at interior vertices. Returns pieces plus a
/// speed cap for every boundary between consecutive pieces.
fn fillet_polyline(points: &[Vec3], limits: &MotionLimits, cfg: &MotionConfig) -> (Vec<Piece>, Vec<f64>) {
    let pts = dedup(points);
    let mut pieces = Vec::new();
    let mut caps = vec![f64::INFINITY];
    if pts.len() < 2 {
        return (pieces, caps);
    }
    let seg_len: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let mut cursor = pts[0];
    for i in 1..pts.len() {
        let dir_in = unit(pts[i] - pts[i - 1]).expect("deduplicated");
        if i == pts.len() - 1 {
            pieces.push(Piece::Line { start: cursor, dir: dir_in, len: (pts[i] - cursor).norm() });
            caps.push(0.0);
            break;
        }
        let dir_out = unit(pts[i + 1] - pts[i]).expect("deduplicated");
        let cos_t = dir_in.dot(&dir_out).clamp(-1.0, 1.0);
        let theta = cos_t.acos();
        if theta < 1e-6 {
            continue;
        }
        let half = 0.5 * theta;
        let tan_half = half.tan();
        let l_max = 0.5 * seg_len[i - 1].min(seg_len[i]);
        let mut radius = 0.0;
        if theta < 0.97 * PI {
            let r_dev = cfg.max_corner_deviation / (1.0 / half.cos() - 1.0);
            let r_len = l_max / tan_half;
            radius = r_dev.min(r_len);
        }
        let mut speed = limits.v_max.min((limits.a_max * radius).sqrt());
        if theta > cfg.corner_angle {
            speed = speed.min(cfg.corner_speed);
        }
        if radius < 1e-4 || speed < 1e-6 {
            // stop and turn in place
            pieces.push(Piece::Line { start: cursor, dir: dir_in, len: (pts[i] - cursor).norm() });
            caps.push(0.0);
            cursor = pts[i];
            continue;
        }
        let tangent = radius * tan_half;
        let t1 = pts[i] - dir_in * tangent;
        let t2 = pts[i] + dir_out * tangent;
        pieces.push(Piece::Line { start: cursor, dir: dir_in, len: (t1 - cursor).norm().max(0.0) });
        caps.push(speed);
        let bis = unit(dir_out - dir_in).expect("non-degenerate turn");
        let center = pts[i] + bis * (radius / half.cos());
        let e1 = unit(t1 - center).expect("radius > 0");
        pieces.push(Piece::Arc { center, e1, e2: dir_in, radius, angle: theta, speed });
        caps.push(speed);
        cursor = t2;
    }
    (pieces, caps)
}

/// Forward/backward speed passes. `speeds[k]` is the speed at the start of
/// piece `k`. Returns `None` if the fixed initial speed cannot be honoured.
fn plan_speeds(pieces: &[Piece], caps: &[f64], v0: f64, limits: &MotionLimits) -> Option<Vec<f64>> {
    let k = pieces.len();
    let mut v: Vec<f64> = caps.iter().map(|c| c.min(limits.v_max)).collect();
    v[0] = v0.min(v[0]);
    v[k] = 0.0;
    for (i, p) in pieces.iter().enumerate() {
        if let Piece::Arc { speed, .. } = p {
            v[i] = v[i].min(*speed);
            v[i + 1] = v[i + 1].min(*speed);
        }
    }
    for i in 0..k {
        let next = match pieces[i] {
            Piece::Line { len, .. } => (v[i] * v[i] + 2.0 * limits.a_max * len).sqrt(),
            Piece::Arc { .. } => v[i],
        };
        v[i + 1] = v[i + 1].min(next);
    }
    for i in (0..k).rev() {
        let prev = match pieces[i] {
            Piece::Line { len, .. } => (v[i + 1] * v[i + 1] + 2.0 * limits.a_max * len).sqrt(),
            Piece::Arc { .. } => v[i + 1],
        };
        v[i] = v[i].min(prev);
    }
    (v[0] >= v0 - 1e-9).then_some(v)
}

/// Time law of one piece: `(duration, s(t), speed(t))`.
#[derive(Debug, Clone, Copy)]
struct Profile {
    v_in: f64,
    v_peak: f64,
    t1: f64,
    t2: f64,
    t3: f64,
    a: f64,
    constant: bool,
}

impl Profile {
    fn line(len: f64, v_in: f64, v_out: f64, v_max: f64, a: f64) -> Self {
        let peak = v_max.min(((2.0 * a * len + v_in * v_in + v_out * v_out) / 2.0).sqrt()).max(v_in.max(v_out));
        let d1 = (peak * peak - v_in * v_in) / (2.0 * a);
        let d3 = (peak * peak - v_out * v_out) / (2.0 * a);
        let d2 = (len - d1 - d3).max(0.0);
        let t1 = (peak - v_in) / a;
        let t3 = (peak - v_out) / a;
        let t2 = if peak > 1e-12 { d2 / peak } else { 0.0 };
        Self { v_in, v_peak: peak, t1, t2, t3, a, constant: false }
    }

    fn constant(len: f64, v: f64) -> Self {
        let t2 = if v > 1e-12 { len / v } else { 0.0 };
        Self { v_in: v, v_peak: v, t1: 0.0, t2, t3: 0.0, a: 0.0, constant: true }
    }

    fn duration(&self) -> f64 {
        self.t1 + self.t2 + self.t3
    }

    fn eval(&self, t: f64, len: f64) -> (f64, f64) {
        if self.constant {
            return ((self.v_peak * t).min(len), self.v_peak);
        }
        let t = t.clamp(0.0, self.duration());
        if t <= self.t1 {
            return (self.v_in * t + 0.5 * self.a * t * t, self.v_in + self.a * t);
        }
        let s1 = self.v_in * self.t1 + 0.5 * self.a * self.t1 * self.t1;
        if t <= self.t1 + self.t2 {
            return (s1 + self.v_peak * (t - self.t1), self.v_peak);
        }
        let tau = t - self.t1 - self.t2;
        let s = s1 + self.v_peak * self.t2 + self.v_peak * tau - 0.5 * self.a * tau * tau;
        (s.min(len), (self.v_peak - self.a * tau).max(0.0))
    }
}

/// Time-parameterize a polyline starting at rest at `waypoints[0]`.
pub fn time_parameterize(waypoints: &[Vec3], limits: &MotionLimits, cfg: &MotionConfig) -> Trajectory {
    let Some(&first) = waypoints.first() else {
        return Trajectory::hold(MotionState::at_rest(Vec3::zeros(), 0.0, 0.0), cfg.dt);
    };
    let start = MotionState::at_rest(first, 0.0, 0.0);
    time_parameterize_from(&start, waypoints, None, limits, cfg, &|_| true)
}

/// Time-parameterize `waypoints` (whose first point is taken to be
/// `start.position`) from a possibly moving state. `free` reports whether a
/// point may be flown through; it is used to pick a feasible entry turn.
pub fn time_parameterize_from(
    start: &MotionState,
    waypoints: &[Vec3],
    target_yaw: Option<f64>,
    limits: &MotionLimits,
    cfg: &MotionConfig,
    free: &dyn Fn(&Vec3) -> bool,
) -> Trajectory {
    let mut pts = vec![start.position];
    pts.extend(waypoints.iter().skip(1).copied());
    let pts = dedup(&pts);
    let s0 = start.velocity.norm();
    if pts.len() < 2 && s0 < 1e-9 {
        return Trajectory::hold(*start, cfg.dt);
    }

    let poly = truncate_polyline(&pts, limits.horizon);
    let (mut pieces, mut caps, mut speeds) = build_with_entry(start, &poly, limits, cfg, free);
    let total: f64 = pieces.iter().map(Piece::len).sum();
    if total > limits.horizon + 1e-9 {
        cut_pieces(&mut pieces, &mut caps, limits.horizon);
        match plan_speeds(&pieces, &caps, s0, limits) {
            Some(v) => speeds = v,
            None => (pieces, _, speeds) = build_with_entry(start, &poly[..1], limits, cfg, free),
        }
    }
    sample(start, &pieces, &speeds, target_yaw, limits, cfg)
}

/// Drop everything past arc length `max_len`. A cut inside a fillet moves
/// back to the fillet's start so the trajectory can end at rest.
fn cut_pieces(pieces: &mut Vec<Piece>, caps: &mut Vec<f64>, max_len: f64) {
    let mut acc = 0.0;
    for i in 0..pieces.len() {
        let l = pieces[i].len();
        if acc + l > max_len {
            let keep = match &mut pieces[i] {
                Piece::Line { len, .. } => {
                    *len = (max_len - acc).max(0.0);
                    i + 1
                }
                Piece::Arc { .. } => i,
            };
            pieces.truncate(keep);
            caps.truncate(keep + 1);
            if let Some(last) = caps.last_mut() {
                *last = 0.0;
            }
            return;
        }
        acc += l;
    }
}

type Built = (Vec<Piece>, Vec<f64>, Vec<f64>);

fn build_with_entry(
    start: &MotionState,
    poly: &[Vec3],
    limits: &MotionLimits,
    cfg: &MotionConfig,
    free: &dyn Fn(&Vec3) -> bool,
) -> Built {
    let s0 = start.velocity.norm();
    let p = start.position;
    if s0 < 1e-9 {
        let (pieces, caps) = fillet_polyline(poly, limits, cfg);
        let speeds = plan_speeds(&pieces, &caps, 0.0, limits).expect("start at rest is always feasible");
        return (pieces, caps, speeds);
    }
    let u = start.velocity / s0;
    let a = limits.a_max;

    // already heading along the path: keep going if the profile allows it
    if poly.len() >= 2 && unit(poly[1] - p).is_some_and(|d| d.dot(&u) > 1.0 - 1e-9) {
        let (pieces, caps) = fillet_polyline(poly, limits, cfg);
        if let Some(speeds) = plan_speeds(&pieces, &caps, s0, limits) {
            return (pieces, caps, speeds);
        }
    }

    if poly.len() >= 2 {
        for frac in [1.0, 0.75, 0.5, 0.25] {
            let sb = s0 * frac;
            if let Some(built) = entry_turn(p, u, s0, sb, poly, limits, cfg, free) {
                return built;
            }
        }
    }

    // brake to a stop along the current heading, then follow the path
    let brake = s0 * s0 / (2.0 * a);
    let q = p + u * brake;
    let mut rest = vec![p, q];
    if poly.len() >= 2 {
        if segment_free(&q, &poly[1], free) {
            rest.extend_from_slice(&poly[1..]);
        } else {
            rest.extend_from_slice(poly);
        }
    }
    let rest = dedup(&rest);
    // stop exactly at q: the brake line ends with a zero-speed boundary
    let mut pieces = vec![Piece::Line { start: p, dir: u, len: brake }];
    let mut caps = vec![f64::INFINITY, 0.0];
    if rest.len() >= 2 {
        let (more, more_caps) = fillet_polyline(&rest[1..], limits, cfg);
        pieces.extend(more);
        caps.extend(more_caps.into_iter().skip(1));
    }
    let speeds = plan_speeds(&pieces, &caps, s0, limits).unwrap_or_else(|| {
        // braking over exactly v^2/2a always works; guard against rounding
        let mut v = vec![0.0; pieces.len() + 1];
        v[0] = s0;
        v
    });
    (pieces, caps, speeds)
}

fn segment_free(a: &Vec3, b: &Vec3, free: &dyn Fn(&Vec3) -> bool) -> bool {
    let n = ((b - a).norm() / 0.05).ceil().max(1.0) as usize;
    (0..=n).all(|k| free(&(a + (b - a) * (k as f64 / n as f64))))
}

/// Brake from `s0` to `sb` along `u`, turn on an arc of radius `sb^2/a`
/// until heading at a later waypoint, then follow the rest of the path.
#[allow(clippy::too_many_arguments)]
fn entry_turn(
    p: Vec3,
    u: Vec3,
    s0: f64,
    sb: f64,
    poly: &[Vec3],
    limits: &MotionLimits,
    cfg: &MotionConfig,
    free: &dyn Fn(&Vec3) -> bool,
) -> Option<Built> {
    let a = limits.a_max;
    let brake = (s0 * s0 - sb * sb) / (2.0 * a);
    let q = p + u * brake;
    let radius = sb * sb / a;
    for k in 1..poly.len() {
        let w = poly[k];
        let wq = w - q;
        let wx = u.dot(&wq);
        let perp = wq - u * wx;
        let mut pieces = Vec::new();
        let mut caps = vec![f64::INFINITY];
        if brake > 1e-9 {
            pieces.push(Piece::Line { start: p, dir: u, len: brake });
            caps.push(sb);
        }
        let (tangent_start, heading) = match unit(perp) {
            None if wx > 0.0 => (q, u),
            None => continue,
            Some(e) => {
                let wy = perp.norm();
                let rho = (wx * wx + (wy - radius) * (wy - radius)).sqrt();
                if rho <= radius + 1e-9 || radius < 1e-9 {
                    continue;
                }
                let beta = (wy - radius).atan2(wx);
                let alpha = (beta + (radius / rho).asin()).rem_euclid(2.0 * PI);
                let arc = Piece::Arc { center: q + e * radius, e1: -e, e2: u, radius, angle: alpha, speed: sb };
                let (end, heading) = arc.point(arc.len());
                if arc.len() > 1e-9 {
                    let n = (arc.len() / 0.05).ceil() as usize;
                    if !(0..=n).all(|i| free(&arc.point(arc.len() * i as f64 / n as f64).0)) {
                        continue;
                    }
                    pieces.push(arc);
                    caps.push(sb);
                }
                (end, heading)
            }
        };
        if (w - tangent_start).dot(&heading) <= 1e-6 || !segment_free(&p, &q, free) {
            continue;
        }
        if !segment_free(&tangent_start, &w, free) {
            continue;
        }
        let mut rest = vec![tangent_start];
        rest.extend_from_slice(&poly[k..]);
        let (more, more_caps) = fillet_polyline(&rest, limits, cfg);
        if more.is_empty() {
            continue;
        }
        pieces.extend(more);
        caps.extend(more_caps.into_iter().skip(1));
        if let Some(speeds) = plan_speeds(&pieces, &caps, s0, limits) {
            return Some((pieces, caps, speeds));
        }
    }
    None
}

fn sample(
    start: &MotionState,
    pieces: &[Piece],
    speeds: &[f64],
    target_yaw: Option<f64>,
    limits: &MotionLimits,
    cfg: &MotionConfig,
) -> Trajectory {
    let profiles: Vec<Profile> = pieces
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            Piece::Line { len, .. } => Profile::line(*len, speeds[i], speeds[i + 1], limits.v_max, limits.a_max),
            Piece::Arc { speed, .. } => Profile::constant(p.len(), speeds[i].min(*speed)),
        })
        .collect();
    let mut ends = Vec::with_capacity(profiles.len());
    let mut acc = 0.0;
    for pr in &profiles {
        acc += pr.duration();
        ends.push(acc);
    }
    let total = acc;
    let arc_length: f64 = pieces.iter().map(Piece::len).sum();
    let steps = (total / cfg.dt - 1e-9).ceil().max(0.0) as usize;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut yaw = start.yaw;
    let mut k_piece = 0;
    for k in 0..=steps {
        let t = (k as f64 * cfg.dt).min(total);
        while k_piece + 1 < pieces.len() && t > ends[k_piece] {
            k_piece += 1;
        }
        let (position, velocity) = if pieces.is_empty() {
            (start.position, Vec3::zeros())
        } else {
            let t_local = t - if k_piece == 0 { 0.0 } else { ends[k_piece - 1] };
            let (s, v) = profiles[k_piece].eval(t_local, pieces[k_piece].len());
            let (pos, dir) = pieces[k_piece].point(s);
            (pos, dir * v)
        };
        if k > 0 {
            if let Some(target) = target_yaw {
                let step = limits.yaw_rate_max * cfg.dt;
                yaw = wrap_angle(yaw + wrap_angle(target - yaw).clamp(-step, step));
            }
        }
        let velocity = if k == steps { Vec3::zeros() } else { velocity };
        samples.push(MotionState { position, velocity, yaw, time: start.time + k as f64 * cfg.dt });
    }
    if samples.len() == 1 && !pieces.is_empty() {
        samples[0].position = pieces.last().unwrap().end_point();
    }
    Trajectory { dt: cfg.dt, samples, arc_length }
}

/// Whether the remaining part of a trajectory (from sample `from`) must be
/// replanned: it hits an Occupied voxel, passes closer than `d_safe` to an
/// obstacle point, or a new tour is waiting.
pub fn check_replan(
    traj: &Trajectory,
    from: usize,
    grid: &OccupancyGrid,
    index: &ObstacleIndex,
    d_safe: f64,
    new_tour_available: bool,
) -> bool {
    if new_tour_available {
        return true;
    }
    traj.samples.iter().skip(from).any(|s| {
        grid.state_at(&s.position) == VoxelState::Occupied || index.any_within(&s.position, d_safe)
    })
}

/// Length of the polyline the trajectory was built from, for reporting.
pub fn path_length(waypoints: &[Vec3]) -> f64 {
    polyline_length(waypoints)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_fd_accel(t: &Trajectory) -> f64 {
        t.samples
            .windows(3)
            .map(|w| ((w[2].position - w[1].position * 2.0 + w[0].position) / (t.dt * t.dt)).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn straight_line_trapezoid_duration() {
        let limits = MotionLimits { v_max: 2.5, a_max: 2.5, yaw_rate_max: 1.0, horizon: 1000.0 };
        let cfg = MotionConfig::default();
        let t = time_parameterize(&[Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0)], &limits, &cfg);
        assert!((t.duration() - 41.0).abs() <= cfg.dt + 1e-9, "{}", t.duration());
        let vmax = t.samples.iter().map(|s| s.velocity.norm()).fold(0.0, f64::max);
        assert!((vmax - 2.5).abs() < 1e-9);
        assert!((t.end().position - Vec3::new(100.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn empty_and_zero_length_paths_hold() {
        let cfg = MotionConfig::default();
        let limits = MotionLimits::default();
        let t = time_parameterize(&[], &limits, &cfg);
        assert_eq!(t.duration(), 0.0);
        let t = time_parameterize(&[Vec3::new(1.0, 2.0, 3.0)], &limits, &cfg);
        assert_eq!(t.duration(), 0.0);
        assert_eq!(t.samples.len(), 1);
    }

    #[test]
    fn horizon_truncates() {
        let limits = MotionLimits { horizon: 15.0, ..Default::default() };
        let t = time_parameterize(&[Vec3::zeros(), Vec3::new(50.0, 0.0, 0.0)], &limits, &MotionConfig::default());
        assert!(t.arc_length <= 15.0 + 1e-9);
        assert!((t.end().position.x - 15.0).abs() < 1e-6);
    }

    #[test]
    fn corners_respect_acceleration() {
        let limits = MotionLimits::default();
        let cfg = MotionConfig::default();
        let pts = [
            Vec3::zeros(),
            Vec3::new(5.0, 0.0, 0.0),
            Vec3::new(5.0, 5.0, 0.0),
            Vec3::new(8.0, 6.0, 1.0),
            Vec3::new(2.0, 6.0, 1.0),
        ];
        let t = time_parameterize(&pts, &limits, &cfg);
        assert!(max_fd_accel(&t) <= limits.a_max * 1.05, "{}", max_fd_accel(&t));
        assert!(t.samples.iter().all(|s| s.velocity.norm() <= limits.v_max + 1e-6));
    }

    #[test]
    fn moving_start_is_velocity_continuous() {
        let limits = MotionLimits::default();
        let cfg = MotionConfig::default();
        let start = MotionState {
            position: Vec3::zeros(),
            velocity: Vec3::new(2.5, 0.0, 0.0),
            yaw: 0.0,
            time: 3.0,
        };
        for target in [Vec3::new(0.0, 6.0, 0.0), Vec3::new(-4.0, 0.5, 0.0), Vec3::new(8.0, 1.0, 0.0)] {
            let t = time_parameterize_from(&start, &[start.position, target], None, &limits, &cfg, &|_| true);
            // prepend the pre-replan sample to check the junction too
            let mut samples = vec![MotionState { position: -start.velocity * cfg.dt, ..start }];
            samples.extend(t.samples.iter().copied());
            let joined = Trajectory { dt: cfg.dt, samples, arc_length: 0.0 };
            assert!(max_fd_accel(&joined) <= limits.a_max * 1.05, "target {target:?}: {}", max_fd_accel(&joined));
            assert!((t.end().position - target).norm() < 1e-6, "ends at {:?}", t.end().position);
        }
    }
}
