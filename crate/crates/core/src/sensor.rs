//! Sensor field-of-view model shared by planning and simulation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FovKind {
    Cone,
    Panoramic,
}

/// Angular extent and range of a depth sensor. The vertical field of view is
/// symmetric about the horizontal plane; for cones the horizontal field is
/// centred on the yaw heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub kind: FovKind,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub max_range: f64,
}

impl SensorSpec {
    pub fn cone(horizontal_fov: f64, vertical_fov: f64, max_range: f64) -> Self {
        Self { kind: FovKind::Cone, horizontal_fov, vertical_fov, max_range }
    }

    pub fn panoramic(vertical_fov: f64, max_range: f64) -> Self {
        Self { kind: FovKind::Panoramic, horizontal_fov: 2.0 * PI, vertical_fov, max_range }
    }

    pub fn validate(&self) -> Result<()> {
        let in_open = |a: f64| a > 0.0 && a < PI;
        let ok = match self.kind {
            FovKind::Cone => in_open(self.horizontal_fov) && in_open(self.vertical_fov),
            FovKind::Panoramic => {
                (self.horizontal_fov - 2.0 * PI).abs() < 1e-9
                    && self.vertical_fov > 0.0
                    && self.vertical_fov <= PI
            }
        };
        if !ok || !(self.max_range > 0.0) {
            return Err(Error::Config(format!("invalid sensor spec {self:?}")));
        }
        Ok(())
    }

    /// Same sensor with a different range.
    pub fn with_range(mut self, max_range: f64) -> Self {
        self.max_range = max_range;
        self
    }

    /// Range and vertical-FoV check, independent of yaw.
    #[inline]
    pub fn in_range_and_elevation(&self, from: &Vec3, to: &Vec3) -> bool {
        let d = to - from;
        d.norm() <= self.max_range && d.z.atan2(d.x.hypot(d.y)).abs() <= 0.5 * self.vertical_fov + 1e-12
    }

    /// Precomputed form of [`Self::in_range_and_elevation`] for hot loops.
    pub fn range_test(&self) -> RangeTest {
        let half = 0.5 * self.vertical_fov + 1e-12;
        let t = if half < 0.5 * PI { half.tan() } else { f64::INFINITY };
        RangeTest { spec: *self, inside: t * (1.0 - 1e-9), outside: t * (1.0 + 1e-9) }
    }

    /// `(azimuth, elevation, distance)` of `to` seen from `from` if it is in
    /// range and inside the vertical field of view.
    #[inline]
    pub fn bearing(&self, from: &Vec3, to: &Vec3) -> Option<(f64, f64, f64)> {
        let d = to - from;
        let dist = d.norm();
        if dist > self.max_range {
            return None;
        }
        let horiz = d.x.hypot(d.y);
        let el = d.z.atan2(horiz);
        if el.abs() > 0.5 * self.vertical_fov + 1e-12 {
            return None;
        }
        Some((d.y.atan2(d.x), el, dist))
    }

    /// Whether `to` is visible from `from` at heading `yaw` (ignoring occlusion).
    pub fn in_fov(&self, from: &Vec3, yaw: f64, to: &Vec3) -> bool {
        match self.bearing(from, to) {
            None => false,
            Some((az, _, _)) => match self.kind {
                FovKind::Panoramic => true,
                FovKind::Cone => wrap_angle(az - yaw).abs() <= 0.5 * self.horizontal_fov + 1e-12,
            },
        }
    }
}

/// Range and vertical-FoV test that settles clear cases by comparing the
/// slope against the tangent of the half angle and defers to the exact test
/// near the boundary, so answers match it bit for bit.
#[derive(Debug, Clone, Copy)]
pub struct RangeTest {
    spec: SensorSpec,
    inside: f64,
    outside: f64,
}

impl RangeTest {
    #[inline]
    pub fn contains(&self, from: &Vec3, to: &Vec3) -> bool {
        let d = to - from;
        if d.norm() > self.spec.max_range {
            return false;
        }
        let rise = d.z.abs();
        let run = (d.x * d.x + d.y * d.y).sqrt();
        if rise < run * self.inside {
            return true;
        }
        if rise > run * self.outside {
            return false;
        }
        self.spec.in_range_and_elevation(from, to)
    }
}

/// Wrap to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}
