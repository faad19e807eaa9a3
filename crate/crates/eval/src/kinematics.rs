//! Speed and acceleration recovered from sampled positions.

use std::fs;
use std::path::Path;

use bubble_core::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Vec3,
}

/// Parse `t x y z yaw` lines as written to `trajectory.txt`.
pub fn parse_trajectory(text: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("trajectory line {}: {e}", n + 1)))?;
        if v.len() < 4 {
            return Err(Error::Config(format!("trajectory line {}: expected t x y z [yaw]", n + 1)));
        }
        out.push(Sample { t: v[0], position: Vec3::new(v[1], v[2], v[3]) });
    }
    Ok(out)
}

pub fn load_trajectory(path: &Path) -> Result<Vec<Sample>> {
    parse_trajectory(&fs::read_to_string(path)?)
}

/// Largest first and second finite differences of a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FdBounds {
    pub max_speed: f64,
    pub max_accel: f64,
    /// Time of the largest acceleration.
    pub max_accel_t: f64,
}

/// Speeds from consecutive samples and accelerations from consecutive speed
/// vectors, each divided by its own time step. Samples that repeat a time
/// stamp are an error.
pub fn fd_bounds(samples: &[Sample]) -> Result<FdBounds> {
    let mut b = FdBounds::default();
    let mut prev: Option<(Vec3, f64)> = None;
    for w in samples.windows(2) {
        let dt = w[1].t - w[0].t;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("non-increasing time stamp at t = {}", w[1].t)));
        }
        let v = (w[1].position - w[0].position) / dt;
        b.max_speed = b.max_speed.max(v.norm());
        if let Some((pv, pdt)) = prev {
            let a = (v - pv).norm() / (0.5 * (dt + pdt));
            if a > b.max_accel {
                b.max_accel = a;
                b.max_accel_t = w[0].t;
            }
        }
        prev = Some((v, dt));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_acceleration_is_recovered() {
        let dt = 0.02;
        let s: Vec<Sample> = (0..200)
            .map(|k| {
                let t = k as f64 * dt;
                Sample { t, position: Vec3::new(0.5 * 1.5 * t * t, 2.0, 1.0) }
            })
            .collect();
        let b = fd_bounds(&s).unwrap();
        assert!((b.max_accel - 1.5).abs() < 1e-9);
        assert!((b.max_speed - 1.5 * 199.0 * dt + 0.5 * 1.5 * dt).abs() < 1e-9);
    }

    #[test]
    fn circle_gives_centripetal_bound() {
        let (r, w, dt) = (2.0, 1.0, 0.001);
        let s: Vec<Sample> = (0..5000)
            .map(|k| {
                let t = k as f64 * dt;
                Sample { t, position: Vec3::new(r * (w * t).cos(), r * (w * t).sin(), 0.0) }
            })
            .collect();
        let b = fd_bounds(&s).unwrap();
        assert!((b.max_speed - r * w).abs() < 1e-3);
        assert!((b.max_accel - r * w * w).abs() < 1e-3);
    }

    #[test]
    fn parse_and_reject() {
        let s = parse_trajectory("0.00 1 2 3 0\n0.02 1.1 2 3 0.5\n").unwrap();
        assert_eq!(s.len(), 2);
        assert!((fd_bounds(&s).unwrap().max_speed - 5.0).abs() < 1e-9);
        assert!(parse_trajectory("0.0 1 2\n").is_err());
        let dup = parse_trajectory("0.00 0 0 0\n0.00 1 0 0\n").unwrap();
        assert!(fd_bounds(&dup).is_err());
    }
}
