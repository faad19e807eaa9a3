//! Scenario files: flat TOML key/value documents describing one episode.
//!
//! Every tunable appears as a key so a written scenario is self-describing.
//! Missing keys take their defaults; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::BaselineParams;
use crate::bubble::BubbleParams;
use crate::error::{Error, Result};
use crate::grid::GridConfig;
use crate::motion::{MotionConfig, MotionLimits};
use crate::sensor::{FovKind, SensorSpec};
use crate::tour::GainParams;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontEnd {
    Bubble,
    Baseline,
}

impl fmt::Display for FrontEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrontEnd::Bubble => "bubble",
            FrontEnd::Baseline => "baseline",
        })
    }
}

impl FromStr for FrontEnd {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bubble" => Ok(FrontEnd::Bubble),
            "baseline" => Ok(FrontEnd::Baseline),
            other => Err(Error::Config(format!("unknown front-end `{other}` (expected bubble or baseline)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Ground-truth map, relative to the scenario file.
    pub map: String,
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
    pub resolution: f64,
    pub start: [f64; 3],
    pub start_yaw_deg: f64,
    /// Seed-dependent horizontal offset of the start position, m.
    pub start_jitter: f64,
    pub seed: u64,
    pub time_limit: f64,
    pub frontend: FrontEnd,

    pub sensor_kind: FovKind,
    pub sensor_hfov_deg: f64,
    pub sensor_vfov_deg: f64,
    pub sensor_range: f64,
    pub sensor_rays_h: usize,
    pub sensor_rays_v: usize,
    pub sensor_rate_hz: f64,
    pub range_noise_sigma: f64,
    /// Planners assume this fraction of the sensor range.
    pub planning_range_fraction: f64,

    pub v_max: f64,
    pub a_max: f64,
    pub yaw_rate_max: f64,
    pub horizon: f64,
    pub dt: f64,
    pub corner_speed: f64,
    pub corner_angle_deg: f64,
    pub max_corner_deviation: f64,

    pub lambda: f64,
    pub queue_size: usize,
    pub replan_period: f64,
    pub quiet_rounds: usize,
    pub astar_coarsen: usize,
    /// Frontier cells still unobserved after this many arrivals at a
    /// viewpoint claiming them are no longer planned for.
    pub frontier_max_visits: usize,

    pub leaf_size: f64,
    pub r_max: f64,
    pub r_fallback: f64,
    pub n_az: usize,
    pub n_pol: usize,
    pub polar_min_deg: f64,
    pub polar_max_deg: f64,
    pub n_yaw: usize,
    pub d_safe: f64,
    pub fallback_az: usize,
    pub fallback_radii: usize,
    pub fallback_polar: usize,

    pub split_len: f64,
    pub baseline_radii: usize,
    pub baseline_az: usize,
    pub baseline_heights: usize,
    pub baseline_radius_min: f64,
    pub baseline_radius_max: f64,
    pub baseline_height_step: f64,
    pub baseline_eval_stride: usize,
    /// Stop scoring ray-cast candidates that can no longer win (both
    /// front-ends). Does not change any result, only the cast count.
    pub prune_scoring: bool,

    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let bubble = BubbleParams::default();
        let baseline = BaselineParams::default();
        let limits = MotionLimits::default();
        let motion = MotionConfig::default();
        let gain = GainParams::default();
        Self {
            name: "scenario".into(),
            map: "map.vox".into(),
            bounds_min: [0.0; 3],
            bounds_max: [10.0, 10.0, 3.0],
            resolution: 0.2,
            start: [5.0, 5.0, 1.5],
            start_yaw_deg: 0.0,
            start_jitter: 0.5,
            seed: 1,
            time_limit: 600.0,
            frontend: FrontEnd::Bubble,
            sensor_kind: FovKind::Panoramic,
            sensor_hfov_deg: 360.0,
            sensor_vfov_deg: 90.0,
            sensor_range: 8.0,
            sensor_rays_h: 128,
            sensor_rays_v: 16,
            sensor_rate_hz: 10.0,
            range_noise_sigma: 0.0,
            planning_range_fraction: 0.9,
            v_max: limits.v_max,
            a_max: limits.a_max,
            yaw_rate_max: limits.yaw_rate_max,
            horizon: limits.horizon,
            dt: motion.dt,
            corner_speed: motion.corner_speed,
            corner_angle_deg: motion.corner_angle.to_degrees(),
            max_corner_deviation: motion.max_corner_deviation,
            lambda: gain.lambda,
            queue_size: gain.n_q,
            replan_period: 2.0,
            quiet_rounds: 3,
            astar_coarsen: 2,
            frontier_max_visits: 2,
            leaf_size: bubble.leaf_size,
            r_max: bubble.r_max,
            r_fallback: bubble.r_fallback,
            n_az: bubble.n_az,
            n_pol: bubble.n_pol,
            polar_min_deg: bubble.polar_min.to_degrees(),
            polar_max_deg: bubble.polar_max.to_degrees(),
            n_yaw: bubble.n_yaw,
            d_safe: bubble.d_safe,
            fallback_az: bubble.fallback_az,
            fallback_radii: bubble.fallback_radii,
            fallback_polar: bubble.fallback_polar,
            split_len: baseline.split_len,
            baseline_radii: baseline.n_radii,
            baseline_az: baseline.n_az,
            baseline_heights: baseline.n_heights,
            baseline_radius_min: baseline.radius_min,
            baseline_radius_max: baseline.radius_max,
            baseline_height_step: baseline.height_step,
            baseline_eval_stride: baseline.eval_stride,
            prune_scoring: bubble.prune_scoring,
            base_dir: PathBuf::new(),
        }
    }
}

fn scenario_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Scenario { path: path.display().to_string(), msg: msg.into() }
}

/// Parse the right-hand side of `key=value` as a TOML value, falling back to
/// a bare string (so `--set frontend=baseline` works unquoted).
fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| scenario_err(path, e.to_string()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| scenario_err(path, e.to_string()))?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string())?;
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let key = key.trim();
        let mut table = toml::Table::try_from(&*self).map_err(|e| Error::Config(e.to_string()))?;
        let Some(old) = table.get(key) else {
            return Err(Error::Config(format!("unknown scenario key `{key}`")));
        };
        let mut value = parse_value(raw.trim());
        // integers are accepted where floats are expected
        if let (toml::Value::Float(_), toml::Value::Integer(i)) = (old, &value) {
            value = toml::Value::Float(*i as f64);
        }
        table.insert(key.to_string(), value);
        let base_dir = std::mem::take(&mut self.base_dir);
        *self = table.try_into().map_err(|e: toml::de::Error| Error::Config(format!("`{key}`: {e}")))?;
        self.base_dir = base_dir;
        Ok(())
    }

    pub fn map_path(&self) -> PathBuf {
        self.base_dir.join(&self.map)
    }

    pub fn grid_config(&self) -> Result<GridConfig> {
        GridConfig::from_bounds(Vec3::from(self.bounds_min), Vec3::from(self.bounds_max), self.resolution)
    }

    pub fn sensor(&self) -> SensorSpec {
        SensorSpec {
            kind: self.sensor_kind,
            horizontal_fov: self.sensor_hfov_deg.to_radians(),
            vertical_fov: self.sensor_vfov_deg.to_radians(),
            max_range: self.sensor_range,
        }
    }

    /// The sensor model planners reason with (shortened range).
    pub fn planning_sensor(&self) -> SensorSpec {
        self.sensor().with_range(self.sensor_range * self.planning_range_fraction)
    }

    pub fn motion_limits(&self) -> MotionLimits {
        MotionLimits { v_max: self.v_max, a_max: self.a_max, yaw_rate_max: self.yaw_rate_max, horizon: self.horizon }
    }

    pub fn motion_config(&self) -> MotionConfig {
        MotionConfig {
            dt: self.dt,
            corner_speed: self.corner_speed,
            corner_angle: self.corner_angle_deg.to_radians(),
            max_corner_deviation: self.max_corner_deviation,
        }
    }

    pub fn gain_params(&self) -> GainParams {
        GainParams { lambda: self.lambda, n_q: self.queue_size }
    }

    pub fn bubble_params(&self) -> BubbleParams {
        BubbleParams {
            leaf_size: self.leaf_size,
            r_max: self.r_max,
            r_fallback: self.r_fallback,
            n_az: self.n_az,
            n_pol: self.n_pol,
            polar_min: self.polar_min_deg.to_radians(),
            polar_max: self.polar_max_deg.to_radians(),
            n_yaw: self.n_yaw,
            d_safe: self.d_safe,
            fallback_az: self.fallback_az,
            fallback_radii: self.fallback_radii,
            fallback_polar: self.fallback_polar,
            prune_scoring: self.prune_scoring,
            ..BubbleParams::default()
        }
    }

    pub fn baseline_params(&self) -> BaselineParams {
        BaselineParams {
            split_len: self.split_len,
            n_radii: self.baseline_radii,
            n_az: self.baseline_az,
            n_heights: self.baseline_heights,
            radius_min: self.baseline_radius_min,
            radius_max: self.baseline_radius_max,
            height_step: self.baseline_height_step,
            n_yaw: self.n_yaw,
            d_safe: self.d_safe,
            eval_stride: self.baseline_eval_stride,
            prune_scoring: self.prune_scoring,
            ..BaselineParams::default()
        }
    }

    /// Structural checks that do not need the map.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        self.grid_config()?;
        self.sensor().validate()?;
        if !self.motion_limits().is_valid() {
            return fail("v_max, a_max, yaw_rate_max and horizon must be positive".into());
        }
        if !(self.sensor_rate_hz > 0.0) || !(self.dt > 0.0) {
            return fail("sensor_rate_hz and dt must be positive".into());
        }
        let steps = 1.0 / (self.sensor_rate_hz * self.dt);
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
            return fail(format!("sensor period must be a whole number of dt steps (got {steps})"));
        }
        if self.sensor_rays_h == 0 || self.sensor_rays_v == 0 {
            return fail("sensor ray counts must be positive".into());
        }
        if !(self.time_limit >= 0.0) {
            return fail("time_limit must be non-negative".into());
        }
        if self.queue_size == 0 || self.quiet_rounds == 0 || self.astar_coarsen == 0 {
            return fail("queue_size, quiet_rounds and astar_coarsen must be positive".into());
        }
        if !(self.planning_range_fraction > 0.0 && self.planning_range_fraction <= 1.0) {
            return fail("planning_range_fraction must be in (0, 1]".into());
        }
        if !(self.range_noise_sigma >= 0.0) {
            return fail("range_noise_sigma must be non-negative".into());
        }
        let lo = Vec3::from(self.bounds_min);
        let hi = Vec3::from(self.bounds_max);
        let s = Vec3::from(self.start);
        if (0..3).any(|k| s[k] < lo[k] || s[k] >= hi[k]) {
            return fail(format!("start {:?} is outside the bounds", self.start));
        }
        Ok(())
    }
}
