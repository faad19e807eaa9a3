use bubble_core::motion::{time_parameterize, MotionConfig, MotionLimits};
use bubble_core::Vec3;
use proptest::prelude::*;

fn dist_to_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let t = if ab.norm_squared() > 0.0 { ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0) } else { 0.0 };
    (a + ab * t - p).norm()
}

fn polyline() -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64, 0.5..4.0f64), 2..8)
        .prop_map(|v| v.into_iter().map(|(x, y, z)| Vec3::new(x, y, z)).collect::<Vec<_>>())
        .prop_filter("segments longer than 5 cm", |pts| pts.windows(2).all(|w| (w[1] - w[0]).norm() > 0.05))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn retimed_polylines_respect_limits(pts in polyline(), v_max in 0.5..3.0f64, a_max in 0.5..3.0f64) {
        let limits = MotionLimits { v_max, a_max, horizon: 1000.0, ..MotionLimits::default() };
        let cfg = MotionConfig::default();
        let traj = time_parameterize(&pts, &limits, &cfg);
        let s = &traj.samples;
        prop_assert!(s.len() >= 2);
        prop_assert!((s[0].position - pts[0]).norm() < 1e-9);
        prop_assert!((traj.end().position - pts[pts.len() - 1]).norm() < 1e-6);
        prop_assert!(traj.end().velocity.norm() < 1e-9);
        let mut prev: Option<Vec3> = None;
        for w in s.windows(2) {
            let dt = w[1].time - w[0].time;
            prop_assert!((dt - cfg.dt).abs() < 1e-9);
            let v = (w[1].position - w[0].position) / dt;
            prop_assert!(v.norm() <= v_max + 1e-6, "speed {} at t={}", v.norm(), w[0].time);
            if let Some(pv) = prev {
                let a = (v - pv).norm() / dt;
                prop_assert!(a <= 1.05 * a_max, "accel {} at t={}", a, w[0].time);
            }
            prev = Some(v);
        }
        for st in s {
            let d = pts.windows(2).map(|w| dist_to_segment(&st.position, &w[0], &w[1])).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= cfg.max_corner_deviation + 1e-6, "{} off the path at t={}", d, st.time);
        }
    }
}

#[test]
fn straight_line_reaches_top_speed_when_long_enough() {
    let limits = MotionLimits { horizon: 1000.0, ..MotionLimits::default() };
    let cfg = MotionConfig::default();
    let traj = time_parameterize(&[Vec3::zeros(), Vec3::new(20.0, 0.0, 0.0)], &limits, &cfg);
    let top = traj.samples.iter().map(|s| s.velocity.norm()).fold(0.0, f64::max);
    assert!((top - limits.v_max).abs() < 1e-9);
    // accelerate, cruise, brake: 20 m at 2.5 m/s with 1 s ramps
    let ideal = 20.0 / limits.v_max + limits.v_max / limits.a_max;
    assert!((traj.duration() - ideal).abs() <= 2.0 * cfg.dt, "{} vs {ideal}", traj.duration());
}
