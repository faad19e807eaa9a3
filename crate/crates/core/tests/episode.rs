use bubble_core::grid::{OccupancyGrid, VoxelState};
use bubble_core::oracle;
use bubble_core::scenario::{FrontEnd, ScenarioConfig};
use bubble_core::sim::{self, Completion, EpisodeResult};
use bubble_core::worldgen::{self, WorldKind, WorldSpec};
use bubble_core::Vec3;

fn room(kind: WorldKind, size: [f64; 3], frontend: FrontEnd) -> (ScenarioConfig, OccupancyGrid) {
    let spec = WorldSpec { floor: true, ..WorldSpec::new(kind, size, 3) };
    let world = worldgen::generate(&spec).unwrap();
    let mut cfg = worldgen::scenario_for(&spec, &world, "room", "room.vox");
    cfg.frontend = frontend;
    (cfg, world.truth)
}

/// Known share of the free cells 6-connected to the start in the truth.
fn oracle_coverage(truth: &OccupancyGrid, r: &EpisodeResult) -> f64 {
    let start = truth.config().cell_of(&r.start).unwrap();
    let reach = oracle::reachable_cells(truth, start);
    let known = reach.iter().filter(|&&i| r.final_map.state_linear(i) != VoxelState::Unknown).count();
    known as f64 / reach.len() as f64
}

fn check_invariants(truth: &OccupancyGrid, r: &EpisodeResult) {
    let m = &r.metrics;
    for w in m.samples.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].explored_volume >= w[0].explored_volume);
        assert!(w[1].flight_distance >= w[0].flight_distance);
    }
    for s in &r.executed {
        assert_ne!(truth.state_at(&s.position), VoxelState::Occupied, "executed pose in obstacle at t={}", s.time);
    }
    let res3 = truth.resolution().powi(3);
    let known = r.final_map.cells().iter().filter(|&&c| c != VoxelState::Unknown).count();
    assert!((m.explored_volume - known as f64 * res3).abs() < 1e-6 * m.explored_volume.max(1.0));
    assert_eq!(m.accounting_mismatches, 0);
}

#[test]
fn empty_room_is_completed_by_both_front_ends() {
    for fe in [FrontEnd::Bubble, FrontEnd::Baseline] {
        let (cfg, truth) = room(WorldKind::Empty, [10.0, 10.0, 3.0], fe);
        let r = sim::run_episode_on(&cfg, &truth).unwrap();
        assert_eq!(r.metrics.completion, Completion::Completed, "{fe}");
        let cov = oracle_coverage(&truth, &r);
        assert!(cov >= 0.99, "{fe}: coverage {cov}");
        assert!((cov - r.metrics.coverage).abs() < 1e-12, "{fe}: reported {} vs oracle {cov}", r.metrics.coverage);
        check_invariants(&truth, &r);
    }
}

#[test]
fn small_forest_is_safe_and_bounded() {
    let (mut cfg, truth) = room(WorldKind::Forest, [16.0, 16.0, 3.0], FrontEnd::Bubble);
    cfg.time_limit = 90.0;
    let r = sim::run_episode_on(&cfg, &truth).unwrap();
    check_invariants(&truth, &r);
    assert!(r.metrics.max_speed <= cfg.v_max + 1e-6);
    // independent finite differences over the executed samples
    let dt = cfg.dt;
    let mut prev: Option<Vec3> = None;
    for w in r.executed.windows(2) {
        let v = (w[1].position - w[0].position) / dt;
        assert!(v.norm() <= cfg.v_max + 1e-6);
        if let Some(pv) = prev {
            assert!((v - pv).norm() / dt <= 1.05 * cfg.a_max, "accel at t={}", w[0].time);
        }
        prev = Some(v);
    }
}

#[test]
fn zero_time_limit_times_out_in_place() {
    let (mut cfg, truth) = room(WorldKind::Empty, [10.0, 10.0, 3.0], FrontEnd::Bubble);
    cfg.time_limit = 0.0;
    let r = sim::run_episode_on(&cfg, &truth).unwrap();
    assert_eq!(r.metrics.completion, Completion::Timeout);
    assert_eq!(r.metrics.flight_distance, 0.0);
}

#[test]
fn same_seed_same_metrics() {
    let (mut cfg, truth) = room(WorldKind::Forest, [12.0, 12.0, 3.0], FrontEnd::Baseline);
    cfg.time_limit = 40.0;
    let a = sim::run_episode_on(&cfg, &truth).unwrap();
    let b = sim::run_episode_on(&cfg, &truth).unwrap();
    assert_eq!(a.metrics.samples, b.metrics.samples);
    assert_eq!(a.metrics.rounds, b.metrics.rounds);
    assert_eq!(a.executed, b.executed);
    cfg.seed += 1;
    let c = sim::run_episode_on(&cfg, &truth).unwrap();
    assert_ne!(a.executed, c.executed);
}

#[test]
fn start_inside_obstacle_is_a_config_error() {
    let (mut cfg, truth) = room(WorldKind::Empty, [10.0, 10.0, 3.0], FrontEnd::Bubble);
    cfg.start = [5.0, 5.0, 0.1];
    assert!(sim::run_episode_on(&cfg, &truth).is_err());
}
