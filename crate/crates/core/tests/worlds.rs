use std::fs;

use bubble_core::grid::VoxelState;
use bubble_core::mapio;
use bubble_core::oracle;
use bubble_core::scenario::ScenarioConfig;
use bubble_core::worldgen::{self, WorldKind, WorldSpec};

#[test]
fn buildings_are_connected_from_the_start() {
    for seed in 1..=3 {
        let spec = WorldSpec::new(WorldKind::Building, [40.0, 40.0, 6.0], seed);
        let w = worldgen::generate(&spec).unwrap();
        let cfg = w.truth.config();
        let start = cfg.cell_of(&w.start).unwrap();
        assert_eq!(w.truth.state(start), VoxelState::Free);
        let reach = oracle::reachable_cells(&w.truth, start).len();
        let free = w.truth.cells().iter().filter(|&&s| s == VoxelState::Free).count();
        assert!(reach as f64 >= 0.9 * free as f64, "seed {seed}: {reach} of {free}");
        // two levels of structure: occupied cells well above the floor
        let high = w.truth.cells().iter().enumerate().filter(|(i, &s)| {
            s == VoxelState::Occupied && cfg.delinear(*i)[2] as f64 * cfg.resolution > 3.2
        });
        assert!(high.count() > 0);
    }
}

#[test]
fn forest_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = WorldSpec::new(WorldKind::Forest, [40.0, 40.0, 5.0], 1);
    spec.density = 0.1;
    let a = worldgen::write_world(&spec, &dir.path().join("a"), "forest").unwrap();
    let b = worldgen::write_world(&spec, &dir.path().join("b"), "forest").unwrap();
    for f in ["forest.toml", "forest.vox"] {
        assert_eq!(
            fs::read(a.parent().unwrap().join(f)).unwrap(),
            fs::read(b.parent().unwrap().join(f)).unwrap(),
            "{f}"
        );
    }
    let other = worldgen::generate(&WorldSpec { seed: 2, ..spec.clone() }).unwrap();
    let first = worldgen::generate(&spec).unwrap();
    assert_ne!(first.truth.cells(), other.truth.cells());
}

#[test]
fn forest_density_controls_trunk_count() {
    let count = |density: f64| {
        let spec = WorldSpec { density, floor: false, ..WorldSpec::new(WorldKind::Forest, [40.0, 40.0, 5.0], 4) };
        let w = worldgen::generate(&spec).unwrap();
        w.truth.cells().iter().filter(|&&s| s == VoxelState::Occupied).count()
    };
    let (sparse, dense) = (count(0.02), count(0.1));
    assert!(sparse > 0 && dense > 2 * sparse, "{sparse} vs {dense}");
}

#[test]
fn empty_world_has_no_obstacles_unless_asked() {
    let spec = WorldSpec::new(WorldKind::Empty, [10.0, 10.0, 3.0], 1);
    let w = worldgen::generate(&spec).unwrap();
    assert!(w.truth.cells().iter().all(|&s| s == VoxelState::Free));
    let w = worldgen::generate(&WorldSpec { ceiling: true, floor: true, ..spec }).unwrap();
    let occ = w.truth.cells().iter().filter(|&&s| s == VoxelState::Occupied).count();
    assert_eq!(occ, 2 * 50 * 50);
}

#[test]
fn written_scenario_loads_with_its_map() {
    let dir = tempfile::tempdir().unwrap();
    let spec = WorldSpec::new(WorldKind::Building, [20.0, 20.0, 6.0], 5);
    let path = worldgen::write_world(&spec, dir.path(), "b").unwrap();
    let cfg = ScenarioConfig::load(&path).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.bounds_max, [20.0, 20.0, 6.0]);
    let truth = mapio::load_truth(&cfg.map_path(), &cfg.grid_config().unwrap()).unwrap();
    let direct = worldgen::generate(&spec).unwrap();
    assert_eq!(truth.cells(), direct.truth.cells());
}

#[test]
fn bad_world_specs_are_rejected() {
    assert!(worldgen::generate(&WorldSpec::new(WorldKind::Forest, [0.0, 10.0, 3.0], 1)).is_err());
    let spec = WorldSpec { density: -1.0, ..WorldSpec::new(WorldKind::Forest, [10.0, 10.0, 3.0], 1) };
    assert!(worldgen::generate(&spec).is_err());
}

#[test]
fn scenario_overrides_and_errors() {
    let mut cfg = ScenarioConfig::default();
    cfg.apply_override("lambda=0.3").unwrap();
    cfg.apply_override("queue_size=9").unwrap();
    cfg.apply_override("frontend=baseline").unwrap();
    assert_eq!((cfg.lambda, cfg.queue_size), (0.3, 9));
    assert!(cfg.apply_override("no_such_key=1").is_err());
    assert!(cfg.apply_override("queue_size=many").is_err());
    assert!(cfg.apply_override("lambda").is_err());
    let bad = ScenarioConfig { start: [50.0, 5.0, 1.0], ..ScenarioConfig::default() };
    assert!(bad.validate().is_err());
    let err = ScenarioConfig::from_toml_str("unknown_key = 3", std::path::Path::new("s.toml"));
    assert!(err.is_err());
}
