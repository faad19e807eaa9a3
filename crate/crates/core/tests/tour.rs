use bubble_core::bubble::{Viewpoint, ViewpointSource};
use bubble_core::grid::{CellIdx, GridConfig, OccupancyGrid, VoxelState};
use bubble_core::oracle;
use bubble_core::tour::atsp::path_cost;
use bubble_core::tour::{
    build_cost_matrix, plan_global_tour, select_queue, solve_atsp, GainParams, PathPlanner, PlanningGraph,
    VehicleConfig, UNREACHABLE_COST,
};
use bubble_core::{Error, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vp(p: Vec3, r: f64) -> Viewpoint {
    Viewpoint {
        position: p,
        yaw: 0.0,
        covered_frontiers: vec![],
        covered_centers: vec![],
        source_bubble_radius: r,
        source: ViewpointSource::Surface,
    }
}

/// Known grid with a wall across x = 10 (gap at high y) and a sealed box
/// around cell (3, 3, 2).
fn world() -> OccupancyGrid {
    let cfg = GridConfig::new(Vec3::zeros(), 0.5, [20, 20, 5]).unwrap();
    let mut g = OccupancyGrid::new(cfg.clone());
    for i in 0..cfg.num_cells() {
        let c = cfg.delinear(i);
        let wall = c[0] == 10 && c[1] < 16;
        let shell = (2..=4).contains(&c[0]) && (2..=4).contains(&c[1]) && (1..=3).contains(&c[2]) && c != [3, 3, 2];
        g.set_linear(i, if wall || shell { VoxelState::Occupied } else { VoxelState::Free });
    }
    g
}

fn center(g: &OccupancyGrid, c: CellIdx) -> Vec3 {
    g.config().center(c)
}

#[test]
fn queue_keeps_the_best_by_gain() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let xi = VehicleConfig::at(Vec3::new(5.0, 5.0, 1.0));
    let params = GainParams::default();
    let vps: Vec<Viewpoint> = (0..40)
        .map(|_| vp(Vec3::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 1.0), rng.random_range(0.2..5.0)))
        .collect();
    let q = select_queue(&vps, &xi, &params);
    assert_eq!(q.len(), params.n_q);
    let g = |i: usize| vps[i].source_bubble_radius * (-params.lambda * (vps[i].position - xi.position).norm()).exp();
    let worst_kept = q.iter().map(|&i| g(i)).fold(f64::INFINITY, f64::min);
    for i in (0..vps.len()).filter(|i| !q.contains(i)) {
        assert!(g(i) <= worst_kept);
    }
    assert!(q.windows(2).all(|w| g(w[0]) >= g(w[1])));
}

#[test]
fn cost_matrix_matches_lattice_oracle() {
    let grid = world();
    let graph = PlanningGraph::new(&grid);
    let mut planner = PathPlanner::new();
    let cells: [CellIdx; 5] = [[1, 1, 1], [15, 2, 2], [12, 18, 1], [8, 12, 3], [18, 10, 0]];
    let xi = VehicleConfig::at(center(&grid, [5, 8, 2]));
    let queue: Vec<Viewpoint> = cells.iter().map(|&c| vp(center(&grid, c), 1.0)).collect();
    let m = build_cost_matrix(&queue, &xi, &graph, &mut planner).unwrap();
    let all: Vec<CellIdx> = std::iter::once([5, 8, 2]).chain(cells).collect();
    for i in 0..all.len() {
        assert_eq!(m.get(i, 0), 0.0);
        for j in 1..all.len() {
            if i == j {
                continue;
            }
            let want = oracle::lattice_shortest_path(&grid, all[i], all[j]).unwrap();
            assert!((m.get(i, j) - want).abs() < 1e-9, "{i}->{j}: {} vs {want}", m.get(i, j));
        }
    }
    let order = solve_atsp(&m);
    assert!((path_cost(&m, &order) - oracle::subset_dp_path_cost(&m)).abs() < 1e-9);
}

#[test]
fn sealed_viewpoint_gets_the_penalty() {
    let grid = world();
    let graph = PlanningGraph::new(&grid);
    let mut planner = PathPlanner::new();
    let xi = VehicleConfig::at(center(&grid, [7, 7, 2]));
    let queue = vec![vp(center(&grid, [3, 3, 2]), 3.0), vp(center(&grid, [7, 12, 2]), 1.0)];
    let m = build_cost_matrix(&queue, &xi, &graph, &mut planner).unwrap();
    assert_eq!(m.get(0, 1), UNREACHABLE_COST);
    assert_eq!(m.get(1, 2), UNREACHABLE_COST);
    assert_eq!(m.get(2, 1), UNREACHABLE_COST);
    assert!(m.get(0, 2) < 10.0);

    let plan = plan_global_tour(&queue, &xi, &graph, &mut planner, &GainParams::default()).unwrap();
    // the sealed viewpoint ranks first by gain but is visited last
    assert_eq!(plan.queue[0].position, queue[0].position);
    assert_eq!(plan.order, vec![1, 0]);
    let (q, path) = plan.first_leg.unwrap();
    assert_eq!(q, 1);
    assert!((path.length - m.get(0, 2)).abs() < 1e-9);

    let only_sealed = vec![queue[0].clone()];
    let err = build_cost_matrix(&only_sealed, &xi, &graph, &mut planner).unwrap_err();
    assert!(matches!(err, Error::AllUnreachable));
}
