//! Back-end: gain ranking, the fixed-size viewpoint queue, the path-length
//! cost matrix and the open-loop tour.

pub mod astar;
pub mod atsp;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bubble::Viewpoint;
use crate::error::{Error, Result};
use crate::obstacle_index::lex_cmp;
use crate::Vec3;

pub use astar::{astar_path, Path, PathPlanner, PlanningGraph};
pub use atsp::solve_atsp;

/// Cost assigned to pairs with no path, m.
pub const UNREACHABLE_COST: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainParams {
    /// Distance penalty, 1/m.
    pub lambda: f64,
    /// Queue capacity.
    pub n_q: usize,
}

impl Default for GainParams {
    fn default() -> Self {
        Self { lambda: 0.12, n_q: 15 }
    }
}

/// Vehicle state the tour starts from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleConfig {
    pub position: Vec3,
    pub yaw: f64,
    pub velocity: Vec3,
}

impl VehicleConfig {
    pub fn at(position: Vec3) -> Self {
        Self { position, yaw: 0.0, velocity: Vec3::zeros() }
    }
}

/// Viewpoint utility: source radius discounted by straight-line distance.
pub fn gain(v: &Viewpoint, xi: &VehicleConfig, params: &GainParams) -> f64 {
    v.source_bubble_radius * (-params.lambda * (v.position - xi.position).norm()).exp()
}

/// Indices of the `n_q` highest-gain viewpoints, best first. Ties go to the
/// nearer viewpoint, then the lexicographically smaller position.
pub fn select_queue(vps: &[Viewpoint], xi: &VehicleConfig, params: &GainParams) -> Vec<usize> {
    let keyed: Vec<(f64, f64)> = vps
        .iter()
        .map(|v| (gain(v, xi, params), (v.position - xi.position).norm()))
        .collect();
    let mut idx: Vec<usize> = (0..vps.len()).collect();
    idx.sort_by(|&a, &b| {
        keyed[b]
            .0
            .total_cmp(&keyed[a].0)
            .then(keyed[a].1.total_cmp(&keyed[b].1))
            .then_with(|| lex_cmp(&vps[a].position, &vps[b].position))
    });
    idx.truncate(params.n_q);
    idx
}

/// `(n+1) x (n+1)` connection costs; node 0 is the vehicle. Column 0 is zero
/// so the tour never pays to return.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    size: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn zeros(viewpoints: usize) -> Self {
        let size = viewpoints + 1;
        Self { size, data: vec![0.0; size * size] }
    }

    /// Square matrix from rows (used for tests and oracle suites).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let size = rows.len();
        assert!(size >= 1 && rows.iter().all(|r| r.len() == size), "matrix must be square");
        Self { size, data: rows.into_iter().flatten().collect() }
    }

    /// Number of viewpoint nodes (excluding the depot).
    pub fn viewpoints(&self) -> usize {
        self.size - 1
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.size + j] = v;
    }
}

/// Fill the cost matrix with shortest-path lengths. Row 0 comes from one
/// multi-goal Dijkstra from the vehicle, the rest from one A* per
/// unordered pair.
pub fn build_cost_matrix(
    queue: &[Viewpoint],
    xi: &VehicleConfig,
    graph: &PlanningGraph,
    planner: &mut PathPlanner,
) -> Result<CostMatrix> {
    build_cost_matrix_with_paths(queue, xi, graph, planner).map(|(m, _)| m)
}

/// As [`build_cost_matrix`], also returning the paths from the vehicle.
fn build_cost_matrix_with_paths(
    queue: &[Viewpoint],
    xi: &VehicleConfig,
    graph: &PlanningGraph,
    planner: &mut PathPlanner,
) -> Result<(CostMatrix, Vec<Option<Path>>)> {
    let n = queue.len();
    let mut m = CostMatrix::zeros(n);
    if n == 0 {
        return Ok((m, Vec::new()));
    }
    let targets: Vec<Vec3> = queue.iter().map(|v| v.position).collect();
    let from_vehicle = planner.paths_to_many(graph, &xi.position, &targets);
    let reachable: Vec<bool> = from_vehicle.iter().map(Option::is_some).collect();
    if !reachable.iter().any(|&r| r) {
        return Err(Error::AllUnreachable);
    }
    for (j, p) in from_vehicle.iter().enumerate() {
        m.set(0, j + 1, p.as_ref().map_or(UNREACHABLE_COST, |p| p.length));
    }
    // moves are reversible and both ends are exempt either way, so one
    // search serves both directions
    for i in 0..n {
        for j in i + 1..n {
            let cost = if reachable[i] && reachable[j] {
                planner.astar(graph, &targets[i], &targets[j]).map_or(UNREACHABLE_COST, |p| p.length)
            } else {
                UNREACHABLE_COST
            };
            m.set(i + 1, j + 1, cost);
            m.set(j + 1, i + 1, cost);
        }
    }
    Ok((m, from_vehicle))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BackEndTiming {
    pub cost_matrix_secs: f64,
    pub tsp_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TourPlan {
    /// Selected viewpoints in queue (gain) order.
    pub queue: Vec<Viewpoint>,
    /// Visiting order as indices into `queue`.
    pub order: Vec<usize>,
    /// Queue index and path of the first viewpoint in tour order that the
    /// vehicle can reach.
    pub first_leg: Option<(usize, Path)>,
    pub total_cost: f64,
    pub cost_matrix: CostMatrix,
    pub timing: BackEndTiming,
}

impl TourPlan {
    pub fn first_target(&self) -> Option<&Viewpoint> {
        self.order.first().map(|&k| &self.queue[k])
    }
}

/// Queue selection, cost matrix, ATSP and the path of the first leg.
pub fn plan_global_tour(
    vps: &[Viewpoint],
    xi: &VehicleConfig,
    graph: &PlanningGraph,
    planner: &mut PathPlanner,
    params: &GainParams,
) -> Result<TourPlan> {
    let queue: Vec<Viewpoint> = select_queue(vps, xi, params).into_iter().map(|i| vps[i].clone()).collect();
    let t0 = Instant::now();
    let (cost_matrix, mut from_vehicle) = build_cost_matrix_with_paths(&queue, xi, graph, planner)?;
    let t1 = Instant::now();
    let nodes = solve_atsp(&cost_matrix);
    let t2 = Instant::now();
    let total_cost = atsp::path_cost(&cost_matrix, &nodes);
    let order: Vec<usize> = nodes.iter().map(|&j| j - 1).collect();
    let first_leg = order.iter().find_map(|&q| from_vehicle[q].take().map(|p| (q, p)));
    Ok(TourPlan {
        queue,
        order,
        first_leg,
        total_cost,
        cost_matrix,
        timing: BackEndTiming {
            cost_matrix_secs: (t1 - t0).as_secs_f64(),
            tsp_secs: (t2 - t1).as_secs_f64(),
        },
    })
}
