//! Open-path asymmetric TSP over a cost matrix whose node 0 is the depot.
//!
//! Up to [`EXACT_LIMIT`] viewpoints are solved exactly with a subset dynamic
//! program; larger instances use multi-start nearest neighbour followed by
//! Or-opt and 2-opt local search until no move improves.

use super::CostMatrix;

/// Largest viewpoint count solved exactly.
pub const EXACT_LIMIT: usize = 13;

const IMPROVE_EPS: f64 = 1e-9;

/// Visiting order of nodes `1..=n` (node 0, the depot, is implicit at the
/// front).
pub fn solve_atsp(m: &CostMatrix) -> Vec<usize> {
    if m.viewpoints() <= EXACT_LIMIT {
        solve_exact(m)
    } else {
        solve_heuristic(m)
    }
}

/// Cost of the open path `0 -> order[0] -> order[1] -> ...`.
pub fn path_cost(m: &CostMatrix, order: &[usize]) -> f64 {
    let mut prev = 0;
    let mut total = 0.0;
    for &j in order {
        total += m.get(prev, j);
        prev = j;
    }
    total
}

/// Held-Karp over subsets of viewpoints. Ties keep the smallest predecessor.
pub fn solve_exact(m: &CostMatrix) -> Vec<usize> {
    let n = m.viewpoints();
    if n == 0 {
        return Vec::new();
    }
    assert!(n <= 20, "exact ATSP limited to 20 nodes, got {n}");
    let full = 1usize << n;
    let mut dp = vec![f64::INFINITY; full * n];
    let mut pred = vec![u8::MAX; full * n];
    for j in 0..n {
        dp[(1 << j) * n + j] = m.get(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * n + j];
            if !cur.is_finite() {
                continue;
            }
            let mut rest = !mask & (full - 1);
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let next = mask | (1 << k);
                let cand = cur + m.get(j + 1, k + 1);
                let slot = next * n + k;
                if cand < dp[slot] {
                    dp[slot] = cand;
                    pred[slot] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut end = 0;
    for j in 1..n {
        if dp[last_mask * n + j] < dp[last_mask * n + end] {
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = end;
    loop {
        order.push(j + 1);
        let p = pred[mask * n + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.reverse();
    order
}

/// Multi-start nearest neighbour + Or-opt + 2-opt.
pub fn solve_heuristic(m: &CostMatrix) -> Vec<usize> {
    let n = m.viewpoints();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for first in 1..=n {
        let mut order = nearest_neighbor(m, first);
        local_search(m, &mut order);
        let cost = path_cost(m, &order);
        if best.as_ref().is_none_or(|(bc, _)| cost < *bc - IMPROVE_EPS) {
            best = Some((cost, order));
        }
    }
    best.expect("n >= 1").1
}

fn nearest_neighbor(m: &CostMatrix, first: usize) -> Vec<usize> {
    let n = m.viewpoints();
    let mut visited = vec![false; n + 1];
    visited[0] = true;
    visited[first] = true;
    let mut order = vec![first];
    let mut cur = first;
    while order.len() < n {
        let mut next = 0;
        let mut best = f64::INFINITY;
        for j in 1..=n {
            if !visited[j] && (next == 0 || m.get(cur, j) < best) {
                best = m.get(cur, j);
                next = j;
            }
        }
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

fn local_search(m: &CostMatrix, order: &mut Vec<usize>) {
    let mut cost = path_cost(m, order);
    loop {
        if let Some((c, o)) = best_or_opt(m, order, cost) {
            *order = o;
            cost = c;
            continue;
        }
        if let Some((c, o)) = best_two_opt(m, order, cost) {
            *order = o;
            cost = c;
            continue;
        }
        break;
    }
}

/// First improving relocation of a segment of 1..=3 nodes (orientation kept).
fn best_or_opt(m: &CostMatrix, order: &[usize], cost: f64) -> Option<(f64, Vec<usize>)> {
    let n = order.len();
    for len in 1..=3.min(n) {
        for i in 0..=n - len {
            let seg = &order[i..i + len];
            let mut rest: Vec<usize> = order[..i].to_vec();
            rest.extend_from_slice(&order[i + len..]);
            for pos in 0..=rest.len() {
                if pos == i {
                    continue;
                }
                let mut cand = rest[..pos].to_vec();
                cand.extend_from_slice(seg);
                cand.extend_from_slice(&rest[pos..]);
                let c = path_cost(m, &cand);
                if c < cost - IMPROVE_EPS {
                    return Some((c, cand));
                }
            }
        }
    }
    None
}

/// First improving segment reversal, costed exactly (inner edges flip
/// direction in the asymmetric case).
fn best_two_opt(m: &CostMatrix, order: &[usize], cost: f64) -> Option<(f64, Vec<usize>)> {
    let n = order.len();
    for i in 0..n {
        for k in i + 1..n {
            let mut cand = order.to_vec();
            cand[i..=k].reverse();
            let c = path_cost(m, &cand);
            if c < cost - IMPROVE_EPS {
                return Some((c, cand));
            }
        }
    }
    None
}
