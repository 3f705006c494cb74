//! Optimal single-flow solver.
//!
//! With one flow there is no interference and some optimal schedule is a
//! simple path, so the minimum energy to reach node `i` within `t` slots obeys
//!
//! ```text
//! C(s, t) = 0,   C(i, 1) = w(s, i),
//! C(i, t) = min over j of C(j, t - 1) + w(j, i),   w(i, i) = 0
//! ```
//!
//! where `w(j, i) = theta * N / h(j, i)` is the cheapest direct transmission.

use alloc::vec::Vec;

use crate::netmodel::{NetworkInstance, NodeId};
use crate::validator::{Schedule, SlotAction};

/// Default node-count guard for [`path_brute_force`].
pub const BRUTE_FORCE_MAX_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SingleFlowError {
    #[error("node {destination} is unreachable from node {origin} within {horizon} slots")]
    Unreachable { origin: NodeId, destination: NodeId, horizon: usize },
    #[error("horizon must be at least 1 slot")]
    ZeroHorizon,
    #[error("flow {0} does not exist")]
    NoSuchFlow(usize),
    #[error("brute force refused: {nodes} nodes exceeds the guard of {guard}")]
    TooLarge { nodes: usize, guard: usize },
}

/// Power for `from` alone to make `to` decode with no interference.
/// Infinite on a zero-gain link.
pub fn direct_cost(instance: &NetworkInstance, from: NodeId, to: NodeId) -> f64 {
    let h = instance.gain(from, to);
    if h > 0.0 {
        instance.theta() * instance.noise() / h
    } else {
        f64::INFINITY
    }
}

/// `C(i, t)` for `t = 1..=horizon`, with backpointers.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    horizon: usize,
    source: NodeId,
    cost: Vec<f64>,
    back: Vec<Option<NodeId>>,
}

impl CostTable {
    #[inline]
    fn idx(&self, i: NodeId, t: usize) -> usize {
        debug_assert!(t >= 1 && t <= self.horizon);
        i.0 * self.horizon + (t - 1)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    /// Minimum energy to reach `i` within `t` slots (1-based).
    pub fn cost(&self, i: NodeId, t: usize) -> f64 {
        self.cost[self.idx(i, t)]
    }

    /// The predecessor used for `(i, t)`; `Some(i)` means "wait".
    pub fn back(&self, i: NodeId, t: usize) -> Option<NodeId> {
        self.back[self.idx(i, t)]
    }

    /// Path reaching `destination` by slot `t`, or `None` when unreachable.
    pub fn path_to(&self, instance: &NetworkInstance, destination: NodeId, t: usize) -> Option<PathSchedule> {
        if !self.cost(destination, t).is_finite() {
            return None;
        }
        let mut hops = Vec::new();
        let (mut i, mut t) = (destination, t);
        while i != self.source {
            let j = self.back(i, t).expect("finite cost has a predecessor");
            if j != i {
                hops.push(Hop { from: j, to: i, power: direct_cost(instance, j, i), slot: t });
                i = j;
            }
            t -= 1;
        }
        hops.reverse();
        Some(PathSchedule { hops })
    }
}

/// Fills the cost table from `source`. Runs in `O(n^2 * horizon)`.
pub fn cost_table(instance: &NetworkInstance, source: NodeId, horizon: usize) -> CostTable {
    let n = instance.node_count();
    let mut table = CostTable {
        horizon,
        source,
        cost: alloc::vec![f64::INFINITY; n * horizon],
        back: alloc::vec![None; n * horizon],
    };
    if horizon == 0 {
        return table;
    }
    for i in instance.nodes() {
        let k = table.idx(i, 1);
        if i == source {
            table.cost[k] = 0.0;
        } else {
            let w = direct_cost(instance, source, i);
            if w.is_finite() {
                table.cost[k] = w;
                table.back[k] = Some(source);
            }
        }
    }
    for t in 2..=horizon {
        for i in instance.nodes() {
            let k = table.idx(i, t);
            if i == source {
                table.cost[k] = 0.0;
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = None;
            for j in instance.nodes() {
                let prev = table.cost[table.idx(j, t - 1)];
                let w = if j == i { 0.0 } else { direct_cost(instance, j, i) };
                let c = prev + w;
                // Strict comparison keeps the smallest index on ties.
                if c < best {
                    best = c;
                    arg = Some(j);
                }
            }
            table.cost[k] = best;
            table.back[k] = arg;
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub power: f64,
    pub slot: usize,
}

/// A simple path with one hop per used slot; slots strictly increase.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathSchedule {
    pub hops: Vec<Hop>,
}

impl PathSchedule {
    pub fn cost(&self) -> f64 {
        self.hops.iter().map(|h| h.power).sum()
    }

    /// Node sequence from source to destination. Empty for an empty path.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.hops.len() + 1);
        if let Some(first) = self.hops.first() {
            out.push(first.from);
        }
        out.extend(self.hops.iter().map(|h| h.to));
        out
    }

    /// Schedule of `delay` slots with the hops shifted by `offset` slots.
    pub fn to_schedule(&self, flow: usize, delay: usize, offset: usize) -> Schedule {
        let mut s = Schedule::new(delay);
        self.append_to(&mut s, flow, offset);
        s
    }

    pub fn append_to(&self, schedule: &mut Schedule, flow: usize, offset: usize) {
        for h in &self.hops {
            schedule.push(
                h.slot + offset,
                SlotAction { flow, transmitters: alloc::vec![(h.from, h.power)], receivers: alloc::vec![h.to] },
            );
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingleFlowSolution {
    pub table: CostTable,
    pub path: PathSchedule,
    pub cost: f64,
}

/// Optimal schedule for flow `flow` of `instance` within `horizon` slots.
pub fn solve_single(
    instance: &NetworkInstance,
    flow: usize,
    horizon: usize,
) -> Result<SingleFlowSolution, SingleFlowError> {
    if flow >= instance.flow_count() {
        return Err(SingleFlowError::NoSuchFlow(flow));
    }
    let f = instance.flow(flow);
    solve_between(instance, f.source, f.destination, horizon)
}

/// As [`solve_single`] for an arbitrary pair; `source == destination` costs 0.
pub fn solve_between(
    instance: &NetworkInstance,
    source: NodeId,
    destination: NodeId,
    horizon: usize,
) -> Result<SingleFlowSolution, SingleFlowError> {
    if horizon == 0 {
        return Err(SingleFlowError::ZeroHorizon);
    }
    let table = cost_table(instance, source, horizon);
    let cost = table.cost(destination, horizon);
    let path = table
        .path_to(instance, destination, horizon)
        .ok_or(SingleFlowError::Unreachable { origin: source, destination, horizon })?;
    Ok(SingleFlowSolution { table, path, cost })
}

/// Exhaustive minimum of `sum w` over simple paths `source -> destination`
/// with at most `horizon` edges. Refuses networks above `guard` nodes.
pub fn path_brute_force(
    instance: &NetworkInstance,
    source: NodeId,
    destination: NodeId,
    horizon: usize,
    guard: usize,
) -> Result<f64, SingleFlowError> {
    let n = instance.node_count();
    if n > guard {
        return Err(SingleFlowError::TooLarge { nodes: n, guard });
    }
    if source == destination {
        return Ok(0.0);
    }
    let mut visited = alloc::vec![false; n];
    visited[source.0] = true;
    let mut best = f64::INFINITY;
    dfs(instance, source, destination, horizon, 0.0, &mut visited, &mut best);
    Ok(best)
}

fn dfs(
    instance: &NetworkInstance,
    at: NodeId,
    destination: NodeId,
    hops_left: usize,
    spent: f64,
    visited: &mut [bool],
    best: &mut f64,
) {
    if hops_left == 0 {
        return;
    }
    for next in instance.nodes() {
        if visited[next.0] {
            continue;
        }
        let w = direct_cost(instance, at, next);
        if !w.is_finite() {
            continue;
        }
        let c = spent + w;
        if next == destination {
            if c < *best {
                *best = c;
            }
            continue;
        }
        visited[next.0] = true;
        dfs(instance, next, destination, hops_left - 1, c, visited, best);
        visited[next.0] = false;
    }
}

/// Shortest-path cost from `source` to every node with weights `w`, no
/// delay limit (dense Dijkstra).
pub fn shortest_costs(instance: &NetworkInstance, source: NodeId) -> Vec<f64> {
    let n = instance.node_count();
    let mut dist = alloc::vec![f64::INFINITY; n];
    let mut done = alloc::vec![false; n];
    dist[source.0] = 0.0;
    for _ in 0..n {
        let mut u = None;
        for i in 0..n {
            if !done[i] && dist[i].is_finite() && u.is_none_or(|b: usize| dist[i] < dist[b]) {
                u = Some(i);
            }
        }
        let Some(u) = u else { break };
        done[u] = true;
        for v in 0..n {
            if !done[v] {
                let c = dist[u] + direct_cost(instance, NodeId(u), NodeId(v));
                if c < dist[v] {
                    dist[v] = c;
                }
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{instance_from_links, line3, random_instance};
    use crate::validator::{validate_schedule, DEFAULT_DECODE_TOLERANCE};
    use proptest::prelude::*;

    #[test]
    fn direct_cost_values() {
        let inst = instance_from_links(3, &[(0, 1, 1.0), (1, 2, 0.5)], 1.0, 1.0, &[(0, 2)], 1);
        assert_eq!(direct_cost(&inst, NodeId(0), NodeId(1)), 1.0);
        assert_eq!(direct_cost(&inst, NodeId(0), NodeId(2)), f64::INFINITY);
        let inst = instance_from_links(2, &[(0, 1, 0.5)], 2.0, 1.0, &[(0, 1)], 1);
        assert_eq!(direct_cost(&inst, NodeId(0), NodeId(1)), 4.0);
    }

    #[test]
    fn line_costs() {
        // Oracle: the simple paths 0->2 (4) and 0->1->2 (1 + 1).
        let inst = line3(2);
        let sol = solve_single(&inst, 0, 2).unwrap();
        assert_eq!(sol.table.cost(NodeId(2), 1), 4.0);
        assert_eq!(sol.table.cost(NodeId(2), 2), 2.0);
        assert_eq!(sol.cost, 2.0);
        assert_eq!(sol.path.nodes(), alloc::vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(path_brute_force(&inst, NodeId(0), NodeId(2), 1, 12).unwrap(), 4.0);
        assert_eq!(path_brute_force(&inst, NodeId(0), NodeId(2), 2, 12).unwrap(), 2.0);
        let sched = sol.path.to_schedule(0, 2, 0);
        assert!(validate_schedule(&inst, &sched, 0.0).unwrap().is_clean());
    }

    #[test]
    fn source_is_destination() {
        let inst = line3(3);
        let sol = solve_between(&inst, NodeId(1), NodeId(1), 3).unwrap();
        assert_eq!(sol.cost, 0.0);
        assert!(sol.path.hops.is_empty());
        for t in 1..=3 {
            assert_eq!(sol.table.cost(NodeId(1), t), 0.0);
        }
    }

    #[test]
    fn unreachable_destination() {
        let inst = instance_from_links(4, &[(0, 1, 1.0)], 1.0, 1.0, &[(0, 3)], 3);
        assert!(matches!(solve_single(&inst, 0, 3), Err(SingleFlowError::Unreachable { .. })));
        assert_eq!(path_brute_force(&inst, NodeId(0), NodeId(3), 3, 12).unwrap(), f64::INFINITY);
        assert!(matches!(solve_single(&inst, 0, 0), Err(SingleFlowError::ZeroHorizon)));
    }

    #[test]
    fn brute_force_guard() {
        let inst = random_instance(1, 14, 1, 3);
        assert_eq!(
            path_brute_force(&inst, NodeId(0), NodeId(1), 3, BRUTE_FORCE_MAX_NODES),
            Err(SingleFlowError::TooLarge { nodes: 14, guard: 12 })
        );
    }

    #[test]
    fn slack_delay_matches_dijkstra() {
        for seed in 0..20 {
            let inst = random_instance(seed, 8, 1, 7);
            let f = inst.flow(0);
            let dist = shortest_costs(&inst, f.source);
            let sol = solve_single(&inst, 0, 7).unwrap();
            assert!((sol.cost - dist[f.destination.0]).abs() <= 1e-9 * (1.0 + dist[f.destination.0]));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn dp_matches_path_oracle(seed in 0u64..10_000, n in 2usize..=9, horizon in 1usize..=4) {
            let inst = random_instance(seed, n, 1, horizon);
            let f = inst.flow(0);
            let table = cost_table(&inst, f.source, horizon);
            for t in 1..=horizon {
                let dp = table.cost(f.destination, t);
                let bf = path_brute_force(&inst, f.source, f.destination, t, 12).unwrap();
                prop_assert!((dp - bf).abs() <= 1e-9 * (1.0 + bf), "t={} dp={} bf={}", t, dp, bf);
                if t > 1 {
                    for i in inst.nodes() {
                        prop_assert!(table.cost(i, t) <= table.cost(i, t - 1));
                    }
                }
            }
            if let Some(path) = table.path_to(&inst, f.destination, horizon) {
                let c = table.cost(f.destination, horizon);
                prop_assert!((path.cost() - c).abs() <= 1e-12 * (1.0 + c));
                let nodes = path.nodes();
                let mut sorted = nodes.clone();
                sorted.sort();
                sorted.dedup();
                prop_assert_eq!(sorted.len(), nodes.len());
                prop_assert!(path.hops.windows(2).all(|w| w[0].to == w[1].from && w[0].slot < w[1].slot));
                let report = validate_schedule(&inst, &path.to_schedule(0, horizon, 0), DEFAULT_DECODE_TOLERANCE).unwrap();
                prop_assert!(report.is_clean(), "{:?}", report);
            }
        }
    }
}
