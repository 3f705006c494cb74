//! Exact minimum-energy schedules for tiny instances.
//!
//! Powers in different slots never interact: a slot's decodes depend only on
//! that slot's transmissions, and a slot's choices only constrain later
//! slots through who has decoded what. So the search runs forward over
//! slots, with the per-flow sets of decoded nodes as the state. In each
//! state every role assignment (who transmits or receives which flow) is
//! enumerated, and the cheapest powers for an assignment come from an LP
//! that does not depend on the state and is cached.
//!
//! Pruning (all optimum-preserving, and switchable off for testing):
//! - a node receives flow `k` only if it has not decoded `k` yet;
//! - a flow does nothing once its destination has decoded;
//! - a flow transmits iff it receives somewhere in the slot;
//! - every receiver has a positive-gain transmitter of its flow, and every
//!   transmitter a positive-gain receiver;
//! - in the last slot only destinations receive.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::linprog::{solve_lp, LinearProgram, LpError, LpOptions, LpStatus};
use crate::netmodel::{NetworkInstance, NodeId};
use crate::validator::{Schedule, SlotAction};

pub const DEFAULT_GUARD: u64 = 10_000_000;

/// Node sets are bitmasks.
const MAX_NODES: usize = 32;

const ZERO_POWER_RATIO: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OracleOptions {
    /// Maximum number of (state, assignment) pairs evaluated.
    pub guard: u64,
    /// At most one transmitter and one receiver per flow and slot.
    pub path_per_flow: bool,
    /// Disable to enumerate every causally valid assignment.
    pub pruning: bool,
    pub lp: LpOptions,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { guard: DEFAULT_GUARD, path_per_flow: false, pruning: true, lp: LpOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("search refused: more than {guard} assignments to evaluate (reached {evaluated} by slot {slot})")]
    GuardExceeded { guard: u64, evaluated: u64, slot: usize },
    #[error("instance has {0} nodes; the exact search supports at most 32")]
    TooManyNodes(usize),
    #[error("no feasible schedule")]
    NoFeasibleSchedule,
    #[error("flow {0} does not exist")]
    NoSuchFlow(usize),
    #[error("horizon must be at least 1 slot")]
    ZeroHorizon,
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub cost: f64,
    pub schedule: Schedule,
    /// (state, assignment) pairs evaluated.
    pub evaluated: u64,
    /// Distinct LPs solved.
    pub lp_solves: u64,
}

/// Per flow: (transmitter mask, receiver mask).
type Assignment = Vec<(u32, u32)>;
/// Per flow: mask of nodes that hold the message.
type State = Vec<u32>;

#[derive(Debug, Clone)]
struct Powered {
    cost: f64,
    /// Per flow, `(node, power)` with zero powers dropped.
    powers: Vec<Vec<(NodeId, f64)>>,
}

struct Search<'a> {
    instance: &'a NetworkInstance,
    opts: &'a OracleOptions,
    n: usize,
    r: usize,
    /// positive[i] = mask of nodes with positive gain from i.
    positive: Vec<u32>,
    cache: BTreeMap<Assignment, Option<Powered>>,
    evaluated: u64,
    lp_solves: u64,
}

fn bits(mask: u32) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&i| mask & (1 << i) != 0)
}

/// All submasks of `mask`, in increasing numeric order.
fn submasks(mask: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut s = 0u32;
    loop {
        out.push(s);
        if s == mask {
            break;
        }
        s = (s.wrapping_sub(mask)) & mask;
    }
    out
}

impl<'a> Search<'a> {
    fn new(instance: &'a NetworkInstance, opts: &'a OracleOptions) -> Self {
        let n = instance.node_count();
        let positive = (0..n)
            .map(|i| {
                (0..n).filter(|&j| instance.gain(NodeId(i), NodeId(j)) > 0.0).fold(0u32, |m, j| m | (1 << j))
            })
            .collect();
        Search {
            instance,
            opts,
            n,
            r: instance.flow_count(),
            positive,
            cache: BTreeMap::new(),
            evaluated: 0,
            lp_solves: 0,
        }
    }

    fn reach(&self, from: u32) -> u32 {
        bits(from).fold(0, |m, i| m | self.positive[i])
    }

    fn done(&self, state: &State, k: usize) -> bool {
        state[k] & (1 << self.instance.flow(k).destination.0) != 0
    }

    fn assignments(&self, state: &State, last: bool) -> Vec<Assignment> {
        let mut out = Vec::new();
        let mut current = vec![(0u32, 0u32); self.r];
        if self.opts.pruning {
            self.pruned(state, last, 0, 0, &mut current, &mut out);
        } else {
            self.unpruned(state, 0, &mut current, &mut out);
        }
        out
    }

    fn pruned(&self, state: &State, last: bool, k: usize, used: u32, cur: &mut Assignment, out: &mut Vec<Assignment>) {
        if k == self.r {
            out.push(cur.clone());
            return;
        }
        cur[k] = (0, 0);
        self.pruned(state, last, k + 1, used, cur, out);
        if self.done(state, k) {
            return;
        }
        let all = (1u32 << self.n) - 1;
        let holders = state[k] & !used;
        let mut rx_cand = self.reach(holders) & !state[k] & !used & all;
        if last {
            rx_cand &= 1 << self.instance.flow(k).destination.0;
        }
        for rx in submasks(rx_cand) {
            if rx == 0 || (self.opts.path_per_flow && rx.count_ones() > 1) {
                continue;
            }
            let tx_cand = bits(holders).filter(|&i| self.positive[i] & rx != 0).fold(0u32, |m, i| m | (1 << i));
            for tx in submasks(tx_cand) {
                if tx == 0 || (self.opts.path_per_flow && tx.count_ones() > 1) {
                    continue;
                }
                if bits(rx).any(|j| self.reach(tx) & (1 << j) == 0) {
                    continue;
                }
                cur[k] = (tx, rx);
                self.pruned(state, last, k + 1, used | tx | rx, cur, out);
            }
        }
        cur[k] = (0, 0);
    }

    /// Every node independently idle, transmitting a flow it holds, or
    /// receiving any flow.
    fn unpruned(&self, state: &State, node: usize, cur: &mut Assignment, out: &mut Vec<Assignment>) {
        if node == self.n {
            let ok = !self.opts.path_per_flow
                || cur.iter().all(|&(tx, rx)| tx.count_ones() <= 1 && rx.count_ones() <= 1);
            if ok {
                out.push(cur.clone());
            }
            return;
        }
        let b = 1u32 << node;
        self.unpruned(state, node + 1, cur, out);
        for k in 0..self.r {
            if state[k] & b != 0 {
                cur[k].0 |= b;
                self.unpruned(state, node + 1, cur, out);
                cur[k].0 &= !b;
            }
            cur[k].1 |= b;
            self.unpruned(state, node + 1, cur, out);
            cur[k].1 &= !b;
        }
    }

    fn powered(&mut self, a: &Assignment) -> Result<Option<Powered>, OracleError> {
        if let Some(p) = self.cache.get(a) {
            return Ok(p.clone());
        }
        let p = self.solve(a)?;
        self.lp_solves += 1;
        self.cache.insert(a.clone(), p.clone());
        Ok(p)
    }

    fn solve(&self, a: &Assignment) -> Result<Option<Powered>, OracleError> {
        let inst = self.instance;
        let vars: Vec<(usize, NodeId)> =
            a.iter().enumerate().flat_map(|(k, &(tx, _))| bits(tx).map(move |i| (k, NodeId(i)))).collect();
        if a.iter().all(|&(_, rx)| rx == 0) {
            return Ok(Some(Powered { cost: 0.0, powers: vec![Vec::new(); self.r] }));
        }
        let mut lp = LinearProgram::new(vec![1.0; vars.len()]);
        for (k, &(_, rx)) in a.iter().enumerate() {
            for j in bits(rx).map(NodeId) {
                let row = vars
                    .iter()
                    .map(|&(g, q)| if g == k { inst.gain(q, j) } else { -inst.theta() * inst.gain(q, j) })
                    .collect();
                lp = lp.ge(row, inst.theta() * inst.noise());
            }
        }
        let sol = solve_lp(&lp, &self.opts.lp)?;
        if sol.status != LpStatus::Optimal {
            return Ok(None);
        }
        let peak = sol.x.iter().fold(0.0f64, |m, &v| m.max(v));
        let mut powers = vec![Vec::new(); self.r];
        let mut cost = 0.0;
        for (&(k, q), &p) in vars.iter().zip(&sol.x) {
            if p > ZERO_POWER_RATIO * peak {
                powers[k].push((q, p));
                cost += p;
            }
        }
        Ok(Some(Powered { cost, powers }))
    }
}

/// Minimum total power over all schedules of `instance`.
pub fn exact_mcue(instance: &NetworkInstance, opts: &OracleOptions) -> Result<OracleSolution, OracleError> {
    let n = instance.node_count();
    if n > MAX_NODES {
        return Err(OracleError::TooManyNodes(n));
    }
    let horizon = instance.delay();
    let mut search = Search::new(instance, opts);
    let start: State = instance.flows().iter().map(|f| 1u32 << f.source.0).collect();

    // layers[t]: state -> (cost, previous state, assignment).
    let mut layers: Vec<BTreeMap<State, (f64, State, Assignment)>> = Vec::with_capacity(horizon + 1);
    let mut first = BTreeMap::new();
    first.insert(start.clone(), (0.0, start, Vec::new()));
    layers.push(first);

    for t in 1..=horizon {
        let mut next: BTreeMap<State, (f64, State, Assignment)> = BTreeMap::new();
        let prev: Vec<(State, f64)> = layers[t - 1].iter().map(|(s, v)| (s.clone(), v.0)).collect();
        for (state, base) in prev {
            for a in search.assignments(&state, t == horizon) {
                search.evaluated += 1;
                if search.evaluated > opts.guard {
                    return Err(OracleError::GuardExceeded { guard: opts.guard, evaluated: search.evaluated, slot: t });
                }
                let Some(p) = search.powered(&a)? else { continue };
                let to: State = state.iter().zip(&a).map(|(&s, &(_, rx))| s | rx).collect();
                let c = base + p.cost;
                let better = next.get(&to).is_none_or(|e| c < e.0);
                if better {
                    next.insert(to, (c, state.clone(), a));
                }
            }
        }
        layers.push(next);
    }

    let goal = layers[horizon]
        .iter()
        .filter(|(s, _)| (0..instance.flow_count()).all(|k| search.done(s, k)))
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map(|(s, v)| (s.clone(), v.0))
        .ok_or(OracleError::NoFeasibleSchedule)?;

    let mut schedule = Schedule::new(horizon);
    let mut state = goal.0;
    for t in (1..=horizon).rev() {
        let (_, prev, a) = layers[t][&state].clone();
        let p = search.powered(&a)?.expect("assignment on the optimal path is feasible");
        for (k, &(_, rx)) in a.iter().enumerate() {
            if rx != 0 {
                schedule.push(
                    t,
                    SlotAction { flow: k, transmitters: p.powers[k].clone(), receivers: bits(rx).map(NodeId).collect() },
                );
            }
        }
        state = prev;
    }
    Ok(OracleSolution { cost: goal.1, schedule, evaluated: search.evaluated, lp_solves: search.lp_solves })
}

/// Exact optimum of flow `flow` alone within `horizon` slots, with
/// cooperative transmission allowed.
pub fn exact_single_flow_via_roles(
    instance: &NetworkInstance,
    flow: usize,
    horizon: usize,
    opts: &OracleOptions,
) -> Result<f64, OracleError> {
    if flow >= instance.flow_count() {
        return Err(OracleError::NoSuchFlow(flow));
    }
    if horizon == 0 {
        return Err(OracleError::ZeroHorizon);
    }
    let sub = instance
        .with_flows(vec![instance.flow(flow)])
        .and_then(|i| i.with_delay(horizon))
        .expect("a valid flow and positive horizon keep the instance valid");
    exact_mcue(&sub, opts).map(|s| s.cost)
}
