//! Per-slot power allocation for one flow against the commitments of
//! flows scheduled before it.
//!
//! [`Blacklist`] records what earlier flows do in each slot. [`pam`] builds
//! a small LP: one decode row per receiver of the new flow, one
//! "still decodes" row per committed receiver, and no variables at all for
//! transmitters that are already busy in the slot.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::linprog::{solve_lp, LinearProgram, LpError, LpOptions, LpStatus};
use crate::netmodel::{NetworkInstance, NodeId};
use crate::validator::SlotAction;

/// Powers below this fraction of the largest power in a solution are
/// treated as exact zeros.
const ZERO_POWER_RATIO: f64 = 1e-12;

/// Slack allowed on a committed receiver's margin before it counts as
/// already broken.
const COMMITTED_MARGIN_SLACK: f64 = 1e-9;

/// One earlier flow's activity in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittedSlot {
    pub slot: usize,
    pub transmitters: Vec<(NodeId, f64)>,
    pub receivers: Vec<NodeId>,
}

/// Everything one earlier flow committed.
#[derive(Debug, Clone, PartialEq)]
pub struct CommittedFlow {
    pub flow: usize,
    /// Threshold the flow was scheduled at.
    pub theta: f64,
    pub slots: Vec<CommittedSlot>,
}

/// Role of a node already taken by an earlier flow in some slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Commitment {
    Transmit { flow: usize, power: f64 },
    Receive { flow: usize },
}

impl Commitment {
    pub fn flow(&self) -> usize {
        match *self {
            Commitment::Transmit { flow, .. } | Commitment::Receive { flow } => flow,
        }
    }
}

/// Append-only record of earlier flows' transmitters and receivers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Blacklist {
    committed: Vec<CommittedFlow>,
    /// slot -> node -> role.
    index: BTreeMap<usize, BTreeMap<NodeId, Commitment>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlacklistError {
    #[error("node {node} already committed to flow {flow} in slot {slot}")]
    NodeBusy { slot: usize, node: NodeId, flow: usize },
    #[error("flow {0} is already committed")]
    FlowAlreadyCommitted(usize),
    #[error("non-positive committed power {power} for node {node} in slot {slot}")]
    NonPositivePower { slot: usize, node: NodeId, power: f64 },
}

impl Blacklist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a flow's per-slot activity. Zero-power transmitters are dropped.
    /// Nothing is changed when an error is returned.
    pub fn commit(&mut self, mut entry: CommittedFlow) -> Result<(), BlacklistError> {
        if self.committed.iter().any(|c| c.flow == entry.flow) {
            return Err(BlacklistError::FlowAlreadyCommitted(entry.flow));
        }
        for s in &mut entry.slots {
            s.transmitters.retain(|&(_, p)| p != 0.0);
        }
        let mut staged: Vec<(usize, NodeId, Commitment)> = Vec::new();
        for s in &entry.slots {
            for &(node, power) in &s.transmitters {
                if !(power > 0.0) {
                    return Err(BlacklistError::NonPositivePower { slot: s.slot, node, power });
                }
                staged.push((s.slot, node, Commitment::Transmit { flow: entry.flow, power }));
            }
            for &node in &s.receivers {
                staged.push((s.slot, node, Commitment::Receive { flow: entry.flow }));
            }
        }
        for (i, &(slot, node, _)) in staged.iter().enumerate() {
            let clash = self.role(slot, node).is_some()
                || staged[..i].iter().any(|&(s2, n2, _)| s2 == slot && n2 == node);
            if clash {
                let flow = self.role(slot, node).map_or(entry.flow, |c| c.flow());
                return Err(BlacklistError::NodeBusy { slot, node, flow });
            }
        }
        for (slot, node, c) in staged {
            self.index.entry(slot).or_default().insert(node, c);
        }
        self.committed.push(entry);
        Ok(())
    }

    pub fn role(&self, slot: usize, node: NodeId) -> Option<Commitment> {
        self.index.get(&slot).and_then(|m| m.get(&node)).copied()
    }

    pub fn contains(&self, slot: usize, node: NodeId) -> bool {
        self.role(slot, node).is_some()
    }

    /// Committed flows in commit order.
    pub fn flows(&self) -> &[CommittedFlow] {
        &self.committed
    }

    pub fn flow_theta(&self, flow: usize) -> Option<f64> {
        self.committed.iter().find(|c| c.flow == flow).map(|c| c.theta)
    }

    /// All committed transmitters in `slot` as `(node, flow, power)`.
    pub fn transmitters(&self, slot: usize) -> Vec<(NodeId, usize, f64)> {
        let mut out = Vec::new();
        if let Some(m) = self.index.get(&slot) {
            for (&node, c) in m {
                if let Commitment::Transmit { flow, power } = *c {
                    out.push((node, flow, power));
                }
            }
        }
        out
    }

    /// All committed receivers in `slot` as `(node, flow)`.
    pub fn receivers(&self, slot: usize) -> Vec<(NodeId, usize)> {
        let mut out = Vec::new();
        if let Some(m) = self.index.get(&slot) {
            for (&node, c) in m {
                if let Commitment::Receive { flow } = *c {
                    out.push((node, flow));
                }
            }
        }
        out
    }

    /// Committed activity of one slot as schedule actions, in commit order.
    pub fn slot_actions(&self, slot: usize) -> Vec<SlotAction> {
        let mut out = Vec::new();
        for c in &self.committed {
            for s in c.slots.iter().filter(|s| s.slot == slot) {
                out.push(SlotAction {
                    flow: c.flow,
                    transmitters: s.transmitters.clone(),
                    receivers: s.receivers.clone(),
                });
            }
        }
        out
    }

    /// The blacklist as it stood after the first `count` commits.
    pub fn truncated(&self, count: usize) -> Blacklist {
        let mut b = Blacklist::new();
        for c in self.committed.iter().take(count) {
            b.commit(c.clone()).expect("prefix of a valid blacklist is valid");
        }
        b
    }
}

/// Threshold at which earlier flows' receivers must keep decoding.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum DisturbanceRule {
    /// The instance threshold.
    #[default]
    TrueTheta,
    /// Each flow's own scheduling threshold (zero headroom for tight flows).
    Scheduling,
    /// Per flow index; flows without an entry fall back to the instance threshold.
    Explicit(Vec<f64>),
}

impl DisturbanceRule {
    fn theta_for(&self, instance: &NetworkInstance, blacklist: &Blacklist, flow: usize) -> f64 {
        match self {
            DisturbanceRule::TrueTheta => instance.theta(),
            DisturbanceRule::Scheduling => blacklist.flow_theta(flow).unwrap_or(instance.theta()),
            DisturbanceRule::Explicit(v) => v.get(flow).copied().unwrap_or(instance.theta()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PamOptions {
    pub disturbance: DisturbanceRule,
    pub lp: LpOptions,
    /// Keep a text dump of the constructed LP in the result.
    pub trace: bool,
}

/// One PAM call: flow `flow` in slot `slot` transmitting from `transmitters`
/// to `receivers` at threshold `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PamRequest<'a> {
    pub flow: usize,
    pub slot: usize,
    pub transmitters: &'a [NodeId],
    pub receivers: &'a [NodeId],
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PamStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamResult {
    pub status: PamStatus,
    /// One entry per requested transmitter; blacklisted ones are 0.
    pub powers: Vec<(NodeId, f64)>,
    /// Total power, `+inf` when infeasible.
    pub omega: f64,
    pub lp_dump: Option<String>,
}

impl PamResult {
    fn infeasible(req: &PamRequest<'_>) -> Self {
        PamResult {
            status: PamStatus::Infeasible,
            powers: req.transmitters.iter().map(|&q| (q, 0.0)).collect(),
            omega: f64::INFINITY,
            lp_dump: None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == PamStatus::Optimal
    }

    /// Transmitters with nonzero power.
    pub fn support(&self) -> Vec<(NodeId, f64)> {
        self.powers.iter().copied().filter(|&(_, p)| p > 0.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PamError {
    #[error("node {0} is both transmitter and receiver")]
    Overlap(NodeId),
    #[error("flow {0} does not exist")]
    NoSuchFlow(usize),
    #[error("flow {0} is already in the blacklist")]
    FlowCommitted(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Minimal powers for `req` given `blacklist`, or infeasible.
pub fn pam(
    instance: &NetworkInstance,
    req: &PamRequest<'_>,
    blacklist: &Blacklist,
    opts: &PamOptions,
) -> Result<PamResult, PamError> {
    if req.flow >= instance.flow_count() {
        return Err(PamError::NoSuchFlow(req.flow));
    }
    if blacklist.flow_theta(req.flow).is_some() {
        return Err(PamError::FlowCommitted(req.flow));
    }
    if let Some(&j) = req.receivers.iter().find(|j| req.transmitters.contains(j)) {
        return Err(PamError::Overlap(j));
    }
    if req.receivers.is_empty() {
        return Ok(PamResult {
            status: PamStatus::Optimal,
            powers: req.transmitters.iter().map(|&q| (q, 0.0)).collect(),
            omega: 0.0,
            lp_dump: None,
        });
    }
    if req.receivers.iter().any(|&j| blacklist.contains(req.slot, j)) {
        return Ok(PamResult::infeasible(req));
    }

    // Busy transmitters get no variable at all.
    let free: Vec<NodeId> =
        req.transmitters.iter().copied().filter(|&q| !blacklist.contains(req.slot, q)).collect();
    if free.is_empty() {
        return Ok(PamResult::infeasible(req));
    }

    let committed_tx = blacklist.transmitters(req.slot);
    let noise = instance.noise();
    let mut lp = LinearProgram::new(alloc::vec![1.0; free.len()]);

    for &j in req.receivers {
        let interference: f64 = committed_tx.iter().map(|&(u, _, p)| p * instance.gain(u, j)).sum();
        let a: Vec<f64> = free.iter().map(|&q| instance.gain(q, j)).collect();
        lp = lp.ge(a, req.theta * (interference + noise));
    }

    for (z, f) in blacklist.receivers(req.slot) {
        let th = opts.disturbance.theta_for(instance, blacklist, f);
        let mut signal = 0.0;
        let mut interference = 0.0;
        for &(u, g, p) in &committed_tx {
            if g == f {
                signal += p * instance.gain(u, z);
            } else {
                interference += p * instance.gain(u, z);
            }
        }
        let margin = signal - th * (interference + noise);
        if margin < -COMMITTED_MARGIN_SLACK * (1.0 + signal) {
            return Ok(PamResult::infeasible(req));
        }
        let a: Vec<f64> = free.iter().map(|&q| -th * instance.gain(q, z)).collect();
        if a.iter().all(|&c| c == 0.0) {
            continue;
        }
        lp = lp.ge(a, -margin.max(0.0));
    }

    let lp_dump = opts.trace.then(|| lp.dump());
    let sol = solve_lp(&lp, &opts.lp)?;
    if sol.status != LpStatus::Optimal {
        // Every variable has cost 1 and is bounded below, so the LP is never
        // unbounded; anything but optimal means infeasible.
        return Ok(PamResult { lp_dump, ..PamResult::infeasible(req) });
    }

    let peak = sol.x.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut powers = Vec::with_capacity(req.transmitters.len());
    for &q in req.transmitters {
        let p = free.iter().position(|&f| f == q).map_or(0.0, |i| sol.x[i]);
        powers.push((q, if p <= ZERO_POWER_RATIO * peak { 0.0 } else { p }));
    }
    let omega = powers.iter().map(|&(_, p)| p).sum();
    Ok(PamResult { status: PamStatus::Optimal, powers, omega, lp_dump })
}
