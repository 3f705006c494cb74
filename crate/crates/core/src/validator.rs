//! Schedules and the independent schedule audit.
//!
//! The validator trusts nothing a solver claims: every receiver listed in a
//! [`SlotAction`] is re-checked against the SINR inequality using only the
//! powers of that slot, and every transmission is checked for causality.

use alloc::vec::Vec;
use core::fmt;

use crate::netmodel::{NetworkInstance, NodeId};

/// Default decode tolerance in margin (power) units.
pub const DEFAULT_DECODE_TOLERANCE: f64 = 1e-7;

/// What one flow does in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotAction {
    pub flow: usize,
    /// Transmitting nodes and their powers.
    pub transmitters: Vec<(NodeId, f64)>,
    /// Nodes claimed to decode the flow's message at the end of the slot.
    pub receivers: Vec<NodeId>,
}

impl SlotAction {
    pub fn new(flow: usize) -> Self {
        SlotAction { flow, transmitters: Vec::new(), receivers: Vec::new() }
    }

    pub fn power(&self) -> f64 {
        self.transmitters.iter().map(|&(_, p)| p).sum()
    }
}

/// Per-slot actions over slots `1..=delay`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    delay: usize,
    slots: Vec<Vec<SlotAction>>,
}

impl Schedule {
    pub fn new(delay: usize) -> Self {
        Schedule { delay, slots: (0..delay).map(|_| Vec::new()).collect() }
    }

    #[inline]
    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Appends an action to slot `t` (1-based).
    ///
    /// # Panics
    /// If `t` is outside `1..=delay`.
    pub fn push(&mut self, t: usize, action: SlotAction) {
        assert!(t >= 1 && t <= self.delay, "slot {t} outside 1..={}", self.delay);
        self.slots[t - 1].push(action);
    }

    /// Actions of slot `t` (1-based).
    pub fn actions(&self, t: usize) -> &[SlotAction] {
        &self.slots[t - 1]
    }

    pub fn actions_mut(&mut self, t: usize) -> &mut Vec<SlotAction> {
        &mut self.slots[t - 1]
    }

    /// `(slot, actions)` pairs in slot order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[SlotAction])> {
        self.slots.iter().enumerate().map(|(i, a)| (i + 1, a.as_slice()))
    }

    /// Moves every action of `other` into `self`, slot by slot.
    pub fn absorb(&mut self, other: Schedule) {
        assert!(other.delay <= self.delay);
        for (i, actions) in other.slots.into_iter().enumerate() {
            self.slots[i].extend(actions);
        }
    }

    pub fn total_power(&self) -> f64 {
        total_power(self)
    }

    /// Sum of powers spent on one flow.
    pub fn flow_power(&self, flow: usize) -> f64 {
        self.slots.iter().flatten().filter(|a| a.flow == flow).map(SlotAction::power).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Vec::is_empty)
    }
}

/// Sum of all transmit powers across slots, nodes and flows.
pub fn total_power(schedule: &Schedule) -> f64 {
    schedule.slots.iter().flatten().map(SlotAction::power).sum()
}

/// Signed decode margin: received same-flow power minus
/// `theta * (cross-flow interference + noise)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeMargin {
    pub node: NodeId,
    pub flow: usize,
    pub slot: usize,
    pub margin: f64,
}

impl DecodeMargin {
    pub fn decodes(&self, tolerance: f64) -> bool {
        self.margin >= -tolerance
    }
}

/// Margin of `node` for `flow` in slot `t` at the instance threshold.
pub fn decode_check(
    instance: &NetworkInstance,
    schedule: &Schedule,
    node: NodeId,
    flow: usize,
    slot: usize,
) -> DecodeMargin {
    let margin = slot_margin(instance, schedule.actions(slot), node, flow, instance.theta());
    DecodeMargin { node, flow, slot, margin }
}

/// Margin of `node` for `flow` given the actions of one slot and an
/// arbitrary threshold. Interference sums over every transmitter of every
/// other flow in the slot.
pub fn slot_margin(
    instance: &NetworkInstance,
    actions: &[SlotAction],
    node: NodeId,
    flow: usize,
    theta: f64,
) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for action in actions {
        let received: f64 = action.transmitters.iter().map(|&(u, p)| p * instance.gain(u, node)).sum();
        if action.flow == flow {
            signal += received;
        } else {
            interference += received;
        }
    }
    signal - theta * (interference + instance.noise())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NegativePower { slot: usize, flow: usize, node: NodeId, power: f64 },
    DuplicateFlowAction { slot: usize, flow: usize },
    RoleConflict { slot: usize, node: NodeId },
    TransmitBeforeDecode { slot: usize, flow: usize, node: NodeId },
    DecodeFailure { slot: usize, flow: usize, node: NodeId, margin: f64 },
    DestinationNeverDecodes { flow: usize, node: NodeId },
}

impl Violation {
    fn sort_key(&self) -> (usize, usize, usize, u8) {
        match *self {
            Violation::NegativePower { slot, flow, node, .. } => (slot, node.0, flow, 0),
            Violation::DuplicateFlowAction { slot, flow } => (slot, 0, flow, 1),
            Violation::RoleConflict { slot, node } => (slot, node.0, 0, 2),
            Violation::TransmitBeforeDecode { slot, flow, node } => (slot, node.0, flow, 3),
            Violation::DecodeFailure { slot, flow, node, .. } => (slot, node.0, flow, 4),
            Violation::DestinationNeverDecodes { flow, node } => (usize::MAX, node.0, flow, 5),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativePower { slot, flow, node, power } => {
                write!(f, "slot {slot} flow {flow} node {node}: negative power {power}")
            }
            Violation::DuplicateFlowAction { slot, flow } => {
                write!(f, "slot {slot} flow {flow}: more than one action for the flow")
            }
            Violation::RoleConflict { slot, node } => {
                write!(f, "slot {slot} node {node}: more than one role in the slot")
            }
            Violation::TransmitBeforeDecode { slot, flow, node } => {
                write!(f, "slot {slot} flow {flow} node {node}: transmit before decode")
            }
            Violation::DecodeFailure { slot, flow, node, margin } => {
                write!(f, "slot {slot} flow {flow} node {node}: decode fails, margin {margin:e}")
            }
            Violation::DestinationNeverDecodes { flow, node } => {
                write!(f, "flow {flow}: destination never decodes (node {node})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("schedule covers {schedule} slots but the instance delay is {instance}")]
    DelayMismatch { schedule: usize, instance: usize },
    #[error("slot {slot}: flow {flow} does not exist")]
    FlowOutOfRange { slot: usize, flow: usize },
    #[error("slot {slot}: node {node} does not exist")]
    NodeOutOfRange { slot: usize, node: usize },
}

/// Audits `schedule` against every constraint of the multiflow problem.
///
/// Structural problems (unknown nodes/flows, too many slots) are errors;
/// everything else is collected as a [`Violation`]. Decoded receivers are
/// only credited when their decode check passes, so a failed decode also
/// flags the transmissions that depend on it.
pub fn validate_schedule(
    instance: &NetworkInstance,
    schedule: &Schedule,
    tolerance: f64,
) -> Result<ValidationReport, ScheduleError> {
    let n = instance.node_count();
    let r = instance.flow_count();
    if schedule.delay() > instance.delay() {
        return Err(ScheduleError::DelayMismatch { schedule: schedule.delay(), instance: instance.delay() });
    }
    for (t, actions) in schedule.iter() {
        for a in actions {
            if a.flow >= r {
                return Err(ScheduleError::FlowOutOfRange { slot: t, flow: a.flow });
            }
            let nodes = a.transmitters.iter().map(|&(u, _)| u).chain(a.receivers.iter().copied());
            for u in nodes {
                if u.0 >= n {
                    return Err(ScheduleError::NodeOutOfRange { slot: t, node: u.0 });
                }
            }
        }
    }

    let mut violations = Vec::new();
    let mut decoded: Vec<Vec<bool>> = (0..r)
        .map(|k| {
            let mut v = alloc::vec![false; n];
            v[instance.flow(k).source.0] = true;
            v
        })
        .collect();
    let mut roles = alloc::vec![0usize; n];
    let mut flow_seen = alloc::vec![false; r];

    for (t, actions) in schedule.iter() {
        roles.iter_mut().for_each(|c| *c = 0);
        flow_seen.iter_mut().for_each(|s| *s = false);
        let mut fresh: Vec<(usize, NodeId)> = Vec::new();
        for a in actions {
            if core::mem::replace(&mut flow_seen[a.flow], true) {
                violations.push(Violation::DuplicateFlowAction { slot: t, flow: a.flow });
            }
            for &(u, p) in &a.transmitters {
                roles[u.0] += 1;
                if !(p >= 0.0) || !p.is_finite() {
                    violations.push(Violation::NegativePower { slot: t, flow: a.flow, node: u, power: p });
                }
                if !decoded[a.flow][u.0] {
                    violations.push(Violation::TransmitBeforeDecode { slot: t, flow: a.flow, node: u });
                }
            }
            for &v in &a.receivers {
                roles[v.0] += 1;
                let m = decode_check(instance, schedule, v, a.flow, t);
                if m.decodes(tolerance) {
                    fresh.push((a.flow, v));
                } else {
                    violations.push(Violation::DecodeFailure { slot: t, flow: a.flow, node: v, margin: m.margin });
                }
            }
        }
        for (u, &c) in roles.iter().enumerate() {
            if c > 1 {
                violations.push(Violation::RoleConflict { slot: t, node: NodeId(u) });
            }
        }
        // Decodes take effect at the end of the slot.
        for (k, v) in fresh {
            decoded[k][v.0] = true;
        }
    }
    for (k, f) in instance.flows().iter().enumerate() {
        if !decoded[k][f.destination.0] {
            violations.push(Violation::DestinationNeverDecodes { flow: k, node: f.destination });
        }
    }
    violations.sort_by_key(Violation::sort_key);
    Ok(ValidationReport { violations })
}
