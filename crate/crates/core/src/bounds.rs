//! Lower and upper bounds on the multiflow optimum.
//!
//! The lower bound ignores interference entirely: every flow gets the whole
//! delay to itself. The upper bound time-multiplexes the flows, giving each
//! one a private block of consecutive slots; the best split of the delay is
//! found by a DP over (flows placed, slots used).

use alloc::vec;
use alloc::vec::Vec;

use crate::netmodel::NetworkInstance;
use crate::singleflow::{cost_table, solve_single, SingleFlowError};
use crate::validator::Schedule;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundsError {
    #[error("insufficient slots for multiplexing: delay {delay} is smaller than the {flows} flows")]
    InsufficientSlots { delay: usize, flows: usize },
    #[error("composition {0:?} does not split the delay into one positive block per flow")]
    BadComposition(Vec<usize>),
    #[error(transparent)]
    SingleFlow(#[from] SingleFlowError),
}

/// Ordered split of the delay into one positive block per flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Composition {
    pub parts: Vec<usize>,
}

impl Composition {
    pub fn new(parts: Vec<usize>, delay: usize) -> Result<Self, BoundsError> {
        if parts.is_empty() || parts.contains(&0) || parts.iter().sum::<usize>() != delay {
            return Err(BoundsError::BadComposition(parts));
        }
        Ok(Composition { parts })
    }

    /// First slot of each block, 1-based.
    pub fn starts(&self) -> Vec<usize> {
        let mut at = 1;
        self.parts
            .iter()
            .map(|&p| {
                let s = at;
                at += p;
                s
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub total: f64,
    /// `C(d_k, T)` per flow; infinite for flows that cannot reach their destination.
    pub per_flow: Vec<f64>,
}

impl LowerBound {
    pub fn unreachable_flows(&self) -> Vec<usize> {
        (0..self.per_flow.len()).filter(|&k| !self.per_flow[k].is_finite()).collect()
    }
}

/// Sum of interference-free single-flow optima with the full delay.
pub fn lower_bound(instance: &NetworkInstance) -> LowerBound {
    let t = instance.delay();
    let per_flow: Vec<f64> =
        instance.flows().iter().map(|f| cost_table(instance, f.source, t).cost(f.destination, t)).collect();
    LowerBound { total: per_flow.iter().sum(), per_flow }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub total: f64,
    /// Argmin; `None` when no composition gives a finite cost.
    pub composition: Option<Composition>,
    /// `C(d_k, tau_k)` under the argmin.
    pub per_flow: Vec<f64>,
}

/// `table[k][tau]` = `C(d_k, tau)` for `tau` in `0..=T` (index 0 unused).
fn block_costs(instance: &NetworkInstance) -> Vec<Vec<f64>> {
    let t = instance.delay();
    instance
        .flows()
        .iter()
        .map(|f| {
            let table = cost_table(instance, f.source, t);
            let mut row = vec![f64::INFINITY; t + 1];
            for (tau, c) in row.iter_mut().enumerate().skip(1) {
                *c = table.cost(f.destination, tau);
            }
            row
        })
        .collect()
}

/// Cost of the multiplexed schedule under a given composition.
pub fn composition_cost(instance: &NetworkInstance, composition: &Composition) -> f64 {
    let costs = block_costs(instance);
    composition.parts.iter().enumerate().map(|(k, &tau)| costs[k][tau]).sum()
}

/// Best multiplexing split of the delay.
pub fn upper_bound(instance: &NetworkInstance) -> Result<UpperBound, BoundsError> {
    let r = instance.flow_count();
    let t = instance.delay();
    if t < r {
        return Err(BoundsError::InsufficientSlots { delay: t, flows: r });
    }
    let costs = block_costs(instance);
    // best[k][s]: cheapest way to place flows 0..k in exactly s slots.
    let mut best = vec![vec![f64::INFINITY; t + 1]; r + 1];
    let mut choice = vec![vec![0usize; t + 1]; r + 1];
    best[0][0] = 0.0;
    for k in 1..=r {
        for s in k..=t - (r - k) {
            for tau in 1..=s - (k - 1) {
                let prev = best[k - 1][s - tau];
                if prev == f64::INFINITY && k > 1 {
                    continue;
                }
                let c = prev + costs[k - 1][tau];
                if c < best[k][s] {
                    best[k][s] = c;
                    choice[k][s] = tau;
                }
            }
        }
    }
    let total = best[r][t];
    if !total.is_finite() {
        return Ok(UpperBound { total, composition: None, per_flow: vec![f64::INFINITY; r] });
    }
    let mut parts = vec![0; r];
    let mut s = t;
    for k in (1..=r).rev() {
        parts[k - 1] = choice[k][s];
        s -= parts[k - 1];
    }
    let per_flow = parts.iter().enumerate().map(|(k, &tau)| costs[k][tau]).collect();
    Ok(UpperBound { total, composition: Some(Composition { parts }), per_flow })
}

/// Multiplexed schedule with blocks laid out in flow-index order.
pub fn multiplexed_schedule(instance: &NetworkInstance, composition: &Composition) -> Result<Schedule, BoundsError> {
    let order: Vec<usize> = (0..instance.flow_count()).collect();
    multiplexed_schedule_in_order(instance, composition, &order)
}

/// Multiplexed schedule; `block_order[b]` is the flow occupying block `b`,
/// and each flow keeps its own part length.
pub fn multiplexed_schedule_in_order(
    instance: &NetworkInstance,
    composition: &Composition,
    block_order: &[usize],
) -> Result<Schedule, BoundsError> {
    let r = instance.flow_count();
    Composition::new(composition.parts.clone(), instance.delay())?;
    let mut sorted = block_order.to_vec();
    sorted.sort_unstable();
    if composition.parts.len() != r || sorted != (0..r).collect::<Vec<_>>() {
        return Err(BoundsError::BadComposition(composition.parts.clone()));
    }
    let mut schedule = Schedule::new(instance.delay());
    let mut offset = 0;
    for &k in block_order {
        let tau = composition.parts[k];
        let sol = solve_single(instance, k, tau)?;
        sol.path.append_to(&mut schedule, k, offset);
        offset += tau;
    }
    Ok(schedule)
}
