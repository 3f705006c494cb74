//! Graph coloring as one-hop scheduling.
//!
//! Every vertex `v_i` of a graph becomes a source/destination pair
//! `(u_i, u'_i)`. Source `u_i` reaches `u'_j` with gain 1 when `i == j` or
//! `{v_i, v_j}` is an edge, and not at all otherwise. With unit powers and
//! `theta > 1`, a destination decodes exactly when no neighbouring pair is
//! active, so a schedule is a coloring and the shortest schedule has
//! `chi(G)` slots.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest graph [`exact_min_slots`] accepts by default.
pub const EXACT_MAX_VERTICES: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MospError {
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("threshold must exceed 1, got {0}")]
    BadTheta(f64),
    #[error("noise must be positive and at most 1/theta, got {0}")]
    BadNoise(f64),
    #[error("exact search refused: {n} vertices exceeds the guard of {guard}")]
    TooLarge { n: usize, guard: usize },
}

/// Undirected graph without loops or parallel edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    /// Sorted, each as `(min, max)`.
    edges: Vec<(usize, usize)>,
    adj: Vec<bool>,
}

impl SimpleGraph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self, MospError> {
        let mut adj = vec![false; n * n];
        let mut list = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(MospError::VertexOutOfRange { vertex: w, n });
                }
            }
            if u == v {
                return Err(MospError::SelfLoop(u));
            }
            if adj[u * n + v] {
                return Err(MospError::DuplicateEdge(u.min(v), u.max(v)));
            }
            adj[u * n + v] = true;
            adj[v * n + u] = true;
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        Ok(SimpleGraph { n, edges: list, adj })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, &[]).expect("no edges")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        Self::new(n, &edges).expect("complete graph is simple")
    }

    /// Erdos-Renyi graph: each pair is an edge with probability `p`.
    pub fn random(n: usize, p: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n, &edges).expect("generated graph is simple")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v]
    }

    pub fn degree(&self, u: usize) -> usize {
        (0..self.n).filter(|&v| self.adjacent(u, v)).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|u| self.degree(u)).max().unwrap_or(0)
    }

    pub fn is_independent(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &u)| set[a + 1..].iter().all(|&v| u != v && !self.adjacent(u, v)))
    }
}

/// One-hop scheduling instance built from a graph. Pair `i` is source
/// `u_i` and destination `u'_i`; every active source sends at unit power.
#[derive(Debug, Clone, PartialEq)]
pub struct MospInstance {
    graph: SimpleGraph,
    theta: f64,
    noise: f64,
    /// `gains[i * n + j]`: gain from `u_i` to `u'_j`.
    gains: Vec<f64>,
}

impl MospInstance {
    pub fn pair_count(&self) -> usize {
        self.graph.n
    }

    pub fn graph(&self) -> &SimpleGraph {
        &self.graph
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Gain from source `i` to destination `j`.
    pub fn gain(&self, i: usize, j: usize) -> f64 {
        self.gains[i * self.graph.n + j]
    }

    /// Number of nonzero source-to-destination gains.
    pub fn link_count(&self) -> usize {
        self.gains.iter().filter(|&&g| g > 0.0).count()
    }

    /// SINR of pair `i` when exactly the pairs in `active` transmit.
    pub fn sinr(&self, i: usize, active: &[usize]) -> f64 {
        let interference: f64 = active.iter().filter(|&&j| j != i).map(|&j| self.gain(j, i)).sum();
        self.gain(i, i) / (interference + self.noise)
    }

    pub fn slot_decodes(&self, active: &[usize]) -> bool {
        active.iter().all(|&i| self.sinr(i, active) >= self.theta)
    }

    /// Pairs that cannot share a slot, derived from the SINR rule.
    fn conflicts(&self) -> Vec<bool> {
        let n = self.pair_count();
        let mut c = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j && !self.slot_decodes(&[i, j]) {
                    c[i * n + j] = true;
                }
            }
        }
        c
    }
}

/// Builds the one-hop instance with noise `1 / (2 theta)`.
pub fn reduce_coloring(graph: &SimpleGraph, theta: f64) -> Result<MospInstance, MospError> {
    reduce_coloring_with_noise(graph, theta, 0.5 / theta)
}

pub fn reduce_coloring_with_noise(graph: &SimpleGraph, theta: f64, noise: f64) -> Result<MospInstance, MospError> {
    if !(theta > 1.0) || !theta.is_finite() {
        return Err(MospError::BadTheta(theta));
    }
    if !(noise > 0.0) || noise * theta > 1.0 {
        return Err(MospError::BadNoise(noise));
    }
    let n = graph.n;
    let mut gains = vec![0.0; n * n];
    for i in 0..n {
        gains[i * n + i] = 1.0;
    }
    for &(u, v) in &graph.edges {
        gains[u * n + v] = 1.0;
        gains[v * n + u] = 1.0;
    }
    Ok(MospInstance { graph: graph.clone(), theta, noise, gains })
}

/// Pair indices transmitting in each slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MospSchedule {
    pub slots: Vec<Vec<usize>>,
}

impl MospSchedule {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

/// First fit: each pair in index order joins the earliest slot in which
/// every active pair still decodes.
pub fn greedy_mosp(instance: &MospInstance) -> MospSchedule {
    let mut slots: Vec<Vec<usize>> = Vec::new();
    for i in 0..instance.pair_count() {
        let fit = slots.iter().position(|s| {
            let mut trial = s.clone();
            trial.push(i);
            instance.slot_decodes(&trial)
        });
        match fit {
            Some(s) => slots[s].push(i),
            None => slots.push(vec![i]),
        }
    }
    MospSchedule { slots }
}

/// Minimum schedule length; refuses more than [`EXACT_MAX_VERTICES`] pairs.
pub fn exact_min_slots(instance: &MospInstance) -> Result<usize, MospError> {
    exact_mosp(instance, EXACT_MAX_VERTICES).map(|s| s.len())
}

/// A shortest schedule by DSATUR branch-and-bound over the pair conflict
/// graph, seeded with the first-fit schedule as the incumbent.
pub fn exact_mosp(instance: &MospInstance, guard: usize) -> Result<MospSchedule, MospError> {
    let n = instance.pair_count();
    if n > guard {
        return Err(MospError::TooLarge { n, guard });
    }
    let greedy = greedy_mosp(instance);
    let mut search = Dsatur {
        n,
        conflict: instance.conflicts(),
        color: vec![usize::MAX; n],
        best_len: greedy.len(),
        best: None,
    };
    search.descend(0, 0);
    Ok(match search.best {
        Some(colors) => {
            let mut slots = vec![Vec::new(); search.best_len];
            for (i, &c) in colors.iter().enumerate() {
                slots[c].push(i);
            }
            MospSchedule { slots }
        }
        None => greedy,
    })
}

struct Dsatur {
    n: usize,
    conflict: Vec<bool>,
    color: Vec<usize>,
    best_len: usize,
    best: Option<Vec<usize>>,
}

impl Dsatur {
    fn blocked(&self, v: usize, c: usize) -> bool {
        (0..self.n).any(|u| self.color[u] == c && self.conflict[v * self.n + u])
    }

    fn saturation(&self, v: usize) -> usize {
        let mut seen: Vec<usize> = (0..self.n)
            .filter(|&u| self.color[u] != usize::MAX && self.conflict[v * self.n + u])
            .map(|u| self.color[u])
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    fn degree(&self, v: usize) -> usize {
        (0..self.n).filter(|&u| self.conflict[v * self.n + u]).count()
    }

    fn descend(&mut self, colored: usize, used: usize) {
        if used >= self.best_len {
            return;
        }
        if colored == self.n {
            self.best_len = used;
            self.best = Some(self.color.clone());
            return;
        }
        let v = (0..self.n)
            .filter(|&v| self.color[v] == usize::MAX)
            .max_by(|&a, &b| {
                (self.saturation(a), self.degree(a)).cmp(&(self.saturation(b), self.degree(b))).then(b.cmp(&a))
            })
            .expect("an uncolored vertex remains");
        for c in 0..=used {
            if c == used && used + 1 >= self.best_len {
                break;
            }
            if !self.blocked(v, c) {
                self.color[v] = c;
                self.descend(colored + 1, used.max(c + 1));
                self.color[v] = usize::MAX;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MospViolation {
    UnknownPair { slot: usize, pair: usize },
    Missing { pair: usize },
    Repeated { pair: usize },
    DecodeFailure { slot: usize, pair: usize, sinr: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MospVerification {
    pub violations: Vec<MospViolation>,
}

impl MospVerification {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks coverage (each pair exactly once) and the unit-power SINR rule.
pub fn verify_mosp_schedule(instance: &MospInstance, schedule: &MospSchedule) -> MospVerification {
    let n = instance.pair_count();
    let mut seen = vec![0usize; n];
    let mut violations = Vec::new();
    for (s, slot) in schedule.slots.iter().enumerate() {
        let known: Vec<usize> = slot.iter().copied().filter(|&i| i < n).collect();
        for &i in slot {
            if i >= n {
                violations.push(MospViolation::UnknownPair { slot: s, pair: i });
            } else {
                seen[i] += 1;
            }
        }
        for &i in &known {
            let sinr = instance.sinr(i, &known);
            if sinr < instance.theta() {
                violations.push(MospViolation::DecodeFailure { slot: s, pair: i, sinr });
            }
        }
    }
    for (i, &count) in seen.iter().enumerate() {
        match count {
            0 => violations.push(MospViolation::Missing { pair: i }),
            1 => {}
            _ => violations.push(MospViolation::Repeated { pair: i }),
        }
    }
    MospVerification { violations }
}
