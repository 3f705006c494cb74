//! Network instances and the seeded random generator.
//!
//! A [`NetworkInstance`] is the input every solver reads: an `n x n` channel
//! gain matrix, the receiver noise `N`, the decode threshold `theta`, the list
//! of unicast flows and the common delay budget `T` (in slots).

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Index of a node, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceError {
    #[error("network has no nodes")]
    EmptyNetwork,
    #[error("gain row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("gain out of range: gains[{from}][{to}] = {value}")]
    GainOutOfRange { from: usize, to: usize, value: f64 },
    #[error("self gain gains[{node}][{node}] must be 0, found {value}")]
    NonZeroDiagonal { node: usize, value: f64 },
    #[error("noise must be positive and finite, found {0}")]
    BadNoise(f64),
    #[error("theta must be positive and finite, found {0}")]
    BadTheta(f64),
    #[error("delay must be at least 1 slot")]
    ZeroDelay,
    #[error("instance needs at least one flow")]
    NoFlows,
    #[error("flow {flow}: node {node} is not a node of the network")]
    EndpointOutOfRange { flow: usize, node: usize },
    #[error("source equals destination in flow {flow}")]
    SourceEqualsDestination { flow: usize },
    #[error("node {node} is an endpoint of more than one flow")]
    SharedEndpoint { node: usize },
    #[error("{0} positions given for {1} nodes")]
    PositionsMismatch(usize, usize),
    #[error("invalid generator config: {0}")]
    BadConfig(&'static str),
    #[error("cannot draw {flows} disjoint flows from {nodes} nodes")]
    TooManyFlows { flows: usize, nodes: usize },
}

/// Dense `n x n` gain matrix; `gain(i, j)` is the gain from `i` to `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    n: usize,
    gains: Vec<f64>,
}

impl ChannelMatrix {
    /// Builds a matrix from rows and checks `gains[i][i] = 0` and
    /// `0 <= gains[i][j] <= 1`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let n = rows.len();
        if n == 0 {
            return Err(InstanceError::EmptyNetwork);
        }
        let mut gains = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(InstanceError::NotSquare { row: i, len: row.len(), n });
            }
            gains.extend_from_slice(row);
        }
        let m = ChannelMatrix { n, gains };
        m.check(true)?;
        Ok(m)
    }

    /// Row-major constructor, same checks as [`ChannelMatrix::from_rows`].
    pub fn from_flat(n: usize, gains: Vec<f64>) -> Result<Self, InstanceError> {
        if n == 0 {
            return Err(InstanceError::EmptyNetwork);
        }
        if gains.len() != n * n {
            return Err(InstanceError::NotSquare { row: 0, len: gains.len(), n: n * n });
        }
        let m = ChannelMatrix { n, gains };
        m.check(true)?;
        Ok(m)
    }

    /// All-zero matrix, to be filled with [`ChannelMatrix::set_symmetric`].
    pub fn zeros(n: usize) -> Self {
        ChannelMatrix { n, gains: alloc::vec![0.0; n * n] }
    }

    fn check(&self, unit_range: bool) -> Result<(), InstanceError> {
        for i in 0..self.n {
            for j in 0..self.n {
                let g = self.gains[i * self.n + j];
                if i == j {
                    if g != 0.0 {
                        return Err(InstanceError::NonZeroDiagonal { node: i, value: g });
                    }
                } else if !g.is_finite() || g < 0.0 || (unit_range && g > 1.0) {
                    return Err(InstanceError::GainOutOfRange { from: i, to: j, value: g });
                }
            }
        }
        Ok(())
    }

    /// Sets both directions of a link. Out-of-range values are caught when
    /// the matrix is turned into an instance.
    pub fn set_symmetric(&mut self, a: NodeId, b: NodeId, gain: f64) {
        self.set(a, b, gain);
        self.set(b, a, gain);
    }

    pub fn set(&mut self, from: NodeId, to: NodeId, gain: f64) {
        if from != to {
            self.gains[from.0 * self.n + to.0] = gain;
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn gain(&self, from: NodeId, to: NodeId) -> f64 {
        self.gains[from.0 * self.n + to.0]
    }

    pub fn row(&self, from: NodeId) -> &[f64] {
        &self.gains[from.0 * self.n..(from.0 + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.gains[i * self.n + j] == self.gains[j * self.n + i]))
    }
}

/// One unicast demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowSpec {
    pub source: NodeId,
    pub destination: NodeId,
}

impl FlowSpec {
    pub fn new(source: usize, destination: usize) -> Self {
        FlowSpec { source: NodeId(source), destination: NodeId(destination) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInstance {
    channel: ChannelMatrix,
    noise: f64,
    theta: f64,
    flows: Vec<FlowSpec>,
    delay: usize,
    positions: Option<Vec<(f64, f64)>>,
}

impl NetworkInstance {
    pub fn new(
        channel: ChannelMatrix,
        noise: f64,
        theta: f64,
        flows: Vec<FlowSpec>,
        delay: usize,
    ) -> Result<Self, InstanceError> {
        channel.check(true)?;
        if !(noise.is_finite() && noise > 0.0) {
            return Err(InstanceError::BadNoise(noise));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(InstanceError::BadTheta(theta));
        }
        if delay == 0 {
            return Err(InstanceError::ZeroDelay);
        }
        validate_flows(channel.node_count(), &flows)?;
        Ok(NetworkInstance { channel, noise, theta, flows, delay, positions: None })
    }

    /// Attaches node positions. They are informational only.
    pub fn with_positions(mut self, positions: Vec<(f64, f64)>) -> Result<Self, InstanceError> {
        if positions.len() != self.node_count() {
            return Err(InstanceError::PositionsMismatch(positions.len(), self.node_count()));
        }
        self.positions = Some(positions);
        Ok(self)
    }

    /// Same network and flows with a different delay budget.
    pub fn with_delay(&self, delay: usize) -> Result<Self, InstanceError> {
        if delay == 0 {
            return Err(InstanceError::ZeroDelay);
        }
        let mut out = self.clone();
        out.delay = delay;
        Ok(out)
    }

    /// Same network restricted to a subset of the flows (in the given order).
    pub fn with_flows(&self, flows: Vec<FlowSpec>) -> Result<Self, InstanceError> {
        validate_flows(self.node_count(), &flows)?;
        let mut out = self.clone();
        out.flows = flows;
        Ok(out)
    }

    #[inline]
    pub fn channel(&self) -> &ChannelMatrix {
        &self.channel
    }
    #[inline]
    pub fn gain(&self, from: NodeId, to: NodeId) -> f64 {
        self.channel.gain(from, to)
    }
    #[inline]
    pub fn node_count(&self) -> usize {
        self.channel.node_count()
    }
    #[inline]
    pub fn noise(&self) -> f64 {
        self.noise
    }
    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }
    #[inline]
    pub fn flows(&self) -> &[FlowSpec] {
        &self.flows
    }
    #[inline]
    pub fn flow(&self, k: usize) -> FlowSpec {
        self.flows[k]
    }
    #[inline]
    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }
    #[inline]
    pub fn delay(&self) -> usize {
        self.delay
    }
    pub fn positions(&self) -> Option<&[(f64, f64)]> {
        self.positions.as_deref()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count()).map(NodeId)
    }
}

fn validate_flows(n: usize, flows: &[FlowSpec]) -> Result<(), InstanceError> {
    if flows.is_empty() {
        return Err(InstanceError::NoFlows);
    }
    let mut seen = alloc::vec![false; n];
    for (k, f) in flows.iter().enumerate() {
        for node in [f.source, f.destination] {
            if node.0 >= n {
                return Err(InstanceError::EndpointOutOfRange { flow: k, node: node.0 });
            }
        }
        if f.source == f.destination {
            return Err(InstanceError::SourceEqualsDestination { flow: k });
        }
        for node in [f.source, f.destination] {
            if core::mem::replace(&mut seen[node.0], true) {
                return Err(InstanceError::SharedEndpoint { node: node.0 });
            }
        }
    }
    Ok(())
}

/// Parameters of the random network model: nodes uniform on a square, mean
/// gain `d^-eta`, gain exponentially distributed around that mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n: usize,
    pub side: f64,
    pub eta: f64,
    pub seed: u64,
    /// One draw per unordered pair, used in both directions.
    pub reciprocal: bool,
    /// Cap gains at 1.0. Unclamped matrices are for channel statistics only;
    /// instances require gains in `[0, 1]`.
    pub clamp_gain: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { n: 100, side: 20.0, eta: 2.0, seed: 0, reciprocal: true, clamp_gain: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedNetwork {
    pub positions: Vec<(f64, f64)>,
    pub channel: ChannelMatrix,
}

impl GeneratedNetwork {
    pub fn into_instance(
        self,
        noise: f64,
        theta: f64,
        flows: Vec<FlowSpec>,
        delay: usize,
    ) -> Result<NetworkInstance, InstanceError> {
        NetworkInstance::new(self.channel, noise, theta, flows, delay)?.with_positions(self.positions)
    }
}

/// Draws a network. A pure function of `config`: positions first, then one
/// uniform per gain, so matrices for different `eta` share their randomness.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratedNetwork, InstanceError> {
    if config.n == 0 {
        return Err(InstanceError::EmptyNetwork);
    }
    if !(config.side.is_finite() && config.side > 0.0) {
        return Err(InstanceError::BadConfig("side must be positive"));
    }
    if !(config.eta.is_finite() && config.eta >= 0.0) {
        return Err(InstanceError::BadConfig("eta must be nonnegative"));
    }
    let n = config.n;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let positions: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * config.side;
            let y = rng.random::<f64>() * config.side;
            (x, y)
        })
        .collect();

    let mut channel = ChannelMatrix::zeros(n);
    let draw = |i: usize, j: usize, rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        let (xi, yi) = positions[i];
        let (xj, yj) = positions[j];
        let d = libm::hypot(xi - xj, yi - yj);
        let g = if d == 0.0 {
            1.0
        } else {
            let mean = libm::pow(d, -config.eta);
            -mean * libm::log1p(-u)
        };
        if config.clamp_gain {
            g.min(1.0)
        } else {
            g
        }
    };
    for i in 0..n {
        for j in (i + 1)..n {
            if config.reciprocal {
                let g = draw(i, j, &mut rng);
                channel.set_symmetric(NodeId(i), NodeId(j), g);
            } else {
                let gij = draw(i, j, &mut rng);
                let gji = draw(j, i, &mut rng);
                channel.set(NodeId(i), NodeId(j), gij);
                channel.set(NodeId(j), NodeId(i), gji);
            }
        }
    }
    Ok(GeneratedNetwork { positions, channel })
}

/// Draws `r` flows with pairwise-distinct endpoints by rejection sampling.
/// Uses its own RNG stream so flow placement does not depend on the channel.
pub fn draw_flows(n: usize, r: usize, seed: u64) -> Result<Vec<FlowSpec>, InstanceError> {
    if r == 0 {
        return Err(InstanceError::NoFlows);
    }
    if 2 * r > n {
        return Err(InstanceError::TooManyFlows { flows: r, nodes: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut used = alloc::vec![false; n];
    let mut flows = Vec::with_capacity(r);
    while flows.len() < r {
        let s = rng.random_range(0..n);
        let d = rng.random_range(0..n);
        if s == d || used[s] || used[d] {
            continue;
        }
        used[s] = true;
        used[d] = true;
        flows.push(FlowSpec::new(s, d));
    }
    Ok(flows)
}
