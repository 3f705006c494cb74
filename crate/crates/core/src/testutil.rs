use alloc::vec::Vec;

use crate::netmodel::{generate, ChannelMatrix, FlowSpec, GeneratorConfig, NetworkInstance, NodeId};

/// Instance with symmetric links `(a, b, gain)`; every other gain is 0.
pub fn instance_from_links(
    n: usize,
    links: &[(usize, usize, f64)],
    theta: f64,
    noise: f64,
    flows: &[(usize, usize)],
    delay: usize,
) -> NetworkInstance {
    let mut m = ChannelMatrix::zeros(n);
    for &(a, b, g) in links {
        m.set_symmetric(NodeId(a), NodeId(b), g);
    }
    let flows = flows.iter().map(|&(s, d)| FlowSpec::new(s, d)).collect();
    NetworkInstance::new(m, noise, theta, flows, delay).unwrap()
}

/// s=0, a=1, d=2 with h(s,a) = h(a,d) = 1, h(s,d) = 0.25, theta = N = 1.
pub fn line3(delay: usize) -> NetworkInstance {
    instance_from_links(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 0.25)], 1.0, 1.0, &[(0, 2)], delay)
}

/// Seeded random instance on a small square so that most links are usable.
pub fn random_instance(seed: u64, n: usize, flows: usize, delay: usize) -> NetworkInstance {
    let cfg = GeneratorConfig { n, side: 6.0, eta: 2.0, seed, ..Default::default() };
    let net = generate(&cfg).unwrap();
    let fl: Vec<FlowSpec> = crate::netmodel::draw_flows(n, flows, seed).unwrap();
    let theta = 0.5 + (seed % 7) as f64 * 0.25;
    let noise = 0.5 + (seed % 5) as f64 * 0.3;
    net.into_instance(noise, theta, fl, delay).unwrap()
}
