//! Oracles for the acceptance suite that share no code with the solvers
//! they check.

#![allow(dead_code)]

use coopflow_core::netmodel::{draw_flows, generate, GeneratorConfig, NetworkInstance, NodeId};

/// splitmix64, used only to derive instance parameters from a seed.
pub struct Mix(pub u64);

impl Mix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

pub fn instance(seed: u64, n: usize, flows: usize, delay: usize, side: f64, theta: f64, noise: f64) -> NetworkInstance {
    let net = generate(&GeneratorConfig { n, side, eta: 2.0, seed, ..Default::default() }).unwrap();
    let fl = draw_flows(n, flows, seed).unwrap();
    net.into_instance(noise, theta, fl, delay).unwrap()
}

/// Cheapest simple path from `s` to `d` with at most `horizon` hops, by
/// depth-first enumeration. A hop costs theta * N / h.
pub fn cheapest_path(inst: &NetworkInstance, s: usize, d: usize, horizon: usize) -> f64 {
    fn walk(inst: &NetworkInstance, at: usize, d: usize, left: usize, cost: f64, seen: &mut Vec<bool>, best: &mut f64) {
        if at == d {
            *best = best.min(cost);
            return;
        }
        if left == 0 {
            return;
        }
        for next in 0..inst.node_count() {
            let h = inst.gain(NodeId(at), NodeId(next));
            if seen[next] || h <= 0.0 {
                continue;
            }
            seen[next] = true;
            walk(inst, next, d, left - 1, cost + inst.theta() * inst.noise() / h, seen, best);
            seen[next] = false;
        }
    }
    let mut seen = vec![false; inst.node_count()];
    seen[s] = true;
    let mut best = f64::INFINITY;
    walk(inst, s, d, horizon, 0.0, &mut seen, &mut best);
    best
}

/// Every ordered split of `total` into `parts` positive blocks.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=total.saturating_sub(parts - 1) {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Chromatic number by trying k = 1, 2, ... colors with plain backtracking.
pub fn chromatic_number(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        adj[u][v] = true;
        adj[v][u] = true;
    }
    fn color(v: usize, k: usize, adj: &[Vec<bool>], colors: &mut Vec<usize>) -> bool {
        if v == adj.len() {
            return true;
        }
        for c in 0..k {
            if (0..v).all(|u| !adj[u][v] || colors[u] != c) {
                colors[v] = c;
                if color(v + 1, k, adj, colors) {
                    return true;
                }
            }
        }
        false
    }
    if n == 0 {
        return 0;
    }
    (1..=n).find(|&k| color(0, k, &adj, &mut vec![0; n])).unwrap()
}

/// Minimizes c.x subject to `ge` rows (a.x >= b), `eq` rows and x >= 0 by
/// trying every choice of `vars` active constraints. Returns None when no
/// vertex is feasible. Only valid for LPs whose optimum is attained.
pub fn vertex_enumeration(c: &[f64], ge: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)]) -> Option<f64> {
    let m = c.len();
    let mut cands: Vec<(Vec<f64>, f64)> = ge.to_vec();
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        cands.push((e, 0.0));
    }
    let feasible = |x: &[f64]| {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        x.iter().all(|&v| v >= -1e-9)
            && ge.iter().all(|(a, b)| dot(a) >= b - 1e-9 * (1.0 + b.abs()))
            && eq.iter().all(|(a, b)| (dot(a) - b).abs() <= 1e-9 * (1.0 + b.abs()))
    };
    let mut best: Option<f64> = None;
    let need = m.saturating_sub(eq.len());
    for subset in subsets(cands.len(), need) {
        let mut rows: Vec<(Vec<f64>, f64)> = eq.to_vec();
        rows.extend(subset.iter().map(|&i| cands[i].clone()));
        if let Some(x) = solve_square(rows) {
            if feasible(&x) {
                let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
    }
    best
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Gaussian elimination with partial pivoting; None if singular.
fn solve_square(mut rows: Vec<(Vec<f64>, f64)>) -> Option<Vec<f64>> {
    let m = rows.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))?;
        if rows[piv].0[col].abs() < 1e-10 {
            return None;
        }
        rows.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = rows[r].0[col] / rows[col].0[col];
                if f != 0.0 {
                    for j in col..m {
                        rows[r].0[j] -= f * rows[col].0[j];
                    }
                    rows[r].1 -= f * rows[col].1;
                }
            }
        }
    }
    Some((0..m).map(|i| rows[i].1 / rows[i].0[i]).collect())
}
