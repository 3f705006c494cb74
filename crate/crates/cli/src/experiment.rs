//! Seeded sweeps over (seed, eta, T) producing one CSV row each.

use std::io::Write;
use std::time::Instant;

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde::Deserialize;

use coopflow_core::bounds::{lower_bound, upper_bound};
use coopflow_core::mcuh::{run_heuristic, HeuristicConfig, McuhError, RelayOrderingMode, DEFAULT_GAMMA};
use coopflow_core::netmodel::{draw_flows, generate, GeneratorConfig, NetworkInstance};
use coopflow_core::pam::DisturbanceRule;

pub const CSV_HEADER: [&str; 11] =
    ["seed", "n", "r", "eta", "T", "lb", "ub", "heuristic", "per_flow", "runtime_ms", "status"];

/// Relay ordering as spelled on the command line and in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Ordering {
    Path,
    Dijkstra,
}

impl From<Ordering> for RelayOrderingMode {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Path => RelayOrderingMode::SinglePath,
            Ordering::Dijkstra => RelayOrderingMode::Dijkstra,
        }
    }
}

/// Threshold earlier flows are protected at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Disturbance {
    /// The instance threshold.
    True,
    /// Each flow's own scheduling threshold.
    Eq9,
}

impl From<Disturbance> for DisturbanceRule {
    fn from(d: Disturbance) -> Self {
        match d {
            Disturbance::True => DisturbanceRule::TrueTheta,
            Disturbance::Eq9 => DisturbanceRule::Scheduling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub n: usize,
    pub side: f64,
    pub etas: Vec<f64>,
    pub r: usize,
    pub t_min: usize,
    pub t_max: usize,
    pub noise: f64,
    pub theta: f64,
    pub gamma: f64,
    pub ordering: Ordering,
    pub disturbance_theta: Disturbance,
    /// Write 0 instead of wall-clock time so output is byte-identical.
    pub no_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![1, 2, 3, 4, 5],
            n: 100,
            side: 20.0,
            etas: vec![2.0, 3.0],
            r: 3,
            t_min: 3,
            t_max: 8,
            noise: 1.0,
            theta: 1.0,
            gamma: DEFAULT_GAMMA,
            ordering: Ordering::Path,
            disturbance_theta: Disturbance::True,
            no_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).context("invalid experiment config")
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.seeds.is_empty() {
            bail!("no seeds");
        }
        if self.etas.is_empty() {
            bail!("no path-loss exponents");
        }
        if self.r == 0 || 2 * self.r > self.n {
            bail!("cannot place {} disjoint flows on {} nodes", self.r, self.n);
        }
        if self.t_min < self.r {
            bail!("t-min {} is below the number of flows {}", self.t_min, self.r);
        }
        if self.t_max < self.t_min {
            bail!("t-max {} is below t-min {}", self.t_max, self.t_min);
        }
        Ok(())
    }

    pub fn heuristic(&self) -> HeuristicConfig {
        let mut h = HeuristicConfig { gamma: self.gamma, ordering: self.ordering.into(), ..Default::default() };
        h.pam.disturbance = self.disturbance_theta.into();
        h
    }

    /// Instance for one sweep point.
    pub fn instance(&self, seed: u64, eta: f64, delay: usize) -> anyhow::Result<NetworkInstance> {
        let net = generate(&GeneratorConfig { n: self.n, side: self.side, eta, seed, ..Default::default() })?;
        let flows = draw_flows(self.n, self.r, seed)?;
        Ok(net.into_instance(self.noise, self.theta, flows, delay)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub seed: u64,
    pub n: usize,
    pub r: usize,
    pub eta: f64,
    pub t: usize,
    /// Costs are divided by theta.
    pub lb: f64,
    pub ub: f64,
    pub heuristic: Option<f64>,
    pub per_flow: Vec<f64>,
    pub runtime_ms: u128,
    pub status: String,
}

impl ExperimentRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn record(&self) -> [String; 11] {
        let per_flow: Vec<String> = self.per_flow.iter().map(|c| c.to_string()).collect();
        [
            self.seed.to_string(),
            self.n.to_string(),
            self.r.to_string(),
            self.eta.to_string(),
            self.t.to_string(),
            self.lb.to_string(),
            self.ub.to_string(),
            self.heuristic.map(|h| h.to_string()).unwrap_or_default(),
            per_flow.join(";"),
            self.runtime_ms.to_string(),
            self.status.clone(),
        ]
    }
}

fn status_of(e: &McuhError) -> &'static str {
    match e {
        McuhError::Unschedulable { .. } => "unschedulable",
        McuhError::Unreachable { .. } => "unreachable",
        McuhError::InsufficientSlots { .. } => "insufficient-slots",
        _ => "error",
    }
}

/// One sweep point. Failures become the row's status.
pub fn run_point(config: &ExperimentConfig, seed: u64, eta: f64, t: usize) -> ExperimentRow {
    let started = Instant::now();
    let mut row = ExperimentRow {
        seed,
        n: config.n,
        r: config.r,
        eta,
        t,
        lb: f64::NAN,
        ub: f64::NAN,
        heuristic: None,
        per_flow: Vec::new(),
        runtime_ms: 0,
        status: String::new(),
    };
    match config.instance(seed, eta, t) {
        Err(_) => row.status = "error".into(),
        Ok(inst) => {
            let theta = inst.theta();
            row.lb = lower_bound(&inst).total / theta;
            row.ub = upper_bound(&inst).map_or(f64::NAN, |u| u.total / theta);
            match run_heuristic(&inst, &config.heuristic()) {
                Ok(res) => {
                    row.heuristic = Some(res.total / theta);
                    row.per_flow = res.per_flow.iter().map(|c| c / theta).collect();
                    row.status = "ok".into();
                }
                Err(e) => row.status = status_of(&e).into(),
            }
        }
    }
    if !config.no_timing {
        row.runtime_ms = started.elapsed().as_millis();
    }
    row
}

/// All rows, sorted by (seed, eta, T). Runs points in parallel.
pub fn run_rows(config: &ExperimentConfig) -> anyhow::Result<Vec<ExperimentRow>> {
    config.validate()?;
    let mut points = Vec::new();
    for &seed in &config.seeds {
        for &eta in &config.etas {
            for t in config.t_min..=config.t_max {
                points.push((seed, eta, t));
            }
        }
    }
    let mut rows: Vec<ExperimentRow> = points.par_iter().map(|&(s, e, t)| run_point(config, s, e, t)).collect();
    rows.sort_by(|a, b| a.seed.cmp(&b.seed).then(a.eta.total_cmp(&b.eta)).then(a.t.cmp(&b.t)));
    for row in rows.iter().filter(|r| r.is_ok()) {
        let h = row.heuristic.expect("ok rows carry a cost");
        if !(row.lb <= h * (1.0 + 1e-9)) {
            bail!("seed {} eta {} T {}: heuristic {} is below the lower bound {}", row.seed, row.eta, row.t, h, row.lb);
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes the CSV. `out` is opened by the caller before
/// any solving starts.
pub fn run_experiment<W: Write>(config: &ExperimentConfig, out: W) -> anyhow::Result<Vec<ExperimentRow>> {
    let rows = run_rows(config)?;
    write_csv(&rows, out)?;
    Ok(rows)
}
