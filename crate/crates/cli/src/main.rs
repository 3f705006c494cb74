use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use coopflow::experiment::{run_experiment, Disturbance, ExperimentConfig, Ordering};
use coopflow::format::{load_graph, load_instance, load_schedule, write_instance, write_schedule};
use coopflow_core::bounds::{lower_bound, multiplexed_schedule, upper_bound};
use coopflow_core::mcuh::{run_heuristic, HeuristicConfig, McuhError, DEFAULT_GAMMA};
use coopflow_core::mosp::{exact_mosp, greedy_mosp, reduce_coloring, EXACT_MAX_VERTICES};
use coopflow_core::netmodel::{draw_flows, generate, GeneratorConfig, NodeId};
use coopflow_core::oracle::{exact_mcue, OracleOptions, DEFAULT_GUARD};
use coopflow_core::singleflow::solve_single;
use coopflow_core::validator::{validate_schedule, Schedule, DEFAULT_DECODE_TOLERANCE};

#[derive(Parser)]
#[command(name = "coopflow", version, about = "Minimum-energy multiflow scheduling under the SINR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Optimal single-flow schedule.
    Single(SingleArgs),
    /// Lower and multiplexing upper bound.
    Bounds(BoundsArgs),
    /// Run the multiflow heuristic.
    Heuristic(HeuristicArgs),
    /// Exact optimum of a tiny instance.
    Oracle(OracleArgs),
    /// Reduce a graph coloring instance to one-hop scheduling and solve it.
    Reduce(ReduceArgs),
    /// Check a schedule against an instance.
    Verify(VerifyArgs),
    /// Seeded parameter sweep written as CSV.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 20.0)]
    side: f64,
    #[arg(long, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of flows.
    #[arg(long, default_value_t = 3)]
    flows: usize,
    #[arg(long, default_value_t = 5)]
    delay: usize,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    theta: f64,
    /// Draw each direction of a link independently.
    #[arg(long)]
    asymmetric: bool,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SingleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    flow: usize,
    /// Defaults to the instance delay.
    #[arg(long)]
    horizon: Option<usize>,
    /// Schedule file to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    instance: PathBuf,
    /// Multiplexed schedule file to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct HeuristicArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = Ordering::Path)]
    ordering: Ordering,
    /// Comma-separated horizons in scheduling order.
    #[arg(long, value_delimiter = ',')]
    slot_ladder: Option<Vec<usize>>,
    /// Comma-separated thresholds in scheduling order.
    #[arg(long, value_delimiter = ',')]
    theta_ladder: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Disturbance::True)]
    disturbance_theta: Disturbance,
    /// Schedule file to write.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    guard: u64,
    /// Allow at most one transmitter and one receiver per flow and slot.
    #[arg(long)]
    path_per_flow: bool,
    /// Write the optimal schedule here.
    #[arg(long)]
    dump_argmin: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    graph: PathBuf,
    /// Read a DIMACS edge list.
    #[arg(long)]
    dimacs: bool,
    #[arg(long, default_value_t = 2.0)]
    theta: f64,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    schedule: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DECODE_TOLERANCE)]
    tolerance: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML file with the same keys as the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    side: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    t_min: Option<usize>,
    #[arg(long)]
    t_max: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, value_enum)]
    ordering: Option<Ordering>,
    #[arg(long, value_enum)]
    disturbance_theta: Option<Disturbance>,
    /// Report runtime as 0 so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// CSV file; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Exit status 1: the problem itself has no acceptable answer.
/// Exit status 2: the request was malformed.
enum Failure {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
}

type Outcome = Result<(), Failure>;

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

fn domain<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Domain(e.into())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(usage)?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: &Path, text: &str) -> Outcome {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(usage)
}

fn save(path: Option<&PathBuf>, schedule: &Schedule) -> Outcome {
    match path {
        Some(p) => write_text(p, &write_schedule(schedule)),
        None => Ok(()),
    }
}

fn gen(a: GenArgs) -> Outcome {
    let cfg = GeneratorConfig { n: a.n, side: a.side, eta: a.eta, seed: a.seed, reciprocal: !a.asymmetric, clamp_gain: true };
    let net = generate(&cfg).map_err(usage)?;
    let flows = draw_flows(a.n, a.flows, a.seed).map_err(usage)?;
    let inst = net.into_instance(a.noise, a.theta, flows, a.delay).map_err(usage)?;
    let text = write_instance(&inst);
    match a.output {
        Some(p) => write_text(&p, &text),
        None => output(None)?.write_all(text.as_bytes()).map_err(usage),
    }
}

fn single(a: SingleArgs) -> Outcome {
    let inst = load_instance(&a.instance).map_err(usage)?;
    if a.flow >= inst.flow_count() {
        return Err(usage(anyhow::anyhow!("flow {} does not exist", a.flow)));
    }
    let horizon = a.horizon.unwrap_or(inst.delay());
    let sol = solve_single(&inst, a.flow, horizon).map_err(domain)?;
    let f = inst.flow(a.flow);
    let nodes = sol.path.nodes();
    let path: Vec<String> =
        if nodes.is_empty() { vec![f.source.to_string()] } else { nodes.iter().map(NodeId::to_string).collect() };
    println!("C(d,T) = {}", sol.cost);
    println!("path: {}", path.join(" -> "));
    if let Some(p) = &a.output {
        let delay = horizon.max(inst.delay());
        save(Some(p), &sol.path.to_schedule(a.flow, delay, 0))?;
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> Outcome {
    let inst = load_instance(&a.instance).map_err(usage)?;
    let lb = lower_bound(&inst);
    let ub = upper_bound(&inst).map_err(domain)?;
    println!("LB = {}", lb.total);
    println!("UB = {}", ub.total);
    match &ub.composition {
        Some(c) => {
            let parts: Vec<String> = c.parts.iter().map(usize::to_string).collect();
            println!("composition: {}", parts.join(" "));
            save(a.output.as_ref(), &multiplexed_schedule(&inst, c).map_err(domain)?)?;
            Ok(())
        }
        None => Err(domain(anyhow::anyhow!("some flow cannot reach its destination"))),
    }
}

fn heuristic(a: HeuristicArgs) -> Outcome {
    let inst = load_instance(&a.instance).map_err(usage)?;
    let mut cfg = HeuristicConfig {
        gamma: a.gamma,
        ordering: a.ordering.into(),
        slot_ladder: a.slot_ladder,
        theta_ladder: a.theta_ladder,
        ..Default::default()
    };
    cfg.pam.disturbance = a.disturbance_theta.into();
    let res = run_heuristic(&inst, &cfg).map_err(|e| match e {
        McuhError::BadGamma(_) | McuhError::BadLadder(_) => usage(e),
        e => domain(e),
    })?;
    let theta = inst.theta();
    let per_flow: Vec<String> = res.per_flow.iter().map(|c| (c / theta).to_string()).collect();
    println!("total/theta = {}", res.total / theta);
    println!("per flow/theta = {}", per_flow.join(" "));
    save(a.output.as_ref(), &res.schedule)
}

fn oracle(a: OracleArgs) -> Outcome {
    let inst = load_instance(&a.instance).map_err(usage)?;
    let opts = OracleOptions { guard: a.guard, path_per_flow: a.path_per_flow, ..Default::default() };
    let sol = exact_mcue(&inst, &opts).map_err(domain)?;
    println!("optimum = {}", sol.cost);
    println!("assignments evaluated = {}", sol.evaluated);
    save(a.dump_argmin.as_ref(), &sol.schedule)
}

fn reduce(a: ReduceArgs) -> Outcome {
    let g = load_graph(&a.graph, a.dimacs).map_err(usage)?;
    let m = reduce_coloring(&g, a.theta).map_err(usage)?;
    let greedy = greedy_mosp(&m);
    println!("greedy slots = {}", greedy.len());
    let exact = exact_mosp(&m, EXACT_MAX_VERTICES).map_err(domain)?;
    println!("exact slots = chromatic number = {}", exact.len());
    for (t, s) in exact.slots.iter().enumerate() {
        let set: Vec<String> = s.iter().map(usize::to_string).collect();
        println!("slot {}: {}", t + 1, set.join(" "));
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Outcome {
    let inst = load_instance(&a.instance).map_err(usage)?;
    let schedule = load_schedule(&a.schedule).map_err(usage)?;
    let report = validate_schedule(&inst, &schedule, a.tolerance).map_err(usage)?;
    if report.is_clean() {
        println!("ok: total power {}", schedule.total_power());
        return Ok(());
    }
    for v in &report.violations {
        println!("{v}");
    }
    Err(domain(anyhow::anyhow!("{} violation(s)", report.violations.len())))
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display())).map_err(usage)?;
            ExperimentConfig::from_toml(&text).map_err(usage)?
        }
        None => ExperimentConfig::default(),
    };
    macro_rules! overlay {
        ($($field:ident),*) => { $(if let Some(v) = a.$field { cfg.$field = v; })* };
    }
    overlay!(seeds, n, side, etas, r, t_min, t_max, noise, theta, gamma, ordering, disturbance_theta);
    cfg.no_timing |= a.no_timing;
    cfg.validate().map_err(usage)?;
    let out = output(a.output.as_deref())?;
    let rows = run_experiment(&cfg, out).map_err(domain)?;
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows did not produce a heuristic schedule", rows.len());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Single(a) => single(a),
        Command::Bounds(a) => bounds(a),
        Command::Heuristic(a) => heuristic(a),
        Command::Oracle(a) => oracle(a),
        Command::Reduce(a) => reduce(a),
        Command::Verify(a) => verify(a),
        Command::Experiment(a) => experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
