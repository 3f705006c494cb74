//! Text formats for instances, schedules and graphs.
//!
//! All three are line oriented. Blank lines and anything after `#` are
//! ignored. Nodes and flows are 0-based, slots 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use coopflow_core::mosp::{MospError, SimpleGraph};
use coopflow_core::netmodel::{ChannelMatrix, FlowSpec, InstanceError, NetworkInstance, NodeId};
use coopflow_core::validator::{Schedule, SlotAction};

pub const INSTANCE_HEADER: &str = "coopflow-instance v1";
pub const SCHEDULE_HEADER: &str = "coopflow-schedule v1";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Graph(#[from] MospError),
    #[error("cannot access {path}")]
    Io { path: String, source: std::io::Error },
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse { line, message: message.into() }
}

/// Non-empty lines with comments stripped, as (1-based line number, tokens).
fn lines(text: &str) -> Vec<(usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("");
            let toks: Vec<&str> = l.split_whitespace().collect();
            (!toks.is_empty()).then_some((i + 1, toks))
        })
        .collect()
}

fn num<T: std::str::FromStr>(line: usize, field: &str, tok: Option<&&str>) -> Result<T, FormatError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("`{field}` needs a value")))?;
    tok.parse().map_err(|_| parse_err(line, format!("bad value `{tok}` for `{field}`")))
}

fn arity(line: usize, toks: &[&str], n: usize) -> Result<(), FormatError> {
    if toks.len() != n {
        return Err(parse_err(line, format!("`{}` takes {} value(s), found {}", toks[0], n - 1, toks.len() - 1)));
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// Reals keep 17 significant digits so they read back bit for bit.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_instance(inst: &NetworkInstance) -> String {
    let n = inst.node_count();
    let mut s = String::new();
    writeln!(s, "{INSTANCE_HEADER}").unwrap();
    writeln!(s, "n {n}").unwrap();
    writeln!(s, "noise {}", real(inst.noise())).unwrap();
    writeln!(s, "theta {}", real(inst.theta())).unwrap();
    writeln!(s, "delay {}", inst.delay()).unwrap();
    writeln!(s, "flows {}", inst.flow_count()).unwrap();
    for f in inst.flows() {
        writeln!(s, "flow {} {}", f.source, f.destination).unwrap();
    }
    writeln!(s, "gains").unwrap();
    for i in 0..n {
        let row: Vec<String> = inst.channel().row(NodeId(i)).iter().map(|&g| real(g)).collect();
        writeln!(s, "{}", row.join(" ")).unwrap();
    }
    if let Some(pos) = inst.positions() {
        writeln!(s, "positions").unwrap();
        for &(x, y) in pos {
            writeln!(s, "{} {}", real(x), real(y)).unwrap();
        }
    }
    s
}

pub fn parse_instance(text: &str) -> Result<NetworkInstance, FormatError> {
    let lines = lines(text);
    let mut it = lines.iter();
    match it.next() {
        Some((_, t)) if t.join(" ") == INSTANCE_HEADER => {}
        Some((l, _)) => return Err(parse_err(*l, format!("expected header `{INSTANCE_HEADER}`"))),
        None => return Err(FormatError::Missing(INSTANCE_HEADER)),
    }
    let mut n: Option<usize> = None;
    let mut noise: Option<f64> = None;
    let mut theta: Option<f64> = None;
    let mut delay: Option<usize> = None;
    let mut flows: Option<Vec<FlowSpec>> = None;
    let mut gains: Option<Vec<Vec<f64>>> = None;
    let mut positions: Option<Vec<(f64, f64)>> = None;

    fn once<T>(slot: &mut Option<T>, v: T, line: usize, key: &str) -> Result<(), FormatError> {
        if slot.is_some() {
            return Err(parse_err(line, format!("duplicate `{key}`")));
        }
        *slot = Some(v);
        Ok(())
    }

    while let Some((line, toks)) = it.next() {
        let line = *line;
        match toks[0] {
            "n" => {
                arity(line, toks, 2)?;
                once(&mut n, num(line, "n", toks.get(1))?, line, "n")?;
            }
            "noise" => {
                arity(line, toks, 2)?;
                once(&mut noise, num(line, "noise", toks.get(1))?, line, "noise")?;
            }
            "theta" => {
                arity(line, toks, 2)?;
                once(&mut theta, num(line, "theta", toks.get(1))?, line, "theta")?;
            }
            "delay" => {
                arity(line, toks, 2)?;
                once(&mut delay, num(line, "delay", toks.get(1))?, line, "delay")?;
            }
            "flows" => {
                arity(line, toks, 2)?;
                let r: usize = num(line, "flows", toks.get(1))?;
                let mut list = Vec::with_capacity(r);
                for _ in 0..r {
                    let (l, t) = it.next().ok_or(FormatError::Missing("flow"))?;
                    if t[0] != "flow" {
                        return Err(parse_err(*l, format!("expected `flow`, found `{}`", t[0])));
                    }
                    arity(*l, t, 3)?;
                    list.push(FlowSpec::new(num(*l, "flow source", t.get(1))?, num(*l, "flow destination", t.get(2))?));
                }
                once(&mut flows, list, line, "flows")?;
            }
            "gains" | "positions" => {
                arity(line, toks, 1)?;
                let n = n.ok_or_else(|| parse_err(line, format!("`{}` before `n`", toks[0])))?;
                let mut rows = Vec::with_capacity(n);
                for i in 0..n {
                    let (l, t) = it.next().ok_or(FormatError::Missing("matrix row"))?;
                    let row = t
                        .iter()
                        .map(|v| v.parse::<f64>().map_err(|_| parse_err(*l, format!("bad real `{v}` in row {i}"))))
                        .collect::<Result<Vec<f64>, _>>()?;
                    rows.push((*l, row));
                }
                if toks[0] == "gains" {
                    for (l, row) in &rows {
                        if row.len() != n {
                            return Err(parse_err(*l, format!("gain row has {} entries, expected {n}", row.len())));
                        }
                    }
                    once(&mut gains, rows.into_iter().map(|r| r.1).collect(), line, "gains")?;
                } else {
                    let mut pos = Vec::with_capacity(n);
                    for (l, row) in rows {
                        if row.len() != 2 {
                            return Err(parse_err(l, "a position has exactly 2 coordinates"));
                        }
                        pos.push((row[0], row[1]));
                    }
                    once(&mut positions, pos, line, "positions")?;
                }
            }
            other => return Err(parse_err(line, format!("unknown field `{other}`"))),
        }
    }

    let n = n.ok_or(FormatError::Missing("n"))?;
    let gains = gains.ok_or(FormatError::Missing("gains"))?;
    debug_assert_eq!(gains.len(), n);
    let channel = ChannelMatrix::from_rows(&gains)?;
    let inst = NetworkInstance::new(
        channel,
        noise.ok_or(FormatError::Missing("noise"))?,
        theta.ok_or(FormatError::Missing("theta"))?,
        flows.ok_or(FormatError::Missing("flows"))?,
        delay.ok_or(FormatError::Missing("delay"))?,
    )?;
    Ok(match positions {
        Some(p) => inst.with_positions(p)?,
        None => inst,
    })
}

pub fn load_instance(path: &Path) -> Result<NetworkInstance, FormatError> {
    parse_instance(&read(path)?)
}

pub fn save_instance(inst: &NetworkInstance, path: &Path) -> Result<(), FormatError> {
    write(path, &write_instance(inst))
}

pub fn write_schedule(schedule: &Schedule) -> String {
    let mut s = String::new();
    writeln!(s, "{SCHEDULE_HEADER}").unwrap();
    writeln!(s, "delay {}", schedule.delay()).unwrap();
    for (t, actions) in schedule.iter() {
        for a in actions {
            writeln!(s, "slot {t} flow {}", a.flow).unwrap();
            for &(q, p) in &a.transmitters {
                writeln!(s, "tx {q} {}", real(p)).unwrap();
            }
            for &j in &a.receivers {
                writeln!(s, "rx {j}").unwrap();
            }
        }
    }
    s
}

pub fn parse_schedule(text: &str) -> Result<Schedule, FormatError> {
    let lines = lines(text);
    let mut it = lines.iter();
    match it.next() {
        Some((_, t)) if t.join(" ") == SCHEDULE_HEADER => {}
        Some((l, _)) => return Err(parse_err(*l, format!("expected header `{SCHEDULE_HEADER}`"))),
        None => return Err(FormatError::Missing(SCHEDULE_HEADER)),
    }
    let delay: usize = match it.next() {
        Some((l, t)) if t[0] == "delay" => {
            arity(*l, t, 2)?;
            num(*l, "delay", t.get(1))?
        }
        Some((l, _)) => return Err(parse_err(*l, "expected `delay`")),
        None => return Err(FormatError::Missing("delay")),
    };
    let mut schedule = Schedule::new(delay);
    let mut current: Option<(usize, SlotAction)> = None;
    for (line, toks) in it {
        let line = *line;
        match toks[0] {
            "slot" => {
                if toks.len() != 4 || toks[2] != "flow" {
                    return Err(parse_err(line, "expected `slot <t> flow <k>`"));
                }
                let t: usize = num(line, "slot", toks.get(1))?;
                if t == 0 || t > delay {
                    return Err(parse_err(line, format!("slot {t} outside 1..={delay}")));
                }
                let k: usize = num(line, "flow", toks.get(3))?;
                if let Some((t0, a)) = current.take() {
                    schedule.push(t0, a);
                }
                current = Some((t, SlotAction::new(k)));
            }
            "tx" => {
                arity(line, toks, 3)?;
                let (_, a) = current.as_mut().ok_or_else(|| parse_err(line, "`tx` before any `slot`"))?;
                let node: usize = num(line, "tx node", toks.get(1))?;
                a.transmitters.push((NodeId(node), num(line, "tx power", toks.get(2))?));
            }
            "rx" => {
                arity(line, toks, 2)?;
                let (_, a) = current.as_mut().ok_or_else(|| parse_err(line, "`rx` before any `slot`"))?;
                let node: usize = num(line, "rx node", toks.get(1))?;
                a.receivers.push(NodeId(node));
            }
            other => return Err(parse_err(line, format!("unknown field `{other}`"))),
        }
    }
    if let Some((t, a)) = current {
        schedule.push(t, a);
    }
    Ok(schedule)
}

pub fn load_schedule(path: &Path) -> Result<Schedule, FormatError> {
    parse_schedule(&read(path)?)
}

pub fn save_schedule(schedule: &Schedule, path: &Path) -> Result<(), FormatError> {
    write(path, &write_schedule(schedule))
}

/// `n <int>` followed by `edge <u> <v>` lines (0-based), or with `dimacs`
/// set, `p edge <n> <m>` and `e <u> <v>` lines (1-based, `c` comments).
pub fn parse_graph(text: &str, dimacs: bool) -> Result<SimpleGraph, FormatError> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (line, toks) in lines(text) {
        match (dimacs, toks[0]) {
            (false, "n") => {
                arity(line, &toks, 2)?;
                n = Some(num(line, "n", toks.get(1))?);
            }
            (false, "edge") => {
                arity(line, &toks, 3)?;
                edges.push((num(line, "edge", toks.get(1))?, num(line, "edge", toks.get(2))?));
            }
            (true, "c") => {}
            (true, "p") => {
                if toks.len() != 4 {
                    return Err(parse_err(line, "expected `p edge <n> <m>`"));
                }
                n = Some(num(line, "p", toks.get(2))?);
            }
            (true, "e") => {
                arity(line, &toks, 3)?;
                let u: usize = num(line, "e", toks.get(1))?;
                let v: usize = num(line, "e", toks.get(2))?;
                if u == 0 || v == 0 {
                    return Err(parse_err(line, "DIMACS vertices are 1-based"));
                }
                edges.push((u - 1, v - 1));
            }
            (_, other) => return Err(parse_err(line, format!("unknown field `{other}`"))),
        }
    }
    let n = n.ok_or(FormatError::Missing(if dimacs { "p" } else { "n" }))?;
    Ok(SimpleGraph::new(n, &edges)?)
}

pub fn load_graph(path: &Path, dimacs: bool) -> Result<SimpleGraph, FormatError> {
    parse_graph(&read(path)?, dimacs)
}

pub fn write_graph(g: &SimpleGraph) -> String {
    let mut s = format!("n {}\n", g.vertex_count());
    for &(u, v) in g.edges() {
        writeln!(s, "edge {u} {v}").unwrap();
    }
    s
}
