//! Dense two-phase simplex for small linear programs.
//!
//! Problems have the form
//!
//! ```text
//! minimize c.x  subject to  A_ge x >= b_ge,  A_eq x = b_eq,  x >= 0
//! ```
//!
//! Pivoting always uses Bland's lowest-index rule, so results are
//! deterministic and the method cannot cycle. Each row is scaled by its
//! largest coefficient before pivoting; the returned point is re-checked
//! against the original, unscaled rows.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

/// One constraint row: `coefficients . x (>= or =) bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefficients: Vec<f64>,
    pub bound: f64,
}

impl Row {
    pub fn new(coefficients: Vec<f64>, bound: f64) -> Self {
        Row { coefficients, bound }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub ge_rows: Vec<Row>,
    pub eq_rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram { objective, ge_rows: Vec::new(), eq_rows: Vec::new() }
    }

    pub fn ge(mut self, coefficients: Vec<f64>, bound: f64) -> Self {
        self.ge_rows.push(Row::new(coefficients, bound));
        self
    }

    pub fn eq(mut self, coefficients: Vec<f64>, bound: f64) -> Self {
        self.eq_rows.push(Row::new(coefficients, bound));
        self
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    /// Largest row violation of `x` (0 when feasible), in original units.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for row in &self.ge_rows {
            worst = worst.max(row.bound - dot(&row.coefficients, x));
        }
        for row in &self.eq_rows {
            worst = worst.max(libm::fabs(dot(&row.coefficients, x) - row.bound));
        }
        worst
    }

    /// Renders the problem in a line-oriented debug format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "min {:?}", self.objective);
        for r in &self.ge_rows {
            let _ = writeln!(out, "ge  {:?} >= {:e}", r.coefficients, r.bound);
        }
        for r in &self.eq_rows {
            let _ = writeln!(out, "eq  {:?} == {:e}", r.coefficients, r.bound);
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; meaningful only when `status` is optimal.
    pub x: Vec<f64>,
    /// `c.x` when optimal, `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    pub pivots: usize,
    /// Tableau after every pivot, filled only with [`LpOptions::trace`].
    pub trace: Vec<String>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Relative tolerance on row feasibility.
    pub feasibility_tol: f64,
    /// Relative tolerance on reduced costs.
    pub optimality_tol: f64,
    /// Smallest admissible pivot magnitude (after row scaling).
    pub pivot_tol: f64,
    pub max_pivots: usize,
    pub trace: bool,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { feasibility_tol: 1e-9, optimality_tol: 1e-9, pivot_tol: 1e-11, max_pivots: 100_000, trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("row {row} has {len} coefficients, objective has {vars}")]
    DimensionMismatch { row: usize, len: usize, vars: usize },
    #[error("non-finite coefficient or bound")]
    NonFinite,
    #[error("ill-conditioned: {0}")]
    IllConditioned(&'static str),
    #[error("pivot limit of {0} reached")]
    PivotLimit(usize),
}

/// Solves `lp` with the two-phase simplex method.
pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<LpSolution, LpError> {
    let nv = lp.var_count();
    for (i, r) in lp.ge_rows.iter().chain(&lp.eq_rows).enumerate() {
        if r.coefficients.len() != nv {
            return Err(LpError::DimensionMismatch { row: i, len: r.coefficients.len(), vars: nv });
        }
        if !r.bound.is_finite() || r.coefficients.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }

    let mut tab = match Tableau::build(lp, opts) {
        Some(t) => t,
        None => return Ok(infeasible(nv)),
    };

    // Phase 1: minimize the sum of artificials.
    tab.set_phase_one_costs();
    tab.run(opts)?;
    let residual = -tab.cost_rhs();
    let scale = 1.0 + tab.rhs_scale;
    if residual > opts.feasibility_tol * scale {
        return Ok(LpSolution { pivots: tab.pivots, trace: tab.trace, ..infeasible(nv) });
    }
    tab.drive_out_artificials(opts);

    // Phase 2.
    tab.set_phase_two_costs(&lp.objective);
    match tab.run(opts)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: alloc::vec![0.0; nv],
                objective: f64::NEG_INFINITY,
                pivots: tab.pivots,
                trace: tab.trace,
            })
        }
    }
    let mut x = alloc::vec![0.0; nv];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < nv {
            x[b] = tab.rhs(r).max(0.0);
        }
    }
    let tol = |row: &Row| {
        let mag: f64 = row.coefficients.iter().zip(&x).map(|(a, v)| libm::fabs(a * v)).sum();
        10.0 * opts.feasibility_tol * (1.0 + libm::fabs(row.bound) + mag)
    };
    let ge_bad = lp.ge_rows.iter().any(|r| r.bound - dot(&r.coefficients, &x) > tol(r));
    let eq_bad = lp.eq_rows.iter().any(|r| libm::fabs(dot(&r.coefficients, &x) - r.bound) > tol(r));
    if ge_bad || eq_bad {
        return Err(LpError::IllConditioned("returned point violates a row"));
    }
    let objective = dot(&lp.objective, &x);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, pivots: tab.pivots, trace: tab.trace })
}

fn infeasible(nv: usize) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        x: alloc::vec![0.0; nv],
        objective: f64::INFINITY,
        pivots: 0,
        trace: Vec::new(),
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Row-major tableau. Columns: structural variables, one surplus per
/// `>=` row, one artificial per row, then the right-hand side. The last row
/// holds reduced costs, with `-objective` in its right-hand side.
struct Tableau {
    nv: usize,
    n_surplus: usize,
    rows: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    rhs_scale: f64,
    cost_scale: f64,
    pivots: usize,
    trace: Vec<String>,
    tracing: bool,
}

impl Tableau {
    /// `None` when a zero row has an unsatisfiable bound.
    fn build(lp: &LinearProgram, opts: &LpOptions) -> Option<Tableau> {
        let nv = lp.var_count();
        let mut kept: Vec<(&Row, bool)> = Vec::new();
        for (row, is_ge) in lp.ge_rows.iter().map(|r| (r, true)).chain(lp.eq_rows.iter().map(|r| (r, false))) {
            let amax = row.coefficients.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
            if amax == 0.0 {
                let ok = if is_ge { row.bound <= opts.feasibility_tol } else { libm::fabs(row.bound) <= opts.feasibility_tol };
                if !ok {
                    return None;
                }
                continue;
            }
            kept.push((row, is_ge));
        }
        let rows = kept.len();
        let n_surplus = kept.iter().filter(|(_, g)| *g).count();
        let width = nv + n_surplus + rows + 1;
        let mut data = alloc::vec![0.0; (rows + 1) * width];
        let mut basis = Vec::with_capacity(rows);
        let mut surplus = 0;
        let mut rhs_scale = 0.0f64;
        for (r, (row, is_ge)) in kept.iter().enumerate() {
            let amax = row.coefficients.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
            let mut s = 1.0 / amax;
            if row.bound < 0.0 {
                s = -s;
            }
            let line = &mut data[r * width..(r + 1) * width];
            for (j, a) in row.coefficients.iter().enumerate() {
                line[j] = a * s;
            }
            if *is_ge {
                line[nv + surplus] = -s;
                surplus += 1;
            }
            line[nv + n_surplus + r] = 1.0;
            line[width - 1] = row.bound * s;
            rhs_scale = rhs_scale.max(line[width - 1]);
            basis.push(nv + n_surplus + r);
        }
        Some(Tableau {
            nv,
            n_surplus,
            rows,
            width,
            data,
            basis,
            rhs_scale,
            cost_scale: 0.0,
            pivots: 0,
            trace: Vec::new(),
            tracing: opts.trace,
        })
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }
    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }
    #[inline]
    fn cost_rhs(&self) -> f64 {
        self.at(self.rows, self.width - 1)
    }
    fn first_artificial(&self) -> usize {
        self.nv + self.n_surplus
    }

    fn set_phase_one_costs(&mut self) {
        let w = self.width;
        let art = self.first_artificial();
        let (body, cost) = self.data.split_at_mut(self.rows * w);
        cost.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.rows {
            for c in 0..w {
                if c < art || c == w - 1 {
                    cost[c] -= body[r * w + c];
                }
            }
        }
        self.cost_scale = 1.0;
    }

    fn set_phase_two_costs(&mut self, objective: &[f64]) {
        let w = self.width;
        let (body, cost) = self.data.split_at_mut(self.rows * w);
        cost.iter_mut().for_each(|v| *v = 0.0);
        cost[..objective.len()].copy_from_slice(objective);
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = if b < objective.len() { objective[b] } else { 0.0 };
            if cb != 0.0 {
                for c in 0..w {
                    cost[c] -= cb * body[r * w + c];
                }
            }
        }
        self.cost_scale = objective.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    }

    /// Pivots until no reduced cost is negative. Artificial columns never
    /// re-enter once they have left the basis.
    fn run(&mut self, opts: &LpOptions) -> Result<Outcome, LpError> {
        let limit = self.first_artificial();
        loop {
            if self.pivots >= opts.max_pivots {
                return Err(LpError::PivotLimit(opts.max_pivots));
            }
            let threshold = -opts.optimality_tol * self.cost_scale;
            let Some(enter) = (0..limit).find(|&c| self.at(self.rows, c) < threshold) else {
                return Ok(Outcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            let mut tiny_positive = false;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a <= opts.pivot_tol {
                    if a > 1e-14 {
                        tiny_positive = true;
                    }
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = libm::fabs(ratio - bratio) <= 1e-12 * (1.0 + bratio);
                        if (!tie && ratio < bratio) || (tie && self.basis[r] < self.basis[br]) {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None if tiny_positive => return Err(LpError::IllConditioned("pivot below tolerance")),
                None => return Ok(Outcome::Unbounded),
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.data[pr * w + c];
                if v != 0.0 {
                    self.data[r * w + c] -= f * v;
                }
            }
            self.data[r * w + pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
        if self.tracing {
            let mut s = String::new();
            let _ = writeln!(s, "pivot {} row {} col {}", self.pivots, pr, pc);
            for r in 0..=self.rows {
                let line = &self.data[r * w..(r + 1) * w];
                let _ = writeln!(s, "  {:?}", line);
            }
            self.trace.push(s);
        }
    }

    /// Replaces artificials left in the basis at zero level by structural or
    /// surplus columns; rows where that is impossible are redundant and are
    /// dropped.
    fn drive_out_artificials(&mut self, opts: &LpOptions) {
        let art = self.first_artificial();
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= art {
                let col = (0..art).find(|&c| libm::fabs(self.at(r, c)) > opts.pivot_tol);
                match col {
                    Some(c) => self.pivot(r, c),
                    None => {
                        self.remove_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}
