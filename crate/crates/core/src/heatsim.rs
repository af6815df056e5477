//! Crank–Nicolson replay of the 1D heat equation ψ_t = ψ_xx with
//! time-dependent Dirichlet, Neumann or Robin data at both ends.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary operator at one end: α ψ + β ψ_x = g(t).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Robin { alpha: f64, beta: f64 },
}

impl BcKind {
    pub fn pair(self) -> (f64, f64) {
        match self {
            BcKind::Dirichlet => (1.0, 0.0),
            BcKind::Neumann => (0.0, 1.0),
            BcKind::Robin { alpha, beta } => (alpha, beta),
        }
    }
}

pub type DataFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Boundary data g(t).
#[derive(Clone)]
pub enum BoundaryData {
    Zero,
    Function(DataFn),
    /// Values at t = k·dt/2, k = 0..=2nt, as produced by [`sample_half_steps`].
    HalfSteps { dt: f64, values: Arc<Vec<f64>> },
}

impl std::fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryData::Zero => write!(f, "Zero"),
            BoundaryData::Function(_) => write!(f, "Function"),
            BoundaryData::HalfSteps { dt, values } => write!(f, "HalfSteps(dt={dt}, n={})", values.len()),
        }
    }
}

impl BoundaryData {
    fn at(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Zero => 0.0,
            BoundaryData::Function(f) => f(t),
            BoundaryData::HalfSteps { dt, values } => {
                let u = 2.0 * t / dt;
                let k = u.floor().max(0.0) as usize;
                if k + 1 >= values.len() {
                    return *values.last().unwrap_or(&0.0);
                }
                let w = u - k as f64;
                if w == 0.0 {
                    values[k]
                } else {
                    values[k] * (1.0 - w) + values[k + 1] * w
                }
            }
        }
    }
}

/// Samples g at every half step of an nt-step run over [0, T], in parallel.
pub fn sample_half_steps<F>(g: F, horizon: f64, nt: usize) -> Result<BoundaryData>
where
    F: Fn(f64) -> Result<f64> + Send + Sync,
{
    let dt = horizon / nt as f64;
    let values: Result<Vec<f64>> = (0..=2 * nt).into_par_iter().map(|k| g(0.5 * dt * k as f64)).collect();
    Ok(BoundaryData::HalfSteps { dt, values: Arc::new(values?) })
}

#[derive(Clone, Debug)]
pub struct BoundarySpec {
    pub kind: BcKind,
    pub data: BoundaryData,
}

impl BoundarySpec {
    pub fn new(kind: BcKind, data: BoundaryData) -> Result<Self> {
        let (a, b) = kind.pair();
        if (a == 0.0 && b == 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidBc(format!("Robin pair ({a}, {b})")));
        }
        Ok(BoundarySpec { kind, data })
    }

    pub fn homogeneous(kind: BcKind) -> Result<Self> {
        BoundarySpec::new(kind, BoundaryData::Zero)
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Keep every k-th time row (the first and last rows are always kept).
    pub store_every: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { store_every: 1 }
    }
}

/// Rows of the discrete solution.
#[derive(Clone, Debug)]
pub struct HeatField {
    pub xs: Vec<f64>,
    /// Times of the stored rows.
    pub ts: Vec<f64>,
    /// Row-major, one row of nx+1 values per stored time.
    pub values: Vec<f64>,
    pub nx: usize,
    pub nt: usize,
    pub domain: (f64, f64),
    pub scheme: &'static str,
}

impl HeatField {
    pub fn row(&self, k: usize) -> &[f64] {
        let w = self.nx + 1;
        &self.values[k * w..(k + 1) * w]
    }

    pub fn last_row(&self) -> &[f64] {
        self.row(self.ts.len() - 1)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        wr.write_record(["x", "t", "value"]).map_err(io)?;
        for (k, t) in self.ts.iter().enumerate() {
            for (x, v) in self.xs.iter().zip(self.row(k)) {
                wr.write_record([x.to_string(), t.to_string(), v.to_string()]).map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }

    /// Little-endian dump: i64 header (nx, stored intervals, round(a·1e6),
    /// round(b·1e6)) followed by the stored rows as f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidArgument(format!("binary dump: {e}"));
        let header = [
            self.nx as i64,
            self.ts.len() as i64 - 1,
            (self.domain.0 * 1e6).round() as i64,
            (self.domain.1 * 1e6).round() as i64,
        ];
        for h in header {
            w.write_all(&h.to_le_bytes()).map_err(io)?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    /// Discrete spatial mean with trapezoid weights.
    pub fn mean(row: &[f64]) -> f64 {
        let n = row.len() - 1;
        let s: f64 = row[1..n].iter().sum::<f64>() + 0.5 * (row[0] + row[n]);
        s / n as f64
    }
}

/// Solves a tridiagonal system in place (Thomas); sub/sup have length n−1.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], work: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut beta = diag[0];
    if beta.abs() < 1e-300 {
        return Err(Error::InvalidBc("singular boundary closure".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        work[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i - 1] * work[i];
        if beta.abs() < 1e-300 {
            return Err(Error::InvalidBc("singular boundary closure".into()));
        }
        rhs[i] = (rhs[i] - sub[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i + 1] * rhs[i + 1];
    }
    Ok(())
}

/// Crank–Nicolson on nx+1 nodes over `domain` and nt steps over [0, T].
///
/// Neumann and Robin ends use a ghost node eliminated through the centered
/// boundary difference; boundary data enter at half steps, Dirichlet values at
/// full steps.
pub fn solve_heat(
    left: &BoundarySpec,
    right: &BoundarySpec,
    init: &[f64],
    domain: (f64, f64),
    horizon: f64,
    nx: usize,
    nt: usize,
    opts: SolveOptions,
) -> Result<HeatField> {
    if nx < 16 || nt < 16 {
        return Err(Error::InvalidGrid(format!("need nx, nt ≥ 16 (got {nx}, {nt})")));
    }
    if init.len() != nx + 1 {
        return Err(Error::InvalidGrid(format!("initial row has {} values, want {}", init.len(), nx + 1)));
    }
    if !(domain.1 > domain.0) || !(horizon > 0.0) {
        return Err(Error::InvalidGrid("empty domain or horizon".into()));
    }
    let n = nx + 1;
    let dx = (domain.1 - domain.0) / nx as f64;
    let dt = horizon / nt as f64;
    let lam = dt / (dx * dx);
    let xs: Vec<f64> = (0..n).map(|i| domain.0 + dx * i as f64).collect();

    // Operator D (times dx²) as a tridiagonal with boundary rows.
    let mut d_sub = vec![1.0; n - 1];
    let mut d_diag = vec![-2.0; n];
    let mut d_sup = vec![1.0; n - 1];
    // Forcing coefficient on g at each end: D u_0 += c0 g, D u_N += c1 g.
    let (a0, b0) = left.kind.pair();
    let (a1, b1) = right.kind.pair();
    let dir0 = b0 == 0.0;
    let dir1 = b1 == 0.0;
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    if !dir0 {
        // u_{−1} = u_1 − (2dx/β)(g − α u_0).
        d_sup[0] = 2.0;
        d_diag[0] = -2.0 + 2.0 * dx * a0 / b0;
        c0 = -2.0 * dx / b0;
    }
    if !dir1 {
        // u_{N+1} = u_{N−1} + (2dx/β)(g − α u_N).
        d_sub[n - 2] = 2.0;
        d_diag[n - 1] = -2.0 - 2.0 * dx * a1 / b1;
        c1 = 2.0 * dx / b1;
    }

    let mut a_sub: Vec<f64> = d_sub.iter().map(|v| -0.5 * lam * v).collect();
    let mut a_diag: Vec<f64> = d_diag.iter().map(|v| 1.0 - 0.5 * lam * v).collect();
    let mut a_sup: Vec<f64> = d_sup.iter().map(|v| -0.5 * lam * v).collect();
    if dir0 {
        a_diag[0] = 1.0;
        a_sup[0] = 0.0;
    }
    if dir1 {
        a_diag[n - 1] = 1.0;
        a_sub[n - 2] = 0.0;
    }

    let store = opts.store_every.max(1);
    let mut ts = vec![0.0];
    let mut values = init.to_vec();
    let mut u = init.to_vec();
    let mut rhs = vec![0.0; n];
    let mut work = vec![0.0; n];
    for step in 0..nt {
        let t_half = (step as f64 + 0.5) * dt;
        let t_next = (step + 1) as f64 * dt;
        for i in 0..n {
            let lo = if i > 0 { d_sub[i - 1] * u[i - 1] } else { 0.0 };
            let hi = if i + 1 < n { d_sup[i] * u[i + 1] } else { 0.0 };
            rhs[i] = u[i] + 0.5 * lam * (lo + d_diag[i] * u[i] + hi);
        }
        if dir0 {
            rhs[0] = left.data.at(t_next) / a0;
        } else {
            rhs[0] += lam * c0 * left.data.at(t_half);
        }
        if dir1 {
            rhs[n - 1] = right.data.at(t_next) / a1;
        } else {
            rhs[n - 1] += lam * c1 * right.data.at(t_half);
        }
        thomas(&a_sub, &a_diag, &a_sup, &mut rhs, &mut work)?;
        std::mem::swap(&mut u, &mut rhs);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite state at step {}", step + 1)));
        }
        if (step + 1) % store == 0 || step + 1 == nt {
            ts.push(t_next);
            values.extend_from_slice(&u);
        }
    }
    Ok(HeatField { xs, ts, values, nx, nt, domain, scheme: "crank-nicolson" })
}

/// Norms of the final row against target samples.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TerminalError {
    pub linf: f64,
    pub l2: f64,
    pub rel_linf: f64,
}

pub fn terminal_error(field: &HeatField, target: &[f64]) -> Result<TerminalError> {
    let row = field.last_row();
    if target.len() != row.len() {
        return Err(Error::InvalidGrid("target samples do not match the grid".into()));
    }
    let n = row.len() - 1;
    let dx = (field.domain.1 - field.domain.0) / n as f64;
    let mut linf = 0.0f64;
    let mut l2 = 0.0;
    for (i, (u, v)) in row.iter().zip(target).enumerate() {
        let e = (u - v).abs();
        linf = linf.max(e);
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        l2 += w * e * e * dx;
    }
    let scale = target.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let rel_linf = if scale > 0.0 { linf / scale } else { linf };
    Ok(TerminalError { linf, l2: l2.sqrt(), rel_linf })
}

/// Manufactured problems with known solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Manufactured {
    /// sin(πx) with homogeneous Dirichlet data on [0, 1].
    DirichletSine,
    /// x² + 2t with Neumann data 0 and 2 on [0, 1].
    Polynomial,
}

impl Manufactured {
    pub fn exact(self, x: f64, t: f64) -> f64 {
        match self {
            Manufactured::DirichletSine => {
                (-std::f64::consts::PI.powi(2) * t).exp() * (std::f64::consts::PI * x).sin()
            }
            Manufactured::Polynomial => x * x + 2.0 * t,
        }
    }

    pub fn solve(self, horizon: f64, nx: usize, nt: usize) -> Result<HeatField> {
        let (l, r) = match self {
            Manufactured::DirichletSine => {
                (BoundarySpec::homogeneous(BcKind::Dirichlet)?, BoundarySpec::homogeneous(BcKind::Dirichlet)?)
            }
            Manufactured::Polynomial => (
                BoundarySpec::homogeneous(BcKind::Neumann)?,
                BoundarySpec::new(BcKind::Neumann, BoundaryData::Function(Arc::new(|_| 2.0)))?,
            ),
        };
        let init: Vec<f64> = (0..=nx).map(|i| self.exact(i as f64 / nx as f64, 0.0)).collect();
        solve_heat(&l, &r, &init, (0.0, 1.0), horizon, nx, nt, SolveOptions { store_every: nt })
    }

    pub fn terminal_error(self, field: &HeatField) -> Result<TerminalError> {
        let t = *field.ts.last().unwrap();
        let target: Vec<f64> = field.xs.iter().map(|x| self.exact(*x, t)).collect();
        terminal_error(field, &target)
    }
}

/// Observed orders from three-grid ladders.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub problem: Manufactured,
    pub space_errors: Vec<f64>,
    pub time_errors: Vec<f64>,
    pub space_order: f64,
    pub time_order: f64,
    /// All errors at rounding level: the scheme reproduces the solution.
    pub exact: bool,
}

/// Grid ladder: spatial refinement at fixed fine dt, temporal refinement at fixed nx.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ladder {
    pub horizon: f64,
    pub nx: Vec<usize>,
    pub nt_fixed: usize,
    pub nt: Vec<usize>,
    pub nx_fixed: usize,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder { horizon: 0.1, nx: vec![32, 64, 128], nt_fixed: 4096, nt: vec![16, 32, 64], nx_fixed: 512 }
    }
}

fn richardson(coarse: &HeatField, mid: &HeatField, fine: &HeatField) -> f64 {
    // Successive differences on the coarser grid's nodes (the ladder nests).
    let diff = |a: &HeatField, b: &HeatField| {
        let ra = a.last_row();
        let rb = b.last_row();
        let s = (rb.len() - 1) / (ra.len() - 1);
        ra.iter().enumerate().map(|(i, v)| (v - rb[i * s]).abs()).fold(0.0, f64::max)
    };
    (diff(coarse, mid) / diff(mid, fine)).log2()
}

pub fn convergence_study(problem: Manufactured, ladder: &Ladder) -> Result<ConvergenceReport> {
    if ladder.nx.len() != 3 || ladder.nt.len() != 3 {
        return Err(Error::InvalidGrid("ladders need three levels".into()));
    }
    let space: Result<Vec<HeatField>> =
        ladder.nx.par_iter().map(|nx| problem.solve(ladder.horizon, *nx, ladder.nt_fixed)).collect();
    let time: Result<Vec<HeatField>> =
        ladder.nt.par_iter().map(|nt| problem.solve(ladder.horizon, ladder.nx_fixed, *nt)).collect();
    let (space, time) = (space?, time?);
    let space_errors: Vec<f64> = space.iter().map(|f| problem.terminal_error(f).map(|e| e.linf)).collect::<Result<_>>()?;
    let time_errors: Vec<f64> = time.iter().map(|f| problem.terminal_error(f).map(|e| e.linf)).collect::<Result<_>>()?;
    let exact = space_errors.iter().chain(&time_errors).all(|e| *e < 1e-11);
    let (space_order, time_order) = if exact {
        (f64::NAN, f64::NAN)
    } else {
        (richardson(&space[0], &space[1], &space[2]), richardson(&time[0], &time[1], &time[2]))
    };
    Ok(ConvergenceReport { problem, space_errors, time_errors, space_order, time_order, exact })
}
