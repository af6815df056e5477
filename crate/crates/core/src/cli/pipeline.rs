//! Synthesize → simulate → verify, independent of argument parsing.

use std::sync::Arc;

use serde::Serialize;

use super::config::{target_radius, BoundarySetting, ExperimentConfig, ProblemConfig};
use crate::borel_interp::{
    laplace_interpolate, steer_output_even, steer_output_odd, CoeffSequence, Convention, FlatOutput, LaplaceKernel,
    LaplaceOptions, Method, SteerOptions,
};
use crate::error::{Error, Result};
use crate::flatness::{
    assemble_even, assemble_odd, dirichlet_control, neumann_control, robin_two_sided, truncation_order,
    ControlSignal, SeriesField, N_CAP,
};
use crate::heatsim::{solve_heat, terminal_error, BoundaryData, BoundarySpec, HeatField, SolveOptions, TerminalError};
use crate::real::{ln_factorial, Prec};
use crate::target::{
    classify_reachability, parity_split, taylor_coeffs, AnalyticTarget, Geometry, ReachabilityVerdict, TargetSpec,
};

/// Coefficient prefix fetched before N is known.
const FIRST_PREFIX: usize = 80;

/// Terminal state θ_T as a function of x.
#[derive(Clone)]
pub enum TerminalState {
    Analytic(AnalyticTarget),
    /// Σ d_n x^{2n}/(2n)! with d_n from a Laplace kernel.
    Series(Arc<Vec<f64>>),
}

impl TerminalState {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            TerminalState::Analytic(f) => f.value(x),
            TerminalState::Series(d) => {
                let mut s = 0.0;
                for (n, v) in d.iter().enumerate() {
                    if *v == 0.0 {
                        continue;
                    }
                    let t = if x == 0.0 {
                        if n == 0 {
                            *v
                        } else {
                            0.0
                        }
                    } else {
                        v.signum() * (v.abs().ln() + 2.0 * n as f64 * x.abs().ln() - ln_factorial(2 * n as u32)).exp()
                    };
                    s += t;
                    if n > 8 && t.abs() <= 1e-17 * s.abs() {
                        break;
                    }
                }
                s
            }
        }
    }

    pub fn sample(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|x| self.value(*x)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PartReport {
    pub part: &'static str,
    pub m: f64,
    pub r: f64,
    pub r_prime: f64,
    pub r_work: f64,
    pub r_prime_work: f64,
    /// sup-measured M' of the output (None when zero).
    pub m_prime: Option<f64>,
    pub n_max: usize,
    /// max_i |y^{(i)}(0)|.
    pub endpoint_zero: f64,
    /// max_i |y^{(i)}(T) − d_i|/max(|d_i|, 1).
    pub endpoint_target: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SynthReport {
    pub method: Method,
    pub setting: BoundarySetting,
    pub horizon: f64,
    pub r0: f64,
    /// N used for the controls.
    pub n: usize,
    /// Series ratio R'/R at x = 1.
    pub ratio: f64,
    /// Order the measured M' would ask for at the same tolerance.
    pub n_measured: Option<usize>,
    pub tail_bound: Option<f64>,
    pub precision_bits: u32,
    pub parts: Vec<PartReport>,
    /// max_x |Σ_{i≤N} series(x, T) − θ_T(x)| on 201 points.
    pub series_terminal_error: f64,
    /// max_t |h_f64(t) − h_ext(t)|/max(|h_ext(t)|, 1) over 8 interior times.
    pub control_precision_gap: f64,
    pub reachability: Option<ReachabilityVerdict>,
}

pub struct Synthesis {
    pub problem: ProblemConfig,
    pub outputs: Vec<Arc<FlatOutput>>,
    pub field: Arc<SeriesField>,
    /// (left, right); None where the end is homogeneous.
    pub controls: (Option<ControlSignal>, Option<ControlSignal>),
    pub terminal: TerminalState,
    pub report: SynthReport,
}

/// Taylor data of the target at 0 with certificate radius R, for indices < len.
fn target_coeffs(f: &AnalyticTarget, r: f64, len: usize) -> Result<CoeffSequence> {
    match &f.spec {
        TargetSpec::Coeffs { coeffs, center, .. } => {
            if *center != 0.0 {
                return Err(Error::InvalidArgument("coefficient targets must be centered at 0".into()));
            }
            let mut d = coeffs.clone();
            d.resize(len.max(d.len()), 0.0);
            CoeffSequence::certify(d, r, Convention::Factorial)
        }
        _ => taylor_coeffs(f, 0.0, len - 1, 0.98 * r),
    }
}

fn zero_prefix(c: &CoeffSequence) -> bool {
    c.d.iter().all(|v| *v == 0.0)
}

fn pick_n(fixed: Option<usize>, ms: &[f64], q: f64, tol: f64) -> Result<usize> {
    if let Some(n) = fixed {
        if n > N_CAP {
            return Err(Error::InvalidArgument(format!("N = {n} exceeds the cap {N_CAP}")));
        }
        return Ok(n);
    }
    let mut n = 0;
    for m in ms {
        n = n.max(truncation_order(*m, q, tol)?);
    }
    Ok(n)
}

fn part_report(part: &'static str, y: &FlatOutput, n: usize) -> Result<PartReport> {
    let c = &y.certificate;
    let (e0, et) = y.endpoint_errors(n)?;
    Ok(PartReport {
        part,
        m: y.targets.m,
        r: c.r,
        r_prime: c.r_prime,
        r_work: c.r_work,
        r_prime_work: c.r_prime_work,
        m_prime: c.m_prime,
        n_max: y.n_max,
        endpoint_zero: e0,
        endpoint_target: et,
    })
}

/// Flat outputs, truncated series and sampled controls for a validated config.
///
/// `steps` is the number of control intervals over [0, T]; the simulation
/// consumes samples at every half step, so it passes 2·nt.
pub fn synthesize(cfg: &ExperimentConfig, precision: Prec, steps: usize) -> Result<Synthesis> {
    let problem = cfg.problem.clone().ok_or_else(|| Error::InvalidArgument("missing problem".into()))?;
    let s = cfg.synthesis.clone().ok_or_else(|| Error::InvalidArgument("missing synthesis".into()))?;
    let horizon = problem.horizon;
    let r0 = crate::r0();
    let mut opts = SteerOptions::default();
    opts.petzsche.precision = precision;

    let (mut outputs, terminal, n, q, reachability) = match s.method {
        Method::Petzsche => {
            let f = cfg.analytic_target().map_err(|e| Error::InvalidArgument(e.0))?;
            let r = target_radius(&f, s.r).ok_or_else(|| Error::InvalidArgument("no target radius".into()))?;
            let rp = s.r_prime.ok_or_else(|| Error::InvalidArgument("missing r_prime".into()))?;
            let q = rp / r;
            let mut len = 2 * FIRST_PREFIX + 2;
            let (mut even, mut odd, mut n);
            loop {
                let c = target_coeffs(&f, r, len)?;
                let (e, o) = parity_split(&c)?;
                even = e.recertify(r, Convention::DoubleFactorial)?;
                odd = o.recertify(r, Convention::OddFactorial)?;
                let ms: Vec<f64> = match problem.setting {
                    BoundarySetting::Neumann => vec![even.m],
                    BoundarySetting::Dirichlet => vec![odd.m],
                    BoundarySetting::TwoSided => vec![even.m, odd.m],
                };
                n = pick_n(s.n, &ms, q, s.tol)?;
                if 2 * (n + 3) <= len {
                    break;
                }
                len = 2 * (n + 3) + 2;
            }
            let n_max = n + 1;
            even.d.truncate(n_max + 1);
            odd.d.truncate(n_max + 1);
            let mut outs = Vec::new();
            if problem.setting != BoundarySetting::Dirichlet {
                if problem.setting == BoundarySetting::Neumann && !zero_prefix(&odd) {
                    return Err(Error::InvalidArgument("the neumann setting needs an even target".into()));
                }
                outs.push(("even", steer_output_even(&even, horizon, rp, s.sigma, n_max, &opts)?));
            }
            if problem.setting != BoundarySetting::Neumann {
                if problem.setting == BoundarySetting::Dirichlet && !zero_prefix(&even) {
                    return Err(Error::InvalidArgument("the dirichlet setting needs an odd target".into()));
                }
                outs.push(("odd", steer_output_odd(&odd, horizon, rp, s.sigma, n_max, &opts)?));
            }
            let geometry = Geometry { left: problem.domain().0, right: problem.domain().1 };
            let verdict = classify_reachability(&f, problem.setting.reachability(), geometry).ok();
            (outs, TerminalState::Analytic(f), n, q, verdict)
        }
        Method::Laplace => {
            let kernel: LaplaceKernel = s.kernel.clone().ok_or_else(|| Error::InvalidArgument("missing kernel".into()))?;
            let r = s.r.unwrap_or(1.5);
            let q = 1.0 / r;
            let mut len = FIRST_PREFIX;
            let (mut d, mut n);
            loop {
                d = vec![s.d0];
                d.extend((1..len).map(|k| kernel.target(k)));
                let c = CoeffSequence::certify(d.clone(), r, Convention::DoubleFactorial)?;
                n = pick_n(s.n, &[c.m], q, s.tol)?;
                if n + 3 <= len {
                    break;
                }
                len = n + 4;
            }
            let lopts = LaplaceOptions { sigma: s.sigma, n_max: n + 1, r, precision, ..Default::default() };
            let y = laplace_interpolate(&kernel, s.d0, 0.0, horizon, &lopts)?;
            (vec![("even", y)], TerminalState::Series(Arc::new(d)), n, q, None)
        }
    };

    // Jets after construction are evaluated in double precision.
    let mut parts = Vec::new();
    for (name, y) in outputs.iter_mut() {
        y.precision = Prec::DOUBLE;
        if !y.is_zero() {
            y.certify(y.n_max, s.certify_points)?;
        }
        parts.push(part_report(name, y, y.n_max)?);
    }
    let n_measured = parts
        .iter()
        .filter_map(|p| p.m_prime)
        .map(|m| truncation_order(m, q, s.tol).ok())
        .try_fold(0usize, |acc, v| v.map(|v| acc.max(v)));
    let outputs: Vec<Arc<FlatOutput>> = outputs.into_iter().map(|(_, y)| Arc::new(y)).collect();

    let (field, controls) = match problem.setting {
        BoundarySetting::Neumann => {
            let mut c = neumann_control(outputs[0].clone(), n)?;
            c.sample(steps)?;
            (c.field.clone(), (None, Some(c)))
        }
        BoundarySetting::Dirichlet => {
            let mut c = dirichlet_control(outputs[0].clone(), n)?;
            c.sample(steps)?;
            (c.field.clone(), (None, Some(c)))
        }
        BoundarySetting::TwoSided => {
            let (a, b) = (problem.left_kind().pair(), problem.right_kind().pair());
            let (mut l, mut r) = robin_two_sided(outputs[0].clone(), outputs[1].clone(), a, b, n)?;
            l.sample(steps)?;
            r.sample(steps)?;
            (l.field.clone(), (Some(l), Some(r)))
        }
    };
    if let (Some(c), _) | (None, Some(c)) = (&controls.0, &controls.1) {
        if !c.is_finite() {
            return Err(Error::DivergentSeries("control samples are not finite".into()));
        }
    }
    let control_precision_gap = precision_gap(&controls, precision)?;
    let slice = field.slice(horizon)?;
    let (a, b) = problem.domain();
    let series_terminal_error = (0..=200)
        .map(|k| {
            let x = a + (b - a) * k as f64 / 200.0;
            (slice.value(x) - terminal.value(x)).abs()
        })
        .fold(0.0, f64::max);

    let report = SynthReport {
        method: s.method,
        setting: problem.setting,
        horizon,
        r0,
        n,
        ratio: q,
        n_measured,
        tail_bound: field.tail_bound,
        precision_bits: precision.0,
        parts,
        series_terminal_error,
        control_precision_gap,
        reachability,
    };
    Ok(Synthesis { problem, outputs, field, controls, terminal, report })
}

/// Spot check of the double-precision control evaluator against `precision`.
fn precision_gap(controls: &(Option<ControlSignal>, Option<ControlSignal>), precision: Prec) -> Result<f64> {
    if precision.is_double() {
        return Ok(0.0);
    }
    let mut gap = 0.0f64;
    for c in [&controls.0, &controls.1].into_iter().flatten() {
        let mut ext = (*c.field).clone();
        ext.precision = precision;
        let ext = ControlSignal::new(c.boundary, Arc::new(ext))?;
        for k in 1..=8 {
            let t = c.field.horizon * k as f64 / 9.0;
            let (a, b) = (c.value(t)?, ext.value(t)?);
            gap = gap.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    Ok(gap)
}

#[derive(Clone, Debug, Serialize)]
pub struct SimReport {
    pub nx: usize,
    pub nt: usize,
    pub domain: (f64, f64),
    pub terminal: TerminalError,
}

fn boundary(kind: crate::heatsim::BcKind, control: Option<&ControlSignal>, horizon: f64, nt: usize) -> Result<BoundarySpec> {
    match control {
        None => BoundarySpec::homogeneous(kind),
        Some(c) => BoundarySpec::new(kind, half_step_data(&c.samples, horizon, nt)?),
    }
}

/// Boundary data at t = k·dt/2 from (t, value) samples, interpolated linearly
/// when the sample times do not already sit on the half steps.
pub fn half_step_data(samples: &[(f64, f64)], horizon: f64, nt: usize) -> Result<BoundaryData> {
    if samples.len() < 2 {
        return Err(Error::InvalidGrid("need at least two control samples".into()));
    }
    let dt = horizon / nt as f64;
    let on_grid = samples.len() == 2 * nt + 1
        && samples.iter().enumerate().all(|(k, (t, _))| (t - 0.5 * dt * k as f64).abs() <= 1e-12 * horizon);
    if on_grid {
        return Ok(BoundaryData::HalfSteps { dt, values: Arc::new(samples.iter().map(|s| s.1).collect()) });
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidGrid("control sample times must increase".into()));
    }
    let values = (0..=2 * nt)
        .map(|k| {
            let t = 0.5 * dt * k as f64;
            let j = ts.partition_point(|s| *s <= t);
            if j == 0 {
                samples[0].1
            } else if j >= samples.len() {
                samples[samples.len() - 1].1
            } else {
                let (t0, v0) = samples[j - 1];
                let (t1, v1) = samples[j];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        })
        .collect();
    Ok(BoundaryData::HalfSteps { dt, values: Arc::new(values) })
}

/// Replays the controls from the zero state and compares with θ_T.
pub fn simulate(
    problem: &ProblemConfig,
    controls: (Option<&ControlSignal>, Option<&ControlSignal>),
    terminal: &TerminalState,
    nx: usize,
    nt: usize,
    store_every: Option<usize>,
) -> Result<(HeatField, SimReport)> {
    let horizon = problem.horizon;
    let left = boundary(problem.left_kind(), controls.0, horizon, nt)?;
    let right = boundary(problem.right_kind(), controls.1, horizon, nt)?;
    let domain = problem.domain();
    let init = vec![0.0; nx + 1];
    let opts = SolveOptions { store_every: store_every.unwrap_or(nt) };
    let field = solve_heat(&left, &right, &init, domain, horizon, nx, nt, opts)?;
    let target = terminal.sample(&field.xs);
    let err = terminal_error(&field, &target)?;
    Ok((field, SimReport { nx, nt, domain, terminal: err }))
}

/// Outcome of the full pipeline.
pub struct Verification {
    pub synthesis: Synthesis,
    pub field: HeatField,
    pub sim: SimReport,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn verify(cfg: &ExperimentConfig, precision: Prec, tolerance: f64) -> Result<Verification> {
    let sim_cfg = cfg.simulation.clone().ok_or_else(|| Error::InvalidArgument("missing simulation".into()))?;
    let syn = synthesize(cfg, precision, 2 * sim_cfg.nt)?;
    let (field, sim) = simulate(
        &syn.problem,
        (syn.controls.0.as_ref(), syn.controls.1.as_ref()),
        &syn.terminal,
        sim_cfg.nx,
        sim_cfg.nt,
        sim_cfg.store_every,
    )?;
    let pass = sim.terminal.rel_linf <= tolerance;
    Ok(Verification { synthesis: syn, field, sim, tolerance, pass })
}

/// Terminal state of a config without running the synthesis.
pub fn terminal_state(cfg: &ExperimentConfig) -> Result<TerminalState> {
    let s = cfg.synthesis.as_ref().ok_or_else(|| Error::InvalidArgument("missing synthesis".into()))?;
    match s.method {
        Method::Petzsche => Ok(TerminalState::Analytic(cfg.analytic_target().map_err(|e| Error::InvalidArgument(e.0))?)),
        Method::Laplace => {
            let kernel = s.kernel.clone().ok_or_else(|| Error::InvalidArgument("missing kernel".into()))?;
            let mut d = vec![s.d0];
            d.extend((1..FIRST_PREFIX).map(|k| kernel.target(k)));
            Ok(TerminalState::Series(Arc::new(d)))
        }
    }
}

/// Even or odd series field of one output, for callers that bypass the controls.
pub fn series_of(y: Arc<FlatOutput>, n: usize) -> Result<SeriesField> {
    match y.parity {
        crate::borel_interp::Parity::Even => assemble_even(y, n),
        crate::borel_interp::Parity::Odd => assemble_odd(y, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(target: &str, setting: &str, extra: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(
            r#"{{"schema_version": 1,
                "problem": {{"setting": "{setting}", "horizon": 0.5}},
                "target": {target},
                "synthesis": {{"method": "petzsche", "r_prime": 1.3, "r": 2.0, "n": 6 {extra}}},
                "simulation": {{"nx": 64, "nt": 64}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn zero_target_verifies_trivially() {
        let c = config(r#"{"kind": "builtin", "name": "zero"}"#, "neumann", "");
        c.validate_pipeline().unwrap();
        let v = verify(&c, Prec::DOUBLE, 1e-3).unwrap();
        assert!(v.pass);
        assert!(v.field.values.iter().all(|x| *x == 0.0));
        let ctl = v.synthesis.controls.1.as_ref().unwrap();
        assert!(ctl.samples.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn parity_mismatch_is_reported() {
        let c = config(r#"{"kind": "builtin", "name": "odd-inverse-quadratic", "a": 2.0}"#, "neumann", "");
        assert!(synthesize(&c, Prec::DOUBLE, 32).is_err());
    }

    #[test]
    fn half_step_resampling() {
        let s: Vec<(f64, f64)> = (0..=10).map(|k| (0.1 * k as f64, 0.1 * k as f64)).collect();
        match half_step_data(&s, 1.0, 20).unwrap() {
            BoundaryData::HalfSteps { values, .. } => {
                assert_eq!(values.len(), 41);
                assert!((values[13] - 0.325).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn series_terminal_state() {
        let d: Vec<f64> = (0..40).map(|n| 1.0 / (n as f64 + 1.0)).collect();
        let t = TerminalState::Series(Arc::new(d.clone()));
        let x: f64 = 0.7;
        let want: f64 = d.iter().enumerate().map(|(n, v)| v * x.powi(2 * n as i32) / (ln_factorial(2 * n as u32)).exp()).sum();
        assert!((t.value(x) - want).abs() < 1e-14);
        assert_eq!(t.value(0.0), 1.0);
    }
}
