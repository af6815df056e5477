//! State and boundary traces assembled from flat outputs.
//!
//! An even output y gives θ(x,t) = Σ x^{2i} y^{(i)}(t)/(2i)!, an odd output z
//! gives φ(x,t) = Σ x^{2i+1} z^{(i)}(t)/(2i+1)!. Coefficients are taken from
//! [`FlatOutput::scaled_as`], so no factorial is formed explicitly.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::borel_interp::{FlatOutput, Parity};
use crate::error::{Error, Result};
use crate::real::Prec;

/// Guard on [`truncation_order`].
pub const N_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldParity {
    Even,
    Odd,
    Mixed,
}

/// Truncated series solution of the heat equation.
#[derive(Clone, Debug)]
pub struct SeriesField {
    pub parity: FieldParity,
    pub n: usize,
    pub horizon: f64,
    pub even: Option<Arc<FlatOutput>>,
    pub odd: Option<Arc<FlatOutput>>,
    /// M'·Σ_{i>N} q^{2i}/(2i+1) when the outputs carry a measured M'.
    pub tail_bound: Option<f64>,
    /// Arithmetic used for the output jets; double unless raised.
    pub precision: Prec,
}

/// Series coefficients at one instant: e_i = y^{(i)}/(2i)!, o_i = z^{(i)}/(2i+1)!.
/// Both carry N+2 entries so that the residual term is available.
#[derive(Clone, Debug, Default)]
pub struct Slice {
    pub even: Vec<f64>,
    pub odd: Vec<f64>,
}

fn horner_sq(c: &[f64], x2: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x2 + v)
}

impl Slice {
    fn n(&self) -> usize {
        self.even.len().max(self.odd.len()).saturating_sub(2)
    }

    fn trunc<'a>(&self, c: &'a [f64]) -> &'a [f64] {
        &c[..c.len().min(self.n() + 1)]
    }

    pub fn value(&self, x: f64) -> f64 {
        let x2 = x * x;
        horner_sq(self.trunc(&self.even), x2) + x * horner_sq(self.trunc(&self.odd), x2)
    }

    pub fn dx(&self, x: f64) -> f64 {
        let x2 = x * x;
        let e = self.trunc(&self.even);
        let o = self.trunc(&self.odd);
        // θ_x = x Σ_{i≥1} 2i e_i x^{2i−2}; φ_x = Σ (2i+1) o_i x^{2i}.
        let de: Vec<f64> = e.iter().enumerate().skip(1).map(|(i, v)| 2.0 * i as f64 * v).collect();
        let dodd: Vec<f64> = o.iter().enumerate().map(|(i, v)| (2 * i + 1) as f64 * v).collect();
        x * horner_sq(&de, x2) + horner_sq(&dodd, x2)
    }

    /// θ_t − θ_xx of the truncated series: only the dropped i = N+1 term survives.
    pub fn residual(&self, x: f64) -> f64 {
        let n = self.n();
        let mut r = 0.0;
        if let Some(e) = self.even.get(n + 1) {
            r += x.powi(2 * n as i32) * ((2 * n + 1) * (2 * n + 2)) as f64 * e;
        }
        if let Some(o) = self.odd.get(n + 1) {
            r += x.powi(2 * n as i32 + 1) * ((2 * n + 2) * (2 * n + 3)) as f64 * o;
        }
        r
    }
}

/// Smallest N with M·Σ_{i>N} ratio^{2i}/(2i+1) ≤ tol.
pub fn truncation_order(m: f64, ratio: f64, tol: f64) -> Result<usize> {
    if !(ratio >= 0.0 && ratio < 1.0) {
        return Err(Error::DivergentSeries(format!("ratio {ratio} is not below 1")));
    }
    if !(m >= 0.0 && tol > 0.0) {
        return Err(Error::InvalidArgument("need M ≥ 0 and tol > 0".into()));
    }
    for n in 0..=N_CAP {
        if m * control_tail(ratio, n) <= tol {
            return Ok(n);
        }
    }
    Err(Error::DivergentSeries(format!("tail above {tol} past N = {N_CAP}")))
}

/// Σ_{i>N} q^{2i}/(2i+1), summed until the terms stop mattering.
pub fn control_tail(q: f64, n: usize) -> f64 {
    let q2 = q * q;
    let mut s = 0.0;
    let mut i = n + 1;
    let mut term_pow = q2.powi(i as i32);
    while term_pow > 0.0 {
        let t = term_pow / (2 * i + 1) as f64;
        s += t;
        if t <= s * 1e-17 {
            break;
        }
        i += 1;
        term_pow *= q2;
    }
    s
}

fn ratio_of(y: &FlatOutput) -> Result<f64> {
    let q = y.certificate.r_prime / y.certificate.r;
    if !(q < 1.0) {
        return Err(Error::DivergentSeries(format!("certificate ratio R'/R = {q} is not below 1")));
    }
    Ok(q)
}

fn tail_of(y: &FlatOutput, n: usize) -> Result<Option<f64>> {
    let q = ratio_of(y)?;
    Ok(y.certificate.m_prime.map(|m| m * control_tail(q, n)))
}

fn horizon_match(a: &FlatOutput, b: &FlatOutput) -> Result<()> {
    if (a.horizon - b.horizon).abs() > 1e-12 * a.horizon.max(1.0) {
        return Err(Error::InvalidArgument("flat outputs have different horizons".into()));
    }
    Ok(())
}

pub fn assemble_even(y: Arc<FlatOutput>, n: usize) -> Result<SeriesField> {
    let tail_bound = tail_of(&y, n)?;
    Ok(SeriesField { parity: FieldParity::Even, n, horizon: y.horizon, even: Some(y), odd: None, tail_bound, precision: Prec::DOUBLE })
}

pub fn assemble_odd(z: Arc<FlatOutput>, n: usize) -> Result<SeriesField> {
    let tail_bound = tail_of(&z, n)?;
    Ok(SeriesField { parity: FieldParity::Odd, n, horizon: z.horizon, even: None, odd: Some(z), tail_bound, precision: Prec::DOUBLE })
}

/// ψ = θ + φ on [−1, 1].
pub fn assemble_mixed(y: Arc<FlatOutput>, z: Arc<FlatOutput>, n: usize) -> Result<SeriesField> {
    horizon_match(&y, &z)?;
    let tail_bound = match (tail_of(&y, n)?, tail_of(&z, n)?) {
        (Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    Ok(SeriesField {
        parity: FieldParity::Mixed,
        n,
        horizon: y.horizon,
        even: Some(y),
        odd: Some(z),
        tail_bound,
        precision: Prec::DOUBLE,
    })
}

impl SeriesField {
    /// Coefficients at time t, up to order N+1.
    pub fn slice(&self, t: f64) -> Result<Slice> {
        let get = |y: &Option<Arc<FlatOutput>>, parity: Parity| -> Result<Vec<f64>> {
            match y {
                None => Ok(Vec::new()),
                Some(y) => y.scaled_as(t, self.n + 1, parity, self.precision),
            }
        };
        Ok(Slice { even: get(&self.even, Parity::Even)?, odd: get(&self.odd, Parity::Odd)? })
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.slice(t)?.value(x))
    }

    pub fn dx(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.slice(t)?.dx(x))
    }

    /// Values on the tensor grid, one row per time.
    pub fn grid(&self, xs: &[f64], ts: &[f64]) -> Result<Vec<Vec<f64>>> {
        ts.par_iter()
            .map(|t| {
                let s = self.slice(*t)?;
                Ok(xs.iter().map(|x| s.value(*x)).collect())
            })
            .collect()
    }

    /// sup of the exact residual θ_t − θ_xx over the grid.
    pub fn max_residual(&self, xs: &[f64], ts: &[f64]) -> Result<f64> {
        let rows: Result<Vec<f64>> = ts
            .par_iter()
            .map(|t| {
                let s = self.slice(*t)?;
                Ok(xs.iter().map(|x| s.residual(*x).abs()).fold(0.0, f64::max))
            })
            .collect();
        Ok(rows?.into_iter().fold(0.0, f64::max))
    }

    /// Writes `x,t,value` rows.
    pub fn write_csv<W: Write>(&self, w: W, xs: &[f64], ts: &[f64]) -> Result<()> {
        let g = self.grid(xs, ts)?;
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        wr.write_record(["x", "t", "value"]).map_err(io)?;
        for (t, row) in ts.iter().zip(&g) {
            for (x, v) in xs.iter().zip(row) {
                wr.write_record([x.to_string(), t.to_string(), v.to_string()]).map_err(io)?;
            }
        }
        wr.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum End {
    Left,
    Right,
}

impl End {
    pub fn x(self) -> f64 {
        match self {
            End::Left => -1.0,
            End::Right => 1.0,
        }
    }
}

/// Boundary operator α ψ + β ψ_x at one endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Boundary {
    Dirichlet { end: End },
    Neumann { end: End },
    Robin { alpha: f64, beta: f64, end: End },
}

impl Boundary {
    pub fn coefficients(self) -> (f64, f64) {
        match self {
            Boundary::Dirichlet { .. } => (1.0, 0.0),
            Boundary::Neumann { .. } => (0.0, 1.0),
            Boundary::Robin { alpha, beta, .. } => (alpha, beta),
        }
    }

    pub fn end(self) -> End {
        match self {
            Boundary::Dirichlet { end } | Boundary::Neumann { end } | Boundary::Robin { end, .. } => end,
        }
    }

    pub fn validate(self) -> Result<()> {
        let (a, b) = self.coefficients();
        if a == 0.0 && b == 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidBc(format!("boundary pair ({a}, {b})")));
        }
        Ok(())
    }
}

/// Boundary control read off a truncated series.
#[derive(Clone, Debug)]
pub struct ControlSignal {
    pub boundary: Boundary,
    pub field: Arc<SeriesField>,
    pub n: usize,
    /// Sampled (t, value) pairs; empty until [`ControlSignal::sample`] is called.
    pub samples: Vec<(f64, f64)>,
}

impl ControlSignal {
    pub fn new(boundary: Boundary, field: Arc<SeriesField>) -> Result<Self> {
        boundary.validate()?;
        let n = field.n;
        Ok(ControlSignal { boundary, field, n, samples: Vec::new() })
    }

    /// Closed-form value of the control at t.
    pub fn value(&self, t: f64) -> Result<f64> {
        let (a, b) = self.boundary.coefficients();
        let x = self.boundary.end().x();
        let s = self.field.slice(t)?;
        let mut v = 0.0;
        if a != 0.0 {
            v += a * s.value(x);
        }
        if b != 0.0 {
            v += b * s.dx(x);
        }
        Ok(v)
    }

    pub fn values(&self, ts: &[f64]) -> Result<Vec<f64>> {
        ts.par_iter().map(|t| self.value(*t)).collect()
    }

    /// Samples on the uniform grid of `steps` intervals over [0, T].
    pub fn sample(&mut self, steps: usize) -> Result<()> {
        let h = self.field.horizon / steps as f64;
        let ts: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
        let v = self.values(&ts)?;
        self.samples = ts.into_iter().zip(v).collect();
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|(_, v)| v.is_finite())
    }

    /// Writes `t,value_real,value_imag`; the imaginary column is zero for real targets.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        wr.write_record(["t", "value_real", "value_imag"]).map_err(io)?;
        for (t, v) in &self.samples {
            wr.write_record([t.to_string(), v.to_string(), 0.0f64.to_string()]).map_err(io)?;
        }
        wr.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
        Ok(())
    }
}

/// h(t) = Σ_{1≤i≤N} y^{(i)}(t)/(2i−1)! = θ_x(1, t).
pub fn neumann_control(y: Arc<FlatOutput>, n: usize) -> Result<ControlSignal> {
    let f = assemble_even(y, n)?;
    ControlSignal::new(Boundary::Neumann { end: End::Right }, Arc::new(f))
}

/// k(t) = Σ_{i≤N} z^{(i)}(t)/(2i+1)! = φ(1, t).
pub fn dirichlet_control(z: Arc<FlatOutput>, n: usize) -> Result<ControlSignal> {
    let f = assemble_odd(z, n)?;
    ControlSignal::new(Boundary::Dirichlet { end: End::Right }, Arc::new(f))
}

/// Controls (h₀, h₁) for α₀ψ + β₀ψ_x at x = −1 and α₁ψ + β₁ψ_x at x = 1.
pub fn robin_two_sided(
    psi_even: Arc<FlatOutput>,
    psi_odd: Arc<FlatOutput>,
    bc0: (f64, f64),
    bc1: (f64, f64),
    n: usize,
) -> Result<(ControlSignal, ControlSignal)> {
    let b0 = Boundary::Robin { alpha: bc0.0, beta: bc0.1, end: End::Left };
    let b1 = Boundary::Robin { alpha: bc1.0, beta: bc1.1, end: End::Right };
    b0.validate()?;
    b1.validate()?;
    let f = Arc::new(assemble_mixed(psi_even, psi_odd, n)?);
    Ok((ControlSignal::new(b0, f.clone())?, ControlSignal::new(b1, f)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel_interp::{
        laplace_interpolate, steer_output_even, CoeffSequence, Convention, LaplaceKernel, LaplaceOptions,
        SteerOptions,
    };

    fn zero_even() -> Arc<FlatOutput> {
        let c = CoeffSequence::zeros(12, 1.5, Convention::DoubleFactorial);
        Arc::new(steer_output_even(&c, 0.5, 1.21, 1.5, 10, &SteerOptions::default()).unwrap())
    }

    fn zeta_output() -> Arc<FlatOutput> {
        let opts = LaplaceOptions { n_max: 12, ..Default::default() };
        Arc::new(laplace_interpolate(&LaplaceKernel::Zeta { zeta: 0.8 }, 0.0, 0.0, 0.5, &opts).unwrap())
    }

    #[test]
    fn truncation_order_regression() {
        assert_eq!(truncation_order(1.0, 0.5, 1e-8).unwrap(), 11);
        assert_eq!(truncation_order(1.0, 0.5, 0.1).unwrap(), 0);
        assert!(matches!(truncation_order(1.0, 1.0, 1e-8), Err(Error::DivergentSeries(_))));
        assert!(matches!(truncation_order(1.0, 0.999, 1e-12), Err(Error::DivergentSeries(_))));
    }

    #[test]
    fn closed_form_tail() {
        // Σ_{i≥1} q^{2i}/(2i+1) = atanh(q)/q − 1.
        let q: f64 = 0.5;
        assert!((control_tail(q, 0) - (q.atanh() / q - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_output_gives_zero_field_and_controls() {
        let y = zero_even();
        let f = assemble_even(y.clone(), 10).unwrap();
        assert_eq!(f.value(0.3, 0.2).unwrap(), 0.0);
        let h = neumann_control(y.clone(), 10).unwrap();
        assert!(h.values(&[0.0, 0.1, 0.5]).unwrap().iter().all(|v| *v == 0.0));
        let (h0, h1) = robin_two_sided(y.clone(), y, (1.0, 0.0), (0.0, 1.0), 10).unwrap();
        assert_eq!(h0.value(0.3).unwrap(), 0.0);
        assert_eq!(h1.value(0.3).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_slice_is_an_exact_heat_solution() {
        // y = t: θ = t + x²/2.
        let t = 0.3;
        let s = Slice { even: vec![t, 0.5, 0.0], odd: vec![] };
        assert!((s.value(0.7) - (t + 0.245)).abs() < 1e-15);
        assert!((s.dx(0.7) - 0.7).abs() < 1e-15);
        assert_eq!(s.residual(0.7), 0.0);
        // z = 1: φ = x.
        let s = Slice { even: vec![], odd: vec![1.0, 0.0, 0.0] };
        assert_eq!(s.value(0.4), 0.4);
        assert_eq!(s.dx(0.4), 1.0);
    }

    #[test]
    fn dirichlet_trace_of_unit_output_is_sinh() {
        let n = 15;
        let s = Slice { even: vec![], odd: (0..n + 2).map(|i| (-crate::real::ln_factorial(2 * i as u32 + 1)).exp()).collect() };
        assert!((s.value(1.0) - 1.0f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn invalid_boundary_pairs() {
        let y = zero_even();
        assert!(matches!(
            robin_two_sided(y.clone(), y, (0.0, 0.0), (1.0, 0.0), 4),
            Err(Error::InvalidBc(_))
        ));
    }

    #[test]
    fn neumann_trace_matches_field_derivative() {
        let y = zeta_output();
        let h = neumann_control(y.clone(), 10).unwrap();
        let f = assemble_even(y, 10).unwrap();
        for t in [0.1, 0.25, 0.4, 0.5] {
            let a = h.value(t).unwrap();
            let b = f.dx(1.0, t).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            // Direct sum Σ y^{(i)}/(2i−1)!.
            let s = f.slice(t).unwrap();
            let direct: f64 = (1..=10).map(|i| 2.0 * i as f64 * s.even[i]).sum();
            assert!((a - direct).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn even_symmetry_of_two_sided_traces() {
        let y = zeta_output();
        let zero = Arc::new(
            crate::borel_interp::steer_output_odd(
                &CoeffSequence::zeros(12, 1.5, Convention::OddFactorial),
                0.5,
                1.21,
                1.5,
                10,
                &SteerOptions::default(),
            )
            .unwrap(),
        );
        let (h0, h1) = robin_two_sided(y, zero, (0.0, 1.0), (0.0, 1.0), 10).unwrap();
        for t in [0.2, 0.45] {
            assert_eq!(h0.value(t).unwrap(), -h1.value(t).unwrap());
        }
    }

    #[test]
    fn residual_against_centered_differences() {
        let y = zeta_output();
        let f = assemble_even(y, 10).unwrap();
        // The time profile is much stiffer than the x-dependence: separate steps.
        let (x, t, k, h) = (0.6, 0.3, 1e-5, 1e-2);
        let v = |x: f64, t: f64| f.value(x, t).unwrap();
        let ft = (v(x, t + k) - v(x, t - k)) / (2.0 * k);
        let fxx = (-v(x + 2.0 * h, t) + 16.0 * v(x + h, t) - 30.0 * v(x, t) + 16.0 * v(x - h, t)
            - v(x - 2.0 * h, t))
            / (12.0 * h * h);
        let exact = f.slice(t).unwrap().residual(x);
        let scale = ft.abs().max(fxx.abs()).max(1.0);
        assert!((ft - fxx - exact).abs() < 1e-5 * scale, "fd {} exact {}", ft - fxx, exact);
    }

    #[test]
    fn control_csv_has_three_columns() {
        let mut h = neumann_control(zero_even(), 4).unwrap();
        h.sample(4).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,value_real,value_imag\n0,0,0\n"));
        assert_eq!(s.lines().count(), 6);
    }
}
