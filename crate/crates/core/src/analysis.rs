//! Entire-order estimation and the finite-Laplace loss study.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::borel_interp::{
    finite_laplace_g, loss_lower_bound_probe, measure_loss, steer_output_even, Convention, LossReport,
    SparseCoeffs, SteerOptions,
};
use crate::error::{Error, Result};
use crate::gevrey_core::fit_certificate;
use crate::real::{ln_factorial, Prec};
use crate::target::{parity_split, taylor_coeffs, AnalyticTarget, Builtin};

#[derive(Clone, Debug, Serialize)]
pub struct OrderReport {
    /// Estimated order of growth (∞ when the coefficients decay only geometrically).
    pub rho: f64,
    /// Gevrey order fitted to the derivatives n!|c_n|.
    pub gevrey: f64,
    /// (1 − g)^{-1}, when g < 1.
    pub predicted: Option<f64>,
    /// |ρ − (1 − g)^{-1}|.
    pub relation_gap: Option<f64>,
    /// RMS residual of the order regression.
    pub residual: f64,
    pub polynomial: bool,
    pub window: (usize, usize),
}

/// Trailing zeros that mark a coefficient list as a polynomial.
pub const POLYNOMIAL_TAIL: usize = 5;

/// Order estimate from Taylor coefficients c_n (f = Σ c_n z^n).
pub fn entire_order_estimate(c: &[f64]) -> Result<OrderReport> {
    let ln: Vec<f64> = c.iter().map(|v| if *v == 0.0 { f64::NEG_INFINITY } else { v.abs().ln() }).collect();
    entire_order_estimate_ln(&ln)
}

/// Same as [`entire_order_estimate`] from ln|c_n| (−∞ for zeros), so that
/// coefficients below the f64 range can be passed.
///
/// The classical ρ = limsup n ln n / ln(1/|c_n|) converges like 1/ln n, so
/// ln(1/|c_n|) is regressed on (n ln n, n, ln n, 1) over the upper half of the
/// nonzero indices and ρ is the inverse of the n ln n coefficient.
pub fn entire_order_estimate_ln(ln_c: &[f64]) -> Result<OrderReport> {
    let nz: Vec<usize> = (0..ln_c.len()).filter(|&n| ln_c[n].is_finite()).collect();
    let last = nz.last().copied();
    let polynomial = match last {
        None => true,
        Some(l) => ln_c.len() - (l + 1) >= POLYNOMIAL_TAIL,
    };
    if polynomial {
        return Ok(OrderReport {
            rho: 0.0,
            gevrey: f64::NAN,
            predicted: None,
            relation_gap: None,
            residual: 0.0,
            polynomial: true,
            window: (0, last.unwrap_or(0)),
        });
    }
    if nz.len() < 10 {
        return Err(Error::InsufficientData(format!("{} nonzero coefficients, need 10", nz.len())));
    }
    let tail: Vec<usize> = nz[nz.len() / 2..].iter().copied().filter(|&n| n >= 2).collect();
    if tail.len() < 5 {
        return Err(Error::InsufficientData("tail window too short".into()));
    }
    let rows = tail.len();
    let mut a = DMatrix::<f64>::zeros(rows, 4);
    let mut b = DVector::<f64>::zeros(rows);
    for (i, &n) in tail.iter().enumerate() {
        let nf = n as f64;
        a[(i, 0)] = nf * nf.ln();
        a[(i, 1)] = nf;
        a[(i, 2)] = nf.ln();
        a[(i, 3)] = 1.0;
        b[i] = -ln_c[n];
    }
    let svd = a.clone().svd(true, true);
    let beta = svd.solve(&b, 1e-13).map_err(|e| Error::InsufficientData(format!("order fit: {e}")))?;
    let resid = ((&a * &beta - &b).norm_squared() / rows as f64).sqrt();
    let rho = if beta[0] > 1e-12 { 1.0 / beta[0] } else { f64::INFINITY };

    // Derivatives n!|c_n|, in range for the certificate fit.
    let sups: Vec<f64> = (0..ln_c.len())
        .map(|n| if ln_c[n].is_finite() { (ln_c[n] + ln_factorial(n as u32)).exp() } else { 0.0 })
        .collect();
    let gevrey = fit_certificate(&sups)?.s;
    let predicted = if gevrey < 1.0 { Some(1.0 / (1.0 - gevrey)) } else { None };
    let relation_gap = predicted.map(|p| (rho - p).abs());
    Ok(OrderReport {
        rho,
        gevrey,
        predicted,
        relation_gap,
        residual: resid,
        polynomial: false,
        window: (tail[0], *tail.last().unwrap()),
    })
}

/// Settings of the finite-Laplace study.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub bounded: BoundedStudy,
    pub growth: GrowthStudy,
    pub loss: Option<LossStudy>,
    pub precision: Prec,
}

/// Normalized sups of G^{(n)} for φ(z) = Σ a_n z^{n−1}/(n−1)!.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundedStudy {
    /// (n, a_n); when absent a_n = n!/R0^n for n ≤ terms.
    pub coeffs: Option<Vec<(usize, f64)>>,
    pub r0: f64,
    pub terms: usize,
    pub cut: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// Log-spaced grid on [x_min, x_max].
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for BoundedStudy {
    fn default() -> Self {
        BoundedStudy {
            coeffs: None,
            r0: 2.0,
            terms: 80,
            cut: 1.0,
            n_min: 5,
            n_max: 25,
            x_min: 1e-3,
            x_max: 2.0,
            points: 60,
        }
    }
}

impl BoundedStudy {
    pub fn coefficients(&self) -> SparseCoeffs {
        match &self.coeffs {
            Some(c) => SparseCoeffs(c.clone()),
            None => SparseCoeffs(
                (1..=self.terms)
                    .map(|n| (n, (ln_factorial(n as u32) - n as f64 * self.r0.ln()).exp()))
                    .collect(),
            ),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let (a, b) = (self.x_min.ln(), self.x_max.ln());
        let m = self.points.max(2);
        (0..m).map(|i| (a + (b - a) * i as f64 / (m - 1) as f64).exp()).collect()
    }
}

/// Probe of the single-monomial sequence at x_n = R/(2n).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GrowthStudy {
    pub p: usize,
    pub cut: f64,
    /// One column per R̂; R̂ = R is the bounded regime.
    pub r_hats: Vec<f64>,
    pub n_max: usize,
}

impl Default for GrowthStudy {
    fn default() -> Self {
        GrowthStudy { p: 3, cut: 1.0, r_hats: vec![1.0, 1.1], n_max: 60 }
    }
}

/// measure_loss on the even flat output for 1/(x² + a²).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LossStudy {
    pub a: f64,
    pub r_prime: f64,
    pub horizon: f64,
    pub sigma: f64,
    pub orders: usize,
    pub grid: usize,
    pub n_max: usize,
}

impl Default for LossStudy {
    fn default() -> Self {
        LossStudy { a: 1.5, r_prime: 1.21, horizon: 0.5, sigma: 1.5, orders: 20, grid: 200, n_max: 30 }
    }
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            bounded: BoundedStudy::default(),
            growth: GrowthStudy::default(),
            loss: Some(LossStudy::default()),
            precision: Prec::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundedRow {
    pub n: usize,
    pub normalized_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthColumn {
    pub r_hat: f64,
    /// ρ_n for n = 1..=n_max.
    pub rho: Vec<f64>,
    pub growing: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub bounded: Vec<BoundedRow>,
    /// max/min of the normalized sups over [n_min, n_max].
    pub bounded_ratio: Option<f64>,
    pub growth: Vec<GrowthColumn>,
    pub cosine: Vec<f64>,
    pub loss: Option<LossReport>,
}

/// Growth flag: the last third of the column exceeds everything before it.
fn is_growing(rho: &[f64]) -> bool {
    let n = rho.len();
    if n < 6 {
        return false;
    }
    let cut = 2 * n / 3;
    let early = rho[..cut].iter().cloned().fold(0.0, f64::max);
    let late = rho[cut..].iter().cloned().fold(0.0, f64::max);
    late > early
}

pub fn run_loss_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let b = &cfg.bounded;
    let coeffs = b.coefficients();
    let (bounded, bounded_ratio) = if coeffs.0.is_empty() {
        (Vec::new(), None)
    } else {
        let t = finite_laplace_g(&coeffs, b.cut, b.r0, b.n_max, &b.grid(), cfg.precision)?;
        let sups = t.normalized_sup(b.cut);
        let rows: Vec<BoundedRow> =
            (b.n_min..=b.n_max).map(|n| BoundedRow { n, normalized_sup: sups[n] }).collect();
        let hi = rows.iter().map(|r| r.normalized_sup).fold(0.0, f64::max);
        let lo = rows.iter().map(|r| r.normalized_sup).fold(f64::INFINITY, f64::min);
        (rows, Some(hi / lo))
    };

    let g = &cfg.growth;
    let mut growth = Vec::new();
    for &r_hat in &g.r_hats {
        let t = loss_lower_bound_probe(g.p, g.cut, r_hat, g.n_max, cfg.precision)?;
        let rho: Vec<f64> = t.rows.iter().map(|r| r.rho).collect();
        growth.push(GrowthColumn { r_hat, growing: is_growing(&rho), rho });
    }
    let cosine = crate::borel_interp::finite_laplace::cosine_factors(1, g.n_max);

    let loss = match &cfg.loss {
        None => None,
        Some(l) => {
            let f = AnalyticTarget::builtin(Builtin::InverseQuadratic { a: l.a, center: 0.0 })?;
            let c = taylor_coeffs(&f, 0.0, 2 * l.n_max + 1, 0.98 * l.a)?;
            let (even, _) = parity_split(&c)?;
            let even = even.recertify(l.a, Convention::DoubleFactorial)?;
            let y = steer_output_even(&even, l.horizon, l.r_prime, l.sigma, l.n_max, &SteerOptions::default())?;
            Some(measure_loss(&y, &even, l.orders, l.grid)?)
        }
    };
    Ok(StudyReport { config: cfg.clone(), bounded, bounded_ratio, growth, cosine, loss })
}

impl StudyReport {
    /// bounded.csv, growth.csv, loss.csv and summary.json in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidArgument(format!("{}: {e}", dir.display()));
        let cs = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
        std::fs::create_dir_all(dir).map_err(io)?;

        let mut w = csv::Writer::from_path(dir.join("bounded.csv")).map_err(cs)?;
        w.write_record(["n", "normalized_sup"]).map_err(cs)?;
        for r in &self.bounded {
            w.write_record([r.n.to_string(), r.normalized_sup.to_string()]).map_err(cs)?;
        }
        w.flush().map_err(io)?;

        let mut w = csv::Writer::from_path(dir.join("growth.csv")).map_err(cs)?;
        let mut head = vec!["n".to_string(), "cosine".to_string()];
        head.extend(self.growth.iter().map(|c| format!("rho_rhat_{}", c.r_hat)));
        w.write_record(&head).map_err(cs)?;
        for (i, cosv) in self.cosine.iter().enumerate() {
            let mut row = vec![(i + 1).to_string(), cosv.to_string()];
            row.extend(self.growth.iter().map(|c| c.rho.get(i).map_or(String::new(), |v| v.to_string())));
            w.write_record(&row).map_err(cs)?;
        }
        w.flush().map_err(io)?;

        let mut w = csv::Writer::from_path(dir.join("loss.csv")).map_err(cs)?;
        w.write_record(["i", "sup", "ratio"]).map_err(cs)?;
        if let Some(l) = &self.loss {
            for (i, (s, r)) in l.sups.iter().zip(&l.ratios).enumerate() {
                w.write_record([i.to_string(), s.to_string(), r.to_string()]).map_err(cs)?;
            }
        }
        w.flush().map_err(io)?;

        let summary = serde_json::json!({
            "config": self.config,
            "bounded_ratio": self.bounded_ratio,
            "growth": self.growth.iter().map(|c| serde_json::json!({"r_hat": c.r_hat, "growing": c.growing})).collect::<Vec<_>>(),
            "loss": self.loss.as_ref().map(|l| serde_json::json!({"rho_min": l.rho_min, "r": l.r, "r0": l.r0})),
        });
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary).unwrap()).map_err(io)?;
        Ok(())
    }
}
