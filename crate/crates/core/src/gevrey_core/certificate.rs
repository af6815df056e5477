use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::ln_factorial;

/// |f^{(n)}(t)| ≤ C (n!)^s / R^n on a declared interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevreyCertificate {
    pub s: f64,
    pub c: f64,
    pub r: f64,
    /// Set when the certificate was fitted from all-zero data.
    #[serde(default)]
    pub trivial: bool,
    /// RMS residual of the log fit, when fitted.
    #[serde(default)]
    pub residual: Option<f64>,
}

impl GevreyCertificate {
    pub fn new(s: f64, c: f64, r: f64) -> Result<Self> {
        if !(s >= 0.0 && c > 0.0 && r > 0.0) {
            return Err(Error::InvalidArgument(format!("bad certificate s={s} C={c} R={r}")));
        }
        Ok(GevreyCertificate { s, c, r, trivial: false, residual: None })
    }

    pub fn ln_bound(&self, n: usize) -> f64 {
        self.c.ln() + self.s * ln_factorial(n as u32) - n as f64 * self.r.ln()
    }

    /// True when every sample satisfies the bound (with relative slack `rel`).
    pub fn covers(&self, sups: &[f64], rel: f64) -> bool {
        sups.iter()
            .enumerate()
            .all(|(n, v)| *v == 0.0 || v.ln() <= self.ln_bound(n) + rel.ln_1p())
    }
}

/// ln C̃ with C̃ = sup_m (m!)^{σ−s} (2R/ρ)^m.
pub fn ln_c_tilde(s: f64, sigma: f64, r: f64, rho: f64) -> f64 {
    let lq = (2.0 * r / rho).ln();
    let mut best = 0.0f64;
    let mut m = 0u32;
    loop {
        m += 1;
        let v = (sigma - s) * ln_factorial(m) + m as f64 * lq;
        best = best.max(v);
        // Past the peak the sequence is strictly decreasing.
        if (sigma - s) * (m as f64 + 1.0).ln() + lq < 0.0 && v < best {
            break;
        }
        if m > 10_000_000 {
            break;
        }
    }
    best
}

/// Certificate for f·g when g has lower order than f.
pub fn product_certificate(cf: &GevreyCertificate, cg: &GevreyCertificate) -> Result<GevreyCertificate> {
    if cg.s >= cf.s {
        return Err(Error::OrderMismatch(format!(
            "multiplier order {} is not below {}",
            cg.s, cf.s
        )));
    }
    if cg.s <= 1.0 {
        return Err(Error::OrderMismatch(format!("multiplier order {} must exceed 1", cg.s)));
    }
    let lct = ln_c_tilde(cf.s, cg.s, cf.r, cg.r);
    let c = 2.0 * cf.c * cg.c * lct.exp();
    GevreyCertificate::new(cf.s, c, cf.r)
}

/// Least-squares fit of ln S_n ≈ ln C + s ln n! − n ln R.
pub fn fit_certificate(sups: &[f64]) -> Result<GevreyCertificate> {
    if sups.len() < 6 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 6", sups.len())));
    }
    let pts: Vec<(f64, f64, f64)> = sups
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0 && v.is_finite())
        .map(|(n, v)| (ln_factorial(n as u32), -(n as f64), v.ln()))
        .collect();
    if pts.is_empty() {
        return Ok(GevreyCertificate { s: 0.0, c: f64::MIN_POSITIVE, r: 1.0, trivial: true, residual: Some(0.0) });
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData("fewer than 3 nonzero samples".into()));
    }
    // Normal equations for (ln C, s, ln R).
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(lf, mn, y) in &pts {
        let row = [1.0, lf, mn];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    let x = solve3(m, rhs).ok_or_else(|| Error::InsufficientData("singular fit".into()))?;
    let resid = (pts
        .iter()
        .map(|&(lf, mn, y)| (y - x[0] - x[1] * lf - x[2] * mn).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    Ok(GevreyCertificate { s: x[1], c: x[0].exp(), r: x[2].exp(), trivial: false, residual: Some(resid) })
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            for c in col..3 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut s = b[r];
        for c in r + 1..3 {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    Some(x)
}
