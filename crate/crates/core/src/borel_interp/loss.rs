use serde::Serialize;

use super::coeffs::CoeffSequence;
use super::flat::FlatOutput;
use crate::error::Result;

/// Ratios r_i = sup_t |y^{(i)}| / (scale(i) (ρ/R)^{e(i)}) at the minimal bounded ρ.
#[derive(Clone, Debug, Serialize)]
pub struct LossReport {
    pub rho_min: f64,
    pub r: f64,
    pub r0: f64,
    pub orders: usize,
    pub grid: usize,
    /// sup_t |y^{(i)}|/scale(i).
    pub sups: Vec<f64>,
    pub ratios: Vec<f64>,
}

impl LossReport {
    pub fn beats(&self, rho: f64) -> bool {
        self.rho_min <= rho
    }
}

/// Ratios for a trial ρ given scaled sups and the exponent map.
pub fn ratios(sups: &[f64], r: f64, rho: f64, exponent: impl Fn(usize) -> f64) -> Vec<f64> {
    sups.iter()
        .enumerate()
        .map(|(i, s)| {
            if *s == 0.0 {
                0.0
            } else {
                (s.ln() + exponent(i) * (r / rho).ln()).exp()
            }
        })
        .collect()
}

/// ρ counts as bounded when no ratio in the upper half of the orders exceeds
/// the largest ratio in the lower half.
pub fn is_bounded(r: &[f64]) -> bool {
    let n = r.len();
    if n < 2 {
        return true;
    }
    let half = n / 2;
    let lo = r[..=half.min(n - 1)].iter().cloned().fold(0.0, f64::max);
    let hi = r[half + 1..].iter().cloned().fold(0.0, f64::max);
    hi <= lo
}

/// Minimal ρ ≥ 1 with bounded ratios, by bisection on the table `sups`.
pub fn minimal_loss(sups: &[f64], r: f64, exponent: impl Fn(usize) -> f64 + Copy) -> f64 {
    let ok = |rho: f64| is_bounded(&ratios(sups, r, rho, exponent));
    if ok(1.0) {
        return 1.0;
    }
    let mut hi = 2.0;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    // ok(hi/2) already failed (or hi/2 = 1, which failed above).
    let mut lo = hi / 2.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Empirical loss of a flat output against the target radius.
pub fn measure_loss(fo: &FlatOutput, d: &CoeffSequence, orders: usize, grid: usize) -> Result<LossReport> {
    let sups = fo.sup_table(orders, grid)?;
    let parity = fo.parity;
    let exp = move |i: usize| parity.exponent(i);
    let rho = minimal_loss(&sups, d.r, exp);
    let ratios = ratios(&sups, d.r, rho, exp);
    Ok(LossReport { rho_min: rho, r: d.r, r0: crate::r0(), orders, grid, sups, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_table_has_unit_loss() {
        assert_eq!(minimal_loss(&[0.0; 21], 1.5, |i| 2.0 * i as f64), 1.0);
    }

    #[test]
    fn geometric_table_recovers_its_rate() {
        // sups_i = (q/R)^{2i}: bounded exactly from ρ = q.
        let r: f64 = 1.5;
        let q: f64 = 1.3;
        let sups: Vec<f64> = (0..=20).map(|i| (q / r).powi(2 * i)).collect();
        let rho = minimal_loss(&sups, r, |i| 2.0 * i as f64);
        assert!((rho - q).abs() < 1e-9, "{rho}");
    }

    #[test]
    fn reference_constant() {
        assert!((crate::r0() - 1.2019).abs() < 1e-4);
    }
}
