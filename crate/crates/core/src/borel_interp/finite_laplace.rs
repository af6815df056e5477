//! Finite-interval Laplace transform G(x) = ∫₀^R φ(t) e^{−t/x} dt and the
//! probes of its derivative growth.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::gauss_legendre;
use crate::real::{factorial, ln_factorial, BigReal, Prec, Real};

/// Sparse coefficients (n, a_n), n ≥ 1, of φ(z) = Σ a_n z^{n−1}/(n−1)!.
#[derive(Clone, Debug, Serialize)]
pub struct SparseCoeffs(pub Vec<(usize, f64)>);

impl SparseCoeffs {
    fn phi<T: Real>(&self, z: &T, inv_fact: &[T]) -> T {
        let p = z.prec();
        let mut s = T::zero(p);
        for (n, a) in &self.0 {
            s += T::from_f64(*a, p) * z.powi(*n as u32 - 1) * inv_fact[n - 1].clone();
        }
        s
    }

    fn max_index(&self) -> usize {
        self.0.iter().map(|(n, _)| *n).max().unwrap_or(0)
    }
}

/// Table of G^{(n)}(x) for n = 0..=n_max at the requested points.
#[derive(Clone, Debug, Serialize)]
pub struct GTable {
    pub cut: f64,
    pub xs: Vec<f64>,
    /// values[i][n] = G^{(n)}(xs[i]).
    pub values: Vec<Vec<f64>>,
}

impl GTable {
    /// max_x |G^{(n)}(x)| / ((n!)² (2/R̂)^n) for each n.
    pub fn normalized_sup(&self, r_hat: f64) -> Vec<f64> {
        let n_max = self.values.first().map_or(0, |v| v.len() - 1);
        (0..=n_max)
            .map(|n| {
                let ln_den = 2.0 * ln_factorial(n as u32) + n as f64 * (2.0 / r_hat).ln();
                self.values
                    .iter()
                    .map(|row| row[n].abs())
                    .filter(|v| *v > 0.0)
                    .map(|v| (v.ln() - ln_den).exp())
                    .fold(0.0, f64::max)
            })
            .collect()
    }
}

/// Unsigned Lah numbers L(n, k), 0 ≤ k ≤ n ≤ n_max.
fn lah<T: Real>(n_max: usize, p: Prec) -> Vec<Vec<T>> {
    let mut l = vec![vec![T::zero(p); n_max + 1]; n_max + 1];
    l[0][0] = T::one(p);
    for n in 1..=n_max {
        for k in 1..=n {
            // L(n, k) = L(n−1, k−1) + (n−1+k) L(n−1, k)
            let mut v = l[n - 1][k - 1].clone();
            if k <= n - 1 {
                v += T::from_f64((n - 1 + k) as f64, p) * l[n - 1][k].clone();
            }
            l[n][k] = v;
        }
    }
    l
}

/// Moments I_k(x) = ∫₀^R φ(t) t^k e^{−t/x} dt for k = 0..=n, via t = x s.
fn moments<T: Real>(a: &SparseCoeffs, cut: f64, x: &T, n: usize, rel: f64) -> Result<Vec<T>> {
    let p = x.prec();
    let deg = a.max_index();
    let inv_fact: Vec<T> = (0..=deg).map(|k| T::one(p) / factorial::<T>(k as u32, p)).collect();
    let s_cut = 1.5 * (0.7 * p.0 as f64 + 2.0 * (n + deg) as f64 + 60.0);
    let upper = (cut / x.to_f64()).min(s_cut);
    let upper_t = if cut / x.to_f64() <= s_cut {
        T::from_f64(cut, p) / x.clone()
    } else {
        T::from_f64(upper, p)
    };
    let order = if p.is_double() { 20 } else { 40 };
    let rule = gauss_legendre::<T>(order, p);
    let integrate = |panels: usize| -> Vec<T> {
        let mut acc = vec![T::zero(p); n + 1];
        let h = upper_t.clone() / T::from_f64(panels as f64, p);
        let half = h.clone() * T::from_f64(0.5, p);
        for j in 0..panels {
            let mid = h.clone() * T::from_f64(j as f64 + 0.5, p);
            for (xi, w) in rule.0.iter().zip(&rule.1) {
                let s = mid.clone() + half.clone() * xi.clone();
                let base = w.clone() * half.clone() * (-s.clone()).exp() * a.phi(&(x.clone() * s.clone()), &inv_fact);
                let mut sp = T::one(p);
                for acc_k in acc.iter_mut() {
                    *acc_k += base.clone() * sp.clone();
                    sp = sp * s.clone();
                }
            }
        }
        acc
    };
    let mut panels = ((upper / 8.0).ceil() as usize).max(2);
    let mut prev = integrate(panels);
    loop {
        panels *= 2;
        let cur = integrate(panels);
        let worst = cur
            .iter()
            .zip(&prev)
            .map(|(c, q)| {
                let sc = c.abs().to_f64();
                if sc == 0.0 { 0.0 } else { (c.clone() - q.clone()).abs().to_f64() / sc }
            })
            .fold(0.0, f64::max);
        if worst <= rel {
            // Undo the substitution: I_k = x^{k+1} ∫ φ(xs) s^k e^{−s} ds.
            let mut xp = x.clone();
            return Ok(cur
                .into_iter()
                .map(|v| {
                    let r = v * xp.clone();
                    xp = xp.clone() * x.clone();
                    r
                })
                .collect());
        }
        if panels > 1 << 14 {
            return Err(Error::Quadrature(format!("moments not converged ({worst:e})")));
        }
        prev = cur;
    }
}

/// G^{(n)}(x), n = 0..=n_max, by quadrature of the differentiated kernel.
pub fn g_derivatives<T: Real>(a: &SparseCoeffs, cut: f64, x: &T, n_max: usize) -> Result<Vec<T>> {
    let p = x.prec();
    let rel = if p.is_double() { 1e-13 } else { 2f64.powi(-(p.0 as i32) / 2).max(1e-60) };
    let m = moments(a, cut, x, n_max, rel)?;
    let l = lah::<T>(n_max, p);
    let inv_x = T::one(p) / x.clone();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(m[0].clone());
    for n in 1..=n_max {
        let mut s = T::zero(p);
        let mut xk = inv_x.powi(n as u32);
        for k in 1..=n {
            xk = xk * inv_x.clone();
            let term = l[n][k].clone() * xk.clone() * m[k].clone();
            if (n - k) % 2 == 0 {
                s += term;
            } else {
                s -= term;
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Derivative table of G on the grid `xs`.
pub fn finite_laplace_g(
    a: &SparseCoeffs,
    cut: f64,
    r0: f64,
    n_max: usize,
    xs: &[f64],
    prec: Prec,
) -> Result<GTable> {
    if !(cut > 0.0 && cut < r0) {
        return Err(Error::InvalidCut(format!("cut R = {cut} must lie in (0, R0 = {r0})")));
    }
    if a.0.iter().any(|(n, _)| *n == 0) {
        return Err(Error::InvalidArgument("coefficient indices start at 1".into()));
    }
    let rows: Vec<Result<Vec<f64>>> = xs
        .par_iter()
        .map(|&x| {
            if prec.is_double() {
                g_derivatives(a, cut, &x, n_max)
            } else {
                let v = g_derivatives(a, cut, &BigReal::from_f64(x, prec), n_max)?;
                Ok(v.iter().map(|t| t.to_f64()).collect())
            }
        })
        .collect();
    Ok(GTable { cut, xs: xs.to_vec(), values: rows.into_iter().collect::<Result<_>>()? })
}

/// Closed form for one monomial block: G = a_p x^p + P(x) e^{−R/x}, P = −a_p Σ_{k<p} R^k x^{p−k}/k!.
pub fn monomial_g_jet<T: Real>(p_idx: usize, a_p: f64, cut: f64, x: &T, n: usize) -> Vec<T> {
    let p = x.prec();
    let xv = Jet::variable(x.clone(), n);
    let ap = T::from_f64(a_p, p);
    let r = T::from_f64(cut, p);
    let mut pow = Jet::constant(T::one(p), n);
    for _ in 0..p_idx {
        pow = pow.mul(&xv);
    }
    let mut poly = Jet::constant(T::zero(p), n);
    for k in 0..p_idx {
        let mut xp = Jet::constant(T::one(p), n);
        for _ in 0..(p_idx - k) {
            xp = xp.mul(&xv);
        }
        let c = r.powi(k as u32) / factorial::<T>(k as u32, p);
        poly = poly.add(&xp.scale(&c));
    }
    let ex = Jet::constant(-r.clone(), n).div(&xv).exp();
    pow.scale(&ap).sub(&poly.mul(&ex).scale(&ap)).derivatives()
}

/// One row of the growth probe.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub n: usize,
    pub x: f64,
    /// |G^{(n)}(x_n)| (R̂/2)^n / (n!)².
    pub rho: f64,
    /// Stationary-phase cosine factor cos(n(1−π/2) + (1+r)π/4).
    pub cosine: f64,
    /// G^{(n)}(x_n) divided by the stationary-phase asymptotic value.
    pub asymptotic_ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeTable {
    pub p: usize,
    pub cut: f64,
    pub r_hat: f64,
    pub rows: Vec<ProbeRow>,
}

impl ProbeTable {
    pub fn rho(&self, n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.rho)
    }

    /// max_{n ≤ up_to} ρ_n / ρ_{from}.
    pub fn growth(&self, from: usize, up_to: usize) -> f64 {
        let base = self.rho(from).unwrap_or(f64::NAN);
        self.rows.iter().filter(|r| r.n <= up_to).map(|r| r.rho).fold(0.0, f64::max) / base
    }
}

/// ρ_n at x_n = R/(2n) for the single coefficient a_p = p!/R^p.
pub fn loss_lower_bound_probe(p_idx: usize, cut: f64, r_hat: f64, n_max: usize, prec: Prec) -> Result<ProbeTable> {
    if p_idx < 2 {
        return Err(Error::InvalidArgument("p must be at least 2".into()));
    }
    if !(r_hat >= cut && cut > 0.0) {
        return Err(Error::InvalidArgument("need R_hat >= R > 0".into()));
    }
    let a_p = (ln_factorial(p_idx as u32) - p_idx as f64 * cut.ln()).exp();
    let a = SparseCoeffs(vec![(p_idx, a_p)]);
    let pi = std::f64::consts::PI;
    // F(x) = P(Rx) vanishes to order r = 1 at 0 with Q(0) = −a_p R^p/(p−1)!.
    let r_ord = 1.0;
    let q0 = -a_p * cut.powi(p_idx as i32) / factorial::<f64>(p_idx as u32 - 1, Prec::DOUBLE);
    let rows: Vec<Result<ProbeRow>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let x = cut / (2.0 * n as f64);
            let xb = BigReal::from_f64(x, prec);
            let g = g_derivatives(&a, cut, &xb, n)?;
            let gn = g[n].to_f64();
            let ln_den = 2.0 * ln_factorial(n as u32) - n as f64 * (r_hat / 2.0).ln();
            let rho = if gn == 0.0 { 0.0 } else { (gn.abs().ln() - ln_den).exp() };
            let nf = n as f64;
            let cosine = (nf * (1.0 - pi / 2.0) + (1.0 + r_ord) * pi / 4.0).cos();
            // g^{(n)}(1/(2n)) ≈ 2 Q(0)/(2^{r/2} n^r) √(π/n) 2^{−n} (2n)! cos(·), G^{(n)} = R^{−n} g^{(n)}.
            let ln_amp = (2.0 * q0.abs() / (2f64.powf(r_ord / 2.0) * nf.powf(r_ord))).ln()
                + 0.5 * (pi / nf).ln()
                - nf * 2f64.ln()
                + ln_factorial(2 * n as u32)
                - nf * cut.ln();
            let pred_sign = q0.signum() * cosine.signum();
            let asymptotic_ratio = if gn == 0.0 || cosine == 0.0 {
                f64::NAN
            } else {
                gn.signum() * pred_sign * (gn.abs().ln() - ln_amp - cosine.abs().ln()).exp()
            };
            Ok(ProbeRow { n, x, rho, cosine, asymptotic_ratio })
        })
        .collect();
    Ok(ProbeTable { p: p_idx, cut, r_hat, rows: rows.into_iter().collect::<Result<_>>()? })
}

/// cos(n(1−π/2) + (1+r)π/4) for n = 1..=n_max.
pub fn cosine_factors(r_ord: usize, n_max: usize) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    (1..=n_max)
        .map(|n| (n as f64 * (1.0 - pi / 2.0) + (1.0 + r_ord as f64) * pi / 4.0).cos())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_coefficients_give_zero() {
        let t = finite_laplace_g(&SparseCoeffs(vec![]), 1.0, 2.0, 5, &[0.1, 0.5], Prec::DOUBLE).unwrap();
        assert!(t.values.iter().flatten().all(|v| *v == 0.0));
        assert!(finite_laplace_g(&SparseCoeffs(vec![]), 2.0, 2.0, 5, &[0.1], Prec::DOUBLE).is_err());
    }

    #[test]
    fn quadrature_matches_monomial_closed_form() {
        let p = Prec(256);
        let a = SparseCoeffs(vec![(2, 0.75)]);
        for &x in &[0.05, 0.2, 0.9] {
            let xb = BigReal::from_f64(x, p);
            let q = g_derivatives(&a, 1.0, &xb, 12).unwrap();
            let c = monomial_g_jet(2, 0.75, 1.0, &xb, 12);
            for n in 0..=12 {
                let (u, v) = (q[n].to_f64(), c[n].to_f64());
                assert!((u - v).abs() <= 1e-20 * v.abs().max(1.0), "x={x} n={n}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn endpoint_identity_near_zero() {
        let p = Prec(256);
        let a = SparseCoeffs(vec![(2, 0.5), (3, -0.25), (4, 0.125)]);
        for &x in &[1e-3, 1e-4] {
            let g = g_derivatives(&a, 1.0, &BigReal::from_f64(x, p), 4).unwrap();
            for &(n, an) in &a.0 {
                let want = an * factorial::<f64>(n as u32, Prec::DOUBLE);
                // G^{(n)}(x) − a_n n! is O(x).
                assert!((g[n].to_f64() - want).abs() < 50.0 * x, "x={x} n={n}");
            }
        }
    }

    #[test]
    fn cosine_factor_takes_both_signs() {
        let c = cosine_factors(1, 200);
        assert!(c.iter().any(|v| *v > 0.9));
        assert!(c.iter().any(|v| *v < -0.9));
    }
}
