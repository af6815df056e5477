//! Quadrature rules: Gauss–Legendre (any precision) and adaptive
//! Gauss–Kronrod 7/15 in double precision.

use crate::error::{Error, Result};
use crate::real::{Prec, Real};

/// n-point Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre<T: Real>(n: usize, p: Prec) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    let iters = if p.is_double() { 6 } else { 6 + (p.0 as usize / 64) };
    for i in 0..n {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = T::from_f64(guess, p);
        let mut dp = T::one(p);
        for _ in 0..iters {
            let (pn, d) = legendre_with_derivative(n, &x, p);
            dp = d.clone();
            x = x - pn / d;
        }
        let (_, d) = legendre_with_derivative(n, &x, p);
        let _ = dp;
        let one = T::one(p);
        let w = T::from_f64(2.0, p) / ((one - x.clone() * x.clone()) * d.clone() * d);
        xs.push(x);
        ws.push(w);
    }
    (xs, ws)
}

fn legendre_with_derivative<T: Real>(n: usize, x: &T, p: Prec) -> (T, T) {
    let mut p0 = T::one(p);
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, T::zero(p));
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = (T::from_f64(2.0 * kf - 1.0, p) * x.clone() * p1.clone()
            - T::from_f64(kf - 1.0, p) * p0.clone())
            / T::from_f64(kf, p);
        p0 = p1;
        p1 = p2;
    }
    let one = T::one(p);
    let d = T::from_f64(n as f64, p) * (x.clone() * p1.clone() - p0) / (x.clone() * x.clone() - one);
    (p1, d)
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels.
pub fn composite_gl<T: Real, F: FnMut(&T) -> T>(
    f: &mut F,
    a: &T,
    b: &T,
    panels: usize,
    rule: &(Vec<T>, Vec<T>),
) -> T {
    let p = a.prec();
    let two = T::from_f64(2.0, p);
    let h = (b.clone() - a.clone()) / T::from_f64(panels as f64, p);
    let mut total = T::zero(p);
    for k in 0..panels {
        let lo = a.clone() + h.clone() * T::from_f64(k as f64, p);
        let mid = lo + h.clone() / two.clone();
        let half = h.clone() / two.clone();
        let mut s = T::zero(p);
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w.clone() * f(&(mid.clone() + half.clone() * x.clone()));
        }
        total += s * half;
    }
    total
}

/// Panel doubling until two successive estimates agree to `rel` (or `abs`).
pub fn doubling_gl<T: Real, F: FnMut(&T) -> T>(
    mut f: F,
    a: &T,
    b: &T,
    order: usize,
    rel: f64,
    abs: f64,
    max_panels: usize,
) -> Result<T> {
    let p = a.prec();
    let rule = gauss_legendre::<T>(order, p);
    let mut panels = 1usize;
    let mut prev = composite_gl(&mut f, a, b, panels, &rule);
    while panels < max_panels {
        panels *= 2;
        let cur = composite_gl(&mut f, a, b, panels, &rule);
        let diff = (cur.clone() - prev.clone()).abs().to_f64();
        let scale = cur.abs().to_f64();
        if diff <= rel * scale || diff <= abs {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::Quadrature(format!(
        "no convergence after {max_panels} panels"
    )))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod 7/15 with a global absolute tolerance.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, gk15(&mut f, a, b))];
    let mut total = 0.0;
    let mut evals = 0usize;
    while let Some((lo, hi, (val, err))) = stack.pop() {
        let width_share = (hi - lo).abs() / (b - a).abs();
        if err <= abs_tol * width_share.max(1e-6) || (hi - lo).abs() < 1e-14 * (b - a).abs() {
            total += val;
            continue;
        }
        evals += 1;
        if evals > 200_000 {
            return Err(Error::Quadrature("adaptive subdivision limit".into()));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((lo, mid, gk15(&mut f, lo, mid)));
        stack.push((mid, hi, gk15(&mut f, mid, hi)));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre::<f64>(5, Prec::DOUBLE);
        let s: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn big_gauss_legendre_is_accurate() {
        let p = Prec(256);
        let rule = gauss_legendre::<BigReal>(30, p);
        let mut s = BigReal::zero(p);
        for (x, w) in rule.0.iter().zip(&rule.1) {
            s += w.clone() * x.exp();
        }
        let one = BigReal::one(p);
        let exact = one.exp() - (-one).exp();
        assert!((s - exact).abs().to_f64() < 1e-60);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let v = adaptive_gk(|x| (-1.0 / (x * (1.0 - x))).exp(), 0.0, 1.0, 1e-14).unwrap();
        assert!((v - 0.007_029_858_406_609_657).abs() < 1e-12, "{v}");
    }
}
