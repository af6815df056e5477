//! Terminal states: Taylor coefficients by contour quadrature, parity
//! splitting and reachability verdicts.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::borel_interp::{CoeffSequence, Convention};
use crate::error::{Error, Result};
use crate::real::ln_factorial;

/// Closed forms available by name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Builtin {
    /// 1/((x − c)² + a²).
    InverseQuadratic { a: f64, #[serde(default)] center: f64 },
    /// x/(x² + a²).
    OddInverseQuadratic { a: f64 },
    /// sin(πx).
    SinPi,
    Exp,
    Constant { value: f64 },
    Zero,
}

/// Terminal state specification as it appears in configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetSpec {
    /// scale · P(x)/Π(x − p_j), P in ascending coefficients, poles as [re, im].
    RationalPoles {
        #[serde(default = "one_poly")]
        numerator: Vec<f64>,
        poles: Vec<[f64; 2]>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Derivatives c_i = f^{(i)}(center) with a claimed convergence radius.
    Coeffs { coeffs: Vec<f64>, #[serde(default)] center: f64, radius: f64 },
    Builtin(Builtin),
}

fn one() -> f64 {
    1.0
}

fn one_poly() -> Vec<f64> {
    vec![1.0]
}

/// A terminal state with what is known about its singularities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyticTarget {
    pub spec: TargetSpec,
}

impl AnalyticTarget {
    pub fn new(spec: TargetSpec) -> Result<Self> {
        match &spec {
            TargetSpec::RationalPoles { numerator, poles, scale } => {
                if numerator.is_empty() || !scale.is_finite() {
                    return Err(Error::InvalidArgument("empty numerator or bad scale".into()));
                }
                if poles.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
                    return Err(Error::InvalidArgument("non-finite pole".into()));
                }
            }
            TargetSpec::Coeffs { coeffs, radius, .. } => {
                if coeffs.iter().any(|c| !c.is_finite()) || !(*radius > 0.0) {
                    return Err(Error::InvalidArgument("coefficients must be finite, radius > 0".into()));
                }
            }
            TargetSpec::Builtin(Builtin::InverseQuadratic { a, .. } | Builtin::OddInverseQuadratic { a }) => {
                if *a == 0.0 || !a.is_finite() {
                    return Err(Error::InvalidArgument("a must be finite and nonzero".into()));
                }
            }
            TargetSpec::Builtin(_) => {}
        }
        Ok(AnalyticTarget { spec })
    }

    pub fn builtin(b: Builtin) -> Result<Self> {
        AnalyticTarget::new(TargetSpec::Builtin(b))
    }

    /// Value at a complex point (None outside the known domain of the series form).
    pub fn eval(&self, z: Complex64) -> Option<Complex64> {
        let v = match &self.spec {
            TargetSpec::RationalPoles { numerator, poles, scale } => {
                let num = numerator.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
                let den = poles.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * (z - Complex64::new(p[0], p[1])));
                num * *scale / den
            }
            TargetSpec::Coeffs { coeffs, center, radius } => {
                let w = z - center;
                if w.norm() >= *radius {
                    return None;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                let mut pw = Complex64::new(1.0, 0.0);
                for (i, c) in coeffs.iter().enumerate() {
                    if *c != 0.0 {
                        acc += pw * (c.signum() * (c.abs().ln() - ln_factorial(i as u32)).exp());
                    }
                    pw *= w;
                }
                acc
            }
            TargetSpec::Builtin(b) => match b {
                Builtin::InverseQuadratic { a, center } => 1.0 / ((z - center) * (z - center) + a * a),
                Builtin::OddInverseQuadratic { a } => z / (z * z + a * a),
                Builtin::SinPi => (z * PI).sin(),
                Builtin::Exp => z.exp(),
                Builtin::Constant { value } => Complex64::new(*value, 0.0),
                Builtin::Zero => Complex64::new(0.0, 0.0),
            },
        };
        if v.re.is_finite() && v.im.is_finite() {
            Some(v)
        } else {
            None
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).map_or(f64::NAN, |v| v.re)
    }

    /// Known singularities; Some(empty) for entire functions, None when unknown.
    pub fn singularities(&self) -> Option<Vec<Complex64>> {
        match &self.spec {
            TargetSpec::RationalPoles { poles, .. } => Some(poles.iter().map(|p| Complex64::new(p[0], p[1])).collect()),
            TargetSpec::Coeffs { .. } => None,
            TargetSpec::Builtin(b) => Some(match b {
                Builtin::InverseQuadratic { a, center } => {
                    vec![Complex64::new(*center, *a), Complex64::new(*center, -*a)]
                }
                Builtin::OddInverseQuadratic { a } => vec![Complex64::new(0.0, *a), Complex64::new(0.0, -*a)],
                _ => Vec::new(),
            }),
        }
    }
}

/// Trapezoidal estimate of a_i = f^{(i)}(z0) r^i/i!, i = 0..=n, on `m` nodes.
fn contour_normalized(f: &AnalyticTarget, z0: f64, n: usize, r: f64, m: usize) -> Result<(Vec<f64>, f64)> {
    let mut vals = Vec::with_capacity(m);
    let mut max_mod = 0.0f64;
    for k in 0..m {
        let w = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64);
        let v = f
            .eval(Complex64::new(z0, 0.0) + w * r)
            .ok_or_else(|| Error::ContourSuspect(format!("non-finite value on |z − {z0}| = {r}")))?;
        max_mod = max_mod.max(v.norm());
        vals.push(v);
    }
    let a = (0..=n)
        .map(|i| {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((i * k) % m) as f64 / m as f64))
                .sum();
            s.re / m as f64
        })
        .collect();
    Ok((a, max_mod))
}

/// c_i = f^{(i)}(z0) for i ≤ n with certificate |c_i| ≤ M i!/r^i.
pub fn taylor_coeffs(f: &AnalyticTarget, z0: f64, n: usize, r: f64) -> Result<CoeffSequence> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("contour radius {r}")));
    }
    let mut m = 256usize.max((2 * n + 2).next_power_of_two());
    let (mut a, mut big_m) = contour_normalized(f, z0, n, r, m)?;
    loop {
        if m > 1 << 16 {
            return Err(Error::ContourSuspect(format!(
                "no convergence on |z − {z0}| = {r} up to {m} nodes"
            )));
        }
        m *= 2;
        let (b, bm) = contour_normalized(f, z0, n, r, m)?;
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        big_m = big_m.max(bm);
        a = b;
        if diff <= 1e-12 * big_m.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    // Entries at the quadrature noise level are reported as exact zeros.
    let floor = 1e-14 * big_m;
    let c: Vec<f64> = a
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.abs() <= floor {
                0.0
            } else {
                v.signum() * (v.abs().ln() + ln_factorial(i as u32) - i as f64 * r.ln()).exp()
            }
        })
        .collect();
    let amax = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let big_m = big_m.max(amax) * (1.0 + 1e-12);
    if big_m == 0.0 {
        return Ok(CoeffSequence::zeros(n + 1, r, Convention::Factorial));
    }
    CoeffSequence::new(c, big_m, r, Convention::Factorial)
}

/// (c_{2i}) and (c_{2i+1}) with the inherited certificate.
pub fn parity_split(c: &CoeffSequence) -> Result<(CoeffSequence, CoeffSequence)> {
    if c.convention != Convention::Factorial {
        return Err(Error::InvalidArgument("parity_split expects plain Taylor coefficients".into()));
    }
    let even: Vec<f64> = c.d.iter().step_by(2).cloned().collect();
    let odd: Vec<f64> = c.d.iter().skip(1).step_by(2).cloned().collect();
    Ok((
        CoeffSequence::new(even, c.m, c.r, Convention::DoubleFactorial)?,
        CoeffSequence::new(odd, c.m, c.r, Convention::OddFactorial)?,
    ))
}

/// Inverse of [`parity_split`].
pub fn parity_merge(even: &CoeffSequence, odd: &CoeffSequence) -> Result<CoeffSequence> {
    let n = even.len() + odd.len();
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let v = if i % 2 == 0 { even.d.get(i / 2) } else { odd.d.get(i / 2) };
        d.push(*v.unwrap_or(&0.0));
    }
    CoeffSequence::new(d, even.m.max(odd.m), even.r.min(odd.r), Convention::Factorial)
}

/// Radius from a linear fit of ln|c_i| − ln i! against i over the nonzero entries.
pub fn coefficient_decay_radius(c: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| **v != 0.0 && v.is_finite())
        .map(|(i, v)| (i as f64, v.abs().ln() - ln_factorial(i as u32)))
        .collect();
    let slope = linear_slope(&pts)?;
    Some((-slope).exp())
}

fn linear_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    TwoSided,
    OneSidedDirichlet,
    OneSidedNeumann,
}

/// Spatial interval [left, right]; one-sided settings use [0, L].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub left: f64,
    pub right: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry { left: 0.0, right: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Reachable,
    Unreachable,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReachabilityVerdict {
    pub verdict: Verdict,
    pub center: f64,
    /// Distance from the center to the nearest singularity (∞ if none).
    pub r_found: f64,
    /// Radius the sufficient condition asks for.
    pub r_needed: f64,
    pub r0: f64,
    /// Half-width h of the necessary square |x − c| + |y| < h.
    pub rectangle: f64,
    pub witness: Option<String>,
    /// Set when the radius could not be estimated.
    pub inestimable: bool,
}

/// Relative margin demanded by the sufficient condition.
pub const REACH_MARGIN: f64 = 1e-9;

fn parity_defect(f: &AnalyticTarget, want_odd: bool) -> Result<Option<f64>> {
    // A few Taylor coefficients at 0 on a small contour decide parity.
    let r = 0.25 * match f.singularities() {
        Some(s) if !s.is_empty() => s.iter().map(|p| p.norm()).fold(f64::INFINITY, f64::min).min(1.0),
        _ => 1.0,
    };
    if r == 0.0 {
        return Ok(None);
    }
    let c = taylor_coeffs(f, 0.0, 12, r)?;
    let bad = c
        .d
        .iter()
        .enumerate()
        .filter(|(i, _)| (i % 2 == 0) == want_odd)
        .map(|(i, v)| (v.abs().ln() - ln_factorial(i as u32) + i as f64 * r.ln()).exp())
        .fold(0.0, f64::max);
    Ok(if bad > 1e-10 * c.m { Some(bad) } else { None })
}

pub fn classify_reachability(f: &AnalyticTarget, setting: Setting, geometry: Geometry) -> Result<ReachabilityVerdict> {
    let len = geometry.right - geometry.left;
    if !(len > 0.0) {
        return Err(Error::InvalidArgument("empty domain".into()));
    }
    let r0 = crate::r0();
    let (center, r_needed, half) = match setting {
        Setting::TwoSided => (0.5 * (geometry.left + geometry.right), 0.5 * len * r0, 0.5 * len),
        _ => (geometry.left, len * r0, len),
    };
    let mut v = ReachabilityVerdict {
        verdict: Verdict::Undetermined,
        center,
        r_found: f64::NAN,
        r_needed,
        r0,
        rectangle: half,
        witness: None,
        inestimable: false,
    };

    if setting != Setting::TwoSided {
        let odd = setting == Setting::OneSidedDirichlet;
        if let Some(defect) = parity_defect(f, odd)? {
            v.verdict = Verdict::Unreachable;
            v.witness = Some(format!(
                "not {} (coefficient of size {defect:.3e} of the wrong parity)",
                if odd { "odd" } else { "even" }
            ));
            return Ok(v);
        }
    }

    match f.singularities() {
        Some(sing) => {
            let c = Complex64::new(center, 0.0);
            let (dist, nearest) = sing
                .iter()
                .map(|p| ((p - c).norm(), *p))
                .fold((f64::INFINITY, None), |acc, (d, p)| if d < acc.0 { (d, Some(p)) } else { acc });
            v.r_found = dist;
            if dist > r_needed * (1.0 + REACH_MARGIN) {
                v.verdict = Verdict::Reachable;
            } else if let Some(p) = sing.iter().find(|p| (p.re - center).abs() + p.im.abs() < half) {
                v.verdict = Verdict::Unreachable;
                v.witness = Some(format!("singularity at {} inside |x − {center}| + |y| < {half}", p));
            } else if let Some(p) = nearest {
                v.witness = Some(format!("nearest singularity {p} lies between the two regions"));
            }
        }
        None => {
            let TargetSpec::Coeffs { coeffs, center: c0, radius } = &f.spec else {
                unreachable!()
            };
            if (c0 - center).abs() > 1e-12 {
                v.inestimable = true;
                v.witness = Some(format!("coefficients given at {c0}, needed at {center}"));
                return Ok(v);
            }
            match coefficient_decay_radius(coeffs) {
                None => {
                    v.inestimable = true;
                }
                Some(rd) => {
                    let rd = rd.max(*radius);
                    v.r_found = rd;
                    if rd > r_needed * (1.0 + REACH_MARGIN) {
                        v.verdict = Verdict::Reachable;
                    } else if 2.0 * rd < half / std::f64::consts::SQRT_2 {
                        v.verdict = Verdict::Unreachable;
                        v.witness = Some(format!("decay radius {rd} is below half the inscribed disc"));
                    }
                }
            }
        }
    }
    Ok(v)
}

/// Outcome of [`decay_radius`].
#[derive(Clone, Debug, Serialize)]
pub struct DecayEstimate {
    /// Estimated distance from `center` to the nearest singularity.
    pub radius: f64,
    pub entire: bool,
    /// Normalized Taylor coefficients a_k r_c^k used by the fit.
    pub used: usize,
}

fn chebyshev_fit(xs: &[f64], ys: &[f64], lo: f64, hi: f64, deg: usize) -> Result<Vec<f64>> {
    let n = xs.len();
    let mut a = DMatrix::<f64>::zeros(n, deg + 1);
    for (i, x) in xs.iter().enumerate() {
        let s = (2.0 * x - lo - hi) / (hi - lo);
        let (mut t0, mut t1) = (1.0, s);
        a[(i, 0)] = 1.0;
        if deg >= 1 {
            a[(i, 1)] = s;
        }
        for k in 2..=deg {
            let t2 = 2.0 * s * t1 - t0;
            a[(i, k)] = t2;
            t0 = t1;
            t1 = t2;
        }
    }
    let b = DVector::from_column_slice(ys);
    let svd = a.svd(true, true);
    let c = svd
        .solve(&b, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("least squares: {e}")))?;
    Ok(c.iter().cloned().collect())
}

fn clenshaw(c: &[f64], s: Complex64) -> Complex64 {
    let (mut b1, mut b2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for ck in c.iter().skip(1).rev() {
        let b0 = s * b1 * 2.0 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    s * b1 - b2 + c[0]
}

/// Bernstein parameter of the ellipse through s (foci ±1).
fn bernstein(s: Complex64) -> f64 {
    let r = (s * s - 1.0).sqrt();
    (s + r).norm().max((s - r).norm())
}

/// Singularity distance from `center` implied by sampled values.
///
/// A least-squares Chebyshev fit of the samples is re-expanded in Taylor
/// coefficients at `center` by the Cauchy integral on a circle, keeping only
/// coefficients well above the fit's noise as amplified off the interval. The
/// radius comes from the linear decay fit of ln|a_k|. Chebyshev coefficients
/// whose log-decay keeps steepening flag an entire function.
pub fn decay_radius(xs: &[f64], ys: &[f64], center: f64) -> Result<DecayEstimate> {
    if xs.len() != ys.len() || xs.len() < 8 {
        return Err(Error::InsufficientData("need at least 8 matching samples".into()));
    }
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::InsufficientData("samples span no interval".into()));
    }
    let entire = DecayEstimate { radius: f64::INFINITY, entire: true, used: 0 };
    let deg = ((xs.len() as f64).sqrt() as usize).clamp(4, 48);
    let mut c = chebyshev_fit(xs, ys, lo, hi, deg)?;
    let cmax = c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if cmax == 0.0 {
        return Ok(entire);
    }
    // The uniform-grid fit has a noise plateau near 1e-12 relative.
    let noise = 1e-11 * cmax;
    let d = c.iter().rposition(|v| v.abs() > noise).unwrap_or(0);
    c.truncate(d + 1);
    let sig: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| v.abs() > noise)
        .map(|(k, v)| (k as f64, v.abs().ln()))
        .collect();
    if sig.len() < 2 {
        return Ok(entire);
    }
    let mid = sig.len() / 2;
    if sig.len() >= 6 {
        if let (Some(a), Some(b)) = (linear_slope(&sig[..mid]), linear_slope(&sig[mid..])) {
            if b < a - 0.5 {
                return Ok(DecayEstimate { used: sig.len(), ..entire });
            }
        }
    }

    let half = 0.5 * (hi - lo);
    let to_s = |z: Complex64| (z * 2.0 - lo - hi) / (hi - lo);
    let m = 512;
    let kmax = 40;
    let mut best: Vec<(f64, f64)> = Vec::new();
    for frac in [0.02, 0.05, 0.1, 0.2, 0.3, 0.5] {
        let rc = frac * half;
        let zs: Vec<Complex64> = (0..m)
            .map(|k| Complex64::new(center, 0.0) + Complex64::from_polar(rc, 2.0 * PI * k as f64 / m as f64))
            .collect();
        let rho_c = zs.iter().map(|z| bernstein(to_s(*z))).fold(1.0, f64::max);
        let err = noise * (0..=d).map(|n| rho_c.powi(n as i32)).sum::<f64>();
        let vals: Vec<Complex64> = zs.iter().map(|z| clenshaw(&c, to_s(*z))).collect();
        let mut pts = Vec::new();
        for k in 1..=kmax {
            let s: Complex64 = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * ((k * j) % m) as f64 / m as f64))
                .sum();
            let ak = s.re / m as f64;
            if ak.abs() > 100.0 * err {
                pts.push((k as f64, ak.abs().ln() - k as f64 * rc.ln()));
            }
        }
        if pts.len() >= best.len() {
            best = pts;
        }
    }
    match linear_slope(&best) {
        Some(slope) => Ok(DecayEstimate { radius: (-slope).exp(), entire: false, used: best.len() }),
        None => Err(Error::InsufficientData("too few reliable Taylor coefficients".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv_quad(a: f64, center: f64) -> AnalyticTarget {
        AnalyticTarget::builtin(Builtin::InverseQuadratic { a, center }).unwrap()
    }

    #[test]
    fn geometric_series_gives_factorials() {
        let f = AnalyticTarget::new(TargetSpec::RationalPoles {
            numerator: vec![-1.0],
            poles: vec![[1.0, 0.0]],
            scale: 1.0,
        })
        .unwrap();
        let c = taylor_coeffs(&f, 0.0, 20, 0.5).unwrap();
        for (i, v) in c.d.iter().enumerate() {
            let want = ln_factorial(i as u32).exp();
            assert!((v - want).abs() < 1e-9 * want, "i={i}");
        }
    }

    #[test]
    fn constant_has_one_coefficient() {
        let f = AnalyticTarget::builtin(Builtin::Constant { value: 7.0 }).unwrap();
        let c = taylor_coeffs(&f, 0.0, 8, 1.0).unwrap();
        assert!((c.d[0] - 7.0).abs() < 1e-14);
        assert!(c.d[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn inverse_quadratic_expansion() {
        let a: f64 = 1.5;
        let c = taylor_coeffs(&inv_quad(a, 0.0), 0.0, 31, 1.2).unwrap();
        for i in 0..=15 {
            let want = (-1f64).powi(i) * (ln_factorial(2 * i as u32) - (2 * i + 2) as f64 * a.ln()).exp();
            let got = c.d[2 * i as usize];
            assert!(((got - want) / want).abs() < 1e-10, "i={i}");
            assert_eq!(c.d[2 * i as usize + 1], 0.0);
        }
        assert!(c.first_violation().is_none());
    }

    #[test]
    fn pole_on_contour_is_suspect() {
        assert!(matches!(taylor_coeffs(&inv_quad(0.5, 0.0), 0.0, 5, 0.5), Err(Error::ContourSuspect(_))));
    }

    #[test]
    fn split_reindexes_factorials() {
        let d: Vec<f64> = (0..10).map(|i| ln_factorial(i).exp()).collect();
        let c = CoeffSequence::certify(d, 1.0, Convention::Factorial).unwrap();
        let (e, o) = parity_split(&c).unwrap();
        assert_eq!(e.d, (0..5).map(|i| ln_factorial(2 * i).exp()).collect::<Vec<_>>());
        assert_eq!(o.d, (0..5).map(|i| ln_factorial(2 * i + 1).exp()).collect::<Vec<_>>());
        assert_eq!(parity_merge(&e, &o).unwrap().d, c.d);
    }

    #[test]
    fn example_verdicts() {
        let g = Geometry::default();
        let v = |a| classify_reachability(&inv_quad(a, 0.5), Setting::TwoSided, g).unwrap().verdict;
        assert_eq!(v(0.7), Verdict::Reachable);
        assert_eq!(v(0.4), Verdict::Unreachable);
        assert_eq!(v(0.55), Verdict::Undetermined);
    }

    #[test]
    fn one_sided_needs_parity() {
        let g = Geometry::default();
        let even = inv_quad(1.5, 0.0);
        let odd = AnalyticTarget::builtin(Builtin::OddInverseQuadratic { a: 1.5 }).unwrap();
        assert_eq!(
            classify_reachability(&even, Setting::OneSidedDirichlet, g).unwrap().verdict,
            Verdict::Unreachable
        );
        assert_eq!(classify_reachability(&odd, Setting::OneSidedDirichlet, g).unwrap().verdict, Verdict::Reachable);
        assert_eq!(classify_reachability(&even, Setting::OneSidedNeumann, g).unwrap().verdict, Verdict::Reachable);
    }

    #[test]
    fn coefficient_only_targets() {
        // c_i = i!/ρ^i has decay radius ρ.
        let coeffs = |rho: f64| (0..30).map(|i| (ln_factorial(i) - i as f64 * rho.ln()).exp()).collect::<Vec<_>>();
        let t = |rho| AnalyticTarget::new(TargetSpec::Coeffs { coeffs: coeffs(rho), center: 0.5, radius: 0.01 }).unwrap();
        let g = Geometry::default();
        assert_eq!(classify_reachability(&t(0.9), Setting::TwoSided, g).unwrap().verdict, Verdict::Reachable);
        assert_eq!(classify_reachability(&t(0.1), Setting::TwoSided, g).unwrap().verdict, Verdict::Unreachable);
        assert_eq!(classify_reachability(&t(0.45), Setting::TwoSided, g).unwrap().verdict, Verdict::Undetermined);
        let empty = AnalyticTarget::new(TargetSpec::Coeffs { coeffs: vec![1.0], center: 0.5, radius: 0.1 }).unwrap();
        let v = classify_reachability(&empty, Setting::TwoSided, g).unwrap();
        assert!(v.inestimable && v.verdict == Verdict::Undetermined);
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }

    #[test]
    fn decay_radius_of_sampled_pole() {
        let xs = grid(2000);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 / (x * x + 0.25)).collect();
        let d = decay_radius(&xs, &ys, 0.0).unwrap();
        assert!(!d.entire);
        assert!((d.radius - 0.5).abs() < 0.075, "radius {}", d.radius);
    }

    #[test]
    fn decay_radius_flags_entire_samples() {
        let xs = grid(2000);
        let s: Vec<f64> = xs.iter().map(|x| (PI * x).sin()).collect();
        assert!(decay_radius(&xs, &s, 0.0).unwrap().entire);
        let c = vec![3.0; xs.len()];
        assert!(decay_radius(&xs, &c, 0.0).unwrap().entire);
    }
}
