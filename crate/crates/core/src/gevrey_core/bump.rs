use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::spline::Spline;
use super::weights::WeightSequence;
use crate::error::{Error, Result};
use crate::real::{BigReal, Prec, Real};

/// Density and antiderivative splines on unit-scaled widths, in both precisions.
#[derive(Debug)]
pub struct SplinePair {
    pub big: Spline<BigReal>,
    pub big_cdf: Spline<BigReal>,
    pub fast: Spline<f64>,
    pub fast_cdf: Spline<f64>,
}

/// Scalars that can read a [`SplinePair`].
pub trait SplineScalar: Real {
    fn density(s: &SplinePair) -> &Spline<Self>;
    fn cdf(s: &SplinePair) -> &Spline<Self>;
    fn adapt(x: &Self, s: &SplinePair) -> Self;
}

impl SplineScalar for f64 {
    fn density(s: &SplinePair) -> &Spline<f64> {
        &s.fast
    }
    fn cdf(s: &SplinePair) -> &Spline<f64> {
        &s.fast_cdf
    }
    fn adapt(x: &f64, _: &SplinePair) -> f64 {
        *x
    }
}

impl SplineScalar for BigReal {
    fn density(s: &SplinePair) -> &Spline<BigReal> {
        &s.big
    }
    fn cdf(s: &SplinePair) -> &Spline<BigReal> {
        &s.big_cdf
    }
    fn adapt(x: &BigReal, _: &SplinePair) -> BigReal {
        x.clone()
    }
}

fn build_pair(unit_widths: &[f64], p: Prec) -> Result<SplinePair> {
    let bp = Prec(p.0.max(128));
    let w: Vec<BigReal> = unit_widths.iter().map(|v| BigReal::from_f64(*v, bp)).collect();
    let big = Spline::box_convolution(&w)?;
    let big_cdf = big.antiderivative();
    let fast = big.convert::<f64>(Prec::DOUBLE);
    let fast_cdf = big_cdf.convert::<f64>(Prec::DOUBLE);
    Ok(SplinePair { big, big_cdf, fast, fast_cdf })
}

type CardinalKey = (usize, u32);

fn cardinal_cache() -> &'static Mutex<HashMap<CardinalKey, Arc<SplinePair>>> {
    static CACHE: OnceLock<Mutex<HashMap<CardinalKey, Arc<SplinePair>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn spline_for(widths: &[f64], p: Prec) -> Result<(Arc<SplinePair>, f64)> {
    let scale = widths[0];
    let unit: Vec<f64> = widths.iter().map(|w| w / scale).collect();
    let all_equal = unit.iter().all(|u| (u - 1.0).abs() < 1e-14);
    if all_equal {
        let key = (widths.len(), p.0.max(128));
        if let Some(hit) = cardinal_cache().lock().unwrap().get(&key) {
            return Ok((hit.clone(), scale));
        }
        let ones = vec![1.0; widths.len()];
        let pair = Arc::new(build_pair(&ones, p)?);
        cardinal_cache().lock().unwrap().insert(key, pair.clone());
        return Ok((pair, scale));
    }
    Ok((Arc::new(build_pair(&unit, p)?), scale))
}

/// Parameters reported by the sharpening step.
#[derive(Clone, Debug, serde::Serialize)]
pub struct Sharpening {
    pub delta: f64,
    pub k0: usize,
    pub kappa: f64,
    /// ln of the constant M in |v^{(k)}| ≤ M δ^k (a_0⋯a_k)^{-1}.
    pub ln_m: f64,
}

/// K-fold convolution of normalized boxes.
#[derive(Clone, Debug)]
pub struct BumpFunction {
    /// Box widths actually convolved (length K).
    pub widths: Vec<f64>,
    /// Nominal support [0, a] of the untruncated construction.
    pub support: f64,
    /// Reference weights (a_0, a_1, …) for the derivative bound.
    pub reference: Vec<f64>,
    pub sharpening: Option<Sharpening>,
    pair: Arc<SplinePair>,
    scale: f64,
}

impl BumpFunction {
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Right end of the truncated support.
    pub fn truncated_support(&self) -> f64 {
        self.widths.iter().sum()
    }

    fn from_widths(
        widths: Vec<f64>,
        support: f64,
        reference: Vec<f64>,
        sharpening: Option<Sharpening>,
        p: Prec,
    ) -> Result<Self> {
        let (pair, scale) = spline_for(&widths, p)?;
        Ok(BumpFunction { widths, support, reference, sharpening, pair, scale })
    }

    /// Taylor coefficients u^{(k)}(x)/k!, k = 0..=n.
    pub fn jet<T: SplineScalar>(&self, x: &T, n: usize) -> Vec<T> {
        let p = x.prec();
        let s = T::from_f64(self.scale, p);
        let xi = T::adapt(&(x.clone() / s.clone()), &self.pair);
        let mut j = T::density(&self.pair).jet(&xi, n);
        let inv = T::one(p) / s;
        let mut f = inv.clone();
        for c in j.iter_mut() {
            *c = c.clone() * f.clone();
            f = f * inv.clone();
        }
        j
    }

    /// Taylor coefficients of the antiderivative ∫_{-∞}^{x} u.
    pub fn cdf_jet<T: SplineScalar>(&self, x: &T, n: usize) -> Vec<T> {
        let p = x.prec();
        let s = T::from_f64(self.scale, p);
        let xi = x.clone() / s.clone();
        let mut j = T::cdf(&self.pair).jet(&xi, n);
        let inv = T::one(p) / s;
        let mut f = T::one(p);
        for c in j.iter_mut() {
            *c = c.clone() * f.clone();
            f = f * inv.clone();
        }
        j
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(&x, 0)[0]
    }

    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        let j = self.jet(&x, k);
        j[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }

    /// Derivative bound 2^k (a_0⋯a_k)^{-1} in log form.
    pub fn ln_derivative_bound(&self, k: usize) -> f64 {
        k as f64 * std::f64::consts::LN_2
            - self.reference.iter().take(k + 1).map(|v| v.ln()).sum::<f64>()
    }

    /// max over the grid and k ≤ kmax of |u^{(k)}| / bound_k.
    pub fn max_bound_ratio(&self, kmax: usize, npts: usize, ln_bound: impl Fn(usize) -> f64) -> f64 {
        let right = self.truncated_support();
        let mut worst = 0.0f64;
        for i in 0..=npts {
            let x = right * i as f64 / npts as f64;
            let j = self.jet(&x, kmax);
            let mut fact = 1.0f64;
            for (k, c) in j.iter().enumerate() {
                if k > 1 {
                    fact *= k as f64;
                }
                let v = (c * fact).abs();
                if v > 0.0 {
                    worst = worst.max((v.ln() - ln_bound(k)).exp());
                }
            }
        }
        worst
    }
}

/// Box-spline bump H_{a_0} * ⋯ * H_{a_{K-1}}.
pub fn make_bump(weights: &WeightSequence, k: usize, p: Prec) -> Result<BumpFunction> {
    if k < 2 {
        return Err(Error::InvalidDepth(format!("depth {k} < 2")));
    }
    if k > weights.len() {
        return Err(Error::PrefixExhausted(format!(
            "depth {k} exceeds the {} stored weights",
            weights.len()
        )));
    }
    let widths = weights.a[..k].to_vec();
    BumpFunction::from_widths(widths, weights.sum_from(0), weights.a.clone(), None, p)
}

/// Sequence b_0 ≥ b_1 ≥ … given as prefix plus tail sum.
#[derive(Clone, Debug)]
pub struct Seq<'a> {
    pub head: &'a [f64],
    pub tail: f64,
}

impl Seq<'_> {
    fn sum_from(&self, j: usize) -> f64 {
        let h: f64 = if j < self.head.len() { self.head[j..].iter().sum() } else { 0.0 };
        h + self.tail
    }
}

/// Smallest k0 with κ(k0) > 2/δ, plus κ.
pub fn select_k0(seq: &Seq<'_>, delta: f64) -> Result<(usize, f64)> {
    let a = seq.sum_from(0);
    let need = 2.0 / delta;
    let mut suffix = a - seq.head[0];
    for k0 in 0..seq.head.len() {
        if k0 > 0 {
            suffix -= seq.head[k0];
        }
        let denom = (k0 as f64 + 1.0) * seq.head[k0] + suffix.max(seq.tail);
        let kappa = a / denom;
        if kappa > need {
            return Ok((k0, kappa));
        }
    }
    Err(Error::PrefixExhausted(format!(
        "no k0 within {} stored weights gives kappa > {need}",
        seq.head.len()
    )))
}

/// Sharpened bump for an explicit sequence.
pub fn sharpen_seq(seq: &Seq<'_>, delta: f64, k: usize, p: Prec) -> Result<BumpFunction> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("delta must be positive".into()));
    }
    if k < 2 {
        return Err(Error::InvalidDepth(format!("depth {k} < 2")));
    }
    let a = seq.sum_from(0);
    if delta >= 2.0 {
        // 2^k ≤ δ^k already: the plain bump satisfies the bound with M = 1.
        if k > seq.head.len() {
            return Err(Error::PrefixExhausted(format!("depth {k} exceeds stored weights")));
        }
        let sh = Sharpening { delta, k0: 0, kappa: 1.0, ln_m: 0.0 };
        return BumpFunction::from_widths(seq.head[..k].to_vec(), a, seq.head.to_vec(), Some(sh), p);
    }
    let (k0, kappa) = select_k0(seq, delta)?;
    let b = seq.head;
    let ln_b: Vec<f64> = b.iter().map(|v| v.ln()).collect();
    let ln_m1 = -kappa.ln() + ln_b[..k0].iter().sum::<f64>() - k0 as f64 * ln_b[k0];
    let mut ln_m2 = f64::NEG_INFINITY;
    let mut partial = 0.0;
    for kk in 0..=k0 {
        partial += ln_b[kk];
        let v = kk as f64 * (2.0 / delta).ln() + partial - (kk as f64 + 1.0) * (kappa * b[k0]).ln();
        ln_m2 = ln_m2.max(v);
    }
    let widths: Vec<f64> = (0..k)
        .map(|i| {
            if i <= k0 {
                kappa * b[k0]
            } else if i < b.len() {
                kappa * b[i]
            } else {
                kappa * b[b.len() - 1]
            }
        })
        .collect();
    if k > b.len() && k > k0 + 1 {
        return Err(Error::PrefixExhausted(format!("depth {k} exceeds stored weights")));
    }
    let sh = Sharpening { delta, k0, kappa, ln_m: ln_m1.max(ln_m2) };
    BumpFunction::from_widths(widths, a, b.to_vec(), Some(sh), p)
}

/// Sharpened bump for a weight sequence.
pub fn sharpen_bump(weights: &WeightSequence, delta: f64, k: usize, p: Prec) -> Result<BumpFunction> {
    sharpen_seq(&Seq { head: &weights.a, tail: weights.tail }, delta, k, p)
}

/// Even cutoff φ(x) = ∫_{-∞}^{a−|x|} v, equal to 1 near 0 and 0 for |x| ≥ a.
#[derive(Clone, Debug)]
pub struct CutoffFunction {
    pub base: BumpFunction,
    /// Support radius a.
    pub radius: f64,
    pub delta: f64,
    /// Measured C in |φ^{(k)}| ≤ C δ^k (a_1⋯a_k)^{-1} over the checked orders.
    pub c_measured: f64,
    /// Reference sequence (a_1, a_2, …) of the bound.
    pub reference: Vec<f64>,
}

impl CutoffFunction {
    /// Flat plateau half-width a − supp(v).
    pub fn plateau(&self) -> f64 {
        self.radius - self.base.truncated_support()
    }

    /// Taylor coefficients φ^{(k)}(x)/k!, k = 0..=n.
    pub fn jet<T: SplineScalar>(&self, x: &T, n: usize) -> Vec<T> {
        let p = x.prec();
        let ax = x.abs();
        let r = T::from_f64(self.radius, p);
        let mut out = vec![T::zero(p); n + 1];
        if ax >= r {
            return out;
        }
        let y = r - ax;
        if y >= T::from_f64(self.base.truncated_support(), p) {
            out[0] = T::one(p);
            return out;
        }
        let j = self.base.cdf_jet(&y, n);
        let positive = *x > T::zero(p);
        for (k, c) in j.into_iter().enumerate() {
            out[k] = if positive && k % 2 == 1 { -c } else { c };
        }
        out
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(&x, 0)[0]
    }

    pub fn derivative(&self, x: f64, k: usize) -> f64 {
        let j = self.jet(&x, k);
        j[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }

    /// ln of δ^k (a_1⋯a_k)^{-1}.
    pub fn ln_shape(&self, k: usize) -> f64 {
        k as f64 * self.delta.ln() - self.reference.iter().take(k).map(|v| v.ln()).sum::<f64>()
    }
}

/// Cutoff for an explicit sequence (a_1, a_2, …).
pub fn cutoff_from_seq(seq: &Seq<'_>, delta: f64, k: usize, p: Prec, check_orders: usize) -> Result<CutoffFunction> {
    let base = sharpen_seq(seq, delta, k, p)?;
    let radius = seq.sum_from(0);
    let mut c = CutoffFunction {
        base,
        radius,
        delta,
        c_measured: 0.0,
        reference: seq.head.to_vec(),
    };
    if check_orders > 0 {
        c.c_measured = measure_cutoff_constant(&c, check_orders, 400);
    }
    Ok(c)
}

/// Cutoff built from (a_k)_{k≥1} of a weight sequence.
pub fn make_cutoff(weights: &WeightSequence, delta: f64, k: usize, p: Prec) -> Result<CutoffFunction> {
    let seq = Seq { head: &weights.a[1..], tail: weights.tail };
    cutoff_from_seq(&seq, delta, k, p, k.saturating_sub(3))
}

/// sup over grid and k ≤ kmax of |φ^{(k)}| / (δ^k (a_1⋯a_k)^{-1}).
pub fn measure_cutoff_constant(c: &CutoffFunction, kmax: usize, npts: usize) -> f64 {
    let mut worst = 0.0f64;
    let r = c.radius;
    for i in 0..=npts {
        let x = -r + 2.0 * r * i as f64 / npts as f64;
        let j = c.jet(&x, kmax);
        let mut fact = 1.0;
        for (k, v) in j.iter().enumerate() {
            if k > 1 {
                fact *= k as f64;
            }
            let d = (v * fact).abs();
            if d > 0.0 {
                worst = worst.max((d.ln() - c.ln_shape(k)).exp());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_gk;

    fn geo(n: usize) -> WeightSequence {
        WeightSequence::geometric(n, 0.5).unwrap()
    }

    #[test]
    fn bump_has_unit_mass_and_support() {
        let b = make_bump(&geo(12), 8, Prec(128)).unwrap();
        let right = b.truncated_support();
        let mass = adaptive_gk(|x| b.value(x), 0.0, right, 1e-13).unwrap();
        assert!((mass - 1.0).abs() < 1e-12, "{mass}");
        assert_eq!(b.value(-1e-9), 0.0);
        assert_eq!(b.value(right + 1e-12), 0.0);
        assert!(right <= 1.0);
    }

    #[test]
    fn hat_function_peak() {
        let w = WeightSequence::new(vec![0.5, 0.5], 0.0).unwrap();
        let b = make_bump(&w, 2, Prec(128)).unwrap();
        assert!((b.value(0.5) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn derivative_bound_holds_to_order_six() {
        let w = geo(12);
        let b = make_bump(&w, 8, Prec(128)).unwrap();
        let ratio = b.max_bound_ratio(6, 2000, |k| b.ln_derivative_bound(k));
        assert!(ratio <= 1.0 + 1e-9, "{ratio}");
    }

    #[test]
    fn sharpen_selects_expected_k0() {
        let w = geo(40);
        let b = sharpen_bump(&w, 0.5, 12, Prec(128)).unwrap();
        let sh = b.sharpening.clone().unwrap();
        assert_eq!(sh.k0, 4);
        assert!(sh.kappa > 4.0);
        assert!((b.support - 1.0).abs() < 1e-12);
        assert!(b.truncated_support() <= 1.0 + 1e-12);
    }

    #[test]
    fn sharpen_with_delta_two_keeps_plain_bound() {
        let w = geo(20);
        let b = sharpen_bump(&w, 2.0, 8, Prec(128)).unwrap();
        assert_eq!(b.sharpening.as_ref().unwrap().ln_m, 0.0);
        let ratio = b.max_bound_ratio(6, 1000, |k| b.ln_derivative_bound(k));
        assert!(ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn cutoff_is_flat_at_origin() {
        let w = geo(40);
        let c = make_cutoff(&w, 0.5, 10, Prec(128)).unwrap();
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(c.radius), 0.0);
        assert_eq!(c.value(-c.radius), 0.0);
        let j = c.jet(&0.0f64, 7);
        assert!(j[1..].iter().all(|v| *v == 0.0));
        assert!(c.plateau() > 0.0);
        // Even symmetry.
        for &x in &[0.1, 0.3, 0.45] {
            assert!((c.value(x) - c.value(-x)).abs() < 1e-14);
            assert!((c.derivative(x, 1) + c.derivative(-x, 1)).abs() < 1e-10);
        }
    }
}
