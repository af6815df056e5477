use serde::{Deserialize, Serialize};

use super::coeffs::CoeffSequence;
use crate::error::{Error, Result};
use crate::gevrey_core::bump::{cutoff_from_seq, CutoffFunction, Seq, SplineScalar};
use crate::gevrey_core::WeightSequence;
use crate::real::{Prec, Real};

/// Tuning of the real-variable construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PetzscheOptions {
    /// δ as a fraction of the largest admissible value.
    pub delta_fraction: f64,
    /// Convolution depth K of each block cutoff; default N_max + 2.
    pub depth: Option<usize>,
    pub precision: Prec,
}

impl Default for PetzscheOptions {
    fn default() -> Self {
        PetzscheOptions { delta_fraction: 0.5, depth: None, precision: Prec::default() }
    }
}

/// Parameters chosen for the block construction.
#[derive(Clone, Debug, Serialize)]
pub struct PetzscheParams {
    pub big_a: f64,
    pub h_rate: f64,
    pub h_tilde: f64,
    pub delta: f64,
    pub delta_max: f64,
    /// Scale h = (1+δ) A e^{1+1/e} H.
    pub h: f64,
    /// C with |d_q| ≤ C H^q M_q over the stored entries.
    pub c: f64,
    pub depth: usize,
    /// Σ_{p>N}(1+δ)^{-p}: relative weight of the dropped blocks.
    pub tail_factor: f64,
    /// Per block: (p, k0, support radius).
    pub blocks: Vec<(usize, usize, f64)>,
}

/// f = Σ_{p ≤ N} d_p φ_p(x) x^p/p!.
#[derive(Clone, Debug)]
pub struct PetzscheFunction {
    pub d: Vec<f64>,
    pub params: PetzscheParams,
    blocks: Vec<Option<CutoffFunction>>,
}

/// Largest δ with (1+δ)(δAe+1)e^{1/e}H < H̃.
pub fn delta_max(big_a: f64, h_rate: f64, h_tilde: f64) -> f64 {
    let e = std::f64::consts::E;
    let q = h_tilde / ((1.0 / e).exp() * h_rate);
    let ae = big_a * e;
    (-(ae + 1.0) + ((ae + 1.0).powi(2) + 4.0 * ae * (q - 1.0)).sqrt()) / (2.0 * ae)
}

/// Borel interpolation by the Petzsche block sum.
pub fn petzsche_interpolate(
    d: &CoeffSequence,
    weights: &WeightSequence,
    h_rate: f64,
    h_tilde: f64,
    n_max: usize,
    opts: &PetzscheOptions,
) -> Result<PetzscheFunction> {
    let e = std::f64::consts::E;
    let threshold = (1.0 / e).exp() * h_rate;
    if !(h_tilde > threshold) {
        return Err(Error::LossTooSmall(format!(
            "H~ = {h_tilde} must exceed e^(1/e) H = {threshold}"
        )));
    }
    if !(opts.delta_fraction > 0.0 && opts.delta_fraction < 1.0) {
        return Err(Error::InvalidArgument("delta_fraction must lie in (0, 1)".into()));
    }
    let big_a = weights.big_a;
    let dmax = delta_max(big_a, h_rate, h_tilde);
    if !(dmax > 0.0) {
        return Err(Error::InfeasibleParameters(format!("no admissible delta (max {dmax})")));
    }
    let delta = opts.delta_fraction * dmax;
    let h = (1.0 + delta) * big_a * (1.0 + 1.0 / e).exp() * h_rate;
    let depth = opts.depth.unwrap_or(n_max + 2).max(3);
    let nb = (n_max + 1).min(d.len());
    if nb + 2 > weights.len() {
        return Err(Error::PrefixExhausted("weight prefix shorter than the block count".into()));
    }

    let mut c = 0.0f64;
    for (q, v) in d.d.iter().enumerate() {
        if *v != 0.0 {
            let lb = q as f64 * h_rate.ln() + weights.ln_moduli(q);
            c = c.max((v.abs().ln() - lb).exp());
        }
    }

    let scaled: Vec<f64> = weights.a.iter().map(|v| v / h).collect();
    let tail = weights.tail / h;
    let mut blocks = Vec::with_capacity(nb);
    let mut info = Vec::new();
    for p in 0..nb {
        if d.d[p] == 0.0 {
            blocks.push(None);
            continue;
        }
        let head: Vec<f64> = if p == 0 {
            scaled[1..].to_vec()
        } else {
            let mut v = vec![scaled[p]; p];
            v.extend_from_slice(&scaled[p + 1..]);
            v
        };
        let cut = cutoff_from_seq(&Seq { head: &head, tail }, delta, depth, opts.precision, 0)?;
        info.push((p, cut.base.sharpening.as_ref().map_or(0, |s| s.k0), cut.radius));
        blocks.push(Some(cut));
    }
    let tail_factor = (1.0 + delta).powi(-(n_max as i32)) / delta;
    Ok(PetzscheFunction {
        d: d.d[..nb].to_vec(),
        params: PetzscheParams {
            big_a,
            h_rate,
            h_tilde,
            delta,
            delta_max: dmax,
            h,
            c,
            depth,
            tail_factor,
            blocks: info,
        },
        blocks,
    })
}

impl PetzscheFunction {
    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Smallest half-width on which every block cutoff equals 1; there f is
    /// the polynomial Σ d_q x^q/q!.
    pub fn min_plateau(&self) -> f64 {
        self.blocks.iter().flatten().map(|b| b.plateau()).fold(f64::INFINITY, f64::min)
    }

    /// Largest block support radius.
    pub fn support_radius(&self) -> f64 {
        self.blocks.iter().flatten().map(|b| b.radius).fold(0.0, f64::max)
    }

    /// Taylor coefficients f^{(k)}(x)/k!, k = 0..=n.
    pub fn jet<T: SplineScalar>(&self, x: &T, n: usize) -> Vec<T> {
        let p = x.prec();
        let mut out = vec![T::zero(p); n + 1];
        let xf = x.to_f64().abs();
        let mut inv_fact = vec![T::one(p)];
        for k in 1..self.blocks.len().max(n + 1) {
            let prev = inv_fact[k - 1].clone();
            inv_fact.push(prev / T::from_f64(k as f64, p));
        }
        for (q, blk) in self.blocks.iter().enumerate() {
            let Some(blk) = blk else { continue };
            if xf >= blk.radius {
                continue;
            }
            // x^q/q! expanded at x: coefficient k is x^{q−k}/(k!(q−k)!).
            let mut mono = vec![T::zero(p); n.min(q) + 1];
            let mut pw = T::one(p);
            for j in 0..=q {
                let k = q - j;
                if k <= n {
                    mono[k] = pw.clone() * inv_fact[k].clone() * inv_fact[j].clone();
                }
                pw = pw * x.clone();
            }
            let phi = blk.jet(x, n);
            let dq = T::from_f64(self.d[q], p);
            for (i, a) in phi.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (k, m) in mono.iter().enumerate() {
                    if i + k > n {
                        break;
                    }
                    out[i + k] += dq.clone() * a.clone() * m.clone();
                }
            }
        }
        out
    }

    /// f^{(k)}(x), k = 0..=n.
    pub fn derivatives<T: SplineScalar>(&self, x: &T, n: usize) -> Vec<T> {
        let p = x.prec();
        let mut j = self.jet(x, n);
        let mut f = T::one(p);
        for (k, c) in j.iter_mut().enumerate().skip(1) {
            f = f * T::from_f64(k as f64, p);
            *c = c.clone() * f.clone();
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borel_interp::coeffs::Convention;
    use crate::real::{ln_factorial, BigReal};

    fn weights() -> WeightSequence {
        WeightSequence::even_factorial(4000)
    }

    #[test]
    fn zero_targets_give_zero_function() {
        let d = CoeffSequence::zeros(10, 1.5, Convention::DoubleFactorial);
        let f = petzsche_interpolate(&d, &weights(), 1.0 / 2.25, 0.8, 9, &Default::default()).unwrap();
        assert!(f.jet(&0.1f64, 5).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_block_is_the_cutoff() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let d = CoeffSequence::certify(v, 1.5, Convention::DoubleFactorial).unwrap();
        let f = petzsche_interpolate(&d, &weights(), 1.0 / 2.25, 0.8, 7, &Default::default()).unwrap();
        let j = f.jet(&0.0f64, 7);
        assert_eq!(j[0], 1.0);
        assert!(j[1..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn chosen_scale_matches_formula() {
        let d = CoeffSequence::zeros(4, 1.5, Convention::DoubleFactorial);
        let w = weights();
        let f = petzsche_interpolate(&d, &w, 0.5, 1.2, 3, &Default::default()).unwrap();
        let pr = &f.params;
        let e = std::f64::consts::E;
        assert!((pr.h - (1.0 + pr.delta) * pr.big_a * (1.0 + 1.0 / e).exp() * 0.5).abs() < 1e-12);
        let lhs = (1.0 + pr.delta) * (pr.delta * pr.big_a * e + 1.0) * (1.0 / e).exp() * 0.5;
        assert!(lhs < 1.2);
        assert!(matches!(
            petzsche_interpolate(&d, &w, 0.5, 0.5, 3, &Default::default()),
            Err(Error::LossTooSmall(_))
        ));
    }

    #[test]
    fn derivatives_at_origin_match_targets() {
        let n = 12;
        let d: Vec<f64> = (0..=n).map(|q| ln_factorial(2 * q as u32).exp()).collect();
        let d = CoeffSequence::certify(d, 1.0, Convention::DoubleFactorial).unwrap();
        let f = petzsche_interpolate(&d, &weights(), 1.0, 1.6, n, &Default::default()).unwrap();
        let x = BigReal::zero(Prec(256));
        let got = f.derivatives(&x, n);
        for q in 0..=n {
            let rel = ((got[q].to_f64() - d.d[q]) / d.d[q]).abs();
            assert!(rel < 1e-6, "q={q} rel={rel}");
        }
    }
}
