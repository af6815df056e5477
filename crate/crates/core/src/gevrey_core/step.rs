use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::quad::{adaptive_gk, doubling_gl};
use crate::real::{BigReal, Prec, Real};

use super::certificate::{fit_certificate, GevreyCertificate};

/// Smooth step g on [0, T]: g = 0 near 0, g = 1 near T, Gevrey of order σ.
///
/// With u = t/T and γ = 1/(σ−1), g(t) = ∫₀ᵘ k / ∫₀¹ k where
/// k(u) = exp(4^γ − (u(1−u))^{−γ}) (the constant only rescales).
#[derive(Clone, Debug)]
pub struct GevreyStep {
    pub sigma: f64,
    pub horizon: f64,
    pub gamma: f64,
    z: f64,
    z_big: BigReal,
}

fn kernel_f64(u: f64, gamma: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        return 0.0;
    }
    let w = u * (1.0 - u);
    (4f64.powf(gamma) - w.powf(-gamma)).exp()
}

fn kernel_exponent<T: Real>(u: &T, gamma: &T) -> T {
    let p = u.prec();
    let w = u.clone() * (T::one(p) - u.clone());
    T::from_f64(4.0, p).powf(gamma) - w.powf(&-gamma.clone())
}

pub fn gevrey_step(sigma: f64, horizon: f64) -> Result<GevreyStep> {
    if !(sigma > 1.0 && sigma < 2.0) {
        return Err(Error::InvalidOrder(format!("sigma = {sigma} not in (1, 2)")));
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let gamma = 1.0 / (sigma - 1.0);
    let z = adaptive_gk(|u| kernel_f64(u, gamma), 0.0, 1.0, 1e-14)?;
    let p = Prec::default();
    let gb = BigReal::from_f64(gamma, p);
    let zero = BigReal::zero(p);
    let one = BigReal::one(p);
    // The kernel is negligible near the ends; integrate on the core interval in pieces.
    let half = BigReal::from_f64(0.5, p);
    let f = |u: &BigReal| {
        let e = kernel_exponent(u, &gb);
        if e.to_f64() < -1e6 {
            BigReal::zero(p)
        } else {
            e.exp()
        }
    };
    let left = doubling_gl(f, &zero, &half, 40, 1e-40, 0.0, 1 << 12)?;
    let right = doubling_gl(f, &half, &one, 40, 1e-40, 0.0, 1 << 12)?;
    Ok(GevreyStep { sigma, horizon, gamma, z, z_big: left + right })
}

impl GevreyStep {
    /// g(t) for t in [0, T] (clamped outside).
    pub fn value(&self, t: f64) -> f64 {
        let u = (t / self.horizon).clamp(0.0, 1.0);
        if u == 0.0 {
            return 0.0;
        }
        if u == 1.0 {
            return 1.0;
        }
        adaptive_gk(|s| kernel_f64(s, self.gamma), 0.0, u, 1e-15).unwrap_or(f64::NAN) / self.z
    }

    /// g(t) in the precision of `t`.
    pub fn value_in<T: Real>(&self, t: &T) -> T {
        let p = t.prec();
        if p.is_double() {
            return T::from_f64(self.value(t.to_f64()), p);
        }
        let u = (t.clone() / T::from_f64(self.horizon, p)).to_f64();
        if u <= 0.0 {
            return T::zero(p);
        }
        if u >= 1.0 {
            return T::one(p);
        }
        let uu = t.clone() / T::from_f64(self.horizon, p);
        let gamma = T::from_f64(self.gamma, p);
        let f = |s: &T| {
            let e = kernel_exponent(s, &gamma);
            if e.to_f64() < -1e6 {
                T::zero(p)
            } else {
                e.exp()
            }
        };
        // Integrate over the shorter side and use the unit total.
        let z = T::from_big(&self.z_big, p);
        if u <= 0.5 {
            let v = doubling_gl(f, &T::zero(p), &uu, 40, 1e-40, 0.0, 1 << 12).unwrap_or(T::zero(p));
            v / z
        } else {
            let v = doubling_gl(f, &uu, &T::one(p), 40, 1e-40, 0.0, 1 << 12).unwrap_or(T::zero(p));
            T::one(p) - v / z
        }
    }

    /// Taylor coefficients g^{(m)}(t)/m! for m = 1..=n (index 0 left at zero).
    pub fn jet_tail<T: Real>(&self, t: &T, n: usize) -> Vec<T> {
        let p = t.prec();
        let mut out = vec![T::zero(p); n + 1];
        if n == 0 {
            return out;
        }
        let tf = t.to_f64();
        if tf <= 0.0 || tf >= self.horizon {
            return out;
        }
        let big_t = T::from_f64(self.horizon, p);
        let u = t.clone() / big_t.clone();
        let gamma = T::from_f64(self.gamma, p);
        let e0 = kernel_exponent(&u, &gamma).to_f64();
        let limit = if p.is_double() { -745.0 } else { -1e6 };
        if e0 < limit {
            return out;
        }
        let one = T::one(p);
        let x = Jet::variable(u.clone(), n - 1);
        let w = x.mul(&Jet::constant(one, n - 1).sub(&x));
        let k = w.powf(&-gamma.clone()).scale(&T::from_f64(-1.0, p)).add_const(&T::from_f64(4.0, p).powf(&gamma)).exp();
        let z = if p.is_double() { T::from_f64(self.z, p) } else { T::from_big(&self.z_big, p) };
        let inv_t = T::one(p) / big_t;
        let mut scale = inv_t.clone();
        for m in 1..=n {
            out[m] = k.c[m - 1].clone() * scale.clone() / (T::from_f64(m as f64, p) * z.clone());
            scale = scale * inv_t.clone();
        }
        out
    }

    /// g^{(m)}(t) for m = 0..=n.
    pub fn derivatives<T: Real>(&self, t: &T, n: usize) -> Vec<T> {
        let p = t.prec();
        let mut j = self.jet_tail(t, n);
        j[0] = self.value_in(t);
        let mut f = T::one(p);
        for (m, c) in j.iter_mut().enumerate().skip(1) {
            f = f * T::from_f64(m as f64, p);
            *c = c.clone() * f.clone();
        }
        j
    }

    /// sup over a grid of |g^{(n)}|, n = 0..=nmax, in the given precision.
    ///
    /// g' is symmetric about T/2, so only the left half is sampled, with
    /// nodes clustered towards 0 where high derivatives peak.
    pub fn sup_table(&self, nmax: usize, npts: usize, p: Prec) -> Vec<f64> {
        let mut sups = vec![0.0f64; nmax + 1];
        sups[0] = 1.0;
        for i in 1..=npts {
            let r = i as f64 / npts as f64;
            let t = 0.5 * self.horizon * r * r;
            let vals: Vec<f64> = if p.is_double() {
                self.jet_tail(&t, nmax)
            } else {
                self.jet_tail(&BigReal::from_f64(t, p), nmax).iter().map(|v| v.to_f64()).collect()
            };
            let mut f = 1.0;
            let vals: Vec<f64> = vals
                .iter()
                .enumerate()
                .map(|(m, v)| {
                    if m > 1 {
                        f *= m as f64;
                    }
                    v * f
                })
                .collect();
            for n in 1..=nmax {
                sups[n] = sups[n].max(vals[n].abs());
            }
        }
        sups
    }

    /// Certificate fitted on derivative orders `lo..=hi` sampled on a grid.
    pub fn fitted_certificate(&self, lo: usize, hi: usize, npts: usize) -> Result<GevreyCertificate> {
        let mut sups = self.sup_table(hi, npts, Prec::default());
        // Zero entries are ignored by the fit.
        sups[..lo].iter_mut().for_each(|v| *v = 0.0);
        fit_certificate(&sups)
    }
}
