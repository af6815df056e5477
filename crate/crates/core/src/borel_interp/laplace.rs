use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::real::{factorial, Prec, Real};

/// Closed-form analytic kernels g with derivative evaluators on ℝ₋.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LaplaceKernel {
    Zero,
    /// g(z) = e^z, giving d_n = n!.
    Exp,
    /// g(z) = ζ^{-2}(1 − z/ζ²)^{-2}, giving d_n = (n!)²/ζ^{2n}.
    Zeta { zeta: f64 },
    /// g(z) = (z − z0)^{-k} with real z0 > 0.
    Pole { z0: f64, k: u32 },
}

impl LaplaceKernel {
    /// g^{(m)}(z) for m = 0..=n.
    pub fn derivs<T: Real>(&self, z: &T, n: usize) -> Vec<T> {
        let p = z.prec();
        match self {
            LaplaceKernel::Zero => vec![T::zero(p); n + 1],
            LaplaceKernel::Exp => vec![z.exp(); n + 1],
            LaplaceKernel::Zeta { zeta } => {
                let z2 = T::from_f64(*zeta, p) * T::from_f64(*zeta, p);
                let inv_z2 = T::one(p) / z2.clone();
                let w = T::one(p) / (T::one(p) - z.clone() * inv_z2.clone());
                // m-th term: (m+1)! ζ^{-2(m+1)} w^{m+2}
                let mut out = Vec::with_capacity(n + 1);
                let mut fact = T::one(p);
                let mut pw = inv_z2.clone() * w.clone() * w.clone();
                for m in 0..=n {
                    fact = fact * T::from_f64((m + 1) as f64, p);
                    out.push(fact.clone() * pw.clone());
                    pw = pw * inv_z2.clone() * w.clone();
                }
                out
            }
            LaplaceKernel::Pole { z0, k } => {
                let w = T::one(p) / (z.clone() - T::from_f64(*z0, p));
                let mut out = Vec::with_capacity(n + 1);
                let mut c = T::one(p);
                let mut pw = w.powi(*k);
                for m in 0..=n {
                    out.push(c.clone() * pw.clone());
                    c = c * T::from_f64(-((*k as usize + m) as f64), p);
                    pw = pw * w.clone();
                }
                out
            }
        }
    }

    /// d_n = n! g^{(n−1)}(0) for n ≥ 1.
    pub fn target(&self, n: usize) -> f64 {
        assert!(n >= 1);
        let g = self.derivs(&0.0f64, n - 1);
        g[n - 1] * factorial::<f64>(n as u32, Prec::DOUBLE)
    }
}

/// Sampled check of |g^{(n)}(z)| ≤ C |g^{(n)}(0)| on [z_min, 0].
#[derive(Clone, Debug, Serialize)]
pub struct KernelBoundReport {
    pub c_max: f64,
    pub worst_order: usize,
    pub limit: f64,
    pub violated: bool,
}

fn kernel_bound_from<F: Fn(f64) -> Vec<f64>>(g: F, n_max: usize, z_min: f64, npts: usize, limit: f64) -> KernelBoundReport {
    let g0 = g(0.0);
    let mut c_max = 0.0f64;
    let mut worst = 0;
    for i in 0..=npts {
        let z = z_min * i as f64 / npts as f64;
        let gz = g(z);
        for n in 0..=n_max {
            let r = if g0[n] == 0.0 {
                if gz[n] == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                gz[n].abs() / g0[n].abs()
            };
            if r > c_max {
                c_max = r;
                worst = n;
            }
        }
    }
    KernelBoundReport { c_max, worst_order: worst, limit, violated: c_max > limit }
}

pub fn check_kernel_bound(kernel: &LaplaceKernel, n_max: usize, z_min: f64, npts: usize, limit: f64) -> KernelBoundReport {
    kernel_bound_from(|z| kernel.derivs(&z, n_max), n_max, z_min, npts, limit)
}

/// Same check for g = (z − z0)^{-k} with complex z0.
pub fn check_kernel_bound_complex_pole(z0: Complex64, k: u32, n_max: usize, z_min: f64, npts: usize, limit: f64) -> KernelBoundReport {
    let g = |z: f64| {
        let w = 1.0 / (Complex64::new(z, 0.0) - z0);
        let mut c = 1.0f64;
        let mut pw = w.powu(k);
        let mut out = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            out.push(c * pw.norm());
            c *= (k as usize + m) as f64;
            pw *= w;
        }
        out
    };
    kernel_bound_from(g, n_max, z_min, npts, limit)
}

/// f(τ) = d_0 + τ∫₀^∞ e^{−s} g(τs) ds for τ ≤ 0.
#[derive(Clone, Debug)]
pub struct LaplaceFunction {
    pub kernel: LaplaceKernel,
    pub d0: f64,
    pub rel_tol: f64,
}

impl LaplaceFunction {
    pub fn new(kernel: LaplaceKernel, d0: f64) -> Self {
        LaplaceFunction { kernel, d0, rel_tol: 1e-12 }
    }

    /// f^{(n)}(τ) for n = 0..=n_max by Gauss–Legendre in u with s = u/(1−u).
    pub fn derivatives<T: Real>(&self, tau: &T, n_max: usize) -> Result<Vec<T>> {
        let p = tau.prec();
        if tau.to_f64() > 0.0 {
            return Err(Error::InvalidArgument("Laplace profile is defined for tau <= 0".into()));
        }
        if matches!(self.kernel, LaplaceKernel::Zero) {
            let mut v = vec![T::zero(p); n_max + 1];
            v[0] = T::from_f64(self.d0, p);
            return Ok(v);
        }
        let order = if p.is_double() { 20 } else { 40 };
        let rule = gauss_legendre::<T>(order, p);
        let one = T::one(p);
        let integrate = |panels: usize| -> Vec<T> {
            let mut acc = vec![T::zero(p); n_max + 1];
            // All orders share the kernel evaluations at each node.
            let h = one.clone() / T::from_f64(panels as f64, p);
            let half = h.clone() * T::from_f64(0.5, p);
            for k in 0..panels {
                let mid = h.clone() * T::from_f64(k as f64 + 0.5, p);
                for (x, w) in rule.0.iter().zip(&rule.1) {
                    let u = mid.clone() + half.clone() * x.clone();
                    let om = one.clone() - u.clone();
                    let s = u / om.clone();
                    let es = (-s.clone()).exp();
                    if es.is_zero() {
                        continue;
                    }
                    let jac = w.clone() * half.clone() * es / (om.clone() * om);
                    let g = self.kernel.derivs(&(tau.clone() * s.clone()), n_max);
                    // n = 0: τ g(τs); n ≥ 1: g^{(n−1)}(τs) s^n.
                    acc[0] += jac.clone() * tau.clone() * g[0].clone();
                    let mut sp = one.clone();
                    for n in 1..=n_max {
                        sp = sp * s.clone();
                        acc[n] += jac.clone() * g[n - 1].clone() * sp.clone();
                    }
                }
            }
            acc
        };
        let mut panels = 4usize;
        let mut prev = integrate(panels);
        loop {
            panels *= 2;
            let cur = integrate(panels);
            let worst = cur
                .iter()
                .zip(&prev)
                .map(|(a, b)| {
                    let scale = a.abs().to_f64().max(1e-300);
                    (a.clone() - b.clone()).abs().to_f64() / scale
                })
                .fold(0.0, f64::max);
            if worst <= self.rel_tol {
                let mut out = cur;
                out[0] = out[0].clone() + T::from_f64(self.d0, p);
                return Ok(out);
            }
            if panels >= 1 << 12 {
                return Err(Error::Quadrature(format!(
                    "Laplace integral not converged (rel change {worst:e})"
                )));
            }
            prev = cur;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;

    #[test]
    fn exponential_kernel_gives_factorials() {
        for n in 1..12 {
            let d = LaplaceKernel::Exp.target(n);
            assert!((d / factorial::<f64>(n as u32, Prec::DOUBLE) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_kernel_is_constant() {
        let f = LaplaceFunction::new(LaplaceKernel::Zero, 2.5);
        let v = f.derivatives(&-0.3f64, 4).unwrap();
        assert_eq!(v[0], 2.5);
        assert!(v[1..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn pole_satisfies_sampled_kernel_bound() {
        let r = check_kernel_bound(&LaplaceKernel::Pole { z0: 1.0, k: 2 }, 10, -50.0, 200, 1.0 + 1e-12);
        assert!(!r.violated, "{r:?}");
        let rc = check_kernel_bound_complex_pole(Complex64::new(1.0, 0.0), 2, 10, -50.0, 200, 1.0 + 1e-12);
        assert!(!rc.violated);
        // A pole on the negative axis violates it.
        let bad = check_kernel_bound(&LaplaceKernel::Pole { z0: -1.0, k: 1 }, 5, -0.99, 50, 1.0 + 1e-12);
        assert!(bad.violated);
    }

    #[test]
    fn zeta_example_endpoint_values_by_quadrature() {
        let zeta = 0.8;
        let f = LaplaceFunction::new(LaplaceKernel::Zeta { zeta }, 1.0);
        let v = f.derivatives(&0.0f64, 15).unwrap();
        for n in 1..=15 {
            let exact = factorial::<f64>(n as u32, Prec::DOUBLE).powi(2) / zeta.powi(2 * n as i32);
            assert!((v[n] / exact - 1.0).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn derivative_chain_matches_finite_differences() {
        let mut f = LaplaceFunction::new(LaplaceKernel::Zeta { zeta: 0.8 }, 1.0);
        f.rel_tol = 1e-40;
        let p = Prec(192);
        let t = -0.3;
        let h = 1e-15;
        let tb = BigReal::from_f64(t, p);
        let hb = BigReal::from_f64(h, p);
        let a = f.derivatives(&(tb.clone() + hb.clone()), 4).unwrap();
        let b = f.derivatives(&(tb.clone() - hb), 4).unwrap();
        let c = f.derivatives(&tb, 5).unwrap();
        for n in 0..4 {
            let fd = (a[n].clone() - b[n].clone()).to_f64() / (2.0 * h);
            let ex = c[n + 1].to_f64();
            assert!((fd - ex).abs() < 1e-6 * ex.abs().max(1.0), "n={n}: {fd} vs {ex}");
        }
    }
}
