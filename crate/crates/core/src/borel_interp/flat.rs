use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coeffs::{CoeffSequence, Convention};
use super::laplace::{check_kernel_bound, LaplaceFunction, LaplaceKernel, KernelBoundReport};
use super::petzsche::{delta_max, petzsche_interpolate, PetzscheFunction, PetzscheOptions};
use crate::error::{Error, Result};
use crate::gevrey_core::bump::SplineScalar;
use crate::gevrey_core::{gevrey_step, GevreyStep, WeightSequence};
use crate::real::{ln_factorial, BigReal, Prec, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Petzsche,
    Laplace,
}

/// Which factorial the flat output is normalized by: (2i)! or (2i+1)!.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn ln_scale(self, i: usize) -> f64 {
        match self {
            Parity::Even => ln_factorial(2 * i as u32),
            Parity::Odd => ln_factorial(2 * i as u32 + 1),
        }
    }

    pub fn exponent(self, i: usize) -> f64 {
        match self {
            Parity::Even => 2.0 * i as f64,
            Parity::Odd => 2.0 * i as f64 + 1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Profile {
    Zero,
    Petzsche(Arc<PetzscheFunction>),
    Laplace(Arc<LaplaceFunction>),
}

/// Radii of the claimed bound sup|y^{(i)}| ≤ M' (R'/R)^{e(i)} scale(i).
///
/// R' is the loss factor: the output has radius R/R'. The Laplace route has R' = 1.
#[derive(Clone, Debug, Serialize)]
pub struct OutputCertificate {
    pub r: f64,
    pub r_prime: f64,
    /// Radii the construction ran with (differ from (R, R') for odd outputs).
    pub r_work: f64,
    pub r_prime_work: f64,
    /// Measured constant against (R'_work/R_work)^{2i}(2i)!.
    pub m_work: Option<f64>,
    /// Certificate constant M' in the output's own normalization.
    pub m_prime: Option<f64>,
}

/// Smooth y on [0, T] with y^{(i)}(0) = 0 and y^{(i)}(T) = d_i.
#[derive(Clone, Debug)]
pub struct FlatOutput {
    pub horizon: f64,
    pub n_max: usize,
    pub targets: CoeffSequence,
    pub method: Method,
    pub parity: Parity,
    pub certificate: OutputCertificate,
    pub profile: Profile,
    pub step: Arc<GevreyStep>,
    /// Where the profile's endpoint sits inside [0, T] (t − shift is its argument).
    pub shift: f64,
    pub precision: Prec,
    pub kernel_bound: Option<KernelBoundReport>,
}

fn to_taylor<T: Real>(d: Vec<T>) -> Vec<T> {
    let p = d[0].prec();
    let mut f = T::one(p);
    d.into_iter()
        .enumerate()
        .map(|(k, v)| {
            if k > 1 {
                f = f.clone() * T::from_f64(k as f64, p);
            }
            v / f.clone()
        })
        .collect()
}

impl FlatOutput {
    pub fn is_zero(&self) -> bool {
        matches!(self.profile, Profile::Zero)
    }

    /// Taylor coefficients of the profile at τ = t − shift.
    pub fn profile_jet<T: SplineScalar>(&self, tau: &T, n: usize) -> Result<Vec<T>> {
        let p = tau.prec();
        match &self.profile {
            Profile::Zero => Ok(vec![T::zero(p); n + 1]),
            Profile::Petzsche(f) => Ok(f.jet(tau, n)),
            Profile::Laplace(f) => Ok(to_taylor(f.derivatives(tau, n)?)),
        }
    }

    /// Taylor coefficients y^{(i)}(t)/i!, i = 0..=n.
    pub fn jet<T: SplineScalar>(&self, t: &T, n: usize) -> Result<Vec<T>> {
        let p = t.prec();
        if self.is_zero() {
            return Ok(vec![T::zero(p); n + 1]);
        }
        let tf = t.to_f64();
        if tf <= 0.0 {
            return Ok(vec![T::zero(p); n + 1]);
        }
        let tau = t.clone() - T::from_f64(self.shift, p);
        let f = self.profile_jet(&tau, n)?;
        let mut g = self.step.jet_tail(t, n);
        g[0] = self.step.value_in(t);
        let mut out = vec![T::zero(p); n + 1];
        for (i, a) in f.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (k, b) in g.iter().enumerate().take(n + 1 - i) {
                out[i + k] += a.clone() * b.clone();
            }
        }
        Ok(out)
    }

    /// y^{(i)}(t), i = 0..=n.
    pub fn derivatives<T: SplineScalar>(&self, t: &T, n: usize) -> Result<Vec<T>> {
        let p = t.prec();
        let j = self.jet(t, n)?;
        let mut f = T::one(p);
        Ok(j.into_iter()
            .enumerate()
            .map(|(k, v)| {
                if k > 1 {
                    f = f.clone() * T::from_f64(k as f64, p);
                }
                v * f.clone()
            })
            .collect())
    }

    /// Scaled derivatives y^{(i)}(t)/scale(i) in the configured precision.
    pub fn scaled(&self, t: f64, n: usize) -> Result<Vec<f64>> {
        self.scaled_in(t, n, self.precision)
    }

    pub fn scaled_in(&self, t: f64, n: usize, p: Prec) -> Result<Vec<f64>> {
        self.scaled_as(t, n, self.parity, p)
    }

    /// y^{(i)}(t)/(2i)! or y^{(i)}(t)/(2i+1)! as chosen by `parity`.
    pub fn scaled_as(&self, t: f64, n: usize, parity: Parity, p: Prec) -> Result<Vec<f64>> {
        let jet: Vec<f64> = if p.is_double() {
            self.jet(&t, n)?
        } else {
            let tb = BigReal::from_f64(t, p);
            let j = self.jet(&tb, n)?;
            // Divide by scale(i)/i! before leaving extended precision.
            return Ok(j
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    if v.is_zero() {
                        0.0
                    } else {
                        let s = v.ln_abs_f64() + ln_factorial(i as u32) - parity.ln_scale(i);
                        let sign = if *v < BigReal::zero(p) { -1.0 } else { 1.0 };
                        sign * s.exp()
                    }
                })
                .collect());
        };
        Ok(jet
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if *v == 0.0 {
                    0.0
                } else {
                    let s = v.abs().ln() + ln_factorial(i as u32) - parity.ln_scale(i);
                    v.signum() * s.exp()
                }
            })
            .collect())
    }

    /// sup over an n-point grid of |y^{(i)}|/scale(i), i = 0..=n.
    pub fn sup_table(&self, n: usize, npts: usize) -> Result<Vec<f64>> {
        let rows: Vec<Result<Vec<f64>>> = (0..=npts)
            .into_par_iter()
            .map(|k| self.scaled(self.horizon * k as f64 / npts as f64, n))
            .collect();
        let mut sups = vec![0.0f64; n + 1];
        for r in rows {
            for (s, v) in sups.iter_mut().zip(r?) {
                *s = s.max(v.abs());
            }
        }
        Ok(sups)
    }

    /// Measures M' on the grid and stores it in the certificate.
    pub fn certify(&mut self, n: usize, npts: usize) -> Result<Vec<f64>> {
        let sups = self.sup_table(n, npts)?;
        let c = &mut self.certificate;
        let q = c.r_prime / c.r;
        let m = sups
            .iter()
            .enumerate()
            .map(|(i, s)| s / q.powf(self.parity.exponent(i)))
            .fold(0.0, f64::max);
        c.m_prime = Some(m);
        if self.parity == Parity::Odd {
            // Work-radius constant against (2i)!: rescale by (2i+1).
            let qw = c.r_prime_work / c.r_work;
            let mw = sups
                .iter()
                .enumerate()
                .map(|(i, s)| s * (2 * i + 1) as f64 / qw.powi(2 * i as i32))
                .fold(0.0, f64::max);
            c.m_work = Some(mw);
            c.m_prime = Some(mw * c.r / c.r_prime);
        } else {
            c.m_work = Some(m);
        }
        Ok(sups)
    }

    /// (max_i |y^{(i)}(0)|, max_i |y^{(i)}(T) − d_i| / max(|d_i|, 1)) for i ≤ n.
    pub fn endpoint_errors(&self, n: usize) -> Result<(f64, f64)> {
        let n = n.min(self.targets.len().saturating_sub(1));
        let p = self.precision;
        let (at0, at_t): (Vec<f64>, Vec<f64>) = if p.is_double() {
            (self.derivatives(&0.0f64, n)?, self.derivatives(&self.horizon, n)?)
        } else {
            let a = self.derivatives(&BigReal::zero(p), n)?;
            let b = self.derivatives(&BigReal::from_f64(self.horizon, p), n)?;
            (a.iter().map(|v| v.to_f64()).collect(), b.iter().map(|v| v.to_f64()).collect())
        };
        let e0 = at0.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let et = at_t
            .iter()
            .zip(&self.targets.d)
            .map(|(v, d)| (v - d).abs() / d.abs().max(1.0))
            .fold(0.0, f64::max);
        Ok((e0, et))
    }
}

/// Knobs shared by the two real-variable steering constructions.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SteerOptions {
    pub petzsche: PetzscheOptions,
    /// Position of H̃ in (e^{1/e}H, (R'/R)²) on a log scale.
    pub h_tilde_fraction: f64,
    /// Stored prefix length of the weight sequence a_p = [2p(2p−1)]^{-1}.
    pub weight_len: usize,
}

impl Default for SteerOptions {
    fn default() -> Self {
        SteerOptions { petzsche: PetzscheOptions::default(), h_tilde_fraction: 0.5, weight_len: 20_000 }
    }
}

/// Cap on the automatically sized weight prefix.
pub const MAX_WEIGHTS: usize = 1 << 22;

fn check_radii(r: f64, r_prime: f64) -> Result<()> {
    let r0 = crate::r0();
    if !(r > r0) {
        return Err(Error::InsufficientRadius(format!("R = {r} does not exceed R0 = {r0}")));
    }
    if !(r_prime > r0 && r_prime < r) {
        return Err(Error::InvalidLoss(format!("R' = {r_prime} not in ({r0}, {r})")));
    }
    Ok(())
}

fn build_even(
    d: &CoeffSequence,
    r: f64,
    r_prime: f64,
    horizon: f64,
    sigma: f64,
    n_max: usize,
    opts: &SteerOptions,
) -> Result<(Profile, Arc<GevreyStep>)> {
    let step = Arc::new(gevrey_step(sigma, horizon)?);
    if d.is_zero() {
        return Ok((Profile::Zero, step));
    }
    let h_rate = r.powi(-2);
    let lo = (1.0 / std::f64::consts::E).exp() * h_rate;
    let hi = (r_prime / r).powi(2);
    let th = opts.h_tilde_fraction.clamp(1e-6, 1.0 - 1e-6);
    let h_tilde = lo * (hi / lo).powf(th);
    // Block p needs k0 ≈ (2/δ)·p stored weights before κ exceeds 2/δ.
    let probe = WeightSequence::even_factorial(n_max + 8);
    let delta = opts.petzsche.delta_fraction * delta_max(probe.big_a, h_rate, h_tilde);
    let need = if delta > 0.0 { (3.0 / delta * (n_max + 2) as f64).ceil() as usize } else { 0 };
    let len = opts.weight_len.max(n_max + 8).max(need.min(MAX_WEIGHTS));
    let w = WeightSequence::even_factorial(len);
    let f = petzsche_interpolate(d, &w, h_rate, h_tilde, n_max, &opts.petzsche)?;
    Ok((Profile::Petzsche(Arc::new(f)), step))
}

/// Flat output for an even target with |c_{2i}| ≤ M (2i)!/R^{2i}.
pub fn steer_output_even(
    c_even: &CoeffSequence,
    horizon: f64,
    r_prime: f64,
    sigma: f64,
    n_max: usize,
    opts: &SteerOptions,
) -> Result<FlatOutput> {
    let r = c_even.r;
    check_radii(r, r_prime)?;
    let d = c_even.recertify(r, Convention::DoubleFactorial)?;
    let (profile, step) = build_even(&d, r, r_prime, horizon, sigma, n_max, opts)?;
    Ok(FlatOutput {
        horizon,
        n_max,
        targets: d,
        method: Method::Petzsche,
        parity: Parity::Even,
        certificate: OutputCertificate { r, r_prime, r_work: r, r_prime_work: r_prime, m_work: None, m_prime: None },
        profile,
        step,
        shift: horizon,
        precision: opts.petzsche.precision,
        kernel_bound: None,
    })
}

/// Intermediate radii R0 < R̃' < R' < R̃ < R with R̃'/R̃ < R'/R.
pub fn odd_work_radii(r: f64, r_prime: f64) -> Result<(f64, f64)> {
    let r0 = crate::r0();
    // Any R̃ > R R0/R' leaves R̃ R'/R above R0.
    let rt_min = r * r0 / r_prime;
    let rt = rt_min + 0.75 * (r - rt_min);
    let cap = rt * r_prime / r;
    if !(cap > r0) {
        return Err(Error::InvalidLoss(format!(
            "R' = {r_prime} leaves no room above R0 for the odd reduction"
        )));
    }
    Ok((rt, 0.5 * (r0 + cap)))
}

/// Flat output for an odd target with |c_{2i+1}| ≤ M (2i+1)!/R^{2i+1}.
pub fn steer_output_odd(
    c_odd: &CoeffSequence,
    horizon: f64,
    r_prime: f64,
    sigma: f64,
    n_max: usize,
    opts: &SteerOptions,
) -> Result<FlatOutput> {
    let r = c_odd.r;
    check_radii(r, r_prime)?;
    let (rt, rtp) = odd_work_radii(r, r_prime)?;
    let targets = c_odd.recertify(r, Convention::OddFactorial)?;
    let work = c_odd.recertify(rt, Convention::DoubleFactorial)?;
    let (profile, step) = build_even(&work, rt, rtp, horizon, sigma, n_max, opts)?;
    Ok(FlatOutput {
        horizon,
        n_max,
        targets,
        method: Method::Petzsche,
        parity: Parity::Odd,
        certificate: OutputCertificate { r, r_prime, r_work: rt, r_prime_work: rtp, m_work: None, m_prime: None },
        profile,
        step,
        shift: horizon,
        precision: opts.petzsche.precision,
        kernel_bound: None,
    })
}

/// Options of the complex-variable route.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct LaplaceOptions {
    pub sigma: f64,
    pub n_max: usize,
    /// Radius R of the target bound |d_n| ≤ M (2n)!/R^{2n}.
    pub r: f64,
    pub kernel_bound_limit: f64,
    pub kernel_bound_z_min: f64,
    pub kernel_bound_points: usize,
    /// Abort instead of warning when the sampled condition fails.
    pub kernel_bound_strict: bool,
    pub precision: Prec,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            sigma: 1.5,
            n_max: 20,
            r: 1.5,
            kernel_bound_limit: 1.0 + 1e-9,
            kernel_bound_z_min: -50.0,
            kernel_bound_points: 200,
            kernel_bound_strict: false,
            precision: Prec::DOUBLE,
        }
    }
}

/// Flat output f(t − T2)·g(t − T1) with f from the Laplace integral.
pub fn laplace_interpolate(
    kernel: &LaplaceKernel,
    d0: f64,
    t1: f64,
    t2: f64,
    opts: &LaplaceOptions,
) -> Result<FlatOutput> {
    if !(t2 > t1) {
        return Err(Error::InvalidArgument("need T1 < T2".into()));
    }
    let horizon = t2 - t1;
    let kernel_bound = check_kernel_bound(kernel, opts.n_max, opts.kernel_bound_z_min, opts.kernel_bound_points, opts.kernel_bound_limit);
    if kernel_bound.violated && opts.kernel_bound_strict {
        return Err(Error::ConditionViolated(format!(
            "sampled |g^(n)(z)|/|g^(n)(0)| reaches {} at n = {}",
            kernel_bound.c_max, kernel_bound.worst_order
        )));
    }
    let mut d = vec![d0];
    for n in 1..=opts.n_max {
        d.push(kernel.target(n));
    }
    let targets = CoeffSequence::certify(d, opts.r, Convention::DoubleFactorial)?;
    let step = Arc::new(gevrey_step(opts.sigma, horizon)?);
    let profile = if targets.is_zero() {
        Profile::Zero
    } else {
        Profile::Laplace(Arc::new(LaplaceFunction::new(kernel.clone(), d0)))
    };
    Ok(FlatOutput {
        horizon,
        n_max: opts.n_max,
        targets,
        method: Method::Laplace,
        parity: Parity::Even,
        certificate: OutputCertificate {
            r: opts.r,
            r_prime: 1.0,
            r_work: opts.r,
            r_prime_work: 1.0,
            m_work: None,
            m_prime: None,
        },
        profile,
        step,
        shift: horizon,
        precision: opts.precision,
        kernel_bound: Some(kernel_bound),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_target_gives_zero_output() {
        let c = CoeffSequence::zeros(12, 1.5, Convention::DoubleFactorial);
        let y = steer_output_even(&c, 0.5, 1.21, 1.5, 10, &SteerOptions::default()).unwrap();
        assert!(y.is_zero());
        assert!(y.scaled(0.3, 10).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn radius_preconditions() {
        let c = CoeffSequence::zeros(4, 1.1, Convention::DoubleFactorial);
        assert!(matches!(
            steer_output_even(&c, 0.5, 1.05, 1.5, 3, &SteerOptions::default()),
            Err(Error::InsufficientRadius(_))
        ));
        let c = CoeffSequence::zeros(4, 1.5, Convention::DoubleFactorial);
        assert!(matches!(
            steer_output_even(&c, 0.5, 1.6, 1.5, 3, &SteerOptions::default()),
            Err(Error::InvalidLoss(_))
        ));
        assert!(matches!(
            steer_output_even(&c, 0.5, 1.1, 1.5, 3, &SteerOptions::default()),
            Err(Error::InvalidLoss(_))
        ));
    }

    #[test]
    fn constant_target_reduces_to_step() {
        let mut v = vec![0.0; 8];
        v[0] = 1.0;
        let c = CoeffSequence::certify(v, 1.5, Convention::DoubleFactorial).unwrap();
        let y = steer_output_even(&c, 0.5, 1.21, 1.5, 7, &SteerOptions::default()).unwrap();
        let at_t = y.derivatives(&0.5f64, 7).unwrap();
        assert!((at_t[0] - 1.0).abs() < 1e-15);
        assert!(at_t[1..].iter().all(|v| v.abs() < 1e-12));
        let (e0, et) = y.endpoint_errors(7).unwrap();
        assert_eq!(e0, 0.0);
        assert!(et < 1e-12);
    }

    #[test]
    fn odd_radius_bookkeeping() {
        let (rt, rtp) = odd_work_radii(1.5, 1.3).unwrap();
        assert!(crate::r0() < rtp && rtp < 1.3 && 1.3 < rt && rt < 1.5);
        assert!(rtp / rt < 1.3 / 1.5);
        let mut v = vec![0.0; 6];
        v[0] = 1.0;
        let c = CoeffSequence::certify(v, 1.5, Convention::OddFactorial).unwrap();
        let mut z = steer_output_odd(&c, 0.5, 1.3, 1.5, 5, &SteerOptions::default()).unwrap();
        z.certify(5, 40).unwrap();
        let cert = &z.certificate;
        let expect = cert.m_work.unwrap() * 1.5 / 1.3;
        assert!((cert.m_prime.unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn laplace_zeta_output_matches_targets() {
        let opts = LaplaceOptions { n_max: 15, r: 1.55, ..Default::default() };
        let y = laplace_interpolate(&LaplaceKernel::Zeta { zeta: 0.8 }, 1.0, 0.0, 0.5, &opts).unwrap();
        assert!(!y.kernel_bound.as_ref().unwrap().violated);
        let (e0, et) = y.endpoint_errors(15).unwrap();
        assert_eq!(e0, 0.0);
        assert!(et < 1e-8, "{et}");
    }
}
