use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::ln_factorial;

/// Which factorial scale the bound |d_q| ≤ M·scale(q)/R^{e(q)} uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// |d_q| ≤ M q!/R^q (plain Taylor coefficients).
    Factorial,
    /// |d_q| ≤ M (2q)!/R^{2q} (even-indexed flat-output targets).
    DoubleFactorial,
    /// |d_q| ≤ M (2q+1)!/R^{2q+1} (odd-indexed flat-output targets).
    OddFactorial,
}

impl Convention {
    /// ln of scale(q)/R^{e(q)}.
    pub fn ln_envelope(self, q: usize, r: f64) -> f64 {
        match self {
            Convention::Factorial => ln_factorial(q as u32) - q as f64 * r.ln(),
            Convention::DoubleFactorial => ln_factorial(2 * q as u32) - 2.0 * q as f64 * r.ln(),
            Convention::OddFactorial => {
                ln_factorial(2 * q as u32 + 1) - (2 * q + 1) as f64 * r.ln()
            }
        }
    }
}

/// Derivative targets with a stored growth certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffSequence {
    pub d: Vec<f64>,
    pub m: f64,
    pub r: f64,
    pub convention: Convention,
}

impl CoeffSequence {
    /// Checks the stored bound on every entry.
    pub fn new(d: Vec<f64>, m: f64, r: f64, convention: Convention) -> Result<Self> {
        if !(m > 0.0 && r > 0.0) {
            return Err(Error::InvalidArgument(format!("need M > 0 and R > 0, got {m}, {r}")));
        }
        let c = CoeffSequence { d, m, r, convention };
        if let Some(q) = c.first_violation() {
            return Err(Error::InvalidArgument(format!(
                "entry {q} = {} exceeds the bound",
                c.d[q]
            )));
        }
        Ok(c)
    }

    /// Smallest M certifying `d` at radius R (1 for the zero sequence).
    pub fn certify(d: Vec<f64>, r: f64, convention: Convention) -> Result<Self> {
        let ln_m = d
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(q, v)| v.abs().ln() - convention.ln_envelope(q, r))
            .fold(f64::NEG_INFINITY, f64::max);
        let m = if ln_m.is_finite() { ln_m.exp() * (1.0 + 1e-12) } else { 1.0 };
        CoeffSequence::new(d, m, r, convention)
    }

    pub fn zeros(n: usize, r: f64, convention: Convention) -> Self {
        CoeffSequence { d: vec![0.0; n], m: 1.0, r, convention }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.d.iter().all(|v| *v == 0.0)
    }

    pub fn ln_bound(&self, q: usize) -> f64 {
        self.m.ln() + self.convention.ln_envelope(q, self.r)
    }

    pub fn first_violation(&self) -> Option<usize> {
        self.d
            .iter()
            .enumerate()
            .find(|(q, v)| **v != 0.0 && v.abs().ln() > self.ln_bound(*q) + 1e-9)
            .map(|(q, _)| q)
    }

    /// Same entries certified in another convention at radius `r`.
    pub fn recertify(&self, r: f64, convention: Convention) -> Result<Self> {
        CoeffSequence::certify(self.d.clone(), r, convention)
    }
}
