use crate::error::{Error, Result};

/// Positive nonincreasing weights a_0, a_1, … stored as a finite prefix plus
/// the (known or zero) sum of the unstored tail.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct WeightSequence {
    pub a: Vec<f64>,
    /// Σ_{k ≥ a.len()} a_k; zero when the sequence is finite.
    pub tail: f64,
    /// Regularity constant: max_p (p a_p + Σ_{k>p} a_k)/(p a_p) over the prefix.
    pub big_a: f64,
}

impl WeightSequence {
    pub fn new(a: Vec<f64>, tail: f64) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidWeights("need at least two weights".into()));
        }
        if a.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidWeights("weights must be positive and finite".into()));
        }
        if !(tail.is_finite() && tail >= 0.0) {
            return Err(Error::InvalidWeights("tail must be finite and nonnegative".into()));
        }
        for k in 1..a.len() {
            if a[k] > a[k - 1] * (1.0 + 1e-15) {
                return Err(Error::InvalidWeights(format!(
                    "not nonincreasing at index {k}: {} > {}",
                    a[k],
                    a[k - 1]
                )));
            }
        }
        // Pringsheim: k a_k → 0. On a prefix we ask that the last value does
        // not exceed the running maximum of k a_k over the first half.
        let n = a.len();
        if n >= 8 {
            let head = (1..n / 2).map(|k| k as f64 * a[k]).fold(0.0, f64::max);
            let last = (n - 1) as f64 * a[n - 1];
            if last > head * (1.0 + 1e-12) {
                return Err(Error::InvalidWeights(
                    "k·a_k is not decaying on the stored prefix (sum likely diverges)".into(),
                ));
            }
        }
        let mut w = WeightSequence { a, tail, big_a: 1.0 };
        w.big_a = w.compute_a();
        Ok(w)
    }

    /// a_0 = 1, a_p = 1/(2p(2p−1)) so that M_p = (2p)!.
    pub fn even_factorial(n: usize) -> Self {
        let mut a = vec![1.0];
        for p in 1..n.max(2) {
            let pf = p as f64;
            a.push(1.0 / (2.0 * pf * (2.0 * pf - 1.0)));
        }
        let partial: f64 = a[1..].iter().sum();
        let tail = (std::f64::consts::LN_2 - partial).max(0.0);
        WeightSequence::new(a, tail).expect("valid by construction")
    }

    /// a_k = r^{k+1}, 0 < r < 1.
    pub fn geometric(n: usize, r: f64) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidWeights("ratio must lie in (0,1)".into()));
        }
        let a: Vec<f64> = (0..n).map(|k| r.powi(k as i32 + 1)).collect();
        let tail = r.powi(n as i32 + 1) / (1.0 - r);
        WeightSequence::new(a, tail)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// Σ_{k ≥ j} a_k including the unstored tail.
    pub fn sum_from(&self, j: usize) -> f64 {
        let head: f64 = if j < self.a.len() {
            self.a[j..].iter().sum()
        } else {
            0.0
        };
        head + self.tail
    }

    /// Σ_{k ≥ 1} a_k.
    pub fn sum_a(&self) -> f64 {
        self.sum_from(1)
    }

    fn compute_a(&self) -> f64 {
        let mut best = 1.0f64;
        let mut suffix = self.tail;
        for p in (1..self.a.len()).rev() {
            let pa = p as f64 * self.a[p];
            best = best.max((pa + suffix) / pa);
            suffix += self.a[p];
        }
        best
    }

    /// ln M_q = −Σ_{k ≤ q} ln a_k.
    pub fn ln_moduli(&self, q: usize) -> f64 {
        -self.a.iter().take(q + 1).map(|v| v.ln()).sum::<f64>()
    }
}
