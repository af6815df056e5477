//! Truncated Taylor series ("jets"): coefficient k holds f^{(k)}(t0)/k!.

use crate::real::{Prec, Real};

#[derive(Clone, Debug)]
pub struct Jet<T: Real> {
    pub c: Vec<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T, n: usize) -> Self {
        let p = v.prec();
        let mut c = vec![T::zero(p); n + 1];
        c[0] = v;
        Jet { c }
    }

    /// The identity function t ↦ t expanded at t0.
    pub fn variable(t0: T, n: usize) -> Self {
        let p = t0.prec();
        let mut j = Jet::constant(t0, n);
        if n >= 1 {
            j.c[1] = T::one(p);
        }
        j
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    fn prec(&self) -> Prec {
        self.c[0].prec()
    }

    pub fn add(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Jet {
            c: self.c.iter().zip(&o.c).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Jet {
            c: self.c.iter().map(|a| a.clone() * s.clone()).collect(),
        }
    }

    pub fn add_const(&self, s: &T) -> Self {
        let mut r = self.clone();
        r.c[0] = r.c[0].clone() + s.clone();
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.order();
        let p = self.prec();
        let mut c = vec![T::zero(p); n + 1];
        for i in 0..=n {
            if self.c[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                c[i + j] += self.c[i].clone() * o.c[j].clone();
            }
        }
        Jet { c }
    }

    pub fn div(&self, o: &Self) -> Self {
        let n = self.order();
        let p = self.prec();
        let mut c: Vec<T> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut s = self.c[k].clone();
            for j in 1..=k {
                s -= o.c[j].clone() * c[k - j].clone();
            }
            c.push(s / o.c[0].clone());
        }
        let _ = p;
        Jet { c }
    }

    pub fn exp(&self) -> Self {
        let n = self.order();
        let p = self.prec();
        let mut b: Vec<T> = Vec::with_capacity(n + 1);
        b.push(self.c[0].exp());
        for k in 1..=n {
            let mut s = T::zero(p);
            for j in 1..=k {
                s += T::from_f64(j as f64, p) * self.c[j].clone() * b[k - j].clone();
            }
            b.push(s / T::from_f64(k as f64, p));
        }
        Jet { c: b }
    }

    pub fn ln(&self) -> Self {
        let n = self.order();
        let p = self.prec();
        let a0 = self.c[0].clone();
        let mut b: Vec<T> = Vec::with_capacity(n + 1);
        b.push(a0.ln());
        for k in 1..=n {
            let mut s = T::zero(p);
            for j in 1..k {
                s += T::from_f64(j as f64, p) * b[j].clone() * self.c[k - j].clone();
            }
            b.push((self.c[k].clone() - s / T::from_f64(k as f64, p)) / a0.clone());
        }
        Jet { c: b }
    }

    /// a^e for a jet with positive constant term.
    pub fn powf(&self, e: &T) -> Self {
        self.ln().scale(e).exp()
    }

    /// Derivative values f^{(k)}(t0) = k!·c_k.
    pub fn derivatives(&self) -> Vec<T> {
        let p = self.prec();
        let mut f = T::one(p);
        let mut out = Vec::with_capacity(self.c.len());
        for (k, ck) in self.c.iter().enumerate() {
            if k > 1 {
                f *= T::from_f64(k as f64, p);
            }
            out.push(ck.clone() * f.clone());
        }
        out
    }
}
