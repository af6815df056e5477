//! Piecewise polynomials built by repeated convolution with normalized boxes.
//!
//! Each piece stores coefficients in the local variable ξ = x − knot_i.

use crate::error::{Error, Result};
use crate::real::{binomial_row, Prec, Real};

/// Hard cap on the number of polynomial pieces (distinct widths double it).
pub const MAX_PIECES: usize = 1 << 16;

#[derive(Clone, Debug)]
pub struct Spline<T: Real> {
    pub knots: Vec<T>,
    pub coeffs: Vec<Vec<T>>,
    /// Value to the right of the last knot (0 for densities, the mass for antiderivatives).
    pub right: T,
}

/// Re-expand Σ c_m ξ^m around ξ = s.
fn taylor_shift<T: Real>(c: &[T], s: &T, p: Prec) -> Vec<T> {
    let d = c.len();
    let mut b = c.to_vec();
    // Repeated synthetic division: O(d²), stable for moderate |s|.
    for i in 0..d {
        for j in (i..d - 1).rev() {
            let t = b[j + 1].clone() * s.clone();
            b[j] += t;
        }
    }
    let _ = p;
    b
}

impl<T: Real> Spline<T> {
    /// Normalized box on [0, w].
    pub fn unit_box(w: &T) -> Self {
        let p = w.prec();
        Spline {
            knots: vec![T::zero(p), w.clone()],
            coeffs: vec![vec![T::one(p) / w.clone()]],
            right: T::zero(p),
        }
    }

    pub fn prec(&self) -> Prec {
        self.knots[0].prec()
    }

    pub fn degree(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn left(&self) -> &T {
        &self.knots[0]
    }

    pub fn right_end(&self) -> &T {
        self.knots.last().unwrap()
    }

    /// Piece index containing x, or None outside [knot_0, knot_m).
    fn locate(&self, x: &T) -> Option<usize> {
        let m = self.coeffs.len();
        if *x < self.knots[0] || *x >= self.knots[m] {
            return None;
        }
        let (mut lo, mut hi) = (0usize, m);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.knots[mid] <= *x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    }

    /// Antiderivative from the left end; constant `right` after the last knot.
    pub fn antiderivative(&self) -> Self {
        let p = self.prec();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        let mut acc = T::zero(p);
        for (i, c) in self.coeffs.iter().enumerate() {
            let mut q = Vec::with_capacity(c.len() + 1);
            q.push(acc.clone());
            for (m, cm) in c.iter().enumerate() {
                q.push(cm.clone() / T::from_f64((m + 1) as f64, p));
            }
            let h = self.knots[i + 1].clone() - self.knots[i].clone();
            let mut v = T::zero(p);
            for qm in q.iter().rev() {
                v = v * h.clone() + qm.clone();
            }
            acc = v;
            coeffs.push(q);
        }
        Spline {
            knots: self.knots.clone(),
            coeffs,
            right: acc,
        }
    }

    /// Polynomial (local coefficients around `base`) of this spline valid on
    /// an interval starting at `base` of which `probe` is an interior point.
    fn local_poly(&self, base: &T, probe: &T, deg: usize) -> Vec<T> {
        let p = self.prec();
        let mut out = vec![T::zero(p); deg + 1];
        match self.locate(probe) {
            Some(i) => {
                let s = base.clone() - self.knots[i].clone();
                let shifted = taylor_shift(&self.coeffs[i], &s, p);
                for (k, v) in shifted.into_iter().enumerate() {
                    out[k] = v;
                }
            }
            None => {
                if *probe >= *self.right_end() {
                    out[0] = self.right.clone();
                }
            }
        }
        out
    }

    /// Convolution with the normalized box on [0, w].
    pub fn convolve_box(&self, w: &T) -> Result<Self> {
        let p = self.prec();
        let q = self.antiderivative();
        let deg = q.degree();
        let mut pts: Vec<T> = self.knots.clone();
        pts.extend(self.knots.iter().map(|k| k.clone() + w.clone()));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let span = (pts.last().unwrap().clone() - pts[0].clone()).abs().to_f64();
        let tol = span * 2f64.powi(-(p.0.min(1000) as i32 - 12));
        let mut knots: Vec<T> = Vec::with_capacity(pts.len());
        for x in pts {
            match knots.last() {
                Some(l) if (x.clone() - l.clone()).abs().to_f64() <= tol => {}
                _ => knots.push(x),
            }
        }
        if knots.len() - 1 > MAX_PIECES {
            return Err(Error::PieceLimit(format!(
                "{} pieces exceed the cap of {}",
                knots.len() - 1,
                MAX_PIECES
            )));
        }
        let half = T::from_f64(0.5, p);
        let mut coeffs = Vec::with_capacity(knots.len() - 1);
        for i in 0..knots.len() - 1 {
            let a = knots[i].clone();
            let mid = (a.clone() + knots[i + 1].clone()) * half.clone();
            let hi = q.local_poly(&a, &mid, deg);
            let lo = q.local_poly(&(a.clone() - w.clone()), &(mid - w.clone()), deg);
            coeffs.push(
                hi.into_iter()
                    .zip(lo)
                    .map(|(x, y)| (x - y) / w.clone())
                    .collect(),
            );
        }
        Ok(Spline {
            knots,
            coeffs,
            right: T::zero(p),
        })
    }

    /// Convolution H_{w_0} * ⋯ * H_{w_{K-1}}.
    pub fn box_convolution(widths: &[T]) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::InvalidDepth("no boxes".into()));
        }
        let mut s = Spline::unit_box(&widths[0]);
        for w in &widths[1..] {
            s = s.convolve_box(w)?;
        }
        Ok(s)
    }

    /// Taylor coefficients u^{(k)}(x)/k! for k = 0..=n.
    pub fn jet(&self, x: &T, n: usize) -> Vec<T> {
        let p = self.prec();
        let mut out = vec![T::zero(p); n + 1];
        match self.locate(x) {
            Some(i) => {
                let s = x.clone() - self.knots[i].clone();
                let sh = taylor_shift(&self.coeffs[i], &s, p);
                for (k, v) in sh.into_iter().enumerate().take(n + 1) {
                    out[k] = v;
                }
            }
            None => {
                if *x >= *self.right_end() {
                    out[0] = self.right.clone();
                }
            }
        }
        out
    }

    pub fn value(&self, x: &T) -> T {
        self.jet(x, 0).swap_remove(0)
    }

    /// k-th derivative at x.
    pub fn derivative(&self, x: &T, k: usize) -> T {
        let p = self.prec();
        let j = self.jet(x, k);
        let mut f = T::one(p);
        for i in 2..=k {
            f *= T::from_f64(i as f64, p);
        }
        j[k].clone() * f
    }

    /// Convert coefficients to another scalar type.
    pub fn convert<U: Real>(&self, p: Prec) -> Spline<U> {
        let cv = |v: &T| -> U {
            if p.is_double() {
                U::from_f64(v.to_f64(), p)
            } else {
                // Only f64 → big conversion goes through here in practice.
                U::from_f64(v.to_f64(), p)
            }
        };
        Spline {
            knots: self.knots.iter().map(cv).collect(),
            coeffs: self.coeffs.iter().map(|c| c.iter().map(cv).collect()).collect(),
            right: cv(&self.right),
        }
    }
}

/// k-th derivative via the normalized difference identity
/// u^{(k)} = Δ_{w_0}⋯Δ_{w_{k-1}}(H_{w_k} * ⋯ * H_{w_{K-1}}),
/// with Δ_a f(x) = (f(x) − f(x − a))/a.
pub fn derivative_by_differences<T: Real>(widths: &[T], k: usize, x: &T) -> Result<T> {
    if k >= widths.len() {
        return Err(Error::InvalidDepth(format!(
            "order {k} needs at least {} boxes",
            k + 1
        )));
    }
    let p = x.prec();
    let rest = Spline::box_convolution(&widths[k..])?;
    let mut total = T::zero(p);
    for mask in 0u64..(1u64 << k) {
        let mut shift = T::zero(p);
        let mut sign = 1.0;
        for (j, w) in widths.iter().enumerate().take(k) {
            if mask >> j & 1 == 1 {
                shift += w.clone();
                sign = -sign;
            }
        }
        let v = rest.value(&(x.clone() - shift));
        if sign > 0.0 {
            total += v;
        } else {
            total -= v;
        }
    }
    let mut denom = T::one(p);
    for w in widths.iter().take(k) {
        denom *= w.clone();
    }
    Ok(total / denom)
}

/// Binomial helper re-exported for callers that assemble jets.
pub fn binomials<T: Real>(n: usize, p: Prec) -> Vec<Vec<T>> {
    (0..=n).map(|m| binomial_row(m, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::BigReal;

    #[test]
    fn two_half_boxes_give_unit_hat() {
        let s = Spline::box_convolution(&[0.5f64, 0.5]).unwrap();
        assert!((s.value(&0.5) - 2.0).abs() < 1e-14);
        assert!((s.value(&0.25) - 1.0).abs() < 1e-14);
        assert_eq!(s.value(&1.0), 0.0);
        assert_eq!(s.value(&-0.1), 0.0);
    }

    #[test]
    fn cardinal_cubic_matches_closed_form() {
        // Cubic cardinal B-spline: value 2/3 at the center, 1/6 at x=1.
        let s = Spline::box_convolution(&[1.0f64; 4]).unwrap();
        assert_eq!(s.coeffs.len(), 4);
        assert!((s.value(&2.0) - 2.0 / 3.0).abs() < 1e-14);
        assert!((s.value(&1.0) - 1.0 / 6.0).abs() < 1e-14);
        assert!((s.derivative(&1.0, 1) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn antiderivative_reaches_unit_mass() {
        let w: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k + 1)).collect();
        let s = Spline::box_convolution(&w).unwrap();
        let a = s.antiderivative();
        assert!((a.right - 1.0).abs() < 1e-13);
        assert_eq!(s.coeffs.len(), 255);
    }

    #[test]
    fn differences_agree_with_piecewise_derivative() {
        let w: Vec<f64> = vec![0.4, 0.3, 0.2, 0.15, 0.1, 0.05];
        let s = Spline::box_convolution(&w).unwrap();
        for k in 0..=4 {
            for &x in &[0.33, 0.61, 0.87, 1.02] {
                let a = s.derivative(&x, k);
                let b = derivative_by_differences(&w, k, &x).unwrap();
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "k={k} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn big_precision_cardinal_is_consistent() {
        let p = Prec(256);
        let w: Vec<BigReal> = (0..12).map(|_| BigReal::one(p)).collect();
        let s = Spline::box_convolution(&w).unwrap();
        let mass = s.antiderivative().right;
        assert!((mass - BigReal::one(p)).abs().to_f64() < 1e-60);
        // Symmetry about the center.
        let x = BigReal::from_f64(3.3, p);
        let y = BigReal::from_f64(12.0, p) - x.clone();
        assert!((s.value(&x) - s.value(&y)).abs().to_f64() < 1e-60);
    }
}
