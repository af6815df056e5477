//! Scalar abstraction so the same construction code runs in `f64` and in
//! extended precision.

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Working precision in mantissa bits. Anything at or below 53 selects `f64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Prec(pub u32);

impl Prec {
    pub const DOUBLE: Prec = Prec(53);
    pub const DEFAULT_EXT: Prec = Prec(256);

    pub fn is_double(self) -> bool {
        self.0 <= 53
    }
}

impl Default for Prec {
    fn default() -> Self {
        Prec::DEFAULT_EXT
    }
}

pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn from_f64(x: f64, p: Prec) -> Self;
    fn to_f64(&self) -> f64;
    fn from_big(x: &BigReal, p: Prec) -> Self;
    fn prec(&self) -> Prec;
    fn abs(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn zero(p: Prec) -> Self {
        Self::from_f64(0.0, p)
    }
    fn one(p: Prec) -> Self {
        Self::from_f64(1.0, p)
    }
    fn from_i64(n: i64, p: Prec) -> Self {
        if n.unsigned_abs() < (1u64 << 53) {
            Self::from_f64(n as f64, p)
        } else {
            let hi = Self::from_f64((n >> 26) as f64, p);
            let lo = Self::from_f64((n & ((1 << 26) - 1)) as f64, p);
            hi * Self::from_f64(67108864.0, p) + lo
        }
    }
    fn powi(&self, n: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.prec());
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
    /// `self^e` for positive `self`.
    fn powf(&self, e: &Self) -> Self {
        (self.ln() * e.clone()).exp()
    }
    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
    /// Natural log of |self| as f64, finite for values outside the f64 range.
    fn ln_abs_f64(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let v = self.to_f64();
        if v.is_finite() && v != 0.0 && v.abs() > 1e-300 && v.abs() < 1e300 {
            v.abs().ln()
        } else {
            self.abs().ln().to_f64()
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64, _: Prec) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_big(x: &BigReal, _: Prec) -> Self {
        x.to_f64()
    }
    fn prec(&self) -> Prec {
        Prec::DOUBLE
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn powi(&self, n: u32) -> Self {
        f64::powi(*self, n as i32)
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
}

type F = FBig<HalfEven, 2>;

/// Binary floating point number with a fixed mantissa width.
#[derive(Clone, PartialEq)]
pub struct BigReal(F);

impl BigReal {
    pub fn inner(&self) -> &FBig<HalfEven, 2> {
        &self.0
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.0.to_f64().value())
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.to_f64().value())
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! big_binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $op:tt) => {
        impl $tr for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: BigReal) -> BigReal {
                BigReal(&self.0 $op &rhs.0)
            }
        }
        impl $atr for BigReal {
            fn $am(&mut self, rhs: BigReal) {
                self.0 = &self.0 $op &rhs.0;
            }
        }
    };
}
big_binop!(Add, add, AddAssign, add_assign, +);
big_binop!(Sub, sub, SubAssign, sub_assign, -);
big_binop!(Mul, mul, MulAssign, mul_assign, *);

impl Div for BigReal {
    type Output = BigReal;
    fn div(self, rhs: BigReal) -> BigReal {
        BigReal(&self.0 / &rhs.0)
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Real for BigReal {
    fn from_f64(x: f64, p: Prec) -> Self {
        let v = F::try_from(x).expect("finite value");
        BigReal(v.with_precision(p.0.max(64) as usize).value())
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn from_big(x: &BigReal, p: Prec) -> Self {
        BigReal(x.0.clone().with_precision(p.0.max(64) as usize).value())
    }
    fn prec(&self) -> Prec {
        Prec(self.0.precision() as u32)
    }
    fn abs(&self) -> Self {
        if self.0 < F::ZERO {
            BigReal(-self.0.clone())
        } else {
            self.clone()
        }
    }
    fn exp(&self) -> Self {
        BigReal(self.0.exp())
    }
    fn ln(&self) -> Self {
        BigReal(self.0.ln())
    }
    fn sqrt(&self) -> Self {
        // Newton iteration seeded from f64; the exponent is handled by ln/exp
        // when the value lies outside the f64 range.
        if self.is_zero() {
            return self.clone();
        }
        let p = self.prec();
        let seed = self.to_f64();
        let mut x = if seed.is_finite() && seed > 1e-300 && seed < 1e300 {
            BigReal::from_f64(seed.sqrt(), p)
        } else {
            (self.ln() * BigReal::from_f64(0.5, p)).exp()
        };
        let half = BigReal::from_f64(0.5, p);
        let iters = ((p.0 as f64) / 50.0).log2().ceil().max(0.0) as usize + 2;
        for _ in 0..iters {
            x = half.clone() * (x.clone() + self.clone() / x);
        }
        x
    }
    fn is_zero(&self) -> bool {
        self.0 == F::ZERO
    }
}

/// Exact factorial in the requested precision.
pub fn factorial<T: Real>(n: u32, p: Prec) -> T {
    let mut acc = T::one(p);
    for k in 2..=n {
        acc *= T::from_f64(k as f64, p);
    }
    acc
}

/// ln(n!) via the log-gamma function, accurate to ~1e-14 relative.
pub fn ln_factorial(n: u32) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n < 170 {
        let mut acc = 0.0f64;
        for k in 2..=n {
            acc += (k as f64).ln();
        }
        return acc;
    }
    ln_gamma(n as f64 + 1.0)
}

/// Lanczos approximation of ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Binomial coefficients C(n, k) for k ≤ n as a row table.
pub fn binomial_row<T: Real>(n: usize, p: Prec) -> Vec<T> {
    let mut row = vec![T::one(p)];
    for k in 1..=n {
        let prev = row[k - 1].clone();
        row.push(prev * T::from_f64((n + 1 - k) as f64, p) / T::from_f64(k as f64, p));
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn big_matches_f64_on_elementary_functions() {
        let p = Prec(256);
        let x = BigReal::from_f64(0.3, p);
        assert!((x.exp().to_f64() - 0.3f64.exp()).abs() < 1e-15);
        assert!((x.ln().to_f64() - 0.3f64.ln()).abs() < 1e-15);
        assert!((x.sqrt().to_f64() - 0.3f64.sqrt()).abs() < 1e-16);
        let two = BigReal::from_f64(2.0, p);
        let r = two.sqrt();
        let back = r.clone() * r - two;
        assert!(back.abs().to_f64() < 1e-70);
    }

    #[test]
    fn r0_constant_in_both_precisions() {
        let p = Prec(256);
        let one = BigReal::one(p);
        let e = one.exp();
        let r0 = (one / (BigReal::from_f64(2.0, p) * e)).exp();
        assert!((r0.to_f64() - 1.2019433684703145).abs() < 1e-15);
    }

    #[test]
    fn factorials_agree() {
        let big: BigReal = factorial(30, Prec(256));
        assert!((big.ln().to_f64() - ln_factorial(30)).abs() < 1e-12);
        assert!((ln_gamma(171.0) - ln_factorial(170)).abs() < 1e-9);
    }

    #[test]
    fn powi_and_binomials() {
        let b: Vec<f64> = binomial_row(6, Prec::DOUBLE);
        assert_eq!(b, vec![1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0]);
        assert_eq!(Real::powi(&3.0f64, 4), 81.0);
        let big = BigReal::from_f64(3.0, Prec(128)).powi(40);
        assert!((big.ln().to_f64() - 40.0 * 3f64.ln()).abs() < 1e-13);
    }
}
