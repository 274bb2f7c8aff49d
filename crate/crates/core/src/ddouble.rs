//! Double-double arithmetic (about 106 significant bits).
//!
//! Only the operations needed by the small-grid transform are provided:
//! add, multiply, scale, `exp` and `sin_cos`.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

const PI_2: Dd = Dd::new(std::f64::consts::FRAC_PI_2, 6.123233995736766e-17);
const TWO_PI: Dd = Dd::new(std::f64::consts::TAU, 2.4492935982947064e-16);
const LN2: Dd = Dd::new(std::f64::consts::LN_2, 2.3190468138462996e-17);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn pow2(k: i32) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl Dd {
    pub const ZERO: Dd = Dd::new(0.0, 0.0);
    pub const ONE: Dd = Dd::new(1.0, 0.0);

    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Dd::prod(q1, b);
        let q2 = r.hi / b;
        let r = r - Dd::prod(q2, b);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }

    /// Multiply by 2^k, exact away from the subnormal range.
    pub fn ldexp(self, k: i32) -> Self {
        if k > 1023 {
            return self.ldexp(1023).ldexp(k - 1023);
        }
        if k < -1022 {
            return self.ldexp(-1022).ldexp(k + 1022);
        }
        let s = pow2(k);
        Dd { hi: self.hi * s, lo: self.lo * s }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.78 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).ldexp(-10);
        // e^r - 1 by Horner; |r| < 3.4e-4 so ten terms reach 1e-40.
        let mut p = Dd::ONE;
        for j in (2..=10).rev() {
            p = Dd::ONE + (r * p).div_f64(j as f64);
        }
        let mut s = r * p;
        for _ in 0..10 {
            s = s.mul_f64(2.0) + s * s;
        }
        (Dd::ONE + s).ldexp(k as i32)
    }

    /// Sine and cosine, accurate for moderate arguments (|x| up to ~1e6).
    pub fn sin_cos(self) -> (Self, Self) {
        let q = (self.hi / PI_2.hi).round();
        let r = self - PI_2.mul_f64(q);
        let r2 = r * r;
        let mut s = Dd::ONE;
        let mut c = Dd::ONE;
        // |r| <= pi/4: 14 terms of each series are below 1e-33.
        for j in (1..=14).rev() {
            let j = j as f64;
            s = Dd::ONE - (r2 * s).div_f64((2.0 * j) * (2.0 * j + 1.0));
            c = Dd::ONE - (r2 * c).div_f64((2.0 * j - 1.0) * (2.0 * j));
        }
        let s = r * s;
        match (q as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    /// `2 pi m / n` as a double-double.
    pub fn turn_fraction(m: usize, n: usize) -> Self {
        TWO_PI.mul_f64(m as f64).div_f64(n as f64)
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ZERO: DdComplex = DdComplex { re: Dd::ZERO, im: Dd::ZERO };

    pub fn new(re: Dd, im: Dd) -> Self {
        DdComplex { re, im }
    }

    /// `e^z`.
    pub fn exp(self) -> Self {
        let m = self.re.exp();
        if self.im.hi == 0.0 && self.im.lo == 0.0 {
            return DdComplex { re: m, im: Dd::ZERO };
        }
        let (s, c) = self.im.sin_cos();
        DdComplex { re: m * c, im: m * s }
    }

    #[inline]
    pub fn mul_add(self, w: DdComplex, acc: DdComplex) -> DdComplex {
        DdComplex { re: acc.re + (self.re * w.re - self.im * w.im), im: acc.im + (self.re * w.im + self.im * w.re) }
    }
}
