//! Double-double real arithmetic (about 31 significant digits) and the
//! [`Real`] trait that lets theta series and R-matrix entries be evaluated in
//! either `f64` or [`DD`].

use num_complex::Complex;
use num_traits::{Num, One, Zero};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
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

impl DD {
    pub const fn new(hi: f64, lo: f64) -> Self {
        DD { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub const PI: DD = DD::new(std::f64::consts::PI, 1.224_646_799_147_353_2e-16);
    pub const TWO_PI: DD = DD::new(std::f64::consts::TAU, 2.449_293_598_294_706_4e-16);
    pub const LN2: DD = DD::new(std::f64::consts::LN_2, 2.319_046_813_846_299_6e-17);

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            // hi is integral, lo decides.
            let lo = self.lo.round();
            let (h, l) = quick_two_sum(hi, lo);
            DD::new(h, l)
        } else if (hi - self.hi).abs() == 0.5 {
            // exactly half in hi: lo breaks the tie
            let fl = self.hi.floor();
            if self.lo > 0.0 {
                DD::from_f64(fl + 1.0)
            } else if self.lo < 0.0 {
                DD::from_f64(fl)
            } else {
                DD::from_f64(hi)
            }
        } else {
            DD::from_f64(hi)
        }
    }

    fn mul_pow2(self, p: f64) -> Self {
        DD::new(self.hi * p, self.lo * p)
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DD::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DD::from_f64(0.0);
        }
        let k = (self.hi / DD::LN2.hi).round();
        let r = self - DD::LN2 * DD::from_f64(k);
        // exp(r) = exp(r / 16)^16
        let r = r.mul_pow2(1.0 / 16.0);
        let mut term = DD::from_f64(1.0);
        let mut sum = DD::from_f64(1.0);
        for i in 1..40 {
            term = term * r / DD::from_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-34 {
                break;
            }
        }
        for _ in 0..4 {
            sum = sum.sqr();
        }
        let scale = 2f64.powi(k as i32);
        if scale.is_finite() && scale != 0.0 {
            sum.mul_pow2(scale)
        } else {
            // split the power to avoid intermediate overflow
            let half = 2f64.powi((k / 2.0) as i32);
            sum.mul_pow2(half).mul_pow2(2f64.powi(k as i32 - (k / 2.0) as i32))
        }
    }

    /// `(cos x, sin x)` for `|x| <= pi/4`.
    fn cos_sin_small(x: DD) -> (DD, DD) {
        let x2 = x * x;
        let mut s = x;
        let mut c = DD::from_f64(1.0);
        let mut term = x;
        let mut i = 1.0;
        loop {
            term = -(term * x2) / DD::from_f64((i + 1.0) * (i + 2.0));
            s = s + term;
            i += 2.0;
            if term.hi.abs() < 1e-34 || i > 60.0 {
                break;
            }
        }
        let mut term = DD::from_f64(1.0);
        let mut i = 0.0;
        loop {
            term = -(term * x2) / DD::from_f64((i + 1.0) * (i + 2.0));
            c = c + term;
            i += 2.0;
            if term.hi.abs() < 1e-34 || i > 60.0 {
                break;
            }
        }
        (c, s)
    }

    /// `(cos 2 pi t, sin 2 pi t)`; `t` is reduced modulo 1 exactly first.
    pub fn cis_turns(t: DD) -> (DD, DD) {
        let f = t - t.round();
        // quarter turns
        let q = (f.mul_pow2(4.0)).round();
        let r = f - q.mul_pow2(0.25);
        let (c, s) = DD::cos_sin_small(DD::TWO_PI * r);
        match (q.hi as i64).rem_euclid(4) {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        }
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD::new(-self.hi, -self.lo)
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, o: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (h, l) = quick_two_sum(s1, s2);
        DD::new(h, l)
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, o: DD) -> DD {
        self + (-o)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, o: DD) -> DD {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (h, l) = quick_two_sum(p1, p2);
        DD::new(h, l)
    }
}

impl Div for DD {
    type Output = DD;
    fn div(self, o: DD) -> DD {
        let q1 = self.hi / o.hi;
        let r = self - o * DD::from_f64(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DD::from_f64(q2);
        let q3 = r.hi / o.hi;
        let (h, l) = quick_two_sum(q1, q2);
        DD::new(h, l) + DD::from_f64(q3)
    }
}

impl Rem for DD {
    type Output = DD;
    fn rem(self, o: DD) -> DD {
        let q = self / o;
        let q = DD::from_f64(q.to_f64().trunc());
        self - q * o
    }
}

impl Zero for DD {
    fn zero() -> Self {
        DD::from_f64(0.0)
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0 && self.lo == 0.0
    }
}

impl One for DD {
    fn one() -> Self {
        DD::from_f64(1.0)
    }
}

impl Num for DD {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, _radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        s.parse::<f64>().map(DD::from_f64)
    }
}

/// Scalar field used by the series and R-matrix code.
pub trait Real: Copy + Num + Neg<Output = Self> + PartialOrd + fmt::Debug + Send + Sync {
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn round(self) -> Self;
    fn abs(self) -> Self;
    /// `(cos 2 pi t, sin 2 pi t)`
    fn cis_turns(self) -> (Self, Self);
    fn two_pi() -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn round(self) -> Self {
        f64::round(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn cis_turns(self) -> (Self, Self) {
        let f = self - self.round();
        let (s, c) = (std::f64::consts::TAU * f).sin_cos();
        (c, s)
    }
    fn two_pi() -> Self {
        std::f64::consts::TAU
    }
}

impl Real for DD {
    fn from_f64(x: f64) -> Self {
        DD::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        DD::to_f64(self)
    }
    fn exp(self) -> Self {
        DD::exp(self)
    }
    fn round(self) -> Self {
        DD::round(self)
    }
    fn abs(self) -> Self {
        DD::abs(self)
    }
    fn cis_turns(self) -> (Self, Self) {
        DD::cis_turns(self)
    }
    fn two_pi() -> Self {
        DD::TWO_PI
    }
}

/// `e(z) = exp(2 pi i z)`.
pub fn e<R: Real>(z: Complex<R>) -> Complex<R> {
    let modulus = (-(R::two_pi() * z.im)).exp();
    let (c, s) = z.re.cis_turns();
    Complex::new(modulus * c, modulus * s)
}

pub fn cmag<R: Real>(z: Complex<R>) -> f64 {
    let re = z.re.to_f64();
    let im = z.im.to_f64();
    re.hypot(im)
}

pub fn to_c64<R: Real>(z: Complex<R>) -> Complex<f64> {
    Complex::new(z.re.to_f64(), z.im.to_f64())
}

pub fn from_c64<R: Real>(z: Complex<f64>) -> Complex<R> {
    Complex::new(R::from_f64(z.re), R::from_f64(z.im))
}

pub fn cr<R: Real>(x: f64) -> Complex<R> {
    Complex::new(R::from_f64(x), R::zero())
}
