//! Fast f64 intervals with outward rounding.
//!
//! Every primitive operation (+, −, ×, ÷, √) on f64 is correctly rounded, so
//! stepping each computed endpoint one ulp outward yields a sound enclosure.

use std::ops::{Add, Mul, Neg, Sub};

use super::interval::RatInterval;
use super::rational::{f64_down, f64_up, Rational};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ival {
    pub lo: f64,
    pub hi: f64,
}

#[inline]
fn dn(x: f64) -> f64 {
    if x == 0.0 {
        -f64::from_bits(1)
    } else {
        x.next_down()
    }
}

#[inline]
fn up(x: f64) -> f64 {
    if x == 0.0 {
        f64::from_bits(1)
    } else {
        x.next_up()
    }
}

pub const SQRT2: Ival = Ival { lo: 1.414_213_562_373_095, hi: 1.414_213_562_373_095_2 };

impl Ival {
    #[inline]
    pub fn new(lo: f64, hi: f64) -> Ival {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "bad interval {lo} {hi}");
        Ival { lo, hi }
    }

    #[inline]
    pub fn point(x: f64) -> Ival {
        Ival { lo: x, hi: x }
    }

    pub const ZERO: Ival = Ival { lo: 0.0, hi: 0.0 };
    pub const ONE: Ival = Ival { lo: 1.0, hi: 1.0 };

    pub fn from_rational(q: &Rational) -> Ival {
        Ival { lo: f64_down(q), hi: f64_up(q) }
    }

    pub fn from_rat_interval(r: &RatInterval) -> Ival {
        Ival { lo: f64_down(r.lo()), hi: f64_up(r.hi()) }
    }

    pub fn to_rat_interval(&self) -> RatInterval {
        RatInterval::from_f64_bounds(self.lo, self.hi)
    }

    /// Symmetric interval `[-r, r]`.
    #[inline]
    pub fn sym(r: f64) -> Ival {
        Ival { lo: -r, hi: r }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    /// Largest absolute value, rounded up.
    #[inline]
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    #[inline]
    pub fn hull(&self, o: &Ival) -> Ival {
        Ival { lo: self.lo.min(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Intersection; when disjoint (which only happens through a caller bug)
    /// the receiver is returned unchanged.
    #[inline]
    pub fn meet(&self, o: &Ival) -> Ival {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        if lo <= hi {
            Ival { lo, hi }
        } else {
            *self
        }
    }

    #[inline]
    pub fn sqr(&self) -> Ival {
        let a = self.lo * self.lo;
        let b = self.hi * self.hi;
        if self.lo >= 0.0 {
            Ival { lo: dn(a).max(0.0), hi: up(b) }
        } else if self.hi <= 0.0 {
            Ival { lo: dn(b).max(0.0), hi: up(a) }
        } else {
            Ival { lo: 0.0, hi: up(a.max(b)) }
        }
    }

    #[inline]
    pub fn sqrt(&self) -> Ival {
        let lo = if self.lo <= 0.0 { 0.0 } else { dn(self.lo.sqrt()).max(0.0) };
        let hi = if self.hi <= 0.0 { 0.0 } else { up(self.hi.sqrt()) };
        Ival { lo, hi }
    }

    #[inline]
    pub fn abs(&self) -> Ival {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            -*self
        } else {
            Ival { lo: 0.0, hi: (-self.lo).max(self.hi) }
        }
    }

    /// max(x, 0)
    #[inline]
    pub fn pos(&self) -> Ival {
        Ival { lo: self.lo.max(0.0), hi: self.hi.max(0.0) }
    }

    #[inline]
    pub fn max(&self, o: &Ival) -> Ival {
        Ival { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    #[inline]
    pub fn min(&self, o: &Ival) -> Ival {
        Ival { lo: self.lo.min(o.lo), hi: self.hi.min(o.hi) }
    }

    #[inline]
    pub fn scale(&self, c: f64) -> Ival {
        *self * Ival::point(c)
    }

    #[inline]
    pub fn half(&self) -> Ival {
        // exact for normal numbers
        Ival { lo: self.lo * 0.5, hi: self.hi * 0.5 }
    }

    /// Reciprocal; the divisor must not contain zero.
    pub fn recip(&self) -> Ival {
        assert!(self.lo > 0.0 || self.hi < 0.0, "reciprocal of interval containing zero");
        Ival { lo: dn(1.0 / self.hi), hi: up(1.0 / self.lo) }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl Add for Ival {
    type Output = Ival;
    #[inline]
    fn add(self, o: Ival) -> Ival {
        Ival { lo: dn(self.lo + o.lo), hi: up(self.hi + o.hi) }
    }
}

impl Sub for Ival {
    type Output = Ival;
    #[inline]
    fn sub(self, o: Ival) -> Ival {
        Ival { lo: dn(self.lo - o.hi), hi: up(self.hi - o.lo) }
    }
}

impl Neg for Ival {
    type Output = Ival;
    #[inline]
    fn neg(self) -> Ival {
        Ival { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Ival {
    type Output = Ival;
    #[inline]
    fn mul(self, o: Ival) -> Ival {
        if self.lo == self.hi && o.lo == o.hi {
            let p = self.lo * o.lo;
            if p == 0.0 && (self.lo == 0.0 || o.lo == 0.0) {
                return Ival::ZERO;
            }
            return Ival { lo: dn(p), hi: up(p) };
        }
        let a = self.lo * o.lo;
        let b = self.lo * o.hi;
        let c = self.hi * o.lo;
        let d = self.hi * o.hi;
        let lo = a.min(b).min(c).min(d);
        let hi = a.max(b).max(c).max(d);
        Ival { lo: dn(lo), hi: up(hi) }
    }
}

/// Complex interval as a rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CIval {
    pub re: Ival,
    pub im: Ival,
}

impl CIval {
    pub const ZERO: CIval = CIval { re: Ival::ZERO, im: Ival::ZERO };
    pub const ONE: CIval = CIval { re: Ival::ONE, im: Ival::ZERO };
    pub const I: CIval = CIval { re: Ival::ZERO, im: Ival::ONE };

    #[inline]
    pub fn new(re: Ival, im: Ival) -> CIval {
        CIval { re, im }
    }

    #[inline]
    pub fn point(re: f64, im: f64) -> CIval {
        CIval { re: Ival::point(re), im: Ival::point(im) }
    }

    #[inline]
    pub fn conj(&self) -> CIval {
        CIval { re: self.re, im: -self.im }
    }

    /// Multiplication by i.
    #[inline]
    pub fn mul_i(&self) -> CIval {
        CIval { re: -self.im, im: self.re }
    }

    #[inline]
    pub fn norm_sqr(&self) -> Ival {
        self.re.sqr() + self.im.sqr()
    }

    #[inline]
    pub fn scale(&self, c: Ival) -> CIval {
        CIval { re: self.re * c, im: self.im * c }
    }

    /// `self · conj(o)`
    #[inline]
    pub fn mul_conj(&self, o: &CIval) -> CIval {
        CIval {
            re: self.re * o.re + self.im * o.im,
            im: self.im * o.re - self.re * o.im,
        }
    }

    pub fn mid(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.mid(), self.im.mid())
    }
}

impl Add for CIval {
    type Output = CIval;
    #[inline]
    fn add(self, o: CIval) -> CIval {
        CIval { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for CIval {
    type Output = CIval;
    #[inline]
    fn sub(self, o: CIval) -> CIval {
        CIval { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for CIval {
    type Output = CIval;
    #[inline]
    fn neg(self) -> CIval {
        CIval { re: -self.re, im: -self.im }
    }
}

impl Mul for CIval {
    type Output = CIval;
    #[inline]
    fn mul(self, o: CIval) -> CIval {
        CIval {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}
