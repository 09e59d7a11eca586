//! The real quadratic field Q(√2), with exact sign and ordering.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::interval::RatInterval;
use super::rational::{fmt_rational, int, sqrt_bracket, Rational};

/// `a + b·√2` with rational `a`, `b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct QSqrt2 {
    pub a: Rational,
    pub b: Rational,
}

impl QSqrt2 {
    pub fn new(a: Rational, b: Rational) -> Self {
        QSqrt2 { a, b }
    }

    pub fn from_rational(a: Rational) -> Self {
        QSqrt2 { a, b: Rational::zero() }
    }

    pub fn zero() -> Self {
        QSqrt2::default()
    }

    pub fn one() -> Self {
        QSqrt2::from_rational(Rational::one())
    }

    pub fn sqrt2() -> Self {
        QSqrt2 { a: Rational::zero(), b: Rational::one() }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Exact sign, decided by comparing a² with 2b² when the parts disagree.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return sb;
        }
        let a2 = &self.a * &self.a;
        let b2 = &self.b * &self.b * int(2);
        if a2 > b2 {
            sa
        } else {
            sb
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Galois conjugate a − b√2.
    pub fn conjugate(&self) -> Self {
        QSqrt2 { a: self.a.clone(), b: -self.b.clone() }
    }

    /// Rational norm a² − 2b².
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - &self.b * &self.b * int(2)
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = self.norm();
        let c = self.conjugate();
        Some(QSqrt2 { a: c.a / &n, b: c.b / n })
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self * &i)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        QSqrt2 { a: &self.a * q, b: &self.b * q }
    }

    pub fn cmp_rational(&self, q: &Rational) -> Ordering {
        (self - &QSqrt2::from_rational(q.clone())).signum().cmp(&0)
    }

    /// Enclosure of the real value with width at most `width`.
    pub fn enclose(&self, width: &Rational) -> RatInterval {
        if self.b.is_zero() {
            return RatInterval::point(self.a.clone());
        }
        let w = width / (self.b.abs() * int(2));
        let (lo, hi) = sqrt_bracket(&int(2), &w);
        let s = RatInterval::new(lo, hi);
        RatInterval::point(self.a.clone()).add(&s.scale(&self.b))
    }

    /// Enclosure of the non-negative square root of this (non-negative) number.
    pub fn sqrt_enclose(&self, width: &Rational) -> RatInterval {
        let inner = self.enclose(&(width * width / int(16)).min(width / int(4)));
        inner.max_with_zero().sqrt(&(width / int(2)))
    }

    pub fn to_f64(&self) -> f64 {
        super::rational::to_f64(&self.a) + super::rational::to_f64(&self.b) * std::f64::consts::SQRT_2
    }
}

fn sign_of(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl<'a> Add<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 { a: &self.a + &o.a, b: &self.b + &o.b }
    }
}

impl<'a> Sub<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 { a: &self.a - &o.a, b: &self.b - &o.b }
    }
}

impl<'a> Mul<&'a QSqrt2> for &'a QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: &QSqrt2) -> QSqrt2 {
        QSqrt2 {
            a: &self.a * &o.a + &self.b * &o.b * int(2),
            b: &self.a * &o.b + &self.b * &o.a,
        }
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, o: QSqrt2) -> QSqrt2 {
        &self + &o
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, o: QSqrt2) -> QSqrt2 {
        &self - &o
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, o: QSqrt2) -> QSqrt2 {
        &self * &o
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> QSqrt2 {
        QSqrt2 { a: -self.a, b: -self.b }
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", fmt_rational(&self.a))
        } else if self.a.is_zero() {
            write!(f, "{}*sqrt(2)", fmt_rational(&self.b))
        } else if self.b.is_negative() {
            write!(f, "{} - {}*sqrt(2)", fmt_rational(&self.a), fmt_rational(&-self.b.clone()))
        } else {
            write!(f, "{} + {}*sqrt(2)", fmt_rational(&self.a), fmt_rational(&self.b))
        }
    }
}
