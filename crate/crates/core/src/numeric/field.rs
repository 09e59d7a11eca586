//! Exact scalars of Q(i, √2).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use num_traits::{One, Zero};

use super::ival::{CIval, Ival, SQRT2};
use super::qsqrt2::QSqrt2;
use super::rational::{fmt_rational_full, int, parse_rational, to_f64, Rational};
use super::NumericError;

/// `(a + b·i) + (c + d·i)·√2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct FieldScalar {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

/// Gaussian rational p + q·i, used internally.
#[derive(Clone)]
struct G(Rational, Rational);

impl G {
    fn mul(&self, o: &G) -> G {
        G(&self.0 * &o.0 - &self.1 * &o.1, &self.0 * &o.1 + &self.1 * &o.0)
    }
    fn add(&self, o: &G) -> G {
        G(&self.0 + &o.0, &self.1 + &o.1)
    }
    fn sub(&self, o: &G) -> G {
        G(&self.0 - &o.0, &self.1 - &o.1)
    }
    fn scale(&self, q: &Rational) -> G {
        G(&self.0 * q, &self.1 * q)
    }
    fn inv(&self) -> Option<G> {
        let n = &self.0 * &self.0 + &self.1 * &self.1;
        if n.is_zero() {
            return None;
        }
        Some(G(&self.0 / &n, -(&self.1 / &n)))
    }
}

impl FieldScalar {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Self {
        FieldScalar { a, b, c, d }
    }

    pub fn zero() -> Self {
        FieldScalar::default()
    }

    pub fn one() -> Self {
        FieldScalar::from_rational(Rational::one())
    }

    pub fn i() -> Self {
        FieldScalar::gaussian(Rational::zero(), Rational::one())
    }

    pub fn sqrt2() -> Self {
        FieldScalar { c: Rational::one(), ..Default::default() }
    }

    /// 1/√2
    pub fn inv_sqrt2() -> Self {
        FieldScalar { c: Rational::new(1.into(), 2.into()), ..Default::default() }
    }

    pub fn from_rational(a: Rational) -> Self {
        FieldScalar { a, ..Default::default() }
    }

    pub fn from_int(n: i64) -> Self {
        FieldScalar::from_rational(int(n))
    }

    pub fn gaussian(re: Rational, im: Rational) -> Self {
        FieldScalar { a: re, b: im, ..Default::default() }
    }

    pub fn from_qsqrt2(x: &QSqrt2) -> Self {
        FieldScalar { a: x.a.clone(), c: x.b.clone(), ..Default::default() }
    }

    fn parts(&self) -> (G, G) {
        (G(self.a.clone(), self.b.clone()), G(self.c.clone(), self.d.clone()))
    }

    fn from_parts(x: G, y: G) -> Self {
        FieldScalar { a: x.0, b: x.1, c: y.0, d: y.1 }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_zero()
    }

    /// True when the √2-part vanishes (the scalar lies in Q[i]).
    pub fn is_gaussian(&self) -> bool {
        self.c.is_zero() && self.d.is_zero()
    }

    pub fn conj(&self) -> Self {
        FieldScalar { a: self.a.clone(), b: -self.b.clone(), c: self.c.clone(), d: -self.d.clone() }
    }

    /// Real part a + c√2.
    pub fn re(&self) -> QSqrt2 {
        QSqrt2::new(self.a.clone(), self.c.clone())
    }

    /// Imaginary part b + d√2.
    pub fn im(&self) -> QSqrt2 {
        QSqrt2::new(self.b.clone(), self.d.clone())
    }

    /// |x|², an element of the real subfield.
    pub fn norm_sqr(&self) -> QSqrt2 {
        let re = self.re();
        let im = self.im();
        &(&re * &re) + &(&im * &im)
    }

    pub fn inv(&self) -> Result<Self, NumericError> {
        // (x + y√2)^{-1} = (x − y√2) / (x² − 2y²), with x² − 2y² ∈ Q[i] nonzero
        let (x, y) = self.parts();
        let n = x.mul(&x).sub(&y.mul(&y).scale(&int(2)));
        let ni = n.inv().ok_or(NumericError::DivisionByZero)?;
        Ok(FieldScalar::from_parts(x.mul(&ni), y.mul(&ni).scale(&int(-1))))
    }

    pub fn checked_div(&self, o: &FieldScalar) -> Result<Self, NumericError> {
        Ok(self * &o.inv()?)
    }

    pub fn scale(&self, q: &Rational) -> Self {
        FieldScalar { a: &self.a * q, b: &self.b * q, c: &self.c * q, d: &self.d * q }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re().to_f64(), self.im().to_f64())
    }

    /// Rigorous f64 rectangle containing the value.
    pub fn to_cival(&self) -> CIval {
        let re = Ival::from_rational(&self.a) + Ival::from_rational(&self.c) * SQRT2;
        let im = Ival::from_rational(&self.b) + Ival::from_rational(&self.d) * SQRT2;
        CIval::new(re, im)
    }

    /// Encoding `a/b,c/d,e/f,g/h`.
    pub fn encode(&self) -> String {
        format!(
            "{},{},{},{}",
            fmt_rational_full(&self.a),
            fmt_rational_full(&self.b),
            fmt_rational_full(&self.c),
            fmt_rational_full(&self.d)
        )
    }

    pub fn decode(s: &str) -> Result<Self, NumericError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(NumericError::Parse(format!("expected four rationals in '{s}'")));
        }
        let p = |t: &str| parse_rational(t).map_err(NumericError::Parse);
        Ok(FieldScalar { a: p(parts[0])?, b: p(parts[1])?, c: p(parts[2])?, d: p(parts[3])? })
    }

    /// Approximate decimal rendering.
    pub fn approx_string(&self) -> String {
        let z = self.to_c64();
        format!("{:.6}{:+.6}i", z.re, z.im)
    }

    pub fn a_f64(&self) -> f64 {
        to_f64(&self.a)
    }
}

impl<'a> Add<&'a FieldScalar> for &'a FieldScalar {
    type Output = FieldScalar;
    fn add(self, o: &FieldScalar) -> FieldScalar {
        FieldScalar { a: &self.a + &o.a, b: &self.b + &o.b, c: &self.c + &o.c, d: &self.d + &o.d }
    }
}

impl<'a> Sub<&'a FieldScalar> for &'a FieldScalar {
    type Output = FieldScalar;
    fn sub(self, o: &FieldScalar) -> FieldScalar {
        FieldScalar { a: &self.a - &o.a, b: &self.b - &o.b, c: &self.c - &o.c, d: &self.d - &o.d }
    }
}

impl<'a> Mul<&'a FieldScalar> for &'a FieldScalar {
    type Output = FieldScalar;
    fn mul(self, o: &FieldScalar) -> FieldScalar {
        // (x + y√2)(u + v√2) = (xu + 2yv) + (xv + yu)√2
        if o.is_gaussian() && self.is_gaussian() {
            let p = G(self.a.clone(), self.b.clone()).mul(&G(o.a.clone(), o.b.clone()));
            return FieldScalar::gaussian(p.0, p.1);
        }
        let (x, y) = self.parts();
        let (u, v) = o.parts();
        let re = x.mul(&u).add(&y.mul(&v).scale(&int(2)));
        let ir = x.mul(&v).add(&y.mul(&u));
        FieldScalar::from_parts(re, ir)
    }
}

impl Add for FieldScalar {
    type Output = FieldScalar;
    fn add(self, o: FieldScalar) -> FieldScalar {
        &self + &o
    }
}

impl Sub for FieldScalar {
    type Output = FieldScalar;
    fn sub(self, o: FieldScalar) -> FieldScalar {
        &self - &o
    }
}

impl Mul for FieldScalar {
    type Output = FieldScalar;
    fn mul(self, o: FieldScalar) -> FieldScalar {
        &self * &o
    }
}

impl Neg for FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        FieldScalar { a: -self.a, b: -self.b, c: -self.c, d: -self.d }
    }
}

impl<'a> Neg for &'a FieldScalar {
    type Output = FieldScalar;
    fn neg(self) -> FieldScalar {
        -self.clone()
    }
}

impl fmt::Display for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}
