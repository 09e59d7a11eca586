//! Closed real intervals with rational endpoints.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::rational::{
    dyadic_ceil, dyadic_floor, f64_down, f64_up, fmt_rational, from_f64, int, max_rat, min_rat,
    sqrt_bracket, to_f64, Rational,
};

/// `[lo, hi]` with `lo ≤ hi`. Arithmetic is exact on the endpoints; the only
/// rounding happens in [`RatInterval::sqrt`] and [`RatInterval::round_outward`],
/// and both move endpoints outward.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatInterval {
    lo: Rational,
    hi: Rational,
}

impl RatInterval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        RatInterval { lo, hi }
    }

    pub fn try_new(lo: Rational, hi: Rational) -> Option<Self> {
        (lo <= hi).then_some(RatInterval { lo, hi })
    }

    pub fn point(x: Rational) -> Self {
        RatInterval { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        RatInterval::point(Rational::zero())
    }

    pub fn from_f64_bounds(lo: f64, hi: f64) -> Self {
        RatInterval::new(from_f64(lo), from_f64(hi))
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn into_bounds(self) -> (Rational, Rational) {
        (self.lo, self.hi)
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        x.is_finite() && self.contains(&from_f64(x))
    }

    pub fn contains_interval(&self, o: &RatInterval) -> bool {
        self.lo <= o.lo && o.hi <= self.hi
    }

    pub fn overlaps(&self, o: &RatInterval) -> bool {
        self.lo <= o.hi && o.lo <= self.hi
    }

    pub fn hull(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: min_rat(&self.lo, &o.lo), hi: max_rat(&self.hi, &o.hi) }
    }

    pub fn intersect(&self, o: &RatInterval) -> Option<RatInterval> {
        RatInterval::try_new(max_rat(&self.lo, &o.lo), min_rat(&self.hi, &o.hi))
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    pub fn sub(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo - &o.hi, hi: &self.hi - &o.lo }
    }

    pub fn neg(&self) -> RatInterval {
        RatInterval { lo: -self.hi.clone(), hi: -self.lo.clone() }
    }

    pub fn scale(&self, q: &Rational) -> RatInterval {
        if q.is_negative() {
            RatInterval { lo: &self.hi * q, hi: &self.lo * q }
        } else {
            RatInterval { lo: &self.lo * q, hi: &self.hi * q }
        }
    }

    pub fn mul(&self, o: &RatInterval) -> RatInterval {
        let p = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let lo = p.iter().min().unwrap().clone();
        let hi = p.iter().max().unwrap().clone();
        RatInterval { lo, hi }
    }

    pub fn sqr(&self) -> RatInterval {
        let a = &self.lo * &self.lo;
        let b = &self.hi * &self.hi;
        if self.lo.is_negative() && self.hi.is_positive() {
            RatInterval { lo: Rational::zero(), hi: max_rat(&a, &b) }
        } else {
            RatInterval { lo: min_rat(&a, &b), hi: max_rat(&a, &b) }
        }
    }

    /// Division; `None` when the divisor contains zero.
    pub fn div(&self, o: &RatInterval) -> Option<RatInterval> {
        if o.contains(&Rational::zero()) {
            return None;
        }
        let inv = RatInterval { lo: Rational::one() / &o.hi, hi: Rational::one() / &o.lo };
        Some(self.mul(&inv))
    }

    pub fn abs(&self) -> RatInterval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            RatInterval { lo: Rational::zero(), hi: max_rat(&-self.lo.clone(), &self.hi) }
        }
    }

    pub fn max(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: max_rat(&self.lo, &o.lo), hi: max_rat(&self.hi, &o.hi) }
    }

    pub fn min(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: min_rat(&self.lo, &o.lo), hi: min_rat(&self.hi, &o.hi) }
    }

    pub fn max_with_zero(&self) -> RatInterval {
        self.max(&RatInterval::zero())
    }

    /// Enclosure of `[√lo, √hi]` widened by at most `width` in total.
    /// Negative parts are clamped to zero.
    pub fn sqrt(&self, width: &Rational) -> RatInterval {
        let w = width / int(2);
        let lo = if self.lo.is_positive() { sqrt_bracket(&self.lo, &w).0 } else { Rational::zero() };
        let hi = if self.hi.is_positive() { sqrt_bracket(&self.hi, &w).1 } else { Rational::zero() };
        RatInterval { lo, hi }
    }

    /// Moves endpoints outward onto the dyadic grid of spacing 2^-bits.
    pub fn round_outward(&self, bits: u32) -> RatInterval {
        RatInterval { lo: dyadic_floor(&self.lo, bits), hi: dyadic_ceil(&self.hi, bits) }
    }

    pub fn to_f64_bounds(&self) -> (f64, f64) {
        (f64_down(&self.lo), f64_up(&self.hi))
    }

    pub fn mid_f64(&self) -> f64 {
        to_f64(&self.mid())
    }
}

impl fmt::Display for RatInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", fmt_rational(&self.lo), fmt_rational(&self.hi))
    }
}

/// JSON form: exact endpoints as strings plus a decimal annotation.
#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct IntervalReport {
    pub lo: String,
    pub hi: String,
    pub decimal: String,
}

impl From<&RatInterval> for IntervalReport {
    fn from(iv: &RatInterval) -> Self {
        IntervalReport {
            lo: fmt_rational(iv.lo()),
            hi: fmt_rational(iv.hi()),
            decimal: format!("[{:.9}, {:.9}]", to_f64(iv.lo()), to_f64(iv.hi())),
        }
    }
}
