//! Rigorous rational enclosures of π, arctan, sin and cos.

use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};

use super::interval::RatInterval;
use super::rational::{dyadic_ceil, dyadic_floor, int, rat, Rational};

const BITS: u32 = 96;

fn down(q: &Rational) -> Rational {
    dyadic_floor(q, BITS)
}

fn upr(q: &Rational) -> Rational {
    dyadic_ceil(q, BITS)
}

/// arctan on [0, 1] by Euler's series
/// atan x = Σ 2^{2n}(n!)²/(2n+1)! · x^{2n+1}/(1+x²)^{n+1}; all terms are
/// positive and successive ratios stay below y = x²/(1+x²) ≤ 1/2.
fn atan_unit(x: &Rational) -> RatInterval {
    debug_assert!(!x.is_negative() && x <= &Rational::one());
    if x.is_zero() {
        return RatInterval::zero();
    }
    let one = Rational::one();
    let denom = &one + x * x;
    let y = x * x / &denom;
    let mut t_lo = down(&(x / &denom));
    let mut t_hi = upr(&(x / &denom));
    let mut s_lo = Rational::zero();
    let mut s_hi = Rational::zero();
    let tail_factor = &one / (&one - &y);
    let eps = Rational::new(1.into(), num_bigint::BigInt::one() << 80u32);
    let mut n: i64 = 0;
    loop {
        s_lo = down(&(&s_lo + &t_lo));
        s_hi = upr(&(&s_hi + &t_hi));
        let f = &y * rat(2 * n + 2, 2 * n + 3);
        t_lo = down(&(&t_lo * &f));
        t_hi = upr(&(&t_hi * &f));
        n += 1;
        if &t_hi * &tail_factor < eps || n > 400 {
            break;
        }
    }
    RatInterval::new(s_lo, upr(&(&s_hi + &t_hi * &tail_factor)))
}

pub fn pi() -> RatInterval {
    static PI: OnceLock<RatInterval> = OnceLock::new();
    PI.get_or_init(|| atan_unit(&Rational::one()).scale(&int(4))).clone()
}

pub fn atan(x: &Rational) -> RatInterval {
    if x.is_negative() {
        return atan(&-x.clone()).neg();
    }
    if x <= &Rational::one() {
        atan_unit(x)
    } else {
        pi().scale(&rat(1, 2)).sub(&atan_unit(&(Rational::one() / x)))
    }
}

/// Enclosure of arctan over an interval (arctan is increasing).
pub fn atan_interval(iv: &RatInterval) -> RatInterval {
    let a = atan(iv.lo());
    let b = atan(iv.hi());
    RatInterval::new(a.lo().clone(), b.hi().clone())
}

/// sin by the alternating Taylor series after reduction to |x| ≤ π.
pub fn sin(x: &Rational) -> RatInterval {
    let (r, shift) = reduce(x);
    let s = sin_series(&r);
    // x = r + shift·2π is exact up to the enclosure of π; widen by that error
    s.add(&shift)
}

pub fn cos(x: &Rational) -> RatInterval {
    let (r, shift) = reduce(x);
    cos_series(&r).add(&shift)
}

/// Returns r with |r| ≲ π and an error interval accounting for the inexact
/// multiple of 2π removed (sin and cos are 1-Lipschitz).
fn reduce(x: &Rational) -> (Rational, RatInterval) {
    let p = pi();
    let two_pi_mid = p.mid() * int(2);
    let k = (x / &two_pi_mid).round();
    if k.is_zero() {
        return (x.clone(), RatInterval::zero());
    }
    let r = x - &k * &two_pi_mid;
    let err = p.width() * int(2) * k.abs();
    (r, RatInterval::new(-err.clone(), err))
}

fn sin_series(x: &Rational) -> RatInterval {
    // Σ (−1)^k x^{2k+1}/(2k+1)!, stop once terms shrink below 2^-90
    let mut term = x.clone();
    let mut sum = Rational::zero();
    let x2 = x * x;
    let eps = Rational::new(1.into(), num_bigint::BigInt::one() << 90u32);
    let mut k: i64 = 0;
    loop {
        sum = &sum + &term;
        k += 1;
        let next = -(&term * &x2 / int((2 * k) * (2 * k + 1)));
        // alternating with decreasing magnitude once 2k(2k+1) > x²
        if next.abs() < eps && int((2 * k + 2) * (2 * k + 3)) > x2 {
            let e = next.abs() + &eps;
            let iv = RatInterval::new(&sum - &e, &sum + &e);
            return RatInterval::new(down(iv.lo()), upr(iv.hi()));
        }
        term = dyadic_round(&next);
        sum = dyadic_round(&sum);
    }
}

fn cos_series(x: &Rational) -> RatInterval {
    let mut term = Rational::one();
    let mut sum = Rational::zero();
    let x2 = x * x;
    let eps = Rational::new(1.into(), num_bigint::BigInt::one() << 90u32);
    let mut k: i64 = 0;
    loop {
        sum = &sum + &term;
        k += 1;
        let next = -(&term * &x2 / int((2 * k - 1) * (2 * k)));
        if next.abs() < eps && int((2 * k + 1) * (2 * k + 2)) > x2 {
            let e = next.abs() + &eps;
            let iv = RatInterval::new(&sum - &e, &sum + &e);
            return RatInterval::new(down(iv.lo()), upr(iv.hi()));
        }
        term = dyadic_round(&next);
        sum = dyadic_round(&sum);
    }
}

// Rounding inside the series introduces at most 2^-120 per step; with fewer
// than 200 steps this is far below the 2^-90 stopping threshold that is added
// to the result, so the final widening by the next term absorbs it.
fn dyadic_round(q: &Rational) -> Rational {
    dyadic_floor(q, 120)
}

/// Enclosure of 2·|sin(θ/2)| = |1 − e^{iθ}| over an interval of angles.
pub fn chord_interval(theta: &RatInterval) -> RatInterval {
    // 1-Lipschitz in θ: value at the midpoint widened by the radius
    let mid = theta.mid();
    let rad = theta.width() / int(2);
    let s = sin(&(&mid / int(2))).scale(&int(2)).abs();
    let lo = s.lo() - &rad;
    let lo = if lo.is_negative() { Rational::zero() } else { lo };
    RatInterval::new(lo, s.hi() + rad)
}
