//! Helpers on arbitrary-precision rationals: parsing, printing, float enclosures
//! and square-root brackets.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `p`, `-p`, `p/q` or `-p/q` (decimal integers, q nonzero).
pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("empty rational".into());
    }
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (s, None),
    };
    let n = parse_int(num).ok_or_else(|| format!("malformed rational '{s}'"))?;
    let d = match den {
        Some(d) => {
            if d.starts_with('-') || d.starts_with('+') {
                return Err(format!("malformed rational '{s}'"));
            }
            parse_int(d).ok_or_else(|| format!("malformed rational '{s}'"))?
        }
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(format!("zero denominator in '{s}'"));
    }
    Ok(BigRational::new(n, d))
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// `p/q` in lowest terms, or just `p` for integers.
pub fn fmt_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Always `p/q`, as used by the scalar encoding.
pub fn fmt_rational_full(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

pub fn from_f64(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite float")
}

/// Largest f64 not above `q`.
pub fn f64_down(q: &Rational) -> f64 {
    let mut f = q.to_f64().unwrap_or(f64::NAN);
    if !f.is_finite() {
        return if q.is_negative() { f64::NEG_INFINITY } else { f64::MAX };
    }
    while from_f64(f) > *q {
        f = f.next_down();
    }
    f
}

/// Smallest f64 not below `q`.
pub fn f64_up(q: &Rational) -> f64 {
    let mut f = q.to_f64().unwrap_or(f64::NAN);
    if !f.is_finite() {
        return if q.is_negative() { f64::MIN } else { f64::INFINITY };
    }
    while from_f64(f) < *q {
        f = f.next_up();
    }
    f
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// floor(q * 2^bits) / 2^bits
pub fn dyadic_floor(q: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = q * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.floor().to_integer(), scale)
}

/// ceil(q * 2^bits) / 2^bits
pub fn dyadic_ceil(q: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let scaled = q * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.ceil().to_integer(), scale)
}

/// Exact square root when `q` is the square of a rational.
pub fn exact_sqrt(q: &Rational) -> Option<Rational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    if &(&n * &n) == q.numer() && &(&d * &d) == q.denom() {
        Some(BigRational::new(n, d))
    } else {
        None
    }
}

/// Rationals `(lo, hi)` with `lo² ≤ q ≤ hi²`, `0 ≤ lo ≤ hi` and `hi − lo ≤ width`.
pub fn sqrt_bracket(q: &Rational, width: &Rational) -> (Rational, Rational) {
    assert!(!q.is_negative(), "sqrt of negative rational");
    assert!(width.is_positive(), "sqrt width must be positive");
    if let Some(s) = exact_sqrt(q) {
        return (s.clone(), s);
    }
    let guess = to_f64(q).sqrt();
    let (mut lo, mut hi) = if guess.is_finite() && guess > 0.0 {
        (from_f64(guess * (1.0 - 1e-12)), from_f64(guess * (1.0 + 1e-12)))
    } else {
        (Rational::zero(), Rational::one().max(q.clone()))
    };
    if &lo * &lo > *q {
        lo = Rational::zero();
    }
    if &hi * &hi < *q {
        hi = Rational::one().max(q.clone());
    }
    let two = int(2);
    while &hi - &lo > *width {
        let mid = (&lo + &hi) / &two;
        if &mid * &mid <= *q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Smallest integer k ≥ 1 with (k−1)² ≤ m2 < k², i.e. k − 1 ≤ √m2 < k.
pub fn scale_factor(m2: &Rational) -> u64 {
    let mut k: u64 = (to_f64(m2).max(0.0).sqrt().floor() as u64).saturating_add(1).max(1);
    loop {
        let km1 = int(k as i64 - 1);
        let kk = int(k as i64);
        if &km1 * &km1 > *m2 {
            k -= 1;
        } else if &kk * &kk <= *m2 {
            k += 1;
        } else {
            return k;
        }
    }
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub fn max_rat(a: &Rational, b: &Rational) -> Rational {
    if a >= b {
        a.clone()
    } else {
        b.clone()
    }
}

pub fn min_rat(a: &Rational, b: &Rational) -> Rational {
    if a <= b {
        a.clone()
    } else {
        b.clone()
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`
/// (continued fractions).
pub fn approx_rational(x: f64, max_den: i64) -> Rational {
    if !x.is_finite() {
        return Rational::zero();
    }
    let neg = x < 0.0;
    let mut v = x.abs();
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    for _ in 0..64 {
        let a = v.floor();
        if a > 1e18 {
            break;
        }
        let ai = a as i128;
        let p2 = ai * p1 + p0;
        let q2 = ai * q1 + q0;
        if q2 > max_den as i128 {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = v - a;
        if frac < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return Rational::zero();
    }
    let r = BigRational::new(BigInt::from(p1), BigInt::from(q1));
    if neg {
        -r
    } else {
        r
    }
}
