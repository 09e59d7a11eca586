//! Models realizing a two-equivalence-relation structure: marked spaces with
//! four constants, and marked spaces with five unitaries.

use num_traits::{One, Zero};

use super::{EqStructure, Model, ModelError};
use crate::numeric::rational::{int, rat, Rational};
use crate::numeric::spectral::unit_point;
use crate::numeric::{CMatrix, FieldScalar, RatInterval};

/// Coefficient vector with value (class index + 1) on each element.
fn class_vector(s: &EqStructure, rel: usize) -> Vec<i64> {
    (1..=s.size).map(|x| s.class_of(rel, x) as i64 + 1).collect()
}

/// Least integer ≥ √(Σ c²).
fn norm_ceiling(c: &[i64]) -> i64 {
    let m: i64 = c.iter().map(|x| x * x).sum();
    let mut k = (m as f64).sqrt().floor() as i64;
    while k * k < m {
        k += 1;
    }
    while k > 1 && (k - 1) * (k - 1) >= m {
        k -= 1;
    }
    k
}

#[derive(Clone, Debug)]
pub struct ConstantsModel {
    pub model: Model,
    /// Half the least gap between coefficients of non-equivalent labels
    /// (a lower bound when the coefficients are not normalized exactly).
    pub r: Rational,
    /// ⟨b1, b2⟩, a rational in (0, r/2].
    pub gap: Rational,
}

/// Marked model of dimension `s.size` with constants a1, a2, b1, b2.
///
/// a_i has coefficient (class + 1)/k on each label, with k the integer ceiling
/// of the coefficient norm, so a_i lies in B1 and coefficients of
/// non-equivalent labels differ by at least 1/k. b1 = e1 and
/// b2 = ε e1 + √(1 − ε²) e2 with ε = 2m/(m² + 1), so √(1 − ε²) is rational;
/// for size 1 there is no e2 and b2 = ε e1.
pub fn build_marked_constants(s: &EqStructure) -> Result<ConstantsModel, ModelError> {
    s.validate()?;
    let n = s.size;
    let c1 = class_vector(s, 1);
    let c2 = class_vector(s, 2);
    let k = norm_ceiling(&c1).max(norm_ceiling(&c2));
    let vec_of = |c: &[i64]| -> Vec<FieldScalar> { c.iter().map(|&x| FieldScalar::from_rational(rat(x, k))).collect() };
    let r = rat(1, 2 * k);
    let mut m: i64 = 1;
    let eps = loop {
        let e = rat(2 * m, m * m + 1);
        if e <= &r / int(2) {
            break e;
        }
        m += 1;
    };
    let mut b1 = vec![FieldScalar::zero(); n];
    b1[0] = FieldScalar::one();
    let mut b2 = vec![FieldScalar::zero(); n];
    b2[0] = FieldScalar::from_rational(eps.clone());
    if n >= 2 {
        b2[1] = FieldScalar::from_rational(rat(m * m - 1, m * m + 1));
    }
    let model = Model::new(n)
        .with_marked()
        .with_constant("a1", vec_of(&c1))
        .with_constant("a2", vec_of(&c2))
        .with_constant("b1", b1)
        .with_constant("b2", b2);
    model.validate()?;
    Ok(ConstantsModel { model, r, gap: eps })
}

#[derive(Clone, Debug)]
pub struct DynamicalModel {
    pub model: Model,
    pub r: Rational,
    /// Enclosures of sup_v d(U_k v, v) for k = 3, 4, 5.
    pub d3: RatInterval,
    pub d4: RatInterval,
    pub d5: RatInterval,
}

/// Exact enclosure of |1 − z| for z = unit_point(t): the chord is
/// 2|t|/√(1 + t²), whose square is rational.
fn chord_of(t: &Rational) -> RatInterval {
    let sq = (t * t * int(4)) / (Rational::one() + t * t);
    RatInterval::point(sq).sqrt(&rat(1, 1 << 40))
}

/// Rational t with |1 − unit_point(t)| within 1% of `target`.
fn phase_for(target: &Rational) -> Rational {
    let d = crate::numeric::rational::to_f64(target);
    let tf = d / (4.0 - d * d).sqrt();
    let mut den = 1000i64;
    loop {
        let t = crate::numeric::rational::approx_rational(tf, den);
        let sq = (&t * &t * int(4)) / (Rational::one() + &t * &t);
        let lo = target * target * rat(99 * 99, 100 * 100);
        let hi = target * target * rat(101 * 101, 100 * 100);
        if !t.is_zero() && sq >= lo && sq <= hi {
            return t;
        }
        den *= 10;
    }
}

/// Marked model with U1, U2 (fixing the lines of a1, a2) and global phases
/// U3, U4, U5 of displacement r/64, r/8 and r (each within 1%).
///
/// U_i = 2cc*/(c*c) − I for the integer class vector c: it fixes C·c and
/// negates the orthogonal complement, so the complement moves by distance 2.
/// The fixed ratios need r ≥ 1/64; larger structures are rejected.
pub fn build_dynamical_interpretation(s: &EqStructure) -> Result<DynamicalModel, ModelError> {
    s.validate()?;
    let n = s.size;
    let c1 = class_vector(s, 1);
    let c2 = class_vector(s, 2);
    let k = norm_ceiling(&c1).max(norm_ceiling(&c2));
    let r = rat(1, 2 * k);
    if r < rat(1, 64) {
        return Err(ModelError::Format(format!("structure of size {n} is too large for the fixed-ratio construction")));
    }
    let reflection = |c: &[i64]| -> CMatrix {
        let cc: i64 = c.iter().map(|x| x * x).sum();
        CMatrix::from_fn(n, n, |i, j| {
            let mut v = rat(2 * c[i] * c[j], cc);
            if i == j {
                v -= Rational::one();
            }
            FieldScalar::from_rational(v)
        })
    };
    let phase = |target: &Rational| -> (CMatrix, RatInterval) {
        let t = phase_for(target);
        (CMatrix::identity(n).scale(&unit_point(&t)), chord_of(&t))
    };
    let (u3, d3) = phase(&(&r / int(64)));
    let (u4, d4) = phase(&(&r / int(8)));
    let (u5, d5) = phase(&r);
    let model = Model::new(n)
        .with_marked()
        .with_operator("U1", reflection(&c1))
        .with_operator("U2", reflection(&c2))
        .with_operator("U3", u3)
        .with_operator("U4", u4)
        .with_operator("U5", u5);
    model.validate()?;
    Ok(DynamicalModel { model, r, d3, d4, d5 })
}
