//! Certified operator norms and unitary eigenvalue enclosures.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use super::field::FieldScalar;
use super::interval::RatInterval;
use super::linalg::{count_eigs_above, hermitian_eigen_f64};
use super::matrix::{norm_sqr, CMatrix};
use super::qsqrt2::QSqrt2;
use super::rational::{approx_rational, from_f64, int, rat, Rational};
use super::transcendental::{atan_interval, pi};
use super::NumericError;

/// Certified bounds on ‖A‖: `lower_sq ≤ ‖A‖² ≤ upper_sq` exactly, and an
/// interval for ‖A‖ itself.
#[derive(Clone, Debug)]
pub struct OpNormCertificate {
    pub interval: RatInterval,
    pub lower_sq: QSqrt2,
    pub upper_sq: Rational,
    pub witness: Vec<FieldScalar>,
}

fn rationalize_vector(v: &[Complex64]) -> Vec<FieldScalar> {
    v.iter()
        .map(|z| FieldScalar::gaussian(approx_rational(z.re, 1 << 40), approx_rational(z.im, 1 << 40)))
        .collect()
}

/// Encloses the largest singular value of `a` in an interval of width ≤ `eps`.
pub fn op_norm(a: &CMatrix, eps: &Rational) -> Result<RatInterval, NumericError> {
    op_norm_certificate(a, eps).map(|c| c.interval)
}

pub fn op_norm_certificate(a: &CMatrix, eps: &Rational) -> Result<OpNormCertificate, NumericError> {
    if !eps.is_positive() {
        return Err(NumericError::Domain("tolerance must be positive".into()));
    }
    let n = a.cols();
    if a.is_zero() {
        return Ok(OpNormCertificate {
            interval: RatInterval::zero(),
            lower_sq: QSqrt2::zero(),
            upper_sq: Rational::zero(),
            witness: super::matrix::basis_vector(n, 0),
        });
    }
    let m = a.adjoint().mul(a)?;
    let (vals, vecs) = hermitian_eigen_f64(&m.to_c64());
    let top = *vals.last().expect("nonempty");
    let v = &vecs[vecs.len() - 1];

    // lower bound: exact Rayleigh quotient at a rational witness, and the
    // largest diagonal entry of A*A as a fallback witness e_k
    let mut witness = rationalize_vector(v);
    if witness.iter().all(|x| x.is_zero()) {
        witness = super::matrix::basis_vector(n, 0);
    }
    let mut lower_sq = rayleigh(a, &witness);
    for k in 0..n {
        let d = m.get(k, k).re();
        if d > lower_sq {
            lower_sq = d;
            witness = super::matrix::basis_vector(n, k);
        }
    }

    // upper bound: μ with no eigenvalue of A*A above it, certified by inertia
    let scale = top.abs().max(1e-300);
    let mut gap = (scale * 1e-12).max(1e-300);
    let mut best: Option<Rational> = None;
    for _ in 0..200 {
        let mu = from_f64(top + gap);
        match count_eigs_above(&m, &QSqrt2::from_rational(mu.clone())) {
            Some(0) => {
                best = Some(mu);
                break;
            }
            _ => gap *= 4.0,
        }
    }
    let upper_sq = match best {
        Some(u) => u,
        None => m.frobenius_sqr().enclose(&rat(1, 1 << 20)).hi().clone(),
    };
    let width = eps / int(4);
    let lo = lower_sq.sqrt_enclose(&width).lo().clone();
    let hi = RatInterval::point(upper_sq.clone()).sqrt(&width).hi().clone();
    let interval = RatInterval::new(lo, hi);
    if interval.width() > *eps {
        return Err(NumericError::Budget { best: interval, what: "operator norm".into() });
    }
    Ok(OpNormCertificate { interval, lower_sq, upper_sq, witness })
}

/// ‖Av‖² / ‖v‖², exact.
fn rayleigh(a: &CMatrix, v: &[FieldScalar]) -> QSqrt2 {
    let av = a.mul_vec(v).expect("shape");
    norm_sqr(&av).div(&norm_sqr(v)).unwrap_or_else(QSqrt2::zero)
}

/// One cluster of eigenvalue angles.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCluster {
    pub angle: RatInterval,
    pub multiplicity: usize,
}

/// Rational point on the unit circle ((1−t²) + 2ti)/(1+t²), the image of
/// angle 2·atan(t).
pub fn unit_point(t: &Rational) -> FieldScalar {
    let one = Rational::one();
    let d = &one + t * t;
    FieldScalar::gaussian((&one - t * t) / &d, (t * int(2)) / d)
}

/// Encloses the eigenvalue angles of an exactly unitary matrix.
///
/// The matrix is rotated by a rational unit scalar z chosen so that −1 is far
/// from the spectrum of zU; the Cayley transform T = i(I − zU)(I + zU)⁻¹ is then
/// Hermitian with eigenvalues tan((θ + arg z)/2), and these are isolated by
/// exact inertia counts and bisection. Angles lie in [0, 2π) except that an
/// enclosure of an angle near 0 may extend slightly below 0.
pub fn unitary_eigs(u: &CMatrix, eps: &Rational) -> Result<Vec<EigenCluster>, NumericError> {
    if !u.is_square() {
        return Err(NumericError::NotSquare);
    }
    if !eps.is_positive() {
        return Err(NumericError::Domain("tolerance must be positive".into()));
    }
    if !u.is_unitary() {
        return Err(NumericError::NotUnitary);
    }
    let n = u.rows();
    let candidates = candidate_angles(u);
    let mut sorted = candidates.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // midpoint of the largest circular gap
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut best_gap = -1.0;
    let mut gap_mid = 0.0;
    for k in 0..sorted.len() {
        let a = sorted[k];
        let b = if k + 1 < sorted.len() { sorted[k + 1] } else { sorted[0] + two_pi };
        if b - a > best_gap {
            best_gap = b - a;
            gap_mid = 0.5 * (a + b);
        }
    }
    let pi_f = std::f64::consts::PI;
    let mut phi = pi_f - gap_mid;
    phi = (phi + pi_f).rem_euclid(two_pi) - pi_f; // (−π, π]

    let mut attempt = 0;
    loop {
        let nudge = attempt as f64 * 1e-3;
        let (z, phi_iv) = rotation(phi + nudge);
        let w = u.scale(&z);
        let id = CMatrix::identity(n);
        let Some(inv) = id.add(&w)?.inverse() else {
            attempt += 1;
            continue;
        };
        let t = id.sub(&w)?.mul(&inv)?.scale(&FieldScalar::i());
        debug_assert!(t.is_hermitian());
        let taus = isolate(&t, eps)?;
        let p = pi();
        let two_pi_iv = p.scale(&int(2));
        let mut out: Vec<EigenCluster> = Vec::new();
        for (lo, hi, mult) in taus {
            let psi = atan_interval(&RatInterval::new(lo, hi)).scale(&int(2));
            let mut theta = psi.sub(&phi_iv);
            // bring into [0, 2π), keeping enclosures that straddle 0 there
            for _ in 0..4 {
                if theta.hi() < &Rational::zero() {
                    theta = theta.add(&two_pi_iv);
                } else if theta.hi() > two_pi_iv.hi() {
                    theta = theta.sub(&two_pi_iv);
                } else {
                    break;
                }
            }
            out.push(EigenCluster { angle: theta, multiplicity: mult });
        }
        out.sort_by(|a, b| a.angle.lo().cmp(b.angle.lo()));
        return Ok(merge_touching(out));
    }
}

fn merge_touching(list: Vec<EigenCluster>) -> Vec<EigenCluster> {
    let mut out: Vec<EigenCluster> = Vec::new();
    for c in list {
        if let Some(last) = out.last_mut() {
            if last.angle.overlaps(&c.angle) {
                last.angle = last.angle.hull(&c.angle);
                last.multiplicity += c.multiplicity;
                continue;
            }
        }
        out.push(c);
    }
    // wrap-around: a cluster near 2π touching one near 0
    if out.len() >= 2 {
        let two_pi = pi().scale(&int(2));
        let first = out[0].angle.add(&two_pi);
        let last = out.last().unwrap().clone();
        if first.overlaps(&last.angle) {
            let merged = EigenCluster { angle: first.hull(&last.angle), multiplicity: out[0].multiplicity + last.multiplicity };
            out.pop();
            out.remove(0);
            out.push(merged);
        }
    }
    out
}

/// Rational unit scalar near e^{iφ} and an enclosure of its exact angle.
fn rotation(phi: f64) -> (FieldScalar, RatInterval) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    if phi.abs() <= half_pi {
        let t = approx_rational((phi / 2.0).tan(), 1 << 20);
        let ang = atan_interval(&RatInterval::point(t.clone())).scale(&int(2));
        (unit_point(&t), ang)
    } else {
        let shifted = if phi > 0.0 { phi - std::f64::consts::PI } else { phi + std::f64::consts::PI };
        let t = approx_rational((shifted / 2.0).tan(), 1 << 20);
        let base = atan_interval(&RatInterval::point(t.clone())).scale(&int(2));
        let ang = if phi > 0.0 { base.add(&pi()) } else { base.sub(&pi()) };
        (-unit_point(&t), ang)
    }
}

/// Float estimates of the eigenvalue angles (Rayleigh quotients of the
/// eigenvectors of a generic Hermitian combination of U's Hermitian parts).
pub fn candidate_angles(u: &CMatrix) -> Vec<f64> {
    let c = u.to_c64();
    let n = c.len();
    let alpha = 0.618_033_988_749_894_9;
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            let x = c[i][j];
            let y = c[j][i].conj();
            let h1 = (x + y) * 0.5;
            let h2 = (x - y) * Complex64::new(0.0, -0.5);
            h[i][j] = h1 + h2 * alpha;
        }
    }
    let (_, vecs) = hermitian_eigen_f64(&h);
    vecs.iter()
        .map(|v| {
            let mut lam = Complex64::new(0.0, 0.0);
            for i in 0..n {
                let mut uv = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    uv += c[i][j] * v[j];
                }
                lam += v[i].conj() * uv;
            }
            lam.im.atan2(lam.re).rem_euclid(2.0 * std::f64::consts::PI)
        })
        .collect()
}

/// Isolates the eigenvalues of the Hermitian `t` into intervals (lo, hi] whose
/// image under 2·atan has width ≤ eps.
fn isolate(t: &CMatrix, eps: &Rational) -> Result<Vec<(Rational, Rational, usize)>, NumericError> {
    let n = t.rows();
    let bound = t.frobenius_sqr().enclose(&rat(1, 16)).hi().clone() + int(1);
    let count = |x: &Rational| -> (Rational, usize) {
        // nudge off exact eigenvalues
        let mut x = x.clone();
        let mut step = rat(1, 1 << 30);
        loop {
            if let Some(c) = count_eigs_above(t, &QSqrt2::from_rational(x.clone())) {
                return (x, c);
            }
            x += &step;
            step = &step * int(3);
        }
    };
    let (lo0, c_lo) = count(&-bound.clone());
    let (hi0, c_hi) = count(&bound);
    assert_eq!(c_lo - c_hi, n, "eigenvalues outside the Frobenius bound");
    let mut stack = vec![(lo0, c_lo, hi0, c_hi)];
    let mut out = Vec::new();
    let mut iterations = 0usize;
    while let Some((lo, clo, hi, chi)) = stack.pop() {
        let k = clo - chi;
        if k == 0 {
            continue;
        }
        iterations += 1;
        let ang = atan_interval(&RatInterval::new(lo.clone(), hi.clone())).scale(&int(2));
        if ang.width() <= *eps || iterations > 20_000 {
            out.push((lo, clo, hi, chi));
            continue;
        }
        let mid = (&lo + &hi) / int(2);
        let mid = super::rational::dyadic_floor(&mid, 64).max(lo.clone() + (&hi - &lo) / int(4));
        let (m, cm) = count(&mid);
        if m >= hi {
            out.push((lo, clo, hi, chi));
            continue;
        }
        stack.push((m.clone(), cm, hi, chi));
        stack.push((lo, clo, m, cm));
    }
    // shrink each enclosure towards its eigenvalues; the counts at the
    // endpoints must stay those of the original bracket
    let mut tight = Vec::new();
    for (mut lo, clo, mut hi, chi) in out {
        let c_of = |x: &Rational| count_eigs_above(t, &QSqrt2::from_rational(x.clone()));
        for _ in 0..24 {
            let q = (&hi - &lo) / int(4);
            let a = &lo + &q;
            if c_of(&a) == Some(clo) {
                lo = a;
                continue;
            }
            let b = &hi - &q;
            if c_of(&b) == Some(chi) {
                hi = b;
                continue;
            }
            break;
        }
        tight.push((lo, hi, clo - chi));
    }
    Ok(tight)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h() -> CMatrix {
        let s = FieldScalar::inv_sqrt2();
        CMatrix::from_rows(vec![vec![s.clone(), s.clone()], vec![s.clone(), -s]]).unwrap()
    }

    fn eps() -> Rational {
        rat(1, 100)
    }

    #[test]
    fn op_norm_examples() {
        let i3 = op_norm(&CMatrix::identity(3), &eps()).unwrap();
        assert!(i3.contains(&int(1)) && i3.width() <= eps());
        let d = op_norm(&CMatrix::diag(&[FieldScalar::zero(), FieldScalar::from_int(-2)]), &eps()).unwrap();
        assert!(d.contains(&int(2)));
        let nil = CMatrix::from_rows(vec![
            vec![FieldScalar::zero(), FieldScalar::from_int(2)],
            vec![FieldScalar::zero(), FieldScalar::zero()],
        ])
        .unwrap();
        let n = op_norm(&nil, &eps()).unwrap();
        assert!(n.contains(&int(2)) && n.width() <= eps());
        let z = op_norm(&CMatrix::zeros(2, 2), &eps()).unwrap();
        assert_eq!(z, RatInterval::zero());
    }

    #[test]
    fn eigs_of_k() {
        let k = CMatrix::diag(&[FieldScalar::one(), FieldScalar::i()]);
        let e = unitary_eigs(&k, &eps()).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e[0].angle.contains(&int(0)));
        let half_pi = pi().scale(&rat(1, 2));
        assert!(e[1].angle.overlaps(&half_pi));
        assert!(e.iter().all(|c| c.angle.width() <= eps() && c.multiplicity == 1));
    }

    #[test]
    fn eigs_of_hadamard() {
        let e = unitary_eigs(&h(), &eps()).unwrap();
        assert_eq!(e.len(), 2);
        assert!(e[0].angle.contains(&int(0)));
        assert!(e[1].angle.overlaps(&pi()));
    }

    #[test]
    fn eigs_of_identity() {
        let e = unitary_eigs(&CMatrix::identity(4), &eps()).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].multiplicity, 4);
        assert!(e[0].angle.contains(&int(0)));
    }

    #[test]
    fn rejects_bad_input() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(unitary_eigs(&m, &eps()), Err(NumericError::NotSquare)));
        let m = CMatrix::diag(&[FieldScalar::from_int(2), FieldScalar::one()]);
        assert!(matches!(unitary_eigs(&m, &eps()), Err(NumericError::NotUnitary)));
    }
}
