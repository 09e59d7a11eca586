//! Hermitian inertia by exact LDL* elimination, plus a floating-point Jacobi
//! eigensolver used only to produce candidates.

use num_complex::Complex64;

use super::field::FieldScalar;
use super::matrix::CMatrix;
use super::qsqrt2::QSqrt2;

/// Pivots of the LDL* factorization without pivoting. Returns `None` if a
/// zero pivot occurs before the last step. Pivots of a Hermitian matrix are
/// real, so only their real parts are returned.
pub fn ldl_pivots(m: &CMatrix) -> Option<Vec<QSqrt2>> {
    assert!(m.is_square());
    let n = m.rows();
    let mut a: Vec<Vec<FieldScalar>> = m.row_vecs();
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let d = a[k][k].clone();
        debug_assert!(d.im().is_zero(), "non-real pivot in Hermitian elimination");
        pivots.push(d.re());
        if k + 1 == n {
            break;
        }
        if d.is_zero() {
            return None;
        }
        let dinv = d.inv().ok()?;
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] * &dinv;
            for j in k + 1..n {
                if a[k][j].is_zero() {
                    continue;
                }
                let v = &a[i][j] - &(&f * &a[k][j]);
                a[i][j] = v;
            }
        }
    }
    Some(pivots)
}

/// Exact positive-definiteness test (Sylvester: every leading pivot > 0).
pub fn is_positive_definite(m: &CMatrix) -> bool {
    assert!(m.is_square());
    let n = m.rows();
    let mut a: Vec<Vec<FieldScalar>> = m.row_vecs();
    for k in 0..n {
        let d = a[k][k].clone();
        if d.re().signum() <= 0 {
            return false;
        }
        let dinv = d.inv().expect("positive pivot");
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = &a[i][k] * &dinv;
            for j in k + 1..n {
                let v = &a[i][j] - &(&f * &a[k][j]);
                a[i][j] = v;
            }
        }
    }
    true
}

/// Number of eigenvalues of the Hermitian `m` strictly greater than `mu`,
/// or `None` when the elimination of `mu·I − m` hits a zero pivot (including
/// the case where `mu` is itself an eigenvalue).
pub fn count_eigs_above(m: &CMatrix, mu: &QSqrt2) -> Option<usize> {
    let n = m.rows();
    let shift = CMatrix::identity(n).scale(&FieldScalar::from_qsqrt2(mu));
    let a = shift.sub(m).ok()?;
    let piv = ldl_pivots(&a)?;
    let mut neg = 0;
    for p in &piv {
        match p.signum() {
            0 => return None,
            s if s < 0 => neg += 1,
            _ => {}
        }
    }
    Some(neg)
}

/// Eigen-decomposition of a complex Hermitian matrix in floating point.
/// Returns eigenvalues in ascending order and the matching unit eigenvectors.
pub fn hermitian_eigen_f64(h: &[Vec<Complex64>]) -> (Vec<f64>, Vec<Vec<Complex64>>) {
    let n = h.len();
    // real symmetric embedding [[Re, -Im], [Im, Re]]
    let m = 2 * n;
    let mut a = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = h[i][j];
            a[i][j] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
            a[i + n][j + n] = z.re;
        }
    }
    let (vals, vecs) = jacobi_symmetric(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&x, &y| vals[x].partial_cmp(&vals[y]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out_vals = Vec::with_capacity(n);
    let mut out_vecs: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for &k in &order {
        if out_vecs.len() == n {
            break;
        }
        let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::new(vecs[i][k], vecs[i + n][k])).collect();
        for u in &out_vecs {
            let c: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
        let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nv < 0.5 {
            continue;
        }
        for vi in v.iter_mut() {
            *vi /= nv;
        }
        out_vals.push(vals[k]);
        out_vecs.push(v);
    }
    (out_vals, out_vecs)
}

/// Cyclic Jacobi for a real symmetric matrix. Eigenvectors are the columns of
/// the returned matrix.
pub fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-16 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::int;

    #[test]
    fn inertia_of_diagonal() {
        let m = CMatrix::diag(&[FieldScalar::from_int(1), FieldScalar::from_int(3), FieldScalar::from_int(-2)]);
        assert_eq!(count_eigs_above(&m, &QSqrt2::from_rational(int(0))), Some(2));
        assert_eq!(count_eigs_above(&m, &QSqrt2::from_rational(int(2))), Some(1));
        assert_eq!(count_eigs_above(&m, &QSqrt2::from_rational(int(1))), None);
        assert!(!is_positive_definite(&m));
        assert!(is_positive_definite(&CMatrix::identity(3)));
    }

    #[test]
    fn inertia_with_irrational_shift() {
        // [[0,1],[1,0]] has eigenvalues ±1
        let m = CMatrix::from_rows(vec![
            vec![FieldScalar::zero(), FieldScalar::one()],
            vec![FieldScalar::one(), FieldScalar::zero()],
        ])
        .unwrap();
        let s = QSqrt2::new(int(-1), crate::numeric::rational::rat(1, 2)); // ≈ -0.29
        assert_eq!(count_eigs_above(&m, &s), Some(1));
    }

    #[test]
    fn jacobi_complex_hermitian() {
        let h = vec![
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0)],
        ];
        let (vals, vecs) = hermitian_eigen_f64(&h);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        for (lam, v) in vals.iter().zip(&vecs) {
            for i in 0..2 {
                let hv: Complex64 = (0..2).map(|j| h[i][j] * v[j]).sum();
                assert!((hv - v[i] * lam).norm() < 1e-12);
            }
        }
    }
}
