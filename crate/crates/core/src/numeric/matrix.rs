//! Dense matrices and vectors over Q(i, √2).

use num_complex::Complex64;

use super::field::FieldScalar;
use super::ival::CIval;
use super::qsqrt2::QSqrt2;
use super::NumericError;

pub type CVector = Vec<FieldScalar>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldScalar>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<FieldScalar>) -> Result<Self, NumericError> {
        if rows == 0 || cols == 0 {
            return Err(NumericError::Empty);
        }
        if data.len() != rows * cols {
            return Err(NumericError::Shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<FieldScalar>>) -> Result<Self, NumericError> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(NumericError::Shape("ragged rows".into()));
        }
        CMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> FieldScalar) -> Self {
        assert!(rows > 0 && cols > 0);
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix::from_fn(rows, cols, |_, _| FieldScalar::zero())
    }

    pub fn identity(n: usize) -> Self {
        CMatrix::from_fn(n, n, |i, j| if i == j { FieldScalar::one() } else { FieldScalar::zero() })
    }

    pub fn diag(entries: &[FieldScalar]) -> Self {
        let n = entries.len();
        CMatrix::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { FieldScalar::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldScalar {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldScalar) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[FieldScalar] {
        &self.data
    }

    pub fn row_vecs(&self) -> Vec<Vec<FieldScalar>> {
        self.data.chunks(self.cols).map(|c| c.to_vec()).collect()
    }

    pub fn mul(&self, o: &CMatrix) -> Result<CMatrix, NumericError> {
        if self.cols != o.rows {
            return Err(NumericError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        let mut out = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                let mut acc = FieldScalar::zero();
                for k in 0..self.cols {
                    let x = self.get(i, k);
                    let y = o.get(k, j);
                    if x.is_zero() || y.is_zero() {
                        continue;
                    }
                    acc = &acc + &(x * y);
                }
                out.push(acc);
            }
        }
        Ok(CMatrix { rows: self.rows, cols: o.cols, data: out })
    }

    fn zip(&self, o: &CMatrix, f: impl Fn(&FieldScalar, &FieldScalar) -> FieldScalar) -> Result<CMatrix, NumericError> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(NumericError::Shape("shape mismatch".into()));
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(x, y)| f(x, y)).collect(),
        })
    }

    pub fn add(&self, o: &CMatrix) -> Result<CMatrix, NumericError> {
        self.zip(o, |x, y| x + y)
    }

    pub fn sub(&self, o: &CMatrix) -> Result<CMatrix, NumericError> {
        self.zip(o, |x, y| x - y)
    }

    pub fn scale(&self, c: &FieldScalar) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && *self == self.adjoint()
    }

    /// First nonzero cell (0-based) of U*U − I, or `None` when exactly unitary.
    pub fn unitarity_defect(&self) -> Option<(usize, usize, FieldScalar)> {
        if !self.is_square() {
            return Some((0, 0, FieldScalar::zero()));
        }
        let p = self.adjoint().mul(self).expect("square");
        for i in 0..self.rows {
            for j in 0..self.cols {
                let mut v = p.get(i, j).clone();
                if i == j {
                    v = &v - &FieldScalar::one();
                }
                if !v.is_zero() {
                    return Some((i, j, v));
                }
            }
        }
        None
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect().is_none()
    }

    pub fn trace(&self) -> FieldScalar {
        let mut t = FieldScalar::zero();
        for i in 0..self.rows.min(self.cols) {
            t = &t + self.get(i, i);
        }
        t
    }

    pub fn kron(&self, o: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.rows * o.rows, self.cols * o.cols, |i, j| {
            self.get(i / o.rows, j / o.cols) * o.get(i % o.rows, j % o.cols)
        })
    }

    pub fn pow(&self, k: u32) -> Result<CMatrix, NumericError> {
        if !self.is_square() {
            return Err(NumericError::NotSquare);
        }
        let mut acc = CMatrix::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn mul_vec(&self, v: &[FieldScalar]) -> Result<CVector, NumericError> {
        if v.len() != self.cols {
            return Err(NumericError::Shape("vector length mismatch".into()));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = FieldScalar::zero();
                for (k, x) in v.iter().enumerate() {
                    let m = self.get(i, k);
                    if m.is_zero() || x.is_zero() {
                        continue;
                    }
                    acc = &acc + &(m * x);
                }
                acc
            })
            .collect())
    }

    pub fn to_c64(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_c64()).collect()).collect()
    }

    pub fn to_cival(&self) -> Vec<Vec<CIval>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_cival()).collect()).collect()
    }

    /// Sum of squared moduli of all entries.
    pub fn frobenius_sqr(&self) -> QSqrt2 {
        let mut acc = QSqrt2::zero();
        for x in &self.data {
            acc = &acc + &x.norm_sqr();
        }
        acc
    }

    /// Exact inverse by Gauss–Jordan elimination; `None` when singular.
    pub fn inverse(&self) -> Option<CMatrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a.get(r, col).is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let p = a.get(col, col).inv().ok()?;
            for j in 0..n {
                let v = a.get(col, j) * &p;
                a.set(col, j, v);
                let w = inv.get(col, j) * &p;
                inv.set(col, j, w);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j) - &(&f * a.get(col, j));
                    a.set(r, j, v);
                    let w = inv.get(r, j) - &(&f * inv.get(col, j));
                    inv.set(r, j, w);
                }
            }
        }
        Some(inv)
    }

    pub fn determinant(&self) -> Result<FieldScalar, NumericError> {
        if !self.is_square() {
            return Err(NumericError::NotSquare);
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = FieldScalar::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a.get(r, col).is_zero()) else {
                return Ok(FieldScalar::zero());
            };
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a.get(col, col).clone();
            det = &det * &p;
            let pinv = p.inv()?;
            for r in col + 1..n {
                let f = a.get(r, col) * &pinv;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a.get(r, j) - &(&f * a.get(col, j));
                    a.set(r, j, v);
                }
            }
        }
        Ok(det)
    }

    /// Characteristic polynomial det(xI − A), coefficients from the constant
    /// term upward (Faddeev–LeVerrier).
    pub fn char_poly(&self) -> Result<Vec<FieldScalar>, NumericError> {
        if !self.is_square() {
            return Err(NumericError::NotSquare);
        }
        let n = self.rows;
        let mut coeffs = vec![FieldScalar::zero(); n + 1];
        coeffs[n] = FieldScalar::one();
        let mut m = CMatrix::zeros(n, n);
        for k in 1..=n {
            let shift = CMatrix::identity(n).scale(&coeffs[n - k + 1]);
            m = self.mul(&m)?.add(&shift)?;
            let t = self.mul(&m)?.trace();
            coeffs[n - k] = t.scale(&super::rational::rat(-1, k as i64));
        }
        Ok(coeffs)
    }
}

/// ⟨v, w⟩ = Σ v_j · conj(w_j), linear in the first argument.
pub fn inner(v: &[FieldScalar], w: &[FieldScalar]) -> FieldScalar {
    let mut acc = FieldScalar::zero();
    for (x, y) in v.iter().zip(w) {
        acc = &acc + &(x * &y.conj());
    }
    acc
}

pub fn norm_sqr(v: &[FieldScalar]) -> QSqrt2 {
    let mut acc = QSqrt2::zero();
    for x in v {
        acc = &acc + &x.norm_sqr();
    }
    acc
}

pub fn basis_vector(n: usize, k: usize) -> CVector {
    (0..n).map(|i| if i == k { FieldScalar::one() } else { FieldScalar::zero() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::int;

    fn h() -> CMatrix {
        let s = FieldScalar::inv_sqrt2();
        CMatrix::from_rows(vec![vec![s.clone(), s.clone()], vec![s.clone(), -s]]).unwrap()
    }

    #[test]
    fn rejects_empty() {
        assert!(matches!(CMatrix::new(0, 0, vec![]), Err(NumericError::Empty)));
    }

    #[test]
    fn hadamard_is_unitary_involution() {
        assert!(h().is_unitary());
        assert_eq!(h().mul(&h()).unwrap(), CMatrix::identity(2));
    }

    #[test]
    fn defect_names_cell() {
        let m = CMatrix::diag(&[FieldScalar::one(), &FieldScalar::one() + &FieldScalar::sqrt2()]);
        let (i, j, _) = m.unitarity_defect().unwrap();
        assert_eq!((i, j), (1, 1));
    }

    #[test]
    fn inverse_and_determinant() {
        let m = CMatrix::from_rows(vec![
            vec![FieldScalar::from_int(2), FieldScalar::i()],
            vec![FieldScalar::sqrt2(), FieldScalar::from_int(1)],
        ])
        .unwrap();
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv).unwrap(), CMatrix::identity(2));
        let det = m.determinant().unwrap();
        assert_eq!(det, &FieldScalar::from_int(2) - &(&FieldScalar::i() * &FieldScalar::sqrt2()));
    }

    #[test]
    fn char_poly_of_hadamard() {
        // x² − 1
        let p = h().char_poly().unwrap();
        assert_eq!(p, vec![FieldScalar::from_int(-1), FieldScalar::zero(), FieldScalar::one()]);
        let d = CMatrix::diag(&[FieldScalar::from_int(2), FieldScalar::from_int(3)]);
        let q = d.char_poly().unwrap();
        assert_eq!(q[0], FieldScalar::from_rational(int(6)));
        assert_eq!(q[1], FieldScalar::from_int(-5));
    }
}
