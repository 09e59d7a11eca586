//! Finite-dimensional dynamical (marked) Hilbert spaces.

pub mod gates;
pub mod interp;
pub mod io;
pub mod structure;

use std::collections::BTreeMap;

use crate::numeric::matrix::norm_sqr;
use crate::numeric::{CMatrix, FieldScalar, NumericError, QSqrt2};

pub use gates::{gate, Gate};
pub use interp::{build_dynamical_interpretation, build_marked_constants, ConstantsModel, DynamicalModel};
pub use io::{load_model, model_from_json, model_to_json, save_model};
pub use structure::EqStructure;

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub dim: usize,
    pub operators: BTreeMap<String, CMatrix>,
    /// Labels of the marked sort; label k is sent by qu to e_k.
    pub marked: Option<Vec<String>>,
    pub constants: BTreeMap<String, Vec<FieldScalar>>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModelError {
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("operator {name} has shape {rows}x{cols}, expected {dim}x{dim}")]
    OperatorShape { name: String, rows: usize, cols: usize, dim: usize },
    #[error("operator {name} is not unitary: (U*U - I) at cell ({row}, {col}) is {value}")]
    NotUnitary { name: String, row: usize, col: usize, value: String },
    #[error("constant {name} has length {len}, expected {dim}")]
    ConstantShape { name: String, len: usize, dim: usize },
    #[error("constant {name} has norm greater than 1")]
    ConstantNorm { name: String },
    #[error("marked sort has {count} labels but the dimension is {dim}")]
    MarkedCount { count: usize, dim: usize },
    #[error("duplicate marked label {0}")]
    DuplicateLabel(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("register error: {0}")]
    Register(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl Model {
    pub fn new(dim: usize) -> Model {
        Model { dim, operators: BTreeMap::new(), marked: None, constants: BTreeMap::new() }
    }

    pub fn with_operator(mut self, name: &str, m: CMatrix) -> Model {
        self.operators.insert(name.to_string(), m);
        self
    }

    pub fn with_constant(mut self, name: &str, v: Vec<FieldScalar>) -> Model {
        self.constants.insert(name.to_string(), v);
        self
    }

    /// Marks the standard basis with labels 1..dim.
    pub fn with_marked(mut self) -> Model {
        self.marked = Some((1..=self.dim).map(|k| k.to_string()).collect());
        self
    }

    pub fn is_marked(&self) -> bool {
        self.marked.is_some()
    }

    /// Checks every invariant: operators exactly unitary of the right shape,
    /// constants in the unit ball, marked labels one per basis vector.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::ZeroDimension);
        }
        for (name, m) in &self.operators {
            if m.rows() != self.dim || m.cols() != self.dim {
                return Err(ModelError::OperatorShape {
                    name: name.clone(),
                    rows: m.rows(),
                    cols: m.cols(),
                    dim: self.dim,
                });
            }
            if let Some((i, j, v)) = m.unitarity_defect() {
                return Err(ModelError::NotUnitary { name: name.clone(), row: i + 1, col: j + 1, value: v.encode() });
            }
        }
        for (name, v) in &self.constants {
            if v.len() != self.dim {
                return Err(ModelError::ConstantShape { name: name.clone(), len: v.len(), dim: self.dim });
            }
            if norm_sqr(v) > QSqrt2::one() {
                return Err(ModelError::ConstantNorm { name: name.clone() });
            }
        }
        if let Some(labels) = &self.marked {
            if labels.len() != self.dim {
                return Err(ModelError::MarkedCount { count: labels.len(), dim: self.dim });
            }
            let mut seen = std::collections::BTreeSet::new();
            for l in labels {
                if !seen.insert(l) {
                    return Err(ModelError::DuplicateLabel(l.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn operator(&self, name: &str) -> Option<&CMatrix> {
        self.operators.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::int;

    #[test]
    fn rejects_non_unitary_cell() {
        let m = CMatrix::diag(&[FieldScalar::one(), &FieldScalar::one() + &FieldScalar::sqrt2()]);
        let model = Model::new(2).with_operator("U", m);
        match model.validate() {
            Err(ModelError::NotUnitary { row, col, .. }) => assert_eq!((row, col), (2, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_long_constant() {
        let model = Model::new(1).with_constant("a", vec![FieldScalar::from_rational(int(2))]);
        assert!(matches!(model.validate(), Err(ModelError::ConstantNorm { .. })));
    }

    #[test]
    fn rejects_label_count() {
        let mut model = Model::new(2);
        model.marked = Some(vec!["1".into()]);
        assert!(matches!(model.validate(), Err(ModelError::MarkedCount { .. })));
    }
}
