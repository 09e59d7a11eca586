//! Measure-once quantum automata: exact acceptance values and bounded-length
//! searches.
//!
//! A word w = [i1, ..., ik] acts as U_{ik} ⋯ U_{i1} on the start state |0…0⟩,
//! so the first letter is applied first. ACC_w = ‖P U_{ik} ⋯ U_{i1} |0⟩‖².

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::model::Model;
use crate::numeric::matrix::{basis_vector, norm_sqr};
use crate::numeric::rational::Rational;
use crate::numeric::{CMatrix, CVector, FieldScalar, QSqrt2};

#[derive(Debug, Clone, thiserror::Error)]
pub enum AutomatonError {
    #[error("operator U{0} is missing from the model")]
    MissingLetter(usize),
    #[error("model has no operators U1, U2, ...")]
    EmptyAlphabet,
    #[error("operator {0} is not exactly unitary")]
    NotUnitary(String),
    #[error("projection has {got} entries, model dimension is {dim}")]
    ProjectionLength { got: usize, dim: usize },
    #[error("projection string may only contain 0 and 1, got {0:?}")]
    ProjectionChar(char),
    #[error("letter {letter} outside alphabet 1..={size}")]
    BadLetter { letter: usize, size: usize },
}

#[derive(Clone, Debug)]
pub struct AutomatonSpec {
    pub letters: Vec<CMatrix>,
    /// Diagonal of the final-state projection.
    pub proj: Vec<bool>,
    pub lambda: Rational,
}

impl AutomatonSpec {
    /// Alphabet U1, ..., Ut taken from the model, in index order.
    pub fn from_model(model: &Model, proj: Vec<bool>, lambda: Rational) -> Result<Self, AutomatonError> {
        let mut letters = Vec::new();
        while let Some(m) = model.operator(&format!("U{}", letters.len() + 1)) {
            letters.push(m.clone());
        }
        if letters.is_empty() {
            return Err(AutomatonError::EmptyAlphabet);
        }
        let extra = model.operators.len() - letters.len();
        if extra > 0 {
            return Err(AutomatonError::MissingLetter(letters.len() + 1));
        }
        Self::new(letters, proj, lambda)
    }

    pub fn new(letters: Vec<CMatrix>, proj: Vec<bool>, lambda: Rational) -> Result<Self, AutomatonError> {
        let dim = proj.len();
        for (i, m) in letters.iter().enumerate() {
            if m.rows() != dim || m.cols() != dim {
                return Err(AutomatonError::ProjectionLength { got: dim, dim: m.rows() });
            }
            if !m.is_unitary() {
                return Err(AutomatonError::NotUnitary(format!("U{}", i + 1)));
            }
        }
        Ok(AutomatonSpec { letters, proj, lambda })
    }

    pub fn dim(&self) -> usize {
        self.proj.len()
    }

    pub fn alphabet(&self) -> usize {
        self.letters.len()
    }

    fn start(&self) -> CVector {
        basis_vector(self.dim(), 0)
    }

    fn step(&self, v: &[FieldScalar], letter: usize) -> CVector {
        self.letters[letter - 1].mul_vec(v).expect("dimensions checked")
    }

    fn accept(&self, v: &[FieldScalar]) -> QSqrt2 {
        let projected: Vec<FieldScalar> = v
            .iter()
            .zip(&self.proj)
            .map(|(x, &keep)| if keep { x.clone() } else { FieldScalar::zero() })
            .collect();
        norm_sqr(&projected)
    }

    pub fn check_word(&self, w: &[usize]) -> Result<(), AutomatonError> {
        match w.iter().find(|&&l| l == 0 || l > self.alphabet()) {
            Some(&letter) => Err(AutomatonError::BadLetter { letter, size: self.alphabet() }),
            None => Ok(()),
        }
    }

    /// Final state U_{ik} ⋯ U_{i1}|0⟩.
    pub fn run(&self, w: &[usize]) -> Result<CVector, AutomatonError> {
        self.check_word(w)?;
        Ok(w.iter().fold(self.start(), |v, &l| self.step(&v, l)))
    }
}

/// Parses a 0/1 string into a projection diagonal.
pub fn parse_projection(s: &str) -> Result<Vec<bool>, AutomatonError> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(AutomatonError::ProjectionChar(other)),
        })
        .collect()
}

/// Exact acceptance value.
pub fn acc(a: &AutomatonSpec, w: &[usize]) -> Result<QSqrt2, AutomatonError> {
    Ok(a.accept(&a.run(w)?))
}

/// Floating-point recomputation of ACC_w.
pub fn acc_f64(a: &AutomatonSpec, w: &[usize]) -> f64 {
    let mut v: Vec<num_complex::Complex64> = vec![num_complex::Complex64::new(0.0, 0.0); a.dim()];
    v[0] = num_complex::Complex64::new(1.0, 0.0);
    for &l in w {
        let m = a.letters[l - 1].to_c64();
        v = m.iter().map(|row| row.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
    }
    v.iter().zip(&a.proj).filter(|(_, &k)| k).map(|(x, _)| x.norm_sqr()).sum()
}

/// Breadth-first frontier of words of one length in lexicographic order,
/// with their exact states.
fn next_level(a: &AutomatonSpec, level: &[(Vec<usize>, CVector)]) -> Vec<(Vec<usize>, CVector)> {
    level
        .par_iter()
        .flat_map_iter(|(w, v)| {
            (1..=a.alphabet()).map(move |l| {
                let mut w2 = w.clone();
                w2.push(l);
                (w2, a.step(v, l))
            })
        })
        .collect()
}

fn levels(a: &AutomatonSpec, max_len: usize, mut visit: impl FnMut(usize, &[(Vec<usize>, CVector)]) -> bool) {
    let mut level = vec![(Vec::new(), a.start())];
    for len in 0..=max_len {
        if !visit(len, &level) || len == max_len {
            return;
        }
        level = next_level(a, &level);
    }
}

/// Outcome of a bounded search: either a word, or evidence that no word up to
/// the bound qualifies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchResult {
    pub word: Option<Vec<usize>>,
    pub acc: Option<String>,
    pub bounded_to_length: usize,
}

impl fmt::Display for SearchResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.word {
            Some(w) => write!(f, "accepted word {:?} with ACC = {}", w, self.acc.as_deref().unwrap_or("?")),
            None => write!(f, "no accepted word (bounded to length {})", self.bounded_to_length),
        }
    }
}

/// Shortest, then lexicographically least, word with ACC_w > λ.
pub fn exists_accepted(a: &AutomatonSpec, max_len: usize) -> SearchResult {
    let mut found: Option<(Vec<usize>, QSqrt2)> = None;
    levels(a, max_len, |_, level| {
        let hit = level
            .par_iter()
            .map(|(w, v)| (w, a.accept(v)))
            .find_first(|(_, acc)| acc.cmp_rational(&a.lambda) == std::cmp::Ordering::Greater);
        if let Some((w, acc)) = hit {
            found = Some((w.clone(), acc));
            return false;
        }
        true
    });
    match found {
        Some((w, acc)) => SearchResult { word: Some(w), acc: Some(acc.to_string()), bounded_to_length: max_len },
        None => SearchResult { word: None, acc: None, bounded_to_length: max_len },
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Margin {
    pub margin: QSqrt2,
    pub argmin: Vec<usize>,
    pub acc: QSqrt2,
    pub bounded_to_length: usize,
}

#[derive(Serialize)]
pub struct MarginReport {
    pub margin: String,
    pub margin_decimal: f64,
    pub argmin: Vec<usize>,
    pub acc: String,
    pub bounded_to_length: usize,
}

impl From<&Margin> for MarginReport {
    fn from(m: &Margin) -> Self {
        MarginReport {
            margin: m.margin.to_string(),
            margin_decimal: m.margin.to_f64(),
            argmin: m.argmin.clone(),
            acc: m.acc.to_string(),
            bounded_to_length: m.bounded_to_length,
        }
    }
}

/// Exact min over |w| ≤ max_len of |ACC_w − λ|, with the first minimizing
/// word in length-lexicographic order.
pub fn isolation_margin(a: &AutomatonSpec, max_len: usize) -> Margin {
    let lambda = QSqrt2::from_rational(a.lambda.clone());
    let mut best: Option<(QSqrt2, Vec<usize>, QSqrt2)> = None;
    levels(a, max_len, |_, level| {
        let scored: Vec<(QSqrt2, QSqrt2)> = level
            .par_iter()
            .map(|(_, v)| {
                let acc = a.accept(v);
                ((acc.clone() - lambda.clone()).abs(), acc)
            })
            .collect();
        for ((m, acc), (w, _)) in scored.into_iter().zip(level) {
            if best.as_ref().map_or(true, |(b, _, _)| m < *b) {
                best = Some((m, w.clone(), acc));
            }
        }
        !best.as_ref().is_some_and(|(b, _, _)| b.is_zero())
    });
    let (margin, argmin, acc) = best.expect("the empty word is always visited");
    Margin { margin, argmin, acc, bounded_to_length: max_len }
}
