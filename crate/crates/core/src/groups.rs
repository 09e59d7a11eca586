//! Metric approximation of finitely presented fragments by unitary groups,
//! word formulas, and spectral equivalence of single unitaries.

use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formula::build::{self, b1, d, sup, word};
use crate::formula::{Formula, Sort, Term};
use crate::numeric::rational::{parse_rational, rat, Rational};
use crate::numeric::spectral::{op_norm_certificate, unitary_eigs, EigenCluster};
use crate::numeric::transcendental::pi;
use crate::numeric::{CMatrix, FieldScalar, IntervalReport, NumericError, QSqrt2, RatInterval};

#[derive(Debug, Clone, thiserror::Error)]
pub enum GroupError {
    #[error("image of word {0} is not exactly unitary")]
    NotUnitary(usize),
    #[error("dimension mismatch: word {word} has a {got}x{got} image, expected {expected}")]
    DimensionMismatch { word: usize, got: usize, expected: usize },
    #[error("invalid instance: {0}")]
    BadInstance(String),
    #[error("invalid matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// Finite fragment of a group: words, known products and separation targets.
///
/// Separation targets are stored squared in Q(√2) so that values such as
/// |1 − ω| for an eighth root of unity are exact.
#[derive(Clone, Debug)]
pub struct ApproxInstance {
    pub generators: usize,
    pub words: Vec<Vec<i32>>,
    pub identity: Option<usize>,
    /// Triples (g, h, gh) of indices into `words`.
    pub facts: Vec<(usize, usize, usize)>,
    pub alpha_sq: Vec<QSqrt2>,
}

impl ApproxInstance {
    pub fn validate(&self) -> Result<(), GroupError> {
        let n = self.words.len();
        let bad = |m: String| Err(GroupError::BadInstance(m));
        if self.alpha_sq.len() != n {
            return bad(format!("{} words but {} separation values", n, self.alpha_sq.len()));
        }
        for (i, w) in self.words.iter().enumerate() {
            if let Some(&l) = w.iter().find(|l| **l == 0 || l.unsigned_abs() as usize > self.generators) {
                return bad(format!("word {i} uses letter {l} outside 1..={}", self.generators));
            }
        }
        for (i, a) in self.alpha_sq.iter().enumerate() {
            if a.signum() < 0 {
                return bad(format!("separation value of word {i} is negative"));
            }
        }
        if let Some(e) = self.identity {
            if e >= n {
                return bad(format!("identity index {e} out of range"));
            }
            if !self.alpha_sq[e].is_zero() {
                return bad("separation value of the identity must be 0".into());
            }
        }
        for &(g, h, gh) in &self.facts {
            if g >= n || h >= n || gh >= n {
                return bad(format!("fact ({g}, {h}, {gh}) refers to a missing word"));
            }
        }
        // a fact (g, h, k) must agree with any other fact (g, h, k')
        for (i, a) in self.facts.iter().enumerate() {
            for b in &self.facts[i + 1..] {
                if a.0 == b.0 && a.1 == b.1 && a.2 != b.2 && self.words[a.2] != self.words[b.2] {
                    return bad(format!("facts disagree on the product of words {} and {}", a.0, a.1));
                }
            }
        }
        Ok(())
    }

    /// Evaluates every word on images of the generators.
    pub fn images_from_generators(&self, gens: &[CMatrix]) -> Result<Vec<CMatrix>, GroupError> {
        if gens.len() != self.generators {
            return Err(GroupError::BadInstance(format!(
                "{} generator images for {} generators",
                gens.len(),
                self.generators
            )));
        }
        let dim = gens.first().map(|g| g.rows()).unwrap_or(1);
        self.words
            .iter()
            .map(|w| {
                let mut m = CMatrix::identity(dim);
                for &l in w {
                    let g = &gens[l.unsigned_abs() as usize - 1];
                    let f = if l > 0 { g.clone() } else { g.adjoint() };
                    m = m.mul(&f)?;
                }
                Ok(m)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionKind {
    Identity,
    Homomorphism,
    Separation,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    /// Word indices involved.
    pub words: Vec<usize>,
    pub value: IntervalReport,
    pub bound: String,
    pub verdict: Verdict,
    #[serde(skip)]
    pub interval: RatInterval,
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub conditions: Vec<ConditionReport>,
    pub overall: Verdict,
}

impl ApproxReport {
    pub fn failures(&self) -> impl Iterator<Item = &ConditionReport> {
        self.conditions.iter().filter(|c| c.verdict == Verdict::Fail)
    }
}

fn fmt_qsqrt2_sqrt(a: &QSqrt2) -> String {
    format!("sqrt({a})")
}

/// ‖A‖ < ε, decided from a norm certificate.
fn strict_below(a: &CMatrix, eps: &Rational, prec: &Rational) -> Result<(RatInterval, Verdict), GroupError> {
    let cert = op_norm_certificate(a, prec)?;
    let eps_sq = eps * eps;
    let v = if cert.upper_sq < eps_sq {
        Verdict::Pass
    } else if cert.lower_sq.cmp_rational(&eps_sq) != std::cmp::Ordering::Less {
        Verdict::Fail
    } else {
        Verdict::Undecided
    };
    Ok((cert.interval, v))
}

/// ‖A‖ ≥ α with α² given exactly.
fn at_least(a: &CMatrix, alpha_sq: &QSqrt2, prec: &Rational) -> Result<(RatInterval, Verdict), GroupError> {
    let cert = op_norm_certificate(a, prec)?;
    let v = if alpha_sq.is_zero() || cert.lower_sq >= *alpha_sq {
        Verdict::Pass
    } else if alpha_sq.cmp_rational(&cert.upper_sq) == std::cmp::Ordering::Greater {
        Verdict::Fail
    } else {
        Verdict::Undecided
    };
    Ok((cert.interval, v))
}

/// Checks the identity, homomorphism and separation conditions of an
/// (ε, F)-approximation under the operator-norm metric.
pub fn check_approximation(
    inst: &ApproxInstance,
    gamma: &[CMatrix],
    eps: &Rational,
    precision: &Rational,
) -> Result<ApproxReport, GroupError> {
    inst.validate()?;
    if gamma.len() != inst.words.len() {
        return Err(GroupError::BadInstance(format!("{} images for {} words", gamma.len(), inst.words.len())));
    }
    if !precision.is_positive() {
        return Err(GroupError::BadInstance("precision must be positive".into()));
    }
    if eps.is_negative() {
        return Err(GroupError::BadInstance("epsilon must be nonnegative".into()));
    }
    let dim = gamma.first().map(|m| m.rows()).unwrap_or(1);
    for (i, m) in gamma.iter().enumerate() {
        if !m.is_square() || m.rows() != dim {
            return Err(GroupError::DimensionMismatch { word: i, got: m.rows(), expected: dim });
        }
        if !m.is_unitary() {
            return Err(GroupError::NotUnitary(i));
        }
    }
    let id = CMatrix::identity(dim);

    enum Job {
        Identity(usize),
        Hom(usize, usize, usize),
        Sep(usize),
    }
    let mut jobs = Vec::new();
    if let Some(e) = inst.identity {
        jobs.push(Job::Identity(e));
    }
    jobs.extend(inst.facts.iter().map(|&(g, h, gh)| Job::Hom(g, h, gh)));
    jobs.extend((0..inst.words.len()).map(Job::Sep));

    let eps_str = crate::numeric::rational::fmt_rational(eps);
    let conditions: Result<Vec<ConditionReport>, GroupError> = jobs
        .par_iter()
        .map(|job| {
            let (kind, words, diff, bound) = match *job {
                Job::Identity(e) => (ConditionKind::Identity, vec![e], id.sub(&gamma[e])?, format!("< {eps_str}")),
                Job::Hom(g, h, gh) => {
                    let prod = gamma[g].mul(&gamma[h])?;
                    (ConditionKind::Homomorphism, vec![g, h, gh], gamma[gh].sub(&prod)?, format!("< {eps_str}"))
                }
                Job::Sep(w) => (
                    ConditionKind::Separation,
                    vec![w],
                    id.sub(&gamma[w])?,
                    format!(">= {}", fmt_qsqrt2_sqrt(&inst.alpha_sq[w])),
                ),
            };
            let (interval, verdict) = match kind {
                ConditionKind::Separation => at_least(&diff, &inst.alpha_sq[words[0]], precision)?,
                _ => strict_below(&diff, eps, precision)?,
            };
            Ok(ConditionReport { kind, words, value: IntervalReport::from(&interval), bound, verdict, interval })
        })
        .collect();
    let conditions = conditions?;
    let overall = if conditions.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if conditions.iter().any(|c| c.verdict == Verdict::Undecided) {
        Verdict::Undecided
    } else {
        Verdict::Pass
    };
    Ok(ApproxReport { conditions, overall })
}

/// sup v:B1 . d(w(v), v)
pub fn word_displacement_formula(w: &[i32]) -> Formula {
    sup("v", Sort::Ball(1), d(word(w, b1("v")), b1("v")))
}

/// Displacement of `w` truncated-minus the largest relator displacement.
/// With no relators this is the plain displacement.
pub fn word_displacement_formula_with_relators(w: &[i32], relators: &[Vec<i32>]) -> Formula {
    if relators.is_empty() {
        return word_displacement_formula(w);
    }
    let rs = relators.iter().map(|r| word_displacement_formula(r)).collect();
    build::tsub(word_displacement_formula(w), build::max_all(rs))
}

/// α ∸ sup v:B1 . d(w(v), v); its value is 0 exactly when the image of `w`
/// moves some unit vector by at least α.
pub fn separation_formula(alpha: Rational, w: &[i32]) -> Formula {
    build::tsub(build::c(alpha), word_displacement_formula(w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Equivalence {
    Equivalent,
    Distinct,
    Undecided,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Equivalence::Equivalent => "equivalent",
            Equivalence::Distinct => "distinct",
            Equivalence::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

fn overlaps_mod_2pi(a: &RatInterval, b: &RatInterval, two_pi: &RatInterval) -> bool {
    if a.overlaps(b) {
        return true;
    }
    let up = a.add(two_pi);
    let down = a.sub(two_pi);
    up.overlaps(b) || down.overlaps(b)
}

/// Elementary equivalence of (C^n, U) and (C^n, U′) by comparing eigenvalue
/// multisets.
///
/// Clusters of the two spectra are linked when their angle enclosures can
/// coincide modulo 2π. A linked component whose multiplicities differ on the
/// two sides proves the multisets differ. When every component balances, the
/// verdict is confirmed by exact equality of characteristic polynomials; if
/// those differ the enclosures were too coarse to tell.
pub fn henson_equiv(u: &CMatrix, v: &CMatrix, eps: &Rational) -> Result<Equivalence, GroupError> {
    if !u.is_square() || !u.is_unitary() {
        return Err(GroupError::NotUnitary(0));
    }
    if !v.is_square() || !v.is_unitary() {
        return Err(GroupError::NotUnitary(1));
    }
    if u.rows() != v.rows() {
        return Ok(Equivalence::Distinct);
    }
    let a = unitary_eigs(u, eps)?;
    let b = unitary_eigs(v, eps)?;
    if !components_balance(&a, &b) {
        return Ok(Equivalence::Distinct);
    }
    if u.char_poly()? == v.char_poly()? {
        Ok(Equivalence::Equivalent)
    } else {
        Ok(Equivalence::Undecided)
    }
}

fn components_balance(a: &[EigenCluster], b: &[EigenCluster]) -> bool {
    let two_pi = pi().scale(&rat(2, 1));
    let n = a.len() + b.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let all: Vec<&EigenCluster> = a.iter().chain(b.iter()).collect();
    for i in 0..n {
        for j in i + 1..n {
            if overlaps_mod_2pi(&all[i].angle, &all[j].angle, &two_pi) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut balance = vec![0i64; n];
    for (i, c) in all.iter().enumerate() {
        let r = find(&mut parent, i);
        let m = c.multiplicity as i64;
        balance[r] += if i < a.len() { m } else { -m };
    }
    balance.iter().all(|x| *x == 0)
}

/// Primitive m-th root of unity for m ∈ {1, 2, 4, 8}.
pub fn root_of_unity(m: usize) -> Option<FieldScalar> {
    let h = rat(1, 2);
    match m {
        1 => Some(FieldScalar::one()),
        2 => Some(FieldScalar::from_int(-1)),
        4 => Some(FieldScalar::i()),
        8 => Some(FieldScalar::new(Rational::zero(), Rational::zero(), h.clone(), h)),
        _ => None,
    }
}

fn pow(z: &FieldScalar, k: usize) -> FieldScalar {
    let mut out = FieldScalar::one();
    for _ in 0..k {
        out = &out * z;
    }
    out
}

/// Z/m with words g^0, ..., g^{m−1}, the full multiplication table, and the
/// diagonal embedding g ↦ diag(1, ω, ..., ω^{m−1}). Separation targets are
/// α(g^k) = |1 − ω^k|.
pub fn cyclic_instance(m: usize) -> Option<(ApproxInstance, Vec<CMatrix>)> {
    let w = root_of_unity(m)?;
    let words: Vec<Vec<i32>> = (0..m).map(|k| vec![1; k]).collect();
    let mut facts = Vec::new();
    for a in 0..m {
        for b in 0..m {
            facts.push((a, b, (a + b) % m));
        }
    }
    let alpha_sq = (0..m).map(|k| (&FieldScalar::one() - &pow(&w, k)).norm_sqr()).collect();
    let inst = ApproxInstance { generators: 1, words, identity: Some(0), facts, alpha_sq };
    let g = CMatrix::diag(&(0..m).map(|j| pow(&w, j)).collect::<Vec<_>>());
    let images = inst.images_from_generators(&[g]).ok()?;
    Some((inst, images))
}

/// Single-operator sentences over the operator `U`.
pub fn henson_battery() -> Vec<Formula> {
    let v = || b1("v");
    let u = |t: Term| build::apply("U", t);
    let s = |f: Formula| sup("v", Sort::Ball(1), f);
    let i = |f: Formula| build::inf("v", Sort::Ball(1), f);
    vec![
        s(d(u(v()), v())),
        s(d(u(u(v())), v())),
        s(d(build::apply_inv("U", v()), v())),
        s(d(u(u(u(v()))), v())),
        s(build::reip(u(v()), v())),
        i(build::reip(u(v()), v())),
        s(build::imip(u(v()), v())),
        i(build::imip(u(v()), v())),
        s(build::min(d(u(v()), v()), d(u(u(v())), v()))),
        s(build::half(d(u(v()), build::apply_inv("U", v())))),
    ]
}

// ---------------------------------------------------------------- file formats

/// JSON instance file:
///
/// ```json
/// {"generators": 1,
///  "words": [[], [1], [1, 1]],
///  "identity": 0,
///  "facts": [[1, 1, 2]],
///  "alpha": ["0", "1", {"sq": ["2", "0"]}]}
/// ```
///
/// A separation entry is either a rational α or `{"sq": [a, b]}` meaning
/// α = sqrt(a + b√2).
#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    generators: usize,
    words: Vec<Vec<i32>>,
    #[serde(default)]
    identity: Option<usize>,
    #[serde(default)]
    facts: Vec<(usize, usize, usize)>,
    alpha: Vec<AlphaEntry>,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum AlphaEntry {
    Rational(String),
    Squared { sq: (String, String) },
}

pub fn instance_from_json(text: &str) -> Result<ApproxInstance, GroupError> {
    let f: InstanceFile = serde_json::from_str(text).map_err(|e| GroupError::Format(e.to_string()))?;
    let p = |s: &str| parse_rational(s.trim()).map_err(GroupError::Format);
    let mut alpha_sq = Vec::new();
    for a in &f.alpha {
        alpha_sq.push(match a {
            AlphaEntry::Rational(s) => {
                let q = p(s)?;
                if q.is_negative() {
                    return Err(GroupError::BadInstance(format!("negative separation value {s}")));
                }
                QSqrt2::from_rational(&q * &q)
            }
            AlphaEntry::Squared { sq: (a, b) } => QSqrt2::new(p(a)?, p(b)?),
        });
    }
    let inst =
        ApproxInstance { generators: f.generators, words: f.words, identity: f.identity, facts: f.facts, alpha_sq };
    inst.validate()?;
    Ok(inst)
}

/// JSON matrix-list file: `{"images": [M, ...]}` with one matrix per word, or
/// `{"generators": [M, ...]}` with one matrix per generator. Matrices are
/// row lists of encoded field scalars.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GammaFile {
    #[serde(default)]
    images: Option<Vec<Vec<Vec<String>>>>,
    #[serde(default)]
    generators: Option<Vec<Vec<Vec<String>>>>,
}

pub fn matrix_from_rows(rows: &[Vec<String>]) -> Result<CMatrix, GroupError> {
    let data: Result<Vec<Vec<FieldScalar>>, GroupError> = rows
        .iter()
        .map(|r| r.iter().map(|s| FieldScalar::decode(s.trim()).map_err(GroupError::Numeric)).collect())
        .collect();
    Ok(CMatrix::from_rows(data?)?)
}

pub fn gamma_from_json(text: &str, inst: &ApproxInstance) -> Result<Vec<CMatrix>, GroupError> {
    let f: GammaFile = serde_json::from_str(text).map_err(|e| GroupError::Format(e.to_string()))?;
    match (f.images, f.generators) {
        (Some(ms), None) => ms.iter().map(|m| matrix_from_rows(m)).collect(),
        (None, Some(gs)) => {
            let gens: Result<Vec<CMatrix>, GroupError> = gs.iter().map(|m| matrix_from_rows(m)).collect();
            let gens = gens?;
            if let Some((i, _)) = gens.iter().enumerate().find(|(_, g)| !g.is_square() || !g.is_unitary()) {
                return Err(GroupError::Format(format!("generator {} is not exactly unitary", i + 1)));
            }
            inst.images_from_generators(&gens)
        }
        _ => Err(GroupError::Format("expected exactly one of \"images\" or \"generators\"".into())),
    }
}

/// A single matrix, either a bare row list or a model file with one operator.
pub fn single_matrix_from_json(text: &str) -> Result<CMatrix, GroupError> {
    if let Ok(rows) = serde_json::from_str::<Vec<Vec<String>>>(text) {
        return matrix_from_rows(&rows);
    }
    let model = crate::model::io::model_from_json(text).map_err(|e| GroupError::Format(e.to_string()))?;
    let mut ops = model.operators.values();
    match (ops.next(), ops.next()) {
        (Some(m), None) => Ok(m.clone()),
        _ => Err(GroupError::Format("model file must contain exactly one operator".into())),
    }
}

impl From<&CMatrix> for RowsJson {
    fn from(m: &CMatrix) -> Self {
        RowsJson(m.row_vecs().iter().map(|r| r.iter().map(|x| x.encode()).collect()).collect())
    }
}

/// Row-list serialization of a matrix.
#[derive(Serialize)]
pub struct RowsJson(pub Vec<Vec<String>>);
