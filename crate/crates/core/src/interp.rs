//! First-order sentences about two equivalence relations, their translation
//! into continuous sentences over marked spaces, and a brute-force check that
//! the translation preserves truth.
//!
//! Atoms E_i(y, z) become the zero set of a (+)-formula ψ_i and negated atoms
//! the zero set of a complementary (−)-formula ψ_i^c; equality is the discrete
//! metric. ∨ and ∧ become min and max, ∀ and ∃ become sup and inf over the
//! marked sort. The sentence is wrapped as min(gap, ρ*), whose value is 0
//! when ρ holds and the gap otherwise.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::evaluator::{EvalError, Evaluator};
use crate::formula::build::{self, adiff, b1, c, cst, d, imip, max_all, min, min_all, prod, qu, reip, sub, sup, tsub, var};
use crate::formula::{Formula, Sort, Term};
use crate::model::interp::{build_dynamical_interpretation, build_marked_constants};
use crate::model::structure::all_structures;
use crate::model::{EqStructure, Model, ModelError};
use crate::numeric::rational::{fmt_rational, int, rat, Rational};
use crate::numeric::{IntervalReport, RatInterval};

#[derive(Debug, Clone, thiserror::Error)]
pub enum InterpError {
    #[error("sentence syntax: {0}")]
    Parse(String),
    #[error("matrix is not in disjunctive normal form: {0}")]
    NotDnf(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("tolerance {tol} is not below half the gap {gap}")]
    BadTolerance { tol: String, gap: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    /// E1 or E2.
    Rel(u8, String, String),
    Eq(String, String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
}

/// Prenex sentence with a matrix in disjunctive normal form: a disjunction
/// of conjunctions of literals. An empty disjunction is false and an empty
/// conjunction is true. Variables not bound by the prefix are read
/// universally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FOSentence {
    pub prefix: Vec<(Quantifier, String)>,
    pub matrix: Vec<Vec<Literal>>,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.atom, self.negated) {
            (Atom::Rel(i, a, b), false) => write!(f, "E{i}({a},{b})"),
            (Atom::Rel(i, a, b), true) => write!(f, "!E{i}({a},{b})"),
            (Atom::Eq(a, b), false) => write!(f, "{a} = {b}"),
            (Atom::Eq(a, b), true) => write!(f, "{a} != {b}"),
        }
    }
}

impl fmt::Display for FOSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, v) in &self.prefix {
            let w = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            write!(f, "{w} {v} ")?;
        }
        if !self.prefix.is_empty() {
            write!(f, ". ")?;
        }
        if self.matrix.is_empty() {
            return write!(f, "false");
        }
        let disj: Vec<String> = self
            .matrix
            .iter()
            .map(|conj| {
                if conj.is_empty() {
                    "true".to_string()
                } else {
                    let parts: Vec<String> = conj.iter().map(|l| l.to_string()).collect();
                    let body = parts.join(" & ");
                    if self.matrix.len() > 1 && conj.len() > 1 {
                        format!("({body})")
                    } else {
                        body
                    }
                }
            })
            .collect();
        write!(f, "{}", disj.join(" | "))
    }
}

impl FOSentence {
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for conj in &self.matrix {
            for l in conj {
                match &l.atom {
                    Atom::Rel(_, a, b) | Atom::Eq(a, b) => {
                        out.insert(a.clone());
                        out.insert(b.clone());
                    }
                }
            }
        }
        out
    }

    /// Matrix variables not bound by the prefix.
    pub fn free_variables(&self) -> Vec<String> {
        let bound: BTreeSet<&String> = self.prefix.iter().map(|(_, v)| v).collect();
        self.variables().into_iter().filter(|v| !bound.contains(v)).collect()
    }

    pub fn depth(&self) -> usize {
        self.prefix.len()
    }
}

// ---------------------------------------------------------------- parsing

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Or,
    And,
    Not,
    Eq,
    Neq,
}

fn lex(s: &str) -> Result<Vec<Tok>, InterpError> {
    let mut out = Vec::new();
    let cs: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let ch = cs[i];
        match ch {
            c if c.is_whitespace() => {}
            '(' => out.push(Tok::LParen),
            ')' => out.push(Tok::RParen),
            ',' => out.push(Tok::Comma),
            '.' => out.push(Tok::Dot),
            '|' | '∨' => out.push(Tok::Or),
            '&' | '∧' => out.push(Tok::And),
            '¬' | '~' => out.push(Tok::Not),
            '=' => out.push(Tok::Eq),
            '≠' => out.push(Tok::Neq),
            '∀' => out.push(Tok::Ident("forall".into())),
            '∃' => out.push(Tok::Ident("exists".into())),
            '!' => {
                if cs.get(i + 1) == Some(&'=') {
                    out.push(Tok::Neq);
                    i += 1;
                } else {
                    out.push(Tok::Not);
                }
            }
            c if c.is_alphanumeric() || c == '_' => {
                let start = i;
                while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(cs[start..i].iter().collect()));
                continue;
            }
            other => return Err(InterpError::Parse(format!("unexpected character {other:?}"))),
        }
        i += 1;
    }
    Ok(out)
}

struct FoParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl FoParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), InterpError> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(InterpError::Parse(format!("expected {t:?}, found {got:?}"))),
        }
    }

    fn var(&mut self) -> Result<String, InterpError> {
        match self.next() {
            Some(Tok::Ident(v)) if is_var(&v) => Ok(v),
            got => Err(InterpError::Parse(format!("expected a variable, found {got:?}"))),
        }
    }

    fn disjunction(&mut self) -> Result<Vec<Vec<Literal>>, InterpError> {
        let mut out = vec![self.disjunct()?];
        while self.peek() == Some(&Tok::Or) {
            self.next();
            out.push(self.disjunct()?);
        }
        Ok(out)
    }

    /// A conjunction, optionally in parentheses.
    fn disjunct(&mut self) -> Result<Vec<Literal>, InterpError> {
        if self.peek() == Some(&Tok::LParen) {
            self.next();
            let c = self.conjunction()?;
            match self.next() {
                Some(Tok::RParen) => Ok(c),
                Some(Tok::Or) => Err(InterpError::NotDnf("disjunction nested inside parentheses".into())),
                got => Err(InterpError::Parse(format!("expected ')', found {got:?}"))),
            }
        } else {
            self.conjunction()
        }
    }

    fn conjunction(&mut self) -> Result<Vec<Literal>, InterpError> {
        let first = self.literal()?;
        let mut out: Vec<Literal> = first.into_iter().collect();
        while self.peek() == Some(&Tok::And) {
            self.next();
            if self.peek() == Some(&Tok::LParen) {
                return Err(InterpError::NotDnf("parenthesized group inside a conjunction".into()));
            }
            out.extend(self.literal()?);
        }
        Ok(out)
    }

    /// `None` for the literal `true`.
    fn literal(&mut self) -> Result<Option<Literal>, InterpError> {
        let mut negated = false;
        while self.peek() == Some(&Tok::Not) {
            self.next();
            negated = !negated;
        }
        if negated && self.peek() == Some(&Tok::LParen) {
            return Err(InterpError::NotDnf("negation applied to a compound formula".into()));
        }
        match self.next() {
            Some(Tok::Ident(name)) if name == "true" && !negated => Ok(None),
            Some(Tok::Ident(name)) if name == "E1" || name == "E2" => {
                let rel = if name == "E1" { 1 } else { 2 };
                self.expect(Tok::LParen)?;
                let a = self.var()?;
                self.expect(Tok::Comma)?;
                let b = self.var()?;
                self.expect(Tok::RParen)?;
                Ok(Some(Literal { negated, atom: Atom::Rel(rel, a, b) }))
            }
            Some(Tok::Ident(a)) if is_var(&a) => {
                let neq = match self.next() {
                    Some(Tok::Eq) => false,
                    Some(Tok::Neq) => true,
                    got => return Err(InterpError::Parse(format!("expected '=' or '!=', found {got:?}"))),
                };
                let b = self.var()?;
                Ok(Some(Literal { negated: negated ^ neq, atom: Atom::Eq(a, b) }))
            }
            Some(Tok::LParen) => Err(InterpError::NotDnf("unexpected parenthesized group".into())),
            got => Err(InterpError::Parse(format!("expected a literal, found {got:?}"))),
        }
    }
}

fn is_var(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_lowercase()) && !matches!(s, "forall" | "exists" | "true" | "false")
}

/// Parses `forall y1 exists y2 . E1(y1,y2) & !E2(y1,y2) | y1 = y2`.
/// Quantifiers may also be written ∀ and ∃, connectives ∨ ∧ ¬ ≠.
pub fn parse_sentence(s: &str) -> Result<FOSentence, InterpError> {
    let mut p = FoParser { toks: lex(s)?, pos: 0 };
    let mut prefix = Vec::new();
    while let Some(Tok::Ident(w)) = p.peek().cloned() {
        let q = match w.as_str() {
            "forall" => Quantifier::Forall,
            "exists" => Quantifier::Exists,
            _ => break,
        };
        p.next();
        let v = p.var()?;
        prefix.push((q, v));
        if p.peek() == Some(&Tok::Dot) {
            p.next();
        }
    }
    let matrix = if p.peek() == Some(&Tok::Ident("false".into())) {
        p.next();
        Vec::new()
    } else {
        p.disjunction()?
    };
    if p.pos < p.toks.len() {
        return Err(InterpError::Parse(format!("trailing input at token {:?}", p.toks[p.pos])));
    }
    Ok(FOSentence { prefix, matrix })
}

// ---------------------------------------------------------------- oracle

/// Truth of ρ in s by exhaustive expansion of the quantifiers.
pub fn fo_check(s: &EqStructure, rho: &FOSentence) -> bool {
    let mut prefix: Vec<(Quantifier, String)> =
        rho.free_variables().into_iter().map(|v| (Quantifier::Forall, v)).collect();
    prefix.extend(rho.prefix.iter().cloned());
    let mut env: Vec<(String, usize)> = Vec::new();
    check_rec(s, &prefix, &rho.matrix, &mut env)
}

fn lookup(env: &[(String, usize)], v: &str) -> usize {
    env.iter().rev().find(|(n, _)| n == v).map(|(_, x)| *x).expect("bound variable")
}

fn check_rec(s: &EqStructure, prefix: &[(Quantifier, String)], matrix: &[Vec<Literal>], env: &mut Vec<(String, usize)>) -> bool {
    match prefix.split_first() {
        None => matrix.iter().any(|conj| {
            conj.iter().all(|l| {
                let holds = match &l.atom {
                    Atom::Rel(i, a, b) => s.related(*i as usize, lookup(env, a), lookup(env, b)),
                    Atom::Eq(a, b) => lookup(env, a) == lookup(env, b),
                };
                holds != l.negated
            })
        }),
        Some(((q, v), rest)) => {
            let mut each = (1..=s.size).map(|x| {
                env.push((v.clone(), x));
                let r = check_rec(s, rest, matrix, env);
                env.pop();
                r
            });
            match q {
                Quantifier::Forall => each.all(|b| b),
                Quantifier::Exists => each.any(|b| b),
            }
        }
    }
}

// ---------------------------------------------------------------- translation

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Constants a1, a2, b1, b2; gap |⟨b1, b2⟩|.
    Constants,
    /// Operators U1..U5; gap sup_v d(U3 v, v).
    Dynamical,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "constants" => Ok(Scheme::Constants),
            "dynamical" => Ok(Scheme::Dynamical),
            other => Err(format!("unknown scheme {other:?} (expected constants or dynamical)")),
        }
    }
}

fn marked(v: &str) -> Term {
    var(v, Sort::Marked)
}

/// sup v:B1 . d(U_k(v), v)
fn displacement(k: usize) -> Formula {
    sup("v", Sort::Ball(1), d(build::apply(&format!("U{k}"), b1("v")), b1("v")))
}

impl Scheme {
    pub fn gap_formula(&self) -> Formula {
        match self {
            Scheme::Constants => adiff(reip(cst("b1"), cst("b2")), c(Rational::zero())),
            Scheme::Dynamical => displacement(3),
        }
    }

    /// (+)-formula of E_i: zero exactly on related pairs.
    pub fn psi(&self, i: u8, y1: &str, y2: &str) -> Formula {
        match self {
            Scheme::Constants => {
                let a = format!("a{i}");
                adiff(reip(qu(marked(y1)), cst(&a)), reip(qu(marked(y2)), cst(&a)))
            }
            Scheme::Dynamical => {
                let g4 = displacement(4);
                sup("u", Sort::Ball(1), min(self.fixed_unit(i), tsub(self.coefficient_gap_sq(y1, y2), prod(g4.clone(), g4))))
            }
        }
    }

    /// (−)-formula of E_i: zero exactly on unrelated pairs.
    pub fn psi_c(&self, i: u8, y1: &str, y2: &str) -> Formula {
        match self {
            Scheme::Constants => tsub(self.gap_formula(), self.psi(i, y1, y2)),
            Scheme::Dynamical => {
                let g5 = displacement(5);
                sup("u", Sort::Ball(1), min(self.fixed_unit(i), tsub(prod(g5.clone(), g5), self.coefficient_gap_sq(y1, y2))))
            }
        }
    }

    /// g3 ∸ max(d(U_i u, u), |1 − ‖u‖|): positive only near unit fixed
    /// vectors of U_i.
    fn fixed_unit(&self, i: u8) -> Formula {
        let u = || b1("u");
        let moved = d(build::apply(&format!("U{i}"), u()), u());
        let off_sphere = adiff(c(int(1)), d(u(), build::zero(Sort::Ball(1))));
        tsub(displacement(3), build::max(moved, off_sphere))
    }

    /// |⟨qu(y1) − qu(y2), u⟩|² as a sum of squared real and imaginary parts.
    fn coefficient_gap_sq(&self, y1: &str, y2: &str) -> Formula {
        let w = || sub(qu(marked(y1)), qu(marked(y2)));
        let u = || sub(b1("u"), build::zero(Sort::Ball(1)));
        let re = || reip(w(), u());
        let im = || imip(w(), u());
        build::plus(int(4), prod(re(), re()), prod(im(), im()))
    }

    pub fn build_model(&self, s: &EqStructure) -> Result<Model, InterpError> {
        Ok(match self {
            Scheme::Constants => build_marked_constants(s)?.model,
            Scheme::Dynamical => build_dynamical_interpretation(s)?.model,
        })
    }
}

fn translate_literal(l: &Literal, scheme: Scheme) -> Formula {
    match &l.atom {
        Atom::Rel(i, a, b) if !l.negated => scheme.psi(*i, a, b),
        Atom::Rel(i, a, b) => scheme.psi_c(*i, a, b),
        Atom::Eq(a, b) if a == b => c(if l.negated { int(1) } else { int(0) }),
        Atom::Eq(a, b) if !l.negated => d(marked(a), marked(b)),
        Atom::Eq(a, b) => build::not(int(1), d(marked(a), marked(b))),
    }
}

/// ρ* without the gap wrapper.
pub fn translate_matrix(rho: &FOSentence, scheme: Scheme) -> Formula {
    let body = if rho.matrix.is_empty() {
        c(int(1))
    } else {
        min_all(
            rho.matrix
                .iter()
                .map(|conj| max_all(conj.iter().map(|l| translate_literal(l, scheme)).collect()))
                .collect(),
        )
    };
    let mut f = body;
    for (q, v) in rho.prefix.iter().rev() {
        f = match q {
            Quantifier::Forall => sup(v, Sort::Marked, f),
            Quantifier::Exists => build::inf(v, Sort::Marked, f),
        };
    }
    for v in rho.free_variables().iter().rev() {
        f = sup(v, Sort::Marked, f);
    }
    f
}

/// min(gap, ρ*). A matrix that is identically 0 stays the constant 0.
pub fn translate_fo(rho: &FOSentence, scheme: Scheme) -> Formula {
    let body = translate_matrix(rho, scheme);
    if is_const_zero(&body) {
        return c(Rational::zero());
    }
    min(scheme.gap_formula(), body)
}

fn is_const_zero(f: &Formula) -> bool {
    match f {
        Formula::Const(q) => q.is_zero(),
        Formula::Sup(_, _, g) | Formula::Inf(_, _, g) => is_const_zero(g),
        _ => false,
    }
}

// ---------------------------------------------------------------- verification

#[derive(Clone, Debug)]
pub struct ReductionCheck {
    pub fo_truth: bool,
    pub value: RatInterval,
    pub gap: RatInterval,
    pub tol: Rational,
    /// value ≤ tol, the continuous reading of "ρ holds".
    pub predicted: bool,
    pub agree: bool,
    /// The value lies in [0, tol] or in [gap − tol, ∞).
    pub dichotomy: bool,
}

#[derive(Clone, Debug)]
pub enum ReductionOutcome {
    Checked(ReductionCheck),
    /// The gap is not certifiably positive, so the dichotomy carries no
    /// information and the check is declined.
    GapDegenerate { gap: RatInterval },
}

impl ReductionOutcome {
    pub fn agrees(&self) -> Option<bool> {
        match self {
            ReductionOutcome::Checked(c) => Some(c.agree),
            ReductionOutcome::GapDegenerate { .. } => None,
        }
    }
}

/// Enclosure of the scheme's gap value in `model`.
pub fn gap_value(model: &Model, scheme: Scheme) -> Result<RatInterval, InterpError> {
    let mut ev = Evaluator::new(model);
    Ok(ev.certified(&scheme.gap_formula(), &rat(1, 1 << 30))?.interval)
}

/// Evaluates the translation of ρ on the model built from `s` and compares
/// the zero test with the first-order truth of ρ in `s`.
pub fn verify_reduction(s: &EqStructure, rho: &FOSentence, scheme: Scheme, tol: Option<Rational>) -> Result<ReductionOutcome, InterpError> {
    let model = scheme.build_model(s)?;
    verify_on_model(&model, s, rho, scheme, tol, &mut Evaluator::new(&model))
}

/// As `verify_reduction`, for an explicitly given model and evaluator (so
/// that cached subformula values can be shared across sentences).
pub fn verify_on_model(
    model: &Model,
    s: &EqStructure,
    rho: &FOSentence,
    scheme: Scheme,
    tol: Option<Rational>,
    ev: &mut Evaluator,
) -> Result<ReductionOutcome, InterpError> {
    let gap = gap_value(model, scheme)?;
    if !gap.lo().is_positive() {
        return Ok(ReductionOutcome::GapDegenerate { gap });
    }
    let tol = tol.unwrap_or_else(|| gap.lo() / int(4));
    if !tol.is_positive() || tol >= gap.lo() / int(2) {
        return Err(InterpError::BadTolerance { tol: fmt_rational(&tol), gap: fmt_rational(gap.lo()) });
    }
    let f = translate_fo(rho, scheme);
    let value = ev.certified(&f, &tol)?.interval;
    let fo_truth = fo_check(s, rho);
    let predicted = value.hi() <= &tol;
    let dichotomy = predicted || value.lo() >= &(gap.lo() - &tol);
    Ok(ReductionOutcome::Checked(ReductionCheck { fo_truth, value, gap, tol, predicted, agree: predicted == fo_truth, dichotomy }))
}

/// The shipped sentence battery: every prefix of depth 1 and 2 over y1, y2
/// with matrices built from the atoms E1, E2 and =.
pub fn sentence_battery() -> Vec<FOSentence> {
    let lit = |negated: bool, atom: Atom| Literal { negated, atom };
    let (y1, y2) = ("y1".to_string(), "y2".to_string());
    let atoms2 = [
        Atom::Rel(1, y1.clone(), y2.clone()),
        Atom::Rel(2, y1.clone(), y2.clone()),
        Atom::Eq(y1.clone(), y2.clone()),
    ];
    let mut matrices2: Vec<Vec<Vec<Literal>>> = Vec::new();
    for a in &atoms2 {
        for neg in [false, true] {
            matrices2.push(vec![vec![lit(neg, a.clone())]]);
        }
    }
    for i in 0..atoms2.len() {
        for j in i + 1..atoms2.len() {
            for (na, nb) in [(false, false), (false, true), (true, false), (true, true)] {
                matrices2.push(vec![vec![lit(na, atoms2[i].clone()), lit(nb, atoms2[j].clone())]]);
            }
        }
    }
    // E1 xor E2, and y1 = y2 ∨ ¬E1
    matrices2.push(vec![
        vec![lit(false, atoms2[0].clone()), lit(true, atoms2[1].clone())],
        vec![lit(true, atoms2[0].clone()), lit(false, atoms2[1].clone())],
    ]);
    matrices2.push(vec![vec![lit(false, atoms2[2].clone())], vec![lit(true, atoms2[0].clone())]]);

    let mut out = Vec::new();
    for q in [Quantifier::Forall, Quantifier::Exists] {
        for rel in [1u8, 2] {
            for neg in [false, true] {
                out.push(FOSentence {
                    prefix: vec![(q, y1.clone())],
                    matrix: vec![vec![lit(neg, Atom::Rel(rel, y1.clone(), y1.clone()))]],
                });
            }
        }
    }
    for q1 in [Quantifier::Forall, Quantifier::Exists] {
        for q2 in [Quantifier::Forall, Quantifier::Exists] {
            for m in &matrices2 {
                out.push(FOSentence { prefix: vec![(q1, y1.clone()), (q2, y2.clone())], matrix: m.clone() });
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryRow {
    pub structure: String,
    pub sentence: String,
    pub fo_truth: bool,
    pub value: Option<IntervalReport>,
    pub agree: bool,
    pub dichotomy: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BatteryReport {
    pub scheme: Scheme,
    pub rows: Vec<BatteryRow>,
    pub pairs: usize,
    pub failures: usize,
}

/// Runs every battery sentence on every structure of size ≤ `max_size`.
pub fn run_battery(scheme: Scheme, max_size: usize, tol: Option<Rational>) -> Result<BatteryReport, InterpError> {
    let structures = all_structures(max_size);
    let sentences = sentence_battery();
    let per_structure: Result<Vec<Vec<BatteryRow>>, InterpError> = structures
        .par_iter()
        .map(|s| {
            let model = scheme.build_model(s)?;
            let mut ev = Evaluator::new(&model);
            let label = s.to_json();
            sentences
                .iter()
                .map(|rho| {
                    let outcome = verify_on_model(&model, s, rho, scheme, tol.clone(), &mut ev)?;
                    Ok(match outcome {
                        ReductionOutcome::Checked(c) => BatteryRow {
                            structure: label.clone(),
                            sentence: rho.to_string(),
                            fo_truth: c.fo_truth,
                            value: Some(IntervalReport::from(&c.value)),
                            agree: c.agree,
                            dichotomy: c.dichotomy,
                            note: None,
                        },
                        ReductionOutcome::GapDegenerate { gap } => BatteryRow {
                            structure: label.clone(),
                            sentence: rho.to_string(),
                            fo_truth: fo_check(s, rho),
                            value: None,
                            agree: false,
                            dichotomy: false,
                            note: Some(format!("gap-degenerate: gap {gap}")),
                        },
                    })
                })
                .collect()
        })
        .collect();
    let rows: Vec<BatteryRow> = per_structure?.into_iter().flatten().collect();
    let failures = rows.iter().filter(|r| !r.agree || !r.dichotomy).count();
    Ok(BatteryReport { scheme, pairs: rows.len(), failures, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let s = parse_sentence("forall y1 exists y2 . (E1(y1,y2) & !E2(y1,y2)) | y1 = y2").unwrap();
        assert_eq!(s.prefix.len(), 2);
        assert_eq!(s.matrix.len(), 2);
        assert_eq!(parse_sentence(&s.to_string()).unwrap(), s);
        let u = parse_sentence("∀y1 ∃y2 ¬E1(y1,y2) ∨ y1 ≠ y2").unwrap();
        assert_eq!(u.matrix[1][0], Literal { negated: true, atom: Atom::Eq("y1".into(), "y2".into()) });
    }

    #[test]
    fn rejects_non_dnf() {
        assert!(matches!(parse_sentence("forall y1 . !(E1(y1,y1) & E2(y1,y1))"), Err(InterpError::NotDnf(_))));
        assert!(matches!(parse_sentence("forall y1 . E1(y1,y1) & (E2(y1,y1) | y1 = y1)"), Err(InterpError::NotDnf(_))));
    }

    #[test]
    fn oracle_basics() {
        let s = EqStructure::new(2, vec![vec![1], vec![2]], vec![vec![1, 2]]).unwrap();
        assert!(fo_check(&s, &parse_sentence("forall y1 . E1(y1,y1)").unwrap()));
        assert!(!fo_check(&s, &parse_sentence("forall y1 forall y2 . E1(y1,y2)").unwrap()));
        assert!(fo_check(&s, &parse_sentence("exists y1 exists y2 . !E1(y1,y2) & E2(y1,y2)").unwrap()));
    }

    #[test]
    fn trivial_equality_is_zero() {
        let f = translate_fo(&parse_sentence("y1 = y1").unwrap(), Scheme::Constants);
        assert_eq!(f, c(int(0)));
    }

    #[test]
    fn battery_size() {
        assert_eq!(sentence_battery().len(), 8 + 4 * 20);
    }
}
