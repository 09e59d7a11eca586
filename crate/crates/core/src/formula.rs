//! Continuous-logic formulas over the dynamical (marked) Hilbert signature.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};

use crate::numeric::rational::{int, rat, scale_factor, sqrt_bracket};
use crate::numeric::{FieldScalar, RatInterval, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    /// Vectors of norm at most n.
    Ball(u32),
    /// The discrete sort of marked basis labels.
    Marked,
}

impl Sort {
    pub fn radius(&self) -> Option<u32> {
        match self {
            Sort::Ball(n) => Some(*n),
            Sort::Marked => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(String, Sort),
    Zero(Sort),
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    /// Scalar multiple by an element of Q[i].
    Scale(FieldScalar, Box<Term>),
    Apply(String, Box<Term>),
    ApplyInv(String, Box<Term>),
    Qu(Box<Term>),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    D(Term, Term),
    ReIP(Term, Term),
    ImIP(Term, Term),
    Const(Rational),
    Half(Box<Formula>),
    TruncSub(Box<Formula>, Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
    AbsDiff(Box<Formula>, Box<Formula>),
    /// cap − f
    Neg(Rational, Box<Formula>),
    /// min(f + g, cap)
    TruncAdd(Rational, Box<Formula>, Box<Formula>),
    Prod(Box<Formula>, Box<Formula>),
    Sup(String, Sort, Box<Formula>),
    Inf(String, Sort, Box<Formula>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("type error at `{node}`: {msg}")]
pub struct TypeError {
    pub node: String,
    pub msg: String,
}

fn terr<T: fmt::Display>(node: &T, msg: impl Into<String>) -> TypeError {
    TypeError { node: node.to_string(), msg: msg.into() }
}

/// Rational upper bound on |c|.
pub fn modulus_upper(c: &FieldScalar) -> Rational {
    let m2 = c.norm_sqr();
    debug_assert!(m2.is_rational());
    let (_, hi) = sqrt_bracket(&m2.a, &rat(1, 1 << 20));
    hi
}

impl Term {
    pub fn sort(&self) -> Result<Sort, TypeError> {
        match self {
            Term::Var(_, s) => Ok(*s),
            Term::Zero(s) => match s {
                Sort::Ball(n) if *n >= 1 => Ok(*s),
                _ => Err(terr(self, "zero vector needs a ball sort")),
            },
            Term::Add(a, b) | Term::Sub(a, b) => {
                let (sa, sb) = (a.sort()?, b.sort()?);
                match (sa, sb) {
                    (Sort::Ball(n), Sort::Ball(m)) if n == m => Ok(Sort::Ball(2 * n)),
                    (Sort::Ball(_), Sort::Ball(_)) => Err(terr(self, "operands of different ball sorts")),
                    _ => Err(terr(self, "vector operation on a marked term")),
                }
            }
            Term::Scale(c, t) => {
                if !c.is_gaussian() {
                    return Err(terr(self, "scalar must lie in Q[i]"));
                }
                match t.sort()? {
                    Sort::Ball(m) => {
                        let k = scale_factor(&c.norm_sqr().a);
                        Ok(Sort::Ball((k as u32).max(1) * m))
                    }
                    Sort::Marked => Err(terr(self, "scaling a marked term")),
                }
            }
            Term::Apply(_, t) | Term::ApplyInv(_, t) => match t.sort()? {
                Sort::Ball(1) => Ok(Sort::Ball(1)),
                _ => Err(terr(self, "operators act on B1 only")),
            },
            Term::Qu(t) => match t.sort()? {
                Sort::Marked => Ok(Sort::Ball(1)),
                _ => Err(terr(self, "qu expects a marked term")),
            },
            Term::Const(_) => Ok(Sort::Ball(1)),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<(String, Sort)>) {
        match self {
            Term::Var(n, s) => {
                out.insert((n.clone(), *s));
            }
            Term::Zero(_) | Term::Const(_) => {}
            Term::Add(a, b) | Term::Sub(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
            Term::Scale(_, t) | Term::Apply(_, t) | Term::ApplyInv(_, t) | Term::Qu(t) => t.free_vars(out),
        }
    }

    pub fn operators(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Apply(u, t) | Term::ApplyInv(u, t) => {
                out.insert(u.clone());
                t.operators(out);
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                a.operators(out);
                b.operators(out);
            }
            Term::Scale(_, t) | Term::Qu(t) => t.operators(out),
            _ => {}
        }
    }

    pub fn constants(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                a.constants(out);
                b.constants(out);
            }
            Term::Scale(_, t) | Term::Apply(_, t) | Term::ApplyInv(_, t) | Term::Qu(t) => t.constants(out),
            _ => {}
        }
    }

    /// Lipschitz constants of the term: per variable, and per operator
    /// (change per unit operator-norm perturbation).
    fn lipschitz(&self) -> Modulus {
        match self {
            Term::Var(n, s) => {
                let mut m = Modulus::default();
                // ‖e_j − e_k‖ = √2 ≤ 3/2 on the marked sort
                let l = if *s == Sort::Marked { rat(3, 2) } else { int(1) };
                m.vars.insert(n.clone(), l);
                m
            }
            Term::Zero(_) | Term::Const(_) => Modulus::default(),
            Term::Add(a, b) | Term::Sub(a, b) => a.lipschitz().plus(&b.lipschitz()),
            Term::Scale(c, t) => t.lipschitz().times(&modulus_upper(c)),
            Term::Apply(u, t) | Term::ApplyInv(u, t) => {
                let mut m = t.lipschitz();
                *m.ops.entry(u.clone()).or_insert_with(Rational::zero) += int(1);
                m
            }
            Term::Qu(t) => t.lipschitz(),
        }
    }

    /// Renames free occurrences of variable `from`.
    pub fn rename(&self, from: &str, to: &str) -> Term {
        match self {
            Term::Var(n, s) if n == from => Term::Var(to.to_string(), *s),
            Term::Add(a, b) => Term::Add(Box::new(a.rename(from, to)), Box::new(b.rename(from, to))),
            Term::Sub(a, b) => Term::Sub(Box::new(a.rename(from, to)), Box::new(b.rename(from, to))),
            Term::Scale(c, t) => Term::Scale(c.clone(), Box::new(t.rename(from, to))),
            Term::Apply(u, t) => Term::Apply(u.clone(), Box::new(t.rename(from, to))),
            Term::ApplyInv(u, t) => Term::ApplyInv(u.clone(), Box::new(t.rename(from, to))),
            Term::Qu(t) => Term::Qu(Box::new(t.rename(from, to))),
            other => other.clone(),
        }
    }
}

/// Forward Lipschitz data for a formula.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Modulus {
    pub vars: BTreeMap<String, Rational>,
    pub ops: BTreeMap<String, Rational>,
}

impl Modulus {
    fn plus(&self, o: &Modulus) -> Modulus {
        let mut out = self.clone();
        for (k, v) in &o.vars {
            *out.vars.entry(k.clone()).or_insert_with(Rational::zero) += v;
        }
        for (k, v) in &o.ops {
            *out.ops.entry(k.clone()).or_insert_with(Rational::zero) += v;
        }
        out
    }

    fn times(&self, q: &Rational) -> Modulus {
        Modulus {
            vars: self.vars.iter().map(|(k, v)| (k.clone(), v * q)).collect(),
            ops: self.ops.iter().map(|(k, v)| (k.clone(), v * q)).collect(),
        }
    }

    fn max_with(&self, o: &Modulus) -> Modulus {
        let mut out = self.clone();
        for (k, v) in &o.vars {
            let e = out.vars.entry(k.clone()).or_insert_with(Rational::zero);
            if v > e {
                *e = v.clone();
            }
        }
        for (k, v) in &o.ops {
            let e = out.ops.entry(k.clone()).or_insert_with(Rational::zero);
            if v > e {
                *e = v.clone();
            }
        }
        out
    }

    pub fn var(&self, name: &str) -> Rational {
        self.vars.get(name).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn op(&self, name: &str) -> Rational {
        self.ops.get(name).cloned().unwrap_or_else(Rational::zero)
    }

    /// Σ_U S_U.
    pub fn total_sensitivity(&self) -> Rational {
        self.ops.values().fold(Rational::zero(), |a, b| a + b)
    }
}

/// A formula node with its value range and annotated children.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranged {
    pub range: RatInterval,
    pub children: Vec<Ranged>,
}

fn mag(iv: &RatInterval) -> Rational {
    let a = iv.lo().abs();
    let b = iv.hi().abs();
    if a > b {
        a
    } else {
        b
    }
}

impl Formula {
    pub fn children(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            D(..) | ReIP(..) | ImIP(..) | Const(_) => vec![],
            Half(f) | Neg(_, f) | Sup(_, _, f) | Inf(_, _, f) => vec![f],
            TruncSub(a, b) | Min(a, b) | Max(a, b) | AbsDiff(a, b) | TruncAdd(_, a, b) | Prod(a, b) => vec![a, b],
        }
    }

    /// Checks sorts and computes the value range of every node.
    pub fn infer_ranges(&self) -> Result<Ranged, TypeError> {
        use Formula::*;
        let leaf = |range: RatInterval| Ok(Ranged { range, children: vec![] });
        let pair = |a: &Formula, b: &Formula| -> Result<(Ranged, Ranged), TypeError> {
            Ok((a.infer_ranges()?, b.infer_ranges()?))
        };
        match self {
            D(s, t) => {
                let (a, b) = (s.sort()?, t.sort()?);
                if a != b {
                    return Err(terr(self, format!("d compares sorts {a:?} and {b:?}")));
                }
                match a {
                    Sort::Ball(n) => leaf(RatInterval::new(int(0), int(2 * n as i64))),
                    Sort::Marked => leaf(RatInterval::new(int(0), int(1))),
                }
            }
            ReIP(s, t) | ImIP(s, t) => {
                let (a, b) = (s.sort()?, t.sort()?);
                if a != b {
                    return Err(terr(self, format!("inner product of sorts {a:?} and {b:?}")));
                }
                match a {
                    Sort::Ball(n) => {
                        let n2 = int(n as i64 * n as i64);
                        leaf(RatInterval::new(-n2.clone(), n2))
                    }
                    Sort::Marked => Err(terr(self, "inner product on the marked sort")),
                }
            }
            Const(q) => leaf(RatInterval::point(q.clone())),
            Half(f) => {
                let c = f.infer_ranges()?;
                Ok(Ranged { range: c.range.scale(&rat(1, 2)), children: vec![c] })
            }
            Neg(cap, f) => {
                let c = f.infer_ranges()?;
                if cap < c.range.hi() {
                    return Err(terr(self, format!("cap {} below operand bound {}", cap, c.range.hi())));
                }
                let r = RatInterval::point(cap.clone()).sub(&c.range);
                Ok(Ranged { range: r, children: vec![c] })
            }
            TruncSub(a, b) | Min(a, b) | Max(a, b) | AbsDiff(a, b) | Prod(a, b) | TruncAdd(_, a, b) => {
                let (x, y) = pair(a, b)?;
                let r = match self {
                    TruncSub(..) => x.range.sub(&y.range).max_with_zero(),
                    Min(..) => x.range.min(&y.range),
                    Max(..) => x.range.max(&y.range),
                    AbsDiff(..) => x.range.sub(&y.range).abs(),
                    Prod(..) => x.range.mul(&y.range),
                    TruncAdd(cap, ..) => x.range.add(&y.range).min(&RatInterval::point(cap.clone())),
                    _ => unreachable!(),
                };
                Ok(Ranged { range: r, children: vec![x, y] })
            }
            Sup(v, s, f) | Inf(v, s, f) => {
                if let Sort::Ball(0) = s {
                    return Err(terr(self, "ball sorts start at B1"));
                }
                let c = f.infer_ranges()?;
                let _ = v;
                Ok(Ranged { range: c.range.clone(), children: vec![c] })
            }
        }
    }

    pub fn range(&self) -> Result<RatInterval, TypeError> {
        Ok(self.infer_ranges()?.range)
    }

    /// Forward Lipschitz constants per free variable and operator sensitivities.
    pub fn modulus(&self) -> Result<Modulus, TypeError> {
        let r = self.infer_ranges()?;
        Ok(self.modulus_with(&r))
    }

    fn modulus_with(&self, r: &Ranged) -> Modulus {
        use Formula::*;
        match self {
            D(s, t) => {
                if s.sort() == Ok(Sort::Marked) {
                    // discrete metric, 1-Lipschitz in each argument
                    let mut m = Modulus::default();
                    let mut vs = BTreeSet::new();
                    s.free_vars(&mut vs);
                    t.free_vars(&mut vs);
                    for (v, _) in vs {
                        m.vars.insert(v, int(1));
                    }
                    return m;
                }
                s.lipschitz().plus(&t.lipschitz())
            }
            ReIP(s, t) | ImIP(s, t) => {
                let n = s.sort().ok().and_then(|x| x.radius()).unwrap_or(1);
                s.lipschitz().plus(&t.lipschitz()).times(&int(n as i64))
            }
            Const(_) => Modulus::default(),
            Half(f) => f.modulus_with(&r.children[0]).times(&rat(1, 2)),
            Neg(_, f) => f.modulus_with(&r.children[0]),
            TruncSub(a, b) | AbsDiff(a, b) | TruncAdd(_, a, b) => {
                a.modulus_with(&r.children[0]).plus(&b.modulus_with(&r.children[1]))
            }
            Min(a, b) | Max(a, b) => {
                a.modulus_with(&r.children[0]).max_with(&b.modulus_with(&r.children[1]))
            }
            Prod(a, b) => {
                let ma = a.modulus_with(&r.children[0]).times(&mag(&r.children[1].range));
                let mb = b.modulus_with(&r.children[1]).times(&mag(&r.children[0].range));
                ma.plus(&mb)
            }
            Sup(v, _, f) | Inf(v, _, f) => {
                let mut m = f.modulus_with(&r.children[0]);
                m.vars.remove(v);
                m
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<(String, Sort)> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<(String, Sort)>) {
        use Formula::*;
        match self {
            D(s, t) | ReIP(s, t) | ImIP(s, t) => {
                s.free_vars(out);
                t.free_vars(out);
            }
            Sup(v, s, f) | Inf(v, s, f) => {
                let mut inner = BTreeSet::new();
                f.collect_free(&mut inner);
                inner.remove(&(v.clone(), *s));
                out.extend(inner);
            }
            _ => {
                for c in self.children() {
                    c.collect_free(out);
                }
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn operators(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_terms(&mut |t| t.operators(&mut out));
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk_terms(&mut |t| t.constants(&mut out));
        out
    }

    pub fn walk_terms(&self, f: &mut dyn FnMut(&Term)) {
        use Formula::*;
        match self {
            D(s, t) | ReIP(s, t) | ImIP(s, t) => {
                f(s);
                f(t);
            }
            _ => {
                for c in self.children() {
                    c.walk_terms(f);
                }
            }
        }
    }

    /// Number of nested quantifiers on the deepest path.
    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::Sup(_, _, f) | Formula::Inf(_, _, f) => 1 + f.quantifier_depth(),
            _ => self.children().iter().map(|c| c.quantifier_depth()).max().unwrap_or(0),
        }
    }

    /// Renames free occurrences of a variable.
    pub fn rename(&self, from: &str, to: &str) -> Formula {
        use Formula::*;
        let r = |f: &Formula| Box::new(f.rename(from, to));
        match self {
            D(s, t) => D(s.rename(from, to), t.rename(from, to)),
            ReIP(s, t) => ReIP(s.rename(from, to), t.rename(from, to)),
            ImIP(s, t) => ImIP(s.rename(from, to), t.rename(from, to)),
            Const(q) => Const(q.clone()),
            Half(f) => Half(r(f)),
            Neg(c, f) => Neg(c.clone(), r(f)),
            TruncSub(a, b) => TruncSub(r(a), r(b)),
            Min(a, b) => Min(r(a), r(b)),
            Max(a, b) => Max(r(a), r(b)),
            AbsDiff(a, b) => AbsDiff(r(a), r(b)),
            TruncAdd(c, a, b) => TruncAdd(c.clone(), r(a), r(b)),
            Prod(a, b) => Prod(r(a), r(b)),
            Sup(v, s, f) if v == from => Sup(v.clone(), *s, f.clone()),
            Inf(v, s, f) if v == from => Inf(v.clone(), *s, f.clone()),
            Sup(v, s, f) => Sup(v.clone(), *s, r(f)),
            Inf(v, s, f) => Inf(v.clone(), *s, r(f)),
        }
    }
}

/// Short constructors.
pub mod build {
    use super::*;

    pub fn var(n: &str, s: Sort) -> Term {
        Term::Var(n.to_string(), s)
    }
    pub fn b1(n: &str) -> Term {
        var(n, Sort::Ball(1))
    }
    pub fn zero(s: Sort) -> Term {
        Term::Zero(s)
    }
    pub fn apply(u: &str, t: Term) -> Term {
        Term::Apply(u.to_string(), Box::new(t))
    }
    pub fn apply_inv(u: &str, t: Term) -> Term {
        Term::ApplyInv(u.to_string(), Box::new(t))
    }
    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }
    pub fn sub(a: Term, b: Term) -> Term {
        Term::Sub(Box::new(a), Box::new(b))
    }
    pub fn qu(t: Term) -> Term {
        Term::Qu(Box::new(t))
    }
    pub fn cst(n: &str) -> Term {
        Term::Const(n.to_string())
    }
    /// Word w = [i1, ..., ik] applied as U_{i1}(U_{i2}(...U_{ik}(t))); negative
    /// letters are inverses.
    pub fn word(w: &[i32], t: Term) -> Term {
        let mut out = t;
        for &l in w.iter().rev() {
            let name = format!("U{}", l.unsigned_abs());
            out = if l > 0 { apply(&name, out) } else { apply_inv(&name, out) };
        }
        out
    }

    pub fn d(a: Term, b: Term) -> Formula {
        Formula::D(a, b)
    }
    pub fn reip(a: Term, b: Term) -> Formula {
        Formula::ReIP(a, b)
    }
    pub fn imip(a: Term, b: Term) -> Formula {
        Formula::ImIP(a, b)
    }
    pub fn q(n: i64, d: i64) -> Formula {
        Formula::Const(rat(n, d))
    }
    pub fn c(x: Rational) -> Formula {
        Formula::Const(x)
    }
    pub fn half(f: Formula) -> Formula {
        Formula::Half(Box::new(f))
    }
    pub fn tsub(a: Formula, b: Formula) -> Formula {
        Formula::TruncSub(Box::new(a), Box::new(b))
    }
    pub fn min(a: Formula, b: Formula) -> Formula {
        Formula::Min(Box::new(a), Box::new(b))
    }
    pub fn max(a: Formula, b: Formula) -> Formula {
        Formula::Max(Box::new(a), Box::new(b))
    }
    pub fn adiff(a: Formula, b: Formula) -> Formula {
        Formula::AbsDiff(Box::new(a), Box::new(b))
    }
    pub fn not(cap: Rational, f: Formula) -> Formula {
        Formula::Neg(cap, Box::new(f))
    }
    pub fn plus(cap: Rational, a: Formula, b: Formula) -> Formula {
        Formula::TruncAdd(cap, Box::new(a), Box::new(b))
    }
    pub fn prod(a: Formula, b: Formula) -> Formula {
        Formula::Prod(Box::new(a), Box::new(b))
    }
    pub fn sup(v: &str, s: Sort, f: Formula) -> Formula {
        Formula::Sup(v.to_string(), s, Box::new(f))
    }
    pub fn inf(v: &str, s: Sort, f: Formula) -> Formula {
        Formula::Inf(v.to_string(), s, Box::new(f))
    }

    /// max over a nonempty list, 0 for the empty list.
    pub fn max_all(mut fs: Vec<Formula>) -> Formula {
        if fs.is_empty() {
            return q(0, 1);
        }
        let mut acc = fs.remove(0);
        for f in fs {
            acc = max(acc, f);
        }
        acc
    }

    pub fn min_all(mut fs: Vec<Formula>) -> Formula {
        if fs.is_empty() {
            return q(0, 1);
        }
        let mut acc = fs.remove(0);
        for f in fs {
            acc = min(acc, f);
        }
        acc
    }
}
