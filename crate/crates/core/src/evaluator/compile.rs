//! Lowering of formulas to an arena with resolved variables, operator
//! indices, parameter layouts and precomputed fast paths.

use std::collections::BTreeSet;

use crate::formula::{Formula, Sort, Term};
use crate::model::Model;
use crate::numeric::{CIval, CMatrix, Ival};

use super::EvalError;

pub(crate) type NId = usize;

/// Model data in the form the engine consumes.
pub(crate) struct Prepared {
    pub dim: usize,
    pub op_names: Vec<String>,
    pub ops: Vec<[Vec<Vec<CIval>>; 2]>,
    pub op_exact: Vec<CMatrix>,
    pub const_names: Vec<String>,
    pub consts: Vec<Vec<CIval>>,
    pub marked: bool,
}

impl Prepared {
    pub fn new(m: &Model) -> Prepared {
        let mut op_names = vec![];
        let mut ops = vec![];
        let mut op_exact = vec![];
        for (name, u) in &m.operators {
            op_names.push(name.clone());
            ops.push([u.to_cival(), u.adjoint().to_cival()]);
            op_exact.push(u.clone());
        }
        let mut const_names = vec![];
        let mut consts = vec![];
        for (name, v) in &m.constants {
            const_names.push(name.clone());
            consts.push(v.iter().map(|x| x.to_cival()).collect());
        }
        Prepared { dim: m.dim, op_names, ops, op_exact, const_names, consts, marked: m.marked.is_some() }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum CTerm {
    Var(usize),
    Zero,
    Add(Box<CTerm>, Box<CTerm>, f64),
    Sub(Box<CTerm>, Box<CTerm>, f64),
    Scale(CIval, Box<CTerm>, f64),
    Apply(usize, bool, Box<CTerm>),
    Qu(usize),
    Const(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Coord {
    Zero,
    /// Real coordinate given by one parameter.
    Real(usize),
    Complex(usize, usize),
}

/// How a ball variable is parameterized: complex coordinates in terms of
/// parameter offsets, and the root box of each parameter.
#[derive(Clone, Debug)]
pub(crate) struct Layout {
    pub coords: Vec<Coord>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub radius: f64,
}

impl Layout {
    pub fn nparams(&self) -> usize {
        self.lo.len()
    }

    fn build(dim: usize, radius: u32, uinv_level: Option<usize>, phase: bool) -> Layout {
        let n = radius as f64;
        let mut kinds = vec![0u8; dim]; // 0 zero, 1 real ≥ 0, 2 real, 3 complex
        match uinv_level {
            Some(k) if k <= dim => {
                for kd in kinds.iter_mut().take(k - 1) {
                    *kd = 3;
                }
                kinds[k - 1] = 1;
                if phase && k >= 2 {
                    kinds[0] = 1;
                }
            }
            _ => {
                for kd in kinds.iter_mut() {
                    *kd = 3;
                }
                if phase {
                    kinds[0] = 1;
                }
            }
        }
        let mut coords = vec![];
        let (mut lo, mut hi) = (vec![], vec![]);
        for k in kinds {
            match k {
                0 => coords.push(Coord::Zero),
                1 | 2 => {
                    coords.push(Coord::Real(lo.len()));
                    lo.push(if k == 1 { 0.0 } else { -n });
                    hi.push(n);
                }
                _ => {
                    coords.push(Coord::Complex(lo.len(), lo.len() + 1));
                    lo.extend([-n, -n]);
                    hi.extend([n, n]);
                }
            }
        }
        Layout { coords, lo, hi, radius: n }
    }

    /// Full layout without slicing.
    pub fn full(dim: usize, radius: u32) -> Layout {
        Layout::build(dim, radius, None, false)
    }

    /// Complex coordinates of a parameter point.
    pub fn to_vector(&self, p: &[f64]) -> Vec<(f64, f64)> {
        self.coords
            .iter()
            .map(|c| match *c {
                Coord::Zero => (0.0, 0.0),
                Coord::Real(i) => (p[i], 0.0),
                Coord::Complex(i, j) => (p[i], p[j]),
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct QBall {
    pub sup: bool,
    pub name: String,
    pub body: NId,
    pub layout: Layout,
    /// Exact A with s − t = A·x when the body is d(s, t) linear in x alone.
    pub fast: Option<CMatrix>,
    pub key: String,
    pub free: Vec<usize>,
}

#[derive(Clone, Debug)]
pub(crate) enum NKind {
    Dist(CTerm, CTerm, f64),
    DistMarked(usize, usize),
    Ip { real: bool, s: CTerm, t: CTerm, same: bool },
    Const(Ival),
    Half(NId),
    TSub(NId, NId),
    Min(NId, NId),
    Max(NId, NId),
    AbsDiff(NId, NId),
    Neg(Ival, NId),
    TAdd(Ival, NId, NId),
    Prod(NId, NId, bool),
    QBall(Box<QBall>),
    QMarked { sup: bool, name: String, body: NId },
}

#[derive(Clone, Debug)]
pub(crate) struct Node {
    pub kind: NKind,
    pub range: Ival,
}

pub(crate) struct Program {
    pub nodes: Vec<Node>,
    pub root: NId,
}

pub(crate) struct CompileOptions {
    pub slicing: bool,
    pub fast_path: bool,
}

struct Compiler<'a> {
    prep: &'a Prepared,
    opts: &'a CompileOptions,
    uinv: bool,
    nodes: Vec<Node>,
    scope: Vec<(String, Sort)>,
}

/// Whether the term only involves x linearly (leaves are x or zero).
fn homog(t: &Term, x: &str) -> bool {
    match t {
        Term::Var(n, _) => n == x,
        Term::Zero(_) => true,
        Term::Add(a, b) | Term::Sub(a, b) => homog(a, x) && homog(b, x),
        Term::Scale(_, a) | Term::Apply(_, a) | Term::ApplyInv(_, a) => homog(a, x),
        Term::Qu(_) | Term::Const(_) => false,
    }
}

fn mentions(t: &Term, x: &str) -> bool {
    let mut s = BTreeSet::new();
    t.free_vars(&mut s);
    s.iter().any(|(n, _)| n == x)
}

fn atom_invariant(s: &Term, t: &Term, x: &str) -> bool {
    let (ms, mt) = (mentions(s, x), mentions(t, x));
    (!ms && !mt) || (homog(s, x) && homog(t, x))
}

/// |⟨s,t⟩|² written as plus[c](reip(s,t)*reip(s,t), imip(s,t)*imip(s,t)).
fn squared_modulus(a: &Formula, b: &Formula, x: &str) -> bool {
    let sq = |f: &Formula| -> Option<(bool, Term, Term)> {
        if let Formula::Prod(p, q) = f {
            if p == q {
                match &**p {
                    Formula::ReIP(s, t) => return Some((true, s.clone(), t.clone())),
                    Formula::ImIP(s, t) => return Some((false, s.clone(), t.clone())),
                    _ => {}
                }
            }
        }
        None
    };
    match (sq(a), sq(b)) {
        (Some((ra, sa, ta)), Some((rb, sb, tb))) if ra != rb && sa == sb && ta == tb => {
            let side = |u: &Term| homog(u, x) || !mentions(u, x);
            side(&sa) && side(&ta)
        }
        _ => false,
    }
}

/// Invariance of the formula under x ↦ e^{iθ}x.
pub(crate) fn phase_invariant(f: &Formula, x: &str) -> bool {
    use Formula::*;
    match f {
        D(s, t) | ReIP(s, t) | ImIP(s, t) => atom_invariant(s, t, x),
        Const(_) => true,
        TruncAdd(_, a, b) if squared_modulus(a, b, x) => true,
        Sup(v, _, g) | Inf(v, _, g) => v == x || phase_invariant(g, x),
        _ => f.children().iter().all(|g| phase_invariant(g, x)),
    }
}

/// Exact matrix of a term that is linear in x alone.
fn linear_matrix(t: &Term, x: &str, prep: &Prepared) -> Option<CMatrix> {
    let dim = prep.dim;
    match t {
        Term::Var(n, _) if n == x => Some(CMatrix::identity(dim)),
        Term::Zero(_) => Some(CMatrix::zeros(dim, dim)),
        Term::Add(a, b) => linear_matrix(a, x, prep)?.add(&linear_matrix(b, x, prep)?).ok(),
        Term::Sub(a, b) => linear_matrix(a, x, prep)?.sub(&linear_matrix(b, x, prep)?).ok(),
        Term::Scale(c, a) => Some(linear_matrix(a, x, prep)?.scale(c)),
        Term::Apply(u, a) | Term::ApplyInv(u, a) => {
            let i = prep.op_names.iter().position(|n| n == u)?;
            let m = &prep.op_exact[i];
            let m = if matches!(t, Term::ApplyInv(..)) { m.adjoint() } else { m.clone() };
            m.mul(&linear_matrix(a, x, prep)?).ok()
        }
        _ => None,
    }
}

fn ival_of(q: &crate::numeric::Rational) -> Ival {
    Ival::from_rational(q)
}

fn range_ival(f: &Formula) -> Result<Ival, EvalError> {
    let r = f.range().map_err(EvalError::Type)?;
    Ok(Ival::new(Ival::from_rational(r.lo()).lo, Ival::from_rational(r.hi()).hi))
}

impl<'a> Compiler<'a> {
    fn lookup(&self, name: &str) -> Result<(usize, Sort), EvalError> {
        self.scope
            .iter()
            .rposition(|(n, _)| n == name)
            .map(|i| (i, self.scope[i].1))
            .ok_or_else(|| EvalError::Unbound(name.to_string()))
    }

    fn term(&self, t: &Term) -> Result<CTerm, EvalError> {
        let nmax = |t: &Term| -> f64 {
            match t.sort() {
                Ok(Sort::Ball(n)) => n as f64,
                _ => 1.0,
            }
        };
        Ok(match t {
            Term::Var(n, _) => CTerm::Var(self.lookup(n)?.0),
            Term::Zero(_) => CTerm::Zero,
            Term::Add(a, b) => CTerm::Add(Box::new(self.term(a)?), Box::new(self.term(b)?), nmax(t)),
            Term::Sub(a, b) => CTerm::Sub(Box::new(self.term(a)?), Box::new(self.term(b)?), nmax(t)),
            Term::Scale(c, a) => CTerm::Scale(c.to_cival(), Box::new(self.term(a)?), nmax(t)),
            Term::Apply(u, a) | Term::ApplyInv(u, a) => {
                let i = self
                    .prep
                    .op_names
                    .iter()
                    .position(|n| n == u)
                    .ok_or_else(|| EvalError::UnknownOperator(u.clone()))?;
                CTerm::Apply(i, matches!(t, Term::ApplyInv(..)), Box::new(self.term(a)?))
            }
            Term::Qu(a) => match &**a {
                Term::Var(n, _) => CTerm::Qu(self.lookup(n)?.0),
                _ => return Err(EvalError::Unsupported("qu of a non-variable term".into())),
            },
            Term::Const(c) => CTerm::Const(
                self.prep
                    .const_names
                    .iter()
                    .position(|n| n == c)
                    .ok_or_else(|| EvalError::UnknownConstant(c.clone()))?,
            ),
        })
    }

    fn push(&mut self, kind: NKind, f: &Formula) -> Result<NId, EvalError> {
        let range = range_ival(f)?;
        self.nodes.push(Node { kind, range });
        Ok(self.nodes.len() - 1)
    }

    fn free_slots(&self, f: &Formula) -> Result<Vec<usize>, EvalError> {
        f.free_vars().iter().map(|(n, _)| self.lookup(n).map(|x| x.0)).collect()
    }

    fn ball_level(&self) -> usize {
        1 + self.scope.iter().filter(|(_, s)| matches!(s, Sort::Ball(_))).count()
    }

    fn formula(&mut self, f: &Formula) -> Result<NId, EvalError> {
        use Formula::*;
        let kind = match f {
            D(s, t) => {
                if s.sort().map_err(EvalError::Type)? == Sort::Marked {
                    let slot = |u: &Term| match u {
                        Term::Var(n, _) => self.lookup(n).map(|x| x.0),
                        _ => Err(EvalError::Unsupported("marked term".into())),
                    };
                    NKind::DistMarked(slot(s)?, slot(t)?)
                } else {
                    let n = match s.sort().map_err(EvalError::Type)? {
                        Sort::Ball(n) => 2.0 * n as f64,
                        Sort::Marked => 1.0,
                    };
                    NKind::Dist(self.term(s)?, self.term(t)?, n)
                }
            }
            ReIP(s, t) | ImIP(s, t) => NKind::Ip {
                real: matches!(f, ReIP(..)),
                s: self.term(s)?,
                t: self.term(t)?,
                same: s == t,
            },
            Const(q) => NKind::Const(ival_of(q)),
            Half(a) => NKind::Half(self.formula(a)?),
            TruncSub(a, b) => NKind::TSub(self.formula(a)?, self.formula(b)?),
            Min(a, b) => NKind::Min(self.formula(a)?, self.formula(b)?),
            Max(a, b) => NKind::Max(self.formula(a)?, self.formula(b)?),
            AbsDiff(a, b) => NKind::AbsDiff(self.formula(a)?, self.formula(b)?),
            Neg(c, a) => NKind::Neg(ival_of(c), self.formula(a)?),
            TruncAdd(c, a, b) => NKind::TAdd(ival_of(c), self.formula(a)?, self.formula(b)?),
            Prod(a, b) => NKind::Prod(self.formula(a)?, self.formula(b)?, a == b),
            Sup(v, s, body) | Inf(v, s, body) => {
                let sup = matches!(f, Sup(..));
                match s {
                    Sort::Marked => {
                        if !self.prep.marked {
                            return Err(EvalError::NotMarked);
                        }
                        self.scope.push((v.clone(), *s));
                        let b = self.formula(body);
                        self.scope.pop();
                        NKind::QMarked { sup, name: v.clone(), body: b? }
                    }
                    Sort::Ball(n) => {
                        let free = self.free_slots(f)?;
                        let key = crate::parser::print(f);
                        let level = if self.uinv && self.opts.slicing { Some(self.ball_level()) } else { None };
                        let phase = self.opts.slicing && phase_invariant(body, v);
                        let layout = Layout::build(self.prep.dim, *n, level, phase);
                        let fast = match &**body {
                            D(a, b) if self.opts.fast_path && homog(a, v) && homog(b, v) => {
                                let ma = linear_matrix(a, v, self.prep);
                                let mb = linear_matrix(b, v, self.prep);
                                match (ma, mb) {
                                    (Some(x), Some(y)) => x.sub(&y).ok(),
                                    _ => None,
                                }
                            }
                            _ => None,
                        };
                        self.scope.push((v.clone(), *s));
                        let b = self.formula(body);
                        self.scope.pop();
                        NKind::QBall(Box::new(QBall {
                            sup,
                            name: v.clone(),
                            body: b?,
                            layout,
                            fast,
                            key,
                            free,
                        }))
                    }
                }
            }
        };
        self.push(kind, f)
    }
}

/// Whether the formula is invariant under a simultaneous unitary change of
/// all vector variables.
pub(crate) fn unitarily_invariant(f: &Formula) -> bool {
    let mut ok = f.operators().is_empty() && f.constants().is_empty();
    f.walk_terms(&mut |t| {
        if matches!(t, Term::Qu(_)) || t.sort() == Ok(Sort::Marked) {
            ok = false;
        }
    });
    fn no_marked(f: &Formula) -> bool {
        match f {
            Formula::Sup(_, Sort::Marked, _) | Formula::Inf(_, Sort::Marked, _) => false,
            _ => f.children().iter().all(|g| no_marked(g)),
        }
    }
    ok && no_marked(f)
}

/// Compiles `f` with the given free variables in scope (slots 0..).
pub(crate) fn compile(
    f: &Formula,
    prep: &Prepared,
    scope: &[(String, Sort)],
    opts: &CompileOptions,
) -> Result<Program, EvalError> {
    let uinv = scope.is_empty() && unitarily_invariant(f);
    let mut c = Compiler { prep, opts, uinv, nodes: vec![], scope: scope.to_vec() };
    let root = c.formula(f)?;
    Ok(Program { nodes: c.nodes, root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    #[test]
    fn phase_detection() {
        let f = parse("sup x:B1 . d(U(x), x)").unwrap();
        if let Formula::Sup(_, _, b) = &f {
            assert!(phase_invariant(b, "x"));
        }
        let g = parse("sup y:B1 . sup x:B1 . reip(x, y)").unwrap();
        if let Formula::Sup(_, _, b) = &g {
            assert!(!phase_invariant(b, "y"));
        }
        let h = parse("sup y:B1 . sup x:B1 . plus[2](reip(x,y)*reip(x,y), imip(x,y)*imip(x,y))").unwrap();
        if let Formula::Sup(_, _, b) = &h {
            assert!(phase_invariant(b, "y"));
        }
    }

    #[test]
    fn layouts() {
        let l = Layout::build(3, 1, Some(1), true);
        assert_eq!(l.nparams(), 1);
        let l = Layout::build(3, 1, Some(2), true);
        assert_eq!(l.coords, vec![Coord::Real(0), Coord::Real(1), Coord::Zero]);
        let l = Layout::build(2, 1, Some(3), true);
        assert_eq!(l.nparams(), 3);
        let l = Layout::build(2, 2, None, false);
        assert_eq!(l.nparams(), 4);
        assert_eq!(l.lo[0], -2.0);
    }
}
