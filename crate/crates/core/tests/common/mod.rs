//! Shared generators and an independent floating-point evaluator for
//! quantifier-free formulas.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

use contlog::evaluator::Value;
use contlog::formula::{Formula, Sort, Term};
use contlog::model::Model;
use contlog::numeric::rational::{int, rat, to_f64};
use contlog::numeric::{CMatrix, FieldScalar, Rational};

pub fn b1var(n: &str) -> Term {
    Term::Var(n.to_string(), Sort::Ball(1))
}

fn bx(t: Term) -> Box<Term> {
    Box::new(t)
}

fn fx(f: Formula) -> Box<Formula> {
    Box::new(f)
}

/// Gaussian scalar with |c| < 1 (keeps the sort) or 1 ≤ |c| < 2 (doubles it).
fn small_gaussian() -> impl Strategy<Value = FieldScalar> {
    (-3i64..=3, -3i64..=3).prop_map(|(a, b)| FieldScalar::gaussian(rat(a, 5), rat(b, 5)))
}

fn big_gaussian() -> impl Strategy<Value = FieldScalar> {
    (prop_oneof![Just(1i64), Just(-1)], -1i64..=1).prop_map(|(a, b)| FieldScalar::gaussian(rat(6 * a, 5), rat(b, 5)))
}

/// Ball(1) terms over the free vectors x, y, the constant c1 and operator U.
/// With `marked`, qu(q) for the marked variable q also appears.
pub fn term_b1(marked: bool) -> BoxedStrategy<Term> {
    let mut leaves = vec![
        Just(b1var("x")).boxed(),
        Just(b1var("y")).boxed(),
        Just(Term::Zero(Sort::Ball(1))).boxed(),
        Just(Term::Const("c1".into())).boxed(),
    ];
    if marked {
        leaves.push(Just(Term::Qu(bx(Term::Var("q".into(), Sort::Marked)))).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves);
    leaf.prop_recursive(3, 8, 1, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::Apply("U".into(), bx(t))),
            inner.clone().prop_map(|t| Term::ApplyInv("U".into(), bx(t))),
            (small_gaussian(), inner).prop_map(|(c, t)| Term::Scale(c, bx(t))),
        ]
    })
    .boxed()
}

pub fn term_b2(marked: bool) -> BoxedStrategy<Term> {
    prop_oneof![
        (term_b1(marked), term_b1(marked)).prop_map(|(a, b)| Term::Add(bx(a), bx(b))),
        (term_b1(marked), term_b1(marked)).prop_map(|(a, b)| Term::Sub(bx(a), bx(b))),
        (big_gaussian(), term_b1(marked)).prop_map(|(c, t)| Term::Scale(c, bx(t))),
    ]
    .boxed()
}

fn constant() -> impl Strategy<Value = Rational> {
    (-4i64..=8, 1i64..=4).prop_map(|(n, d)| rat(n, d))
}

fn leaf_formula(marked: bool) -> BoxedStrategy<Formula> {
    let mut v = vec![
        (term_b1(marked), term_b1(marked)).prop_map(|(a, b)| Formula::D(a, b)).boxed(),
        (term_b2(marked), term_b2(marked)).prop_map(|(a, b)| Formula::D(a, b)).boxed(),
        (term_b1(marked), term_b1(marked)).prop_map(|(a, b)| Formula::ReIP(a, b)).boxed(),
        (term_b1(marked), term_b1(marked)).prop_map(|(a, b)| Formula::ImIP(a, b)).boxed(),
        (term_b2(marked), term_b2(marked)).prop_map(|(a, b)| Formula::ReIP(a, b)).boxed(),
        constant().prop_map(Formula::Const).boxed(),
    ];
    if marked {
        let q = Term::Var("q".into(), Sort::Marked);
        v.push(Just(Formula::D(q.clone(), q)).boxed());
    }
    proptest::strategy::Union::new(v).boxed()
}

/// Well-sorted formulas of depth ≤ `depth`. With `quantifiers`, inner sup/inf
/// over x or y appear.
pub fn formula(depth: u32, quantifiers: bool, marked: bool) -> BoxedStrategy<Formula> {
    leaf_formula(marked)
        .prop_recursive(depth, 64, 2, move |inner| {
            let mut v = vec![
                inner.clone().prop_map(|f| Formula::Half(fx(f))).boxed(),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::TruncSub(fx(a), fx(b))).boxed(),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Min(fx(a), fx(b))).boxed(),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Max(fx(a), fx(b))).boxed(),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::AbsDiff(fx(a), fx(b))).boxed(),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Prod(fx(a), fx(b))).boxed(),
                (inner.clone(), 0i64..=3)
                    .prop_map(|(f, k)| {
                        let hi = f.range().expect("well sorted").hi().clone();
                        let cap = hi.max(int(0)) + rat(k, 2);
                        Formula::Neg(cap, fx(f))
                    })
                    .boxed(),
                (inner.clone(), inner.clone(), 0i64..=8)
                    .prop_map(|(a, b, k)| Formula::TruncAdd(rat(k, 2), fx(a), fx(b)))
                    .boxed(),
            ];
            if quantifiers {
                v.push(
                    (prop_oneof![Just("x"), Just("y")], any::<bool>(), inner)
                        .prop_map(|(var, is_sup, f)| {
                            if is_sup {
                                Formula::Sup(var.into(), Sort::Ball(1), fx(f))
                            } else {
                                Formula::Inf(var.into(), Sort::Ball(1), fx(f))
                            }
                        })
                        .boxed(),
                );
            }
            proptest::strategy::Union::new(v)
        })
        .boxed()
}

/// Closes a formula over x, y (and q when marked) with random quantifiers.
pub fn closed_formula(depth: u32, marked: bool) -> BoxedStrategy<Formula> {
    (formula(depth, true, marked), any::<[bool; 3]>())
        .prop_map(move |(f, q)| {
            let wrap = |f: Formula, sup: bool, v: &str, s: Sort| {
                if sup {
                    Formula::Sup(v.into(), s, fx(f))
                } else {
                    Formula::Inf(v.into(), s, fx(f))
                }
            };
            let f = wrap(f, q[0], "y", Sort::Ball(1));
            let f = wrap(f, q[1], "x", Sort::Ball(1));
            if marked {
                wrap(f, q[2], "q", Sort::Marked)
            } else {
                f
            }
        })
        .boxed()
}

// ---------------------------------------------------------------- oracle

pub struct Env<'a> {
    pub vars: BTreeMap<String, Vec<Complex64>>,
    pub model: &'a Model,
}

fn mat(m: &CMatrix) -> Vec<Vec<Complex64>> {
    m.to_c64()
}

fn apply(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn eval_term(t: &Term, env: &Env) -> Vec<Complex64> {
    let n = env.model.dim;
    match t {
        Term::Var(name, _) => env.vars[name].clone(),
        Term::Zero(_) => vec![Complex64::new(0.0, 0.0); n],
        Term::Add(a, b) => eval_term(a, env).iter().zip(eval_term(b, env)).map(|(x, y)| x + y).collect(),
        Term::Sub(a, b) => eval_term(a, env).iter().zip(eval_term(b, env)).map(|(x, y)| x - y).collect(),
        Term::Scale(c, t) => {
            let c = c.to_c64();
            eval_term(t, env).iter().map(|x| c * x).collect()
        }
        Term::Apply(u, t) => apply(&mat(&env.model.operators[u]), &eval_term(t, env)),
        Term::ApplyInv(u, t) => apply(&mat(&env.model.operators[u].adjoint()), &eval_term(t, env)),
        Term::Qu(_) => panic!("marked terms are not evaluated by the oracle"),
        Term::Const(name) => env.model.constants[name].iter().map(|x| x.to_c64()).collect(),
    }
}

fn ip(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    norm(v)
}

/// Value of a quantifier-free formula.
pub fn eval_qf(f: &Formula, env: &Env) -> f64 {
    use Formula::*;
    let r = |x: &Rational| to_f64(x);
    match f {
        D(a, b) => {
            let (u, v) = (eval_term(a, env), eval_term(b, env));
            norm(&u.iter().zip(&v).map(|(x, y)| x - y).collect::<Vec<_>>())
        }
        ReIP(a, b) => ip(&eval_term(a, env), &eval_term(b, env)).re,
        ImIP(a, b) => ip(&eval_term(a, env), &eval_term(b, env)).im,
        Const(q) => r(q),
        Half(f) => eval_qf(f, env) / 2.0,
        TruncSub(a, b) => (eval_qf(a, env) - eval_qf(b, env)).max(0.0),
        Min(a, b) => eval_qf(a, env).min(eval_qf(b, env)),
        Max(a, b) => eval_qf(a, env).max(eval_qf(b, env)),
        AbsDiff(a, b) => (eval_qf(a, env) - eval_qf(b, env)).abs(),
        Neg(c, f) => r(c) - eval_qf(f, env),
        TruncAdd(c, a, b) => (eval_qf(a, env) + eval_qf(b, env)).min(r(c)),
        Prod(a, b) => eval_qf(a, env) * eval_qf(b, env),
        Sup(..) | Inf(..) => panic!("quantifier in a quantifier-free oracle call"),
    }
}

/// Random vector of norm ≤ 1 (sometimes exactly on the sphere).
pub fn random_ball_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let len = norm(&v);
    let target: f64 = if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0..1.0) };
    if len > 0.0 {
        let s = target / len * (1.0 - 1e-12);
        v.iter_mut().for_each(|x| *x *= s);
    }
    v
}

pub fn as_value(v: &[Complex64]) -> Value {
    Value::Vector(v.iter().map(|z| (z.re, z.im)).collect())
}

/// A model with operator U and constant c1, in dimension 1, 2 or 3.
pub fn test_model<R: Rng>(n: usize, rng: &mut R) -> Model {
    use contlog::model::gates::random_circuit;
    let u = match n {
        1 => CMatrix::diag(&[[FieldScalar::i(), FieldScalar::from_int(-1), FieldScalar::one()][rng.gen_range(0..3)].clone()]),
        2 => random_circuit(1, rng.gen_range(1..6), rng),
        _ => {
            // permutation times a diagonal of fourth roots of unity
            let roots = [FieldScalar::one(), FieldScalar::i(), FieldScalar::from_int(-1), -FieldScalar::i()];
            let shift = rng.gen_range(0..n);
            let phases: Vec<FieldScalar> = (0..n).map(|_| roots[rng.gen_range(0..4)].clone()).collect();
            CMatrix::from_fn(n, n, |i, j| if (j + shift) % n == i { phases[j].clone() } else { FieldScalar::zero() })
        }
    };
    let mut c = vec![FieldScalar::zero(); n];
    c[0] = FieldScalar::gaussian(rat(1, 2), rat(-1, 3));
    if n > 1 {
        c[n - 1] = FieldScalar::from_rational(rat(2, 3));
    }
    Model::new(n).with_operator("U", u).with_constant("c1", c)
}
