mod common;

use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{as_value, eval_qf, eval_term, random_ball_vector, test_model, vec_norm, Env};
use contlog::evaluator::eval_point;
use contlog::formula::build::*;
use contlog::formula::{Formula, Sort, Term};
use contlog::model::Model;
use contlog::numeric::rational::{int, rat, to_f64};
use contlog::numeric::{CMatrix, FieldScalar, RatInterval};
use contlog::parser::parse;

fn iv(lo: (i64, i64), hi: (i64, i64)) -> RatInterval {
    RatInterval::new(rat(lo.0, lo.1), rat(hi.0, hi.1))
}

#[test]
fn range_examples() {
    let disp = parse("sup v:B1 . d(U1(v), v)").unwrap();
    assert_eq!(disp.range().unwrap(), iv((0, 1), (2, 1)));
    let f = sup("v", Sort::Ball(2), d(b2("v"), zero(Sort::Ball(2))));
    assert_eq!(f.range().unwrap(), iv((0, 1), (4, 1)));
    let ip = sup("v", Sort::Ball(1), reip(b1("v"), b1("v")));
    assert_eq!(ip.range().unwrap(), iv((-1, 1), (1, 1)));
    assert_eq!(half(q(3, 1)).range().unwrap(), iv((3, 2), (3, 2)));
    assert_eq!(not(int(2), d(b1("v"), b1("w"))).range().unwrap(), iv((0, 1), (2, 1)));
    assert_eq!(plus(int(1), q(1, 2), d(b1("v"), b1("w"))).range().unwrap(), iv((1, 2), (1, 1)));
    assert_eq!(tsub(q(1, 1), d(b1("v"), b1("w"))).range().unwrap(), iv((0, 1), (1, 1)));
    assert_eq!(adiff(q(1, 1), d(b1("v"), b1("w"))).range().unwrap(), iv((0, 1), (1, 1)));
    assert_eq!(prod(reip(b1("v"), b1("w")), q(3, 1)).range().unwrap(), iv((-3, 1), (3, 1)));
    let marked = d(var("p", Sort::Marked), var("q", Sort::Marked));
    assert_eq!(marked.range().unwrap(), iv((0, 1), (1, 1)));
}

fn b2(n: &str) -> Term {
    var(n, Sort::Ball(2))
}

#[test]
fn modulus_examples() {
    let f = d(apply("U1", b1("v")), b1("v"));
    let m = f.modulus().unwrap();
    assert_eq!(m.var("v"), int(2));
    assert_eq!(m.op("U1"), int(1));
    let g = parse("sup v:B1 . d(U1(U1(v)), v)").unwrap();
    let m = g.modulus().unwrap();
    assert_eq!(m.var("v"), int(0));
    assert_eq!(m.op("U1"), int(2));
    let h = reip(b2("v"), b2("w"));
    let m = h.modulus().unwrap();
    assert_eq!(m.var("v"), int(2));
    assert_eq!(m.var("w"), int(2));
    let p = prod(half(d(b1("v"), b1("w"))), q(3, 1));
    assert_eq!(p.modulus().unwrap().var("v"), rat(3, 2));
}

#[test]
fn free_variables_and_closure() {
    let f = sup("v", Sort::Ball(1), d(apply("U1", b1("v")), b1("w")));
    let fv: Vec<_> = f.free_vars().into_iter().collect();
    assert_eq!(fv, vec![("w".to_string(), Sort::Ball(1))]);
    assert!(!f.is_closed());
    // unbound identifiers in source text are model constants
    assert!(parse("sup v:B1 . d(U1(v), w)").unwrap().is_closed());
    assert!(parse("inf w:B1 . sup v:B1 . d(U1(v), w)").unwrap().is_closed());
    assert_eq!(f.operators().into_iter().collect::<Vec<_>>(), vec!["U1".to_string()]);
}

fn assignment(xs: &[(&str, &Vec<Complex64>)]) -> BTreeMap<String, contlog::evaluator::Value> {
    xs.iter().map(|(n, v)| (n.to_string(), as_value(v))).collect()
}

fn env<'a>(model: &'a Model, x: &[Complex64], y: &[Complex64]) -> Env<'a> {
    let mut vars = BTreeMap::new();
    vars.insert("x".to_string(), x.to_vec());
    vars.insert("y".to_string(), y.to_vec());
    Env { vars, model }
}

const SLACK: f64 = 1e-9;

/// 1000 random triples (formula, model of dimension ≤ 3, assignment).
#[test]
fn values_lie_in_the_syntactic_range() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strat = common::formula(5, false, false);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eps = rat(1, 1000);
    for k in 0..1000 {
        let f = strat.new_tree(&mut runner).unwrap().current();
        let n = 1 + k % 3;
        let model = test_model(n, &mut rng);
        let x = random_ball_vector(n, &mut rng);
        let y = random_ball_vector(n, &mut rng);
        let val = eval_qf(&f, &env(&model, &x, &y));
        let range = f.range().unwrap();
        assert!(
            to_f64(range.lo()) - SLACK <= val && val <= to_f64(range.hi()) + SLACK,
            "{f:?}: {val} outside {range}"
        );
        let mut a = assignment(&[("x", &x), ("y", &y)]);
        a.retain(|name, _| f.free_vars().iter().any(|(v, _)| v == name));
        let enc = eval_point(&f, &model, &a, &eps).unwrap();
        assert!(
            to_f64(enc.lo()) - SLACK <= val && val <= to_f64(enc.hi()) + SLACK,
            "{f:?}: oracle {val} outside point enclosure {enc}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ball_terms_stay_in_their_balls(t1 in common::term_b1(false), t2 in common::term_b2(false), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let model = test_model(n, &mut rng);
        let x = random_ball_vector(n, &mut rng);
        let y = random_ball_vector(n, &mut rng);
        let e = env(&model, &x, &y);
        prop_assert_eq!(t1.sort(), Ok(Sort::Ball(1)));
        prop_assert_eq!(t2.sort(), Ok(Sort::Ball(2)));
        prop_assert!(vec_norm(&eval_term(&t1, &e)) <= 1.0 + SLACK);
        prop_assert!(vec_norm(&eval_term(&t2, &e)) <= 2.0 + SLACK);
    }

    /// |f(x) − f(x')| ≤ L_x · ‖x − x'‖.
    #[test]
    fn variable_modulus_bounds_variation(f in common::formula(4, false, false), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let model = test_model(n, &mut rng);
        let x = random_ball_vector(n, &mut rng);
        let y = random_ball_vector(n, &mut rng);
        let scale = 10f64.powi(-rng.gen_range(0..4));
        let delta = random_ball_vector(n, &mut rng);
        let mut x2: Vec<Complex64> = x.iter().zip(&delta).map(|(a, b)| a + b * scale).collect();
        let len = vec_norm(&x2);
        if len > 1.0 {
            x2.iter_mut().for_each(|z| *z /= len);
        }
        let m = f.modulus().unwrap();
        let v1 = eval_qf(&f, &env(&model, &x, &y));
        let v2 = eval_qf(&f, &env(&model, &x2, &y));
        let dist = vec_norm(&x.iter().zip(&x2).map(|(a, b)| a - b).collect::<Vec<_>>());
        let bound = to_f64(&m.var("x")) * dist;
        prop_assert!((v1 - v2).abs() <= bound + SLACK, "Δ = {} > {}", (v1 - v2).abs(), bound);
    }

    /// |f^M(U) − f^M(U')| ≤ S_U · ‖U − U'‖ for unitary U' = U · diag(phase, 1, ...).
    #[test]
    fn operator_sensitivity_bounds_variation(f in common::formula(4, false, false), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let model = test_model(n, &mut rng);
        let x = random_ball_vector(n, &mut rng);
        let y = random_ball_vector(n, &mut rng);
        // (m² − 1 + 2mi)/(m² + 1) is a rational point on the unit circle near 1
        let k: i64 = rng.gen_range(1..40);
        let phase = FieldScalar::gaussian(rat(k * k - 1, k * k + 1), rat(2 * k, k * k + 1));
        let col = rng.gen_range(0..n);
        let rot = CMatrix::from_fn(n, n, |i, j| {
            if i != j { FieldScalar::zero() } else if i == col { phase.clone() } else { FieldScalar::one() }
        });
        let u = model.operators["U"].clone();
        let u2 = u.mul(&rot).unwrap();
        let shifted = Model::new(n).with_operator("U", u2.clone()).with_constant("c1", model.constants["c1"].clone());
        let diff = (phase.to_c64() - Complex64::new(1.0, 0.0)).norm();
        let m = f.modulus().unwrap();
        let v1 = eval_qf(&f, &env(&model, &x, &y));
        let v2 = eval_qf(&f, &env(&shifted, &x, &y));
        let bound = to_f64(&m.op("U")) * diff;
        prop_assert!((v1 - v2).abs() <= bound + SLACK, "Δ = {} > {}", (v1 - v2).abs(), bound);
    }
}

#[test]
fn marked_distance_is_discrete() {
    let f = parse("sup p:Q . inf q:Q . d(p, q)").unwrap();
    assert_eq!(f.range().unwrap(), iv((0, 1), (1, 1)));
    let g: Formula = d(var("p", Sort::Marked), var("q", Sort::Marked));
    assert_eq!(g.modulus().unwrap().var("p"), int(1));
}
