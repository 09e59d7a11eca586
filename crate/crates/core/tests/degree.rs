use std::time::Instant;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use contlog::degree::{
    default_budget, degree_fd_lower, degree_ndim, ershov_sandwich, unitary_from_tangents, ConstStream, DegreeError,
    DegreeMode, DegreeReport, FnStream,
};
use contlog::evaluator::eval_certified;
use contlog::model::gates::random_circuit;
use contlog::model::Model;
use contlog::numeric::rational::{int, rat, to_f64};
use contlog::numeric::spectral::unit_point;
use contlog::numeric::CMatrix;
use contlog::parser::parse;

#[test]
fn sandwich_meets_at_the_limit() {
    let q = rat(37, 100);
    let (a, b) = (q.clone(), q.clone());
    let mut lo = FnStream::new(move |k| &a - rat(1, k as i64));
    let mut hi = FnStream::new(move |k| &b + rat(1, k as i64));
    let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 10_000).unwrap();
    assert!(r.success);
    assert!(r.interval.contains(&q));
    assert!(r.interval.width() <= rat(1, 100));
}

#[test]
fn sandwich_of_zero_streams() {
    let mut lo = ConstStream::new(int(0));
    let mut hi = ConstStream::new(int(0));
    let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 100).unwrap();
    assert!(r.success);
    assert_eq!(r.interval.lo(), &int(0));
    assert_eq!(r.interval.hi(), &int(0));
    assert_eq!(r.steps, 2);
}

#[test]
fn stuck_streams_exhaust_the_budget() {
    let mut lo = ConstStream::new(int(0));
    let mut hi = ConstStream::new(int(1));
    let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 100).unwrap();
    assert!(!r.success);
    assert_eq!((r.interval.lo(), r.interval.hi()), (&int(0), &int(1)));
    assert_eq!(r.steps, 100);
    let report = serde_json::to_value(DegreeReport::from(&r)).unwrap();
    assert_eq!(report["success"], false);
    assert_eq!(report["interval"]["lo"], "0");
}

proptest! {
    /// Streams converging to q at unrelated rates always enclose q.
    #[test]
    fn sandwich_encloses_the_limit(n in -50i64..50, d in 1i64..50, a in 1i64..5, b in 1i64..5, e in 1i64..200) {
        let q = rat(n, d);
        let (ql, qh) = (q.clone(), q.clone());
        let mut lo = FnStream::new(move |k| &ql - rat(a, k as i64));
        let mut hi = FnStream::new(move |k| &qh + rat(b, (k * k) as i64));
        let eps = rat(1, e);
        let r = ershov_sandwich(&mut lo, &mut hi, &eps, 100_000).unwrap();
        prop_assert!(r.success);
        prop_assert!(r.interval.contains(&q));
        prop_assert!(r.interval.width() <= eps);
    }
}

const DISPLACEMENT: &str = "sup v:B1 . d(U1(v), v)";

#[test]
fn displacement_degree_in_dimension_one() {
    let f = parse(DISPLACEMENT).unwrap();
    let t = Instant::now();
    let r = degree_ndim(&f, 1, 1, &rat(1, 20), DegreeMode::Certified, default_budget()).unwrap();
    eprintln!("{} in {:?}, {} steps", r.interval, t.elapsed(), r.steps);
    assert!(r.success);
    assert!(r.interval.contains(&int(2)));
    assert!(r.interval.width() <= rat(1, 20));
}

#[test]
fn constant_degree() {
    let f = parse("1/2").unwrap();
    for (n, ops) in [(1, 0), (1, 1), (2, 1), (3, 2)] {
        let mode = if n * n * ops <= 6 { DegreeMode::Certified } else { DegreeMode::LowerOnly };
        let r = degree_ndim(&f, n, ops, &rat(1, 20), mode, 100).unwrap();
        assert!(r.success);
        assert_eq!((r.interval.lo(), r.interval.hi()), (&rat(1, 2), &rat(1, 2)));
    }
}

#[test]
fn zero_vector_attains_the_negation() {
    let f = parse("sup v:B1 . not[1](reip(v, v))").unwrap();
    let r = degree_ndim(&f, 2, 0, &rat(1, 20), DegreeMode::Certified, 100).unwrap();
    assert!(r.success);
    assert!(r.interval.contains(&int(1)), "{}", r.interval);
}

/// d(U²v, v) ∸ d(Uv, v) in dimension 1 is 2 sin θ − 2 sin(θ/2) at best,
/// maximized where 4c² − c − 2 = 0 for c = cos(θ/2).
fn below_range_value() -> f64 {
    let c = (1.0 + 33f64.sqrt()) / 8.0;
    let s = (1.0 - c * c).sqrt();
    2.0 * s * (2.0 * c - 1.0)
}

#[test]
fn degree_below_the_range_maximum() {
    let f = parse("sup v:B1 . d(U1(U1(v)), v) -. d(U1(v), v)").unwrap();
    assert_eq!(f.range().unwrap().hi(), &int(2));
    let expect = below_range_value();
    let grid = (0..=200_000).map(|k| {
        let th = std::f64::consts::PI * k as f64 / 200_000.0;
        2.0 * th.sin() - 2.0 * (th / 2.0).sin()
    });
    assert!((grid.fold(f64::MIN, f64::max) - expect).abs() < 1e-9);
    let t = Instant::now();
    let r = degree_ndim(&f, 1, 1, &rat(1, 20), DegreeMode::Certified, default_budget()).unwrap();
    eprintln!("{} in {:?}, {} steps", r.interval, t.elapsed(), r.steps);
    assert!(r.success, "{}", r.interval);
    assert!(to_f64(r.interval.lo()) <= expect + 1e-12 && expect <= to_f64(r.interval.hi()) + 1e-12, "{}", r.interval);
    assert!(r.interval.width() <= rat(1, 20));
}

/// Every explicit model's value lies below the certified degree.
#[test]
fn class_containment() {
    let eps = rat(1, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for src in [DISPLACEMENT, "sup v:B1 . d(U1(U1(v)), v) -. d(U1(v), v)", "inf v:B1 . reip(U1(v), v)"] {
        let f = parse(src).unwrap();
        let deg1 = degree_ndim(&f, 1, 1, &eps, DegreeMode::Certified, default_budget()).unwrap();
        for _ in 0..10 {
            let t = rat(rng.gen_range(-40i64..=40), rng.gen_range(1i64..=20));
            let m = Model::new(1).with_operator("U1", CMatrix::diag(&[unit_point(&t)]));
            let v = eval_certified(&f, &m, &eps).unwrap();
            assert!(v.interval.lo() - &eps <= *deg1.interval.hi(), "{src}: {} vs {}", v.interval, deg1.interval);
        }
    }
    // dimension 2 with one operator: four parameters
    let f = parse(DISPLACEMENT).unwrap();
    let deg2 = degree_ndim(&f, 2, 1, &eps, DegreeMode::Certified, default_budget()).unwrap();
    for _ in 0..10 {
        let u = random_circuit(1, rng.gen_range(1..6), &mut rng);
        let m = Model::new(2).with_operator("U1", u);
        let v = eval_certified(&f, &m, &eps).unwrap();
        assert!(v.interval.lo() - &eps <= *deg2.interval.hi(), "{} vs {}", v.interval, deg2.interval);
    }
    let ts = [rat(1, 3), rat(-1, 2), rat(2, 7), rat(1, 1)];
    let m = Model::new(2).with_operator("U1", unitary_from_tangents(2, &ts));
    assert!(m.operators["U1"].is_unitary());
    let v = eval_certified(&f, &m, &eps).unwrap();
    assert!(v.interval.lo() - &eps <= *deg2.interval.hi());
}

#[test]
fn cost_gate_and_operator_errors() {
    let f = parse(DISPLACEMENT).unwrap();
    let r = degree_ndim(&f, 3, 1, &rat(1, 20), DegreeMode::Certified, 100);
    assert!(matches!(r, Err(DegreeError::CostGate { params: 9, limit: 6 })), "{r:?}");
    let r = degree_ndim(&f, 3, 1, &rat(1, 20), DegreeMode::LowerOnly, 50).unwrap();
    assert_eq!(r.interval.hi(), &int(2));
    let g = parse("sup v:B1 . d(U2(v), v)").unwrap();
    assert!(matches!(degree_ndim(&g, 1, 1, &rat(1, 20), DegreeMode::Certified, 100), Err(DegreeError::UnknownOperator(..))));
    assert!(matches!(degree_ndim(&f, 1, 1, &int(0), DegreeMode::Certified, 100), Err(DegreeError::BadTolerance)));
    assert!(matches!(degree_ndim(&f, 0, 1, &rat(1, 2), DegreeMode::Certified, 100), Err(DegreeError::ZeroDimension)));
}

#[test]
fn lower_bounds_never_drop_with_more_budget() {
    let f = parse("sup v:B1 . d(U1(U1(v)), v) -. d(U1(v), v)").unwrap();
    let mut last = None;
    for budget in [2, 8, 32, 128] {
        let r = degree_ndim(&f, 2, 1, &rat(1, 10), DegreeMode::LowerOnly, budget).unwrap();
        if let Some(l) = &last {
            assert!(r.interval.lo() >= l, "{} after {l}", r.interval);
        }
        last = Some(r.interval.lo().clone());
    }
}

#[test]
fn displacement_profile() {
    let f = parse(DISPLACEMENT).unwrap();
    let p = degree_fd_lower(&f, 3, &rat(1, 20), 400).unwrap();
    assert_eq!(p.len(), 3);
    assert!(p[0].lower_exact >= int(2) - rat(1, 20), "{}", p[0].lower);
    for w in p.windows(2) {
        assert!(w[1].cumulative_exact >= w[0].cumulative_exact);
    }
    // never above the certified degree at a dimension where it is computable
    let d1 = degree_ndim(&f, 1, 1, &rat(1, 20), DegreeMode::Certified, default_budget()).unwrap();
    assert!(p[0].lower_exact <= *d1.interval.hi());
}

#[test]
fn constant_profile() {
    let p = degree_fd_lower(&parse("3/8").unwrap(), 4, &rat(1, 20), 100).unwrap();
    assert!(p.iter().all(|x| x.lower_exact == rat(3, 8) && x.cumulative_exact == rat(3, 8)));
}

/// The n = 1 dimension sentence: its value grows once the space has an
/// orthogonal complement.
#[test]
fn dimension_defect_profile() {
    let src = "inf y1:B1 . max(adiff(reip(y1,y1),1), sup x:B1 . adiff(reip(x,x), \
               plus[1](reip(x,y1)*reip(x,y1), imip(x,y1)*imip(x,y1))))";
    let f = parse(src).unwrap();
    let eps = rat(1, 20);
    let p = degree_fd_lower(&f, 3, &eps, 200).unwrap();
    let direct: Vec<_> = (1..=3).map(|n| eval_certified(&f, &Model::new(n), &eps).unwrap().interval).collect();
    eprintln!("profile {:?}, direct {:?}", p.iter().map(|x| &x.lower).collect::<Vec<_>>(), direct);
    assert!(p[0].lower_exact <= eps);
    for (pt, d) in p.iter().zip(&direct) {
        assert!(d.contains(&pt.lower_exact) || (pt.lower_exact >= *d.lo() && pt.lower_exact <= *d.hi()));
    }
    assert!(p[1].lower_exact > p[0].lower_exact);
    assert!(p[1].lower_exact >= int(1) - &eps);
    assert!(p[2].lower_exact >= &p[1].lower_exact - &eps);
}
