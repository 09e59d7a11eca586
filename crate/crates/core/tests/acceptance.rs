//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use contlog::automata::{acc, isolation_margin, parse_projection, AutomatonSpec};
use contlog::degree::{default_budget, degree_ndim, ershov_sandwich, DegreeMode, DegreeReport, FnStream};
use contlog::evaluator::eval_certified;
use contlog::groups::{
    check_approximation, cyclic_instance, henson_battery, henson_equiv, ApproxInstance, ConditionKind, Equivalence,
    Verdict,
};
use contlog::interp::{run_battery, Scheme};
use contlog::model::gates::{gate, random_circuit, Gate};
use contlog::model::Model;
use contlog::numeric::rational::{int, rat, Rational};
use contlog::numeric::{unitary_eigs, CMatrix, FieldScalar, IntervalReport, QSqrt2, RatInterval};
use contlog::parser::parse;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome { pass, detail: detail.into() }
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    o.detail = format!("{} ({:.2?}, limit {:?})", o.detail, el, limit);
    if el > limit {
        o.pass = false;
        o.detail.push_str(" over time limit");
    }
    o
}

fn ints(xs: &[i64]) -> CMatrix {
    CMatrix::diag(&xs.iter().map(|x| FieldScalar::from_int(*x)).collect::<Vec<_>>())
}

fn gate_exactness() -> Outcome {
    let g = |k, q: &[usize], n| gate(k, q, n).unwrap();
    let pow = |m: &CMatrix, k: usize| (1..k).fold(m.clone(), |acc, _| acc.mul(m).unwrap());
    let checks = [
        ("H^2", pow(&g(Gate::H, &[1], 1), 2) == CMatrix::identity(2)),
        ("K^4", pow(&g(Gate::K, &[1], 1), 4) == CMatrix::identity(2)),
        ("K^2 != I", pow(&g(Gate::K, &[1], 1), 2) != CMatrix::identity(2)),
        ("CNOT^2", pow(&g(Gate::Cnot, &[1, 2], 2), 2) == CMatrix::identity(4)),
        ("TOFFOLI^2", pow(&g(Gate::Toffoli, &[1, 2, 3], 3), 2) == CMatrix::identity(8)),
    ];
    let bad: Vec<_> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    Outcome::new(bad.is_empty(), if bad.is_empty() { "all identities exact".into() } else { format!("failed {bad:?}") })
}

/// max_j |1 − λ_j| = max_j 2|sin(θ_j/2)| over enclosed eigenvalue angles.
fn spectral_displacement(u: &CMatrix) -> (f64, f64) {
    let eigs = unitary_eigs(u, &rat(1, 1_000_000_000)).unwrap();
    let chord = |t: f64| 2.0 * (t / 2.0).sin().abs();
    let mut best = (0.0f64, 0.0f64);
    for e in eigs {
        let (a, b) = e.angle.to_f64_bounds();
        let (lo, hi) = (chord(a).min(chord(b)), if a <= std::f64::consts::PI && std::f64::consts::PI <= b { 2.0 } else { chord(a).max(chord(b)) });
        best = (best.0.max(lo), best.1.max(hi));
    }
    best
}

/// Criterion 2 as a report plus a verdict.
fn item2() -> (serde_json::Value, Outcome) {
    let f = parse("sup v:B1 . d(U1(v), v)").unwrap();
    let eps = rat(1, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for k in 0..20 {
        let q = rng.gen_range(1..=2);
        let u = random_circuit(q, rng.gen_range(1..12), &mut rng);
        let (elo, ehi) = spectral_displacement(&u);
        let r = eval_certified(&f, &Model::new(1 << q).with_operator("U1", u), &eps).unwrap();
        let (lo, hi) = r.interval.to_f64_bounds();
        let ok = lo <= ehi + 1e-9 && elo - 1e-9 <= hi && r.interval.width() <= eps;
        if !ok {
            bad.push(format!("#{k}: {} vs [{elo}, {ehi}]", r.interval));
        }
        rows.push(json!({ "dim": 1 << q, "interval": IntervalReport::from(&r.interval), "boxes": r.cost }));
    }
    let detail = if bad.is_empty() { "20/20 enclose the spectral value".to_string() } else { bad.join("; ") };
    (json!(rows), Outcome::new(bad.is_empty(), detail))
}

const DIMENSION_SENTENCE: &str = "inf y1:B1 . inf y2:B1 . max(max(adiff(reip(y1,y1),1), adiff(reip(y2,y2),1)), \
     sup x:B1 . adiff(reip(x,x), plus[2](plus[1](reip(x,y1)*reip(x,y1), imip(x,y1)*imip(x,y1)), \
     plus[1](reip(x,y2)*reip(x,y2), imip(x,y2)*imip(x,y2)))))";

fn item3() -> (serde_json::Value, Outcome) {
    let f = parse(DIMENSION_SENTENCE).unwrap();
    let eps = rat(1, 50);
    let r2 = eval_certified(&f, &Model::new(2), &eps).unwrap().interval;
    let r3 = eval_certified(&f, &Model::new(3), &eps).unwrap().interval;
    let ok = r2.lo() >= &int(0) && r2.hi() <= &eps && r3.lo() >= &rat(1, 4);
    let report = json!({ "dim2": IntervalReport::from(&r2), "dim3": IntervalReport::from(&r3) });
    (report, Outcome::new(ok, format!("dim 2 {r2}, dim 3 {r3}")))
}

fn item4() -> (serde_json::Value, Outcome) {
    let f = parse("sup v:B1 . d(U1(v), v)").unwrap();
    let r = degree_ndim(&f, 1, 1, &rat(1, 20), DegreeMode::Certified, default_budget()).unwrap();
    let ok = r.success && r.interval.contains(&int(2)) && r.interval.width() <= rat(1, 20);
    let report = serde_json::to_value(DegreeReport::from(&r)).unwrap();
    (report, Outcome::new(ok, format!("{} after {} steps", r.interval, r.steps)))
}

fn sandwich() -> Outcome {
    let q = rat(37, 100);
    let (a, b) = (q.clone(), q.clone());
    let mut lo = FnStream::new(move |k| &a - rat(1, k as i64));
    let mut hi = FnStream::new(move |k| &b + rat(2, k as i64));
    let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 100_000).unwrap();
    let ok = r.success && r.interval.contains(&q) && r.interval.width() <= rat(1, 100);
    Outcome::new(ok, format!("{} after {} steps", r.interval, r.steps))
}

fn automata() -> Outcome {
    let one = |g, lambda: Rational| {
        AutomatonSpec::new(vec![gate(g, &[1], 1).unwrap()], parse_projection("01").unwrap(), lambda).unwrap()
    };
    let h = one(Gate::H, rat(1, 2));
    let half = QSqrt2::from_rational(rat(1, 2));
    let acc_ok = acc(&h, &[1]).unwrap() == half;
    let m = isolation_margin(&h, 2);
    let margin_ok = m.margin == QSqrt2::zero() && m.argmin == vec![1];
    let x = one(Gate::X, rat(1, 2));
    let x_ok = (0..=10).all(|len| isolation_margin(&x, len).margin == half);
    Outcome::new(acc_ok && margin_ok && x_ok, format!("ACC_H([1]) exact {acc_ok}, H margin {margin_ok}, X margin {x_ok}"))
}

fn approximation() -> Outcome {
    let (inst, gamma) = cyclic_instance(8).unwrap();
    let r = check_approximation(&inst, &gamma, &rat(1, 100), &rat(1, 1_000_000)).unwrap();
    let z8 = r.overall == Verdict::Pass && gamma[1].rows() == 8;
    let id = ApproxInstance {
        generators: 1,
        words: vec![vec![], vec![1]],
        identity: Some(0),
        facts: vec![],
        alpha_sq: vec![QSqrt2::zero(), QSqrt2::one()],
    };
    let r = check_approximation(&id, &[ints(&[1, 1]), ints(&[1, 1])], &rat(1, 10), &rat(1, 1000)).unwrap();
    let kinds: Vec<_> = r.failures().map(|c| c.kind.clone()).collect();
    let counter = r.overall == Verdict::Fail && kinds == vec![ConditionKind::Separation];
    Outcome::new(z8 && counter, format!("Z/8 passes {z8}, identity fails separation only {counter}"))
}

fn henson() -> Outcome {
    let eps = rat(1, 1000);
    let h = gate(Gate::H, &[1], 1).unwrap();
    let z = ints(&[1, -1]);
    let mut pairs = vec![(h, z.clone())];
    let mut ok = henson_equiv(&pairs[0].0, &pairs[0].1, &eps).unwrap() == Equivalence::Equivalent;
    ok &= henson_equiv(&ints(&[1, 1]), &z, &eps).unwrap() == Equivalence::Distinct;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let phases = [
        FieldScalar::one(),
        FieldScalar::i(),
        FieldScalar::from_int(-1),
        -FieldScalar::i(),
        contlog::groups::root_of_unity(8).unwrap(),
        FieldScalar::gaussian(rat(3, 5), rat(4, 5)),
    ];
    // one qubit: dimension 4 puts several battery sentences on flat optima
    for _ in 0..10 {
        let q = 1;
        let d: Vec<FieldScalar> = (0..1 << q).map(|_| phases[rng.gen_range(0..phases.len())].clone()).collect();
        let u = CMatrix::diag(&d);
        let v = random_circuit(q, rng.gen_range(1..10), &mut rng);
        let conj = v.mul(&u).unwrap().mul(&v.adjoint()).unwrap();
        ok &= henson_equiv(&u, &conj, &eps).unwrap() == Equivalence::Equivalent;
        pairs.push((u, conj));
    }
    let battery = henson_battery();
    let e = rat(1, 20);
    let mut disjoint = 0;
    for (a, b) in &pairs {
        let (ma, mb) = (Model::new(a.rows()).with_operator("U", a.clone()), Model::new(b.rows()).with_operator("U", b.clone()));
        for f in &battery {
            let ia: RatInterval = eval_certified(f, &ma, &e).unwrap().interval;
            let ib = eval_certified(f, &mb, &e).unwrap().interval;
            disjoint += !ia.overlaps(&ib) as usize;
        }
    }
    ok &= disjoint == 0 && battery.len() == 10;
    Outcome::new(ok, format!("{} equivalent pairs, {disjoint} disjoint battery intervals", pairs.len()))
}

fn reduction() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for scheme in [Scheme::Constants, Scheme::Dynamical] {
        let r = run_battery(scheme, 3, None).unwrap();
        let agree = r.rows.iter().filter(|x| x.agree).count();
        let dich = r.rows.iter().filter(|x| x.dichotomy).count();
        ok &= r.pairs > 0 && agree == r.pairs && dich == r.pairs && r.failures == 0;
        parts.push(format!("{scheme:?}: {agree}/{} agree, {dich} dichotomy", r.pairs));
    }
    Outcome::new(ok, parts.join("; "))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 gate exactness", timed(Duration::from_secs(1), gate_exactness)));

    let mut reports = Vec::new();
    for threads in [1, 8] {
        let t = Instant::now();
        let (r2, o2) = in_pool(threads, item2);
        let e2 = t.elapsed();
        let t = Instant::now();
        let (r3, o3) = in_pool(threads, item3);
        let e3 = t.elapsed();
        let t = Instant::now();
        let (r4, o4) = in_pool(threads, item4);
        let e4 = t.elapsed();
        let text = serde_json::to_string(&json!({ "item2": r2, "item3": r3, "item4": r4 })).unwrap();
        reports.push(text);
        if threads == 1 {
            let lim = |o: Outcome, el: Duration, limit: Duration| {
                Outcome::new(o.pass && el <= limit, format!("{} ({el:.2?}, limit {limit:?})", o.detail))
            };
            results.push(("2 spectral displacement", lim(o2, e2, Duration::from_secs(300))));
            results.push(("3 dimension axiom", lim(o3, e3, Duration::from_secs(600))));
            results.push(("4 degree of truth", lim(o4, e4, Duration::from_secs(60))));
        }
    }
    results.push(("5 sandwich", timed(Duration::from_secs(1), sandwich)));
    results.push(("6 automata exactness", timed(Duration::from_secs(10), automata)));
    results.push(("7 approximation checker", timed(Duration::from_secs(10), approximation)));
    results.push(("8 henson oracle", timed(Duration::from_secs(600), henson)));
    results.push(("9 interpretation reduction", timed(Duration::from_secs(1800), reduction)));
    let same = reports[0] == reports[1];
    results.push((
        "10 determinism",
        Outcome::new(same, format!("items 2-4 reports at 1 and 8 threads: {} bytes, identical {same}", reports[0].len())),
    ));

    results.sort_by_key(|(name, _)| name.split(' ').next().unwrap().parse::<u32>().unwrap());
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
