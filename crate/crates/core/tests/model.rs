use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use contlog::model::gates::{gate, random_circuit, Gate};
use contlog::model::interp::{build_dynamical_interpretation, build_marked_constants};
use contlog::model::structure::all_structures;
use contlog::model::{load_model, model_from_json, model_to_json, save_model, EqStructure, Model, ModelError};
use contlog::numeric::matrix::{inner, norm_sqr};
use contlog::numeric::rational::{int, rat, to_f64};
use contlog::numeric::{CMatrix, FieldScalar, QSqrt2};

type M = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn kron(a: &M, b: &M) -> M {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn eye(n: usize) -> M {
    (0..n).map(|i| (0..n).map(|j| c((i == j) as u8 as f64, 0.0)).collect()).collect()
}

/// Single-qubit gate on qubit q (qubit 1 leftmost) of `total`.
fn embed1(g: &M, q: usize, total: usize) -> M {
    let id = eye(2);
    let mut out = eye(1);
    for k in 1..=total {
        out = kron(&out, if k == q { g } else { &id });
    }
    out
}

/// Permutation matrix of a basis map.
fn perm(n: usize, f: impl Fn(usize) -> usize) -> M {
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for b in 0..n {
        out[f(b)][b] = c(1.0, 0.0);
    }
    out
}

fn bit(b: usize, q: usize, total: usize) -> usize {
    (b >> (total - q)) & 1
}

fn close(a: &CMatrix, b: &M) -> bool {
    let a = a.to_c64();
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-12)
}

#[test]
fn single_qubit_gates_match_kronecker_products() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = vec![vec![c(s, 0.0), c(s, 0.0)], vec![c(s, 0.0), c(-s, 0.0)]];
    let k = vec![vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 1.0)]];
    let x = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
    for total in 1..=3 {
        for q in 1..=total {
            assert!(close(&gate(Gate::H, &[q], total).unwrap(), &embed1(&h, q, total)));
            assert!(close(&gate(Gate::K, &[q], total).unwrap(), &embed1(&k, q, total)));
            assert!(close(&gate(Gate::X, &[q], total).unwrap(), &embed1(&x, q, total)));
        }
    }
}

#[test]
fn controlled_gates_match_bit_permutations() {
    for total in 2..=4 {
        for ctl in 1..=total {
            for tgt in (1..=total).filter(|&t| t != ctl) {
                let expect = perm(1 << total, |b| if bit(b, ctl, total) == 1 { b ^ (1 << (total - tgt)) } else { b });
                assert!(close(&gate(Gate::Cnot, &[ctl, tgt], total).unwrap(), &expect), "CNOT {ctl}->{tgt} of {total}");
            }
        }
    }
    for (a, b, t) in [(1, 2, 3), (3, 1, 2), (2, 3, 1), (1, 4, 2)] {
        let total = 4;
        let expect =
            perm(1 << total, |x| if bit(x, a, total) & bit(x, b, total) == 1 { x ^ (1 << (total - t)) } else { x });
        assert!(close(&gate(Gate::Toffoli, &[a, b, t], total).unwrap(), &expect));
    }
}

#[test]
fn gate_register_errors() {
    assert!(matches!(gate(Gate::Cnot, &[1], 2), Err(ModelError::Register(_))));
    assert!(matches!(gate(Gate::Cnot, &[1, 1], 2), Err(ModelError::Register(_))));
    assert!(matches!(gate(Gate::H, &[3], 2), Err(ModelError::Register(_))));
    assert!(matches!(gate(Gate::H, &[0], 2), Err(ModelError::Register(_))));
}

#[test]
fn random_circuits_are_exactly_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in 1..=3 {
        for len in [0, 1, 5, 20] {
            let u = random_circuit(q, len, &mut rng);
            assert!(u.is_unitary());
            assert_eq!(u.rows(), 1 << q);
        }
    }
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("contlog-model-{}-{name}", std::process::id()))
}

#[test]
fn save_load_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let u = random_circuit(2, 12, &mut rng);
    let m = Model::new(4)
        .with_operator("U1", u)
        .with_operator("U2", gate(Gate::Cnot, &[2, 1], 2).unwrap())
        .with_marked()
        .with_constant("a", vec![FieldScalar::gaussian(rat(1, 3), rat(-1, 7)), FieldScalar::zero(), FieldScalar::inv_sqrt2().scale(&rat(1, 2)), FieldScalar::zero()]);
    let path = tmp("round.json");
    save_model(&m, &path).unwrap();
    let back = load_model(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(back, m);
    assert_eq!(model_from_json(&model_to_json(&m)).unwrap(), m);
}

#[test]
fn non_unitary_operator_names_the_cell() {
    let text = r#"{"dim": 2, "operators": {"U1": [["1,0,0,0", "0,0,0,0"], ["0,0,0,0", "2,0,0,0"]]}}"#;
    match model_from_json(text) {
        Err(e @ ModelError::NotUnitary { .. }) => {
            let ModelError::NotUnitary { ref name, row, col, .. } = e else { unreachable!() };
            assert_eq!((name.as_str(), row, col), ("U1", 2, 2));
            assert!(e.to_string().contains("(2, 2)"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_model_files() {
    let wrong_count = r#"{"dim": 2, "marked": ["1"]}"#;
    assert!(matches!(model_from_json(wrong_count), Err(ModelError::MarkedCount { count: 1, dim: 2 })));
    let dup = r#"{"dim": 2, "marked": ["a", "a"]}"#;
    assert!(matches!(model_from_json(dup), Err(ModelError::DuplicateLabel(_))));
    let long = r#"{"dim": 1, "constants": {"a": ["2,0,0,0"]}}"#;
    assert!(matches!(model_from_json(long), Err(ModelError::ConstantNorm { .. })));
    let shape = r#"{"dim": 2, "operators": {"U1": [["1,0,0,0"]]}}"#;
    assert!(matches!(model_from_json(shape), Err(ModelError::OperatorShape { .. })));
    assert!(matches!(model_from_json(r#"{"dim": 0}"#), Err(ModelError::ZeroDimension)));
    assert!(matches!(model_from_json(r#"{"dim": 1, "extra": 1}"#), Err(ModelError::Format(_))));
    assert!(matches!(model_from_json(r#"{"dim": 1, "constants": {"a": ["x"]}}"#), Err(ModelError::Format(_))));
}

#[test]
fn structure_json_and_relations() {
    let s = EqStructure::from_json(r#"{"size":3,"e1":[[1,2],[3]],"e2":[[1],[2,3]]}"#).unwrap();
    assert!(s.related(1, 1, 2) && !s.related(1, 2, 3));
    assert!(s.related(2, 2, 3) && !s.related(2, 1, 2));
    assert!((1..=3).all(|x| s.related(1, x, x) && s.related(2, x, x)));
    assert_eq!(EqStructure::from_json(&s.to_json()).unwrap(), s);
    assert!(EqStructure::from_json(r#"{"size":2,"e1":[[1]],"e2":[[1,2]]}"#).is_err());
    assert!(EqStructure::from_json(r#"{"size":2,"e1":[[1,2],[2]],"e2":[[1,2]]}"#).is_err());
    // Bell numbers squared: 1 + 4 + 25 + 225
    assert_eq!(all_structures(4).len(), 255);
}

/// Checks the constants axioms: a_i ∈ B1, coefficients agree on related
/// labels and differ by ≥ 2r otherwise, ‖b1‖ = 1, 0 < ⟨b1, b2⟩ ≤ r/2.
#[test]
fn constants_model_axioms_hold_for_small_structures() {
    for s in all_structures(4) {
        let cm = build_marked_constants(&s).unwrap();
        let m = &cm.model;
        assert!(m.is_marked());
        m.validate().unwrap();
        for (rel, name) in [(1, "a1"), (2, "a2")] {
            let a = &m.constants[name];
            assert!(norm_sqr(a) <= QSqrt2::one());
            for x in 1..=s.size {
                for y in 1..=s.size {
                    let diff = &a[x - 1] - &a[y - 1];
                    if s.related(rel, x, y) {
                        assert!(diff.is_zero());
                    } else {
                        let two_r = &cm.r * int(2);
                        assert!(diff.norm_sqr().cmp_rational(&(&two_r * &two_r)) != std::cmp::Ordering::Less);
                    }
                }
            }
        }
        let b1 = &m.constants["b1"];
        let b2 = &m.constants["b2"];
        assert!(norm_sqr(b1) == QSqrt2::one());
        let ip = inner(b1, b2);
        assert_eq!(ip, FieldScalar::from_rational(cm.gap.clone()));
        assert!(cm.gap > int(0) && cm.gap <= &cm.r / int(2));
        if s.size >= 2 {
            assert!(norm_sqr(b2) == QSqrt2::one());
        }
    }
}

/// U1, U2 fix vectors constant on the relevant classes; U3..U5 displace by
/// r/64, r/8, r within 1%.
#[test]
fn dynamical_model_axioms_hold_for_small_structures() {
    for s in all_structures(3) {
        let dm = build_dynamical_interpretation(&s).unwrap();
        let m = &dm.model;
        for k in 1..=5 {
            assert!(m.operators[&format!("U{k}")].is_unitary());
        }
        for (rel, op) in [(1, "U1"), (2, "U2")] {
            let u = &m.operators[op];
            assert!(u.mul(u).unwrap() == CMatrix::identity(s.size), "{op} is an involution");
            let class_vec: Vec<FieldScalar> =
                (1..=s.size).map(|x| FieldScalar::from_int(s.class_of(rel, x) as i64 + 1)).collect();
            assert_eq!(u.mul_vec(&class_vec).unwrap(), class_vec);
        }
        let r = to_f64(&dm.r);
        for (enc, target, op) in [(&dm.d3, r / 64.0, "U3"), (&dm.d4, r / 8.0, "U4"), (&dm.d5, r, "U5")] {
            assert!(to_f64(enc.lo()) >= 0.99 * target && to_f64(enc.hi()) <= 1.01 * target, "{op}: {enc}");
            // a global phase moves every unit vector by |1 − z|
            let z = m.operators[op].get(0, 0).to_c64();
            let chord = (c(1.0, 0.0) - z).norm();
            assert!(to_f64(enc.lo()) - 1e-12 <= chord && chord <= to_f64(enc.hi()) + 1e-12);
        }
    }
}

#[test]
fn dynamical_model_rejects_structures_that_are_too_large() {
    // forty singleton classes give r = 1/298 < 1/64
    let n = 40;
    let s = EqStructure::new(n, (1..=n).map(|x| vec![x]).collect(), vec![(1..=n).collect()]).unwrap();
    assert!(build_dynamical_interpretation(&s).is_err());
    assert!(build_marked_constants(&s).is_ok());
}
