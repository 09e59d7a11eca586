//! The gate library K, H, X, CNOT and Toffoli, embedded on chosen qubits.
//! Qubit 1 is the most significant bit of the basis index.

use rand::Rng;

use super::ModelError;
use crate::numeric::{CMatrix, FieldScalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    K,
    H,
    X,
    Cnot,
    Toffoli,
}

impl Gate {
    pub fn arity(&self) -> usize {
        match self {
            Gate::K | Gate::H | Gate::X => 1,
            Gate::Cnot => 2,
            Gate::Toffoli => 3,
        }
    }

    pub fn parse(s: &str) -> Option<Gate> {
        match s.to_ascii_uppercase().as_str() {
            "K" => Some(Gate::K),
            "H" => Some(Gate::H),
            "X" => Some(Gate::X),
            "CNOT" => Some(Gate::Cnot),
            "TOFFOLI" => Some(Gate::Toffoli),
            _ => None,
        }
    }

    /// The gate on its own registers (2^arity square).
    pub fn local(&self) -> CMatrix {
        let z = FieldScalar::zero;
        let o = FieldScalar::one;
        match self {
            Gate::K => CMatrix::diag(&[o(), FieldScalar::i()]),
            Gate::H => {
                let s = FieldScalar::inv_sqrt2();
                CMatrix::from_rows(vec![vec![s.clone(), s.clone()], vec![s.clone(), -s]]).expect("2x2")
            }
            Gate::X => CMatrix::from_rows(vec![vec![z(), o()], vec![o(), z()]]).expect("2x2"),
            Gate::Cnot => permutation(4, |b| if b >= 2 { b ^ 1 } else { b }),
            Gate::Toffoli => permutation(8, |b| if b >= 6 { b ^ 1 } else { b }),
        }
    }
}

fn permutation(n: usize, f: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for b in 0..n {
        m.set(f(b), b, FieldScalar::one());
    }
    m
}

/// The 2^total unitary acting as `g` on `registers` (1-based, in the gate's
/// own order: controls first) and as the identity elsewhere.
pub fn gate(g: Gate, registers: &[usize], total: usize) -> Result<CMatrix, ModelError> {
    if registers.len() != g.arity() {
        return Err(ModelError::Register(format!("{g:?} needs {} registers, got {}", g.arity(), registers.len())));
    }
    if total == 0 || total > 12 {
        return Err(ModelError::Register(format!("unsupported qubit count {total}")));
    }
    for (i, &r) in registers.iter().enumerate() {
        if r == 0 || r > total {
            return Err(ModelError::Register(format!("register {r} outside 1..={total}")));
        }
        if registers[..i].contains(&r) {
            return Err(ModelError::Register(format!("register {r} used twice")));
        }
    }
    let local = g.local();
    let k = registers.len();
    let n = 1usize << total;
    let shifts: Vec<usize> = registers.iter().map(|&q| total - q).collect();
    let mut m = CMatrix::zeros(n, n);
    for col in 0..n {
        let mut l = 0;
        for s in &shifts {
            l = (l << 1) | ((col >> s) & 1);
        }
        let mut cleared = col;
        for s in &shifts {
            cleared &= !(1 << s);
        }
        for lp in 0..(1 << k) {
            let v = local.get(lp, l);
            if v.is_zero() {
                continue;
            }
            let mut row = cleared;
            for (idx, s) in shifts.iter().enumerate() {
                let bit = (lp >> (k - 1 - idx)) & 1;
                row |= bit << s;
            }
            m.set(row, col, v.clone());
        }
    }
    Ok(m)
}

/// Product of `len` random library gates on `qubits` qubits.
pub fn random_circuit<R: Rng>(qubits: usize, len: usize, rng: &mut R) -> CMatrix {
    let n = 1usize << qubits;
    let mut u = CMatrix::identity(n);
    let choices: Vec<Gate> = [Gate::K, Gate::H, Gate::X, Gate::Cnot, Gate::Toffoli]
        .into_iter()
        .filter(|g| g.arity() <= qubits)
        .collect();
    for _ in 0..len {
        let g = choices[rng.gen_range(0..choices.len())];
        let mut regs: Vec<usize> = Vec::new();
        while regs.len() < g.arity() {
            let r = rng.gen_range(1..=qubits);
            if !regs.contains(&r) {
                regs.push(r);
            }
        }
        let m = gate(g, &regs, qubits).expect("valid registers");
        u = m.mul(&u).expect("square");
    }
    u
}
