//! Degrees of truth over classes of models.
//!
//! `ershov_sandwich` alternates a lower and an upper bound stream until they
//! meet. `degree_ndim` feeds it from an adaptive net over U(N)^t: each
//! operator is D(φ)·Π_{p<q} G_pq(θ, ψ), a product of two-angle Givens
//! rotations and a diagonal of phases. Every angle is stored through its
//! half-angle tangent so that the matrices at net points are exact. A box of
//! parameters is bounded above by the value at its center plus the operator
//! sensitivities times the box's operator-norm radius.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::evaluator::{eval_certified, EvalError};
use crate::formula::{Formula, TypeError};
use crate::model::{model_to_json, Model};
use crate::numeric::rational::{fmt_rational, int, Rational};
use crate::numeric::spectral::unit_point;
use crate::numeric::{CMatrix, FieldScalar, IntervalReport, RatInterval};

#[derive(Debug, Clone, thiserror::Error)]
pub enum DegreeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("formula is not closed")]
    NotClosed,
    #[error("formula uses {0}, which is not among the operators U1..U{1}")]
    UnknownOperator(String, usize),
    #[error("formula uses constants or the marked sort, which are not varied over model classes")]
    Unsupported,
    #[error("{params} unitary parameters exceed the certified limit of {limit}; use the lower profile")]
    CostGate { params: usize, limit: usize },
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// A producer of successively better bounds.
pub trait BoundStream {
    /// Next bound, or `None` once the stream has nothing more to offer.
    fn pull(&mut self) -> Result<Option<Rational>, DegreeError>;
    fn steps(&self) -> u64;
    fn provenance(&self) -> String {
        String::new()
    }
}

/// Stream given by a function of the pull index (1-based).
pub struct FnStream<F: FnMut(u64) -> Rational> {
    f: F,
    k: u64,
}

impl<F: FnMut(u64) -> Rational> FnStream<F> {
    pub fn new(f: F) -> Self {
        FnStream { f, k: 0 }
    }
}

impl<F: FnMut(u64) -> Rational> BoundStream for FnStream<F> {
    fn pull(&mut self) -> Result<Option<Rational>, DegreeError> {
        self.k += 1;
        Ok(Some((self.f)(self.k)))
    }
    fn steps(&self) -> u64 {
        self.k
    }
}

/// A stream that emits one value forever.
pub struct ConstStream(pub Rational, u64);

impl ConstStream {
    pub fn new(q: Rational) -> Self {
        ConstStream(q, 0)
    }
}

impl BoundStream for ConstStream {
    fn pull(&mut self) -> Result<Option<Rational>, DegreeError> {
        self.1 += 1;
        Ok(Some(self.0.clone()))
    }
    fn steps(&self) -> u64 {
        self.1
    }
    fn provenance(&self) -> String {
        format!("constant {}", fmt_rational(&self.0))
    }
}

#[derive(Clone, Debug)]
pub struct DegreeResult {
    pub interval: RatInterval,
    pub steps: u64,
    pub success: bool,
    pub lower_provenance: String,
    pub upper_provenance: String,
}

#[derive(Serialize)]
pub struct DegreeReport {
    pub interval: IntervalReport,
    pub steps: u64,
    pub success: bool,
    pub lower_provenance: String,
    pub upper_provenance: String,
}

impl From<&DegreeResult> for DegreeReport {
    fn from(r: &DegreeResult) -> Self {
        DegreeReport {
            interval: IntervalReport::from(&r.interval),
            steps: r.steps,
            success: r.success,
            lower_provenance: r.lower_provenance.clone(),
            upper_provenance: r.upper_provenance.clone(),
        }
    }
}

/// Pulls the two streams in turn, keeping the best bound from each, until
/// the gap is at most `eps` or `budget` pulls have been made.
pub fn ershov_sandwich(
    lower: &mut dyn BoundStream,
    upper: &mut dyn BoundStream,
    eps: &Rational,
    budget: u64,
) -> Result<DegreeResult, DegreeError> {
    if eps.is_negative() {
        return Err(DegreeError::BadTolerance);
    }
    let mut lo: Option<Rational> = None;
    let mut hi: Option<Rational> = None;
    let mut pulls = 0u64;
    let mut lower_done = false;
    let mut upper_done = false;
    let mut success = false;
    while pulls < budget && !(lower_done && upper_done) {
        let take_lower = !lower_done && (upper_done || lo.is_none() || pulls % 2 == 0);
        if take_lower {
            match lower.pull()? {
                Some(q) => {
                    if lo.as_ref().map_or(true, |l| q > *l) {
                        lo = Some(q);
                    }
                }
                None => lower_done = true,
            }
        } else {
            match upper.pull()? {
                Some(q) => {
                    if hi.as_ref().map_or(true, |h| q < *h) {
                        hi = Some(q);
                    }
                }
                None => upper_done = true,
            }
        }
        pulls += 1;
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if h - l <= *eps {
                success = true;
                break;
            }
        }
    }
    let (l, h) = match (lo, hi) {
        (Some(l), Some(h)) => (l, h),
        (l, h) => (l.unwrap_or_else(Rational::zero), h.unwrap_or_else(Rational::zero)),
    };
    // inconsistent streams: report the hull rather than an empty interval
    let interval = if l <= h { RatInterval::new(l, h) } else { RatInterval::new(h, l) };
    Ok(DegreeResult {
        interval,
        steps: lower.steps() + upper.steps(),
        success,
        lower_provenance: lower.provenance(),
        upper_provenance: upper.provenance(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegreeMode {
    /// Both bounds certified; subject to the parameter gate.
    Certified,
    /// Certified lower bounds only; the upper bound is the formula's range.
    LowerOnly,
}

/// Largest parameter count accepted in certified mode.
pub const PARAM_LIMIT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Angle {
    /// θ ∈ [0, π/2] through t = tan(θ/2) ∈ [0, 1].
    Rot,
    /// Phase through t = tan(φ/2) ∈ [−1, 1], on one of two half circles.
    Phase,
}

/// Angle layout of one operator: pairs (θ, ψ) for p < q, then N phases.
fn operator_angles(n: usize) -> Vec<Angle> {
    let mut out = Vec::new();
    for _ in 0..n * (n - 1) / 2 {
        out.push(Angle::Rot);
        out.push(Angle::Phase);
    }
    out.extend(std::iter::repeat(Angle::Phase).take(n));
    out
}

fn phase(t: &Rational, chart: bool) -> FieldScalar {
    let z = unit_point(t);
    if chart {
        -z
    } else {
        z
    }
}

/// The unitary at exact parameters `ts` (with half-circle charts).
fn build_unitary(n: usize, ts: &[Rational], charts: &[bool]) -> CMatrix {
    let one = Rational::one();
    let mut k = 0;
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            pairs.push((p, q));
        }
    }
    let mut rot = CMatrix::identity(n);
    for &(p, q) in &pairs {
        let t = &ts[k];
        let den = &one + t * t;
        let c = FieldScalar::from_rational((&one - t * t) / &den);
        let s = FieldScalar::from_rational((t * int(2)) / &den);
        let e = phase(&ts[k + 1], charts[k + 1]);
        let mut g = CMatrix::identity(n);
        g.set(p, p, c.clone());
        g.set(q, q, c);
        g.set(p, q, -(&e.conj() * &s));
        g.set(q, p, &e * &s);
        rot = rot.mul(&g).expect("square");
        k += 2;
    }
    let d: Vec<FieldScalar> = (0..n).map(|j| phase(&ts[k + j], charts[k + j])).collect();
    CMatrix::diag(&d).mul(&rot).expect("square")
}

#[derive(Clone)]
struct NetBox {
    charts: Vec<bool>,
    lo: Vec<Rational>,
    hi: Vec<Rational>,
    value: RatInterval,
    upper: Rational,
}

impl PartialEq for NetBox {
    fn eq(&self, o: &Self) -> bool {
        self.upper == o.upper
    }
}
impl Eq for NetBox {}
impl PartialOrd for NetBox {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for NetBox {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.cmp(&o.upper)
    }
}

/// Adaptive net over U(N)^t shared by the two streams of `degree_ndim`.
struct NetSearch {
    f: Formula,
    n: usize,
    ops: usize,
    angles: Vec<Angle>,
    /// Sensitivity of each parameter: S_U of its operator.
    weight: Vec<Rational>,
    tol: Rational,
    /// Upper end of the formula's syntactic range.
    cap: Rational,
    heap: BinaryHeap<NetBox>,
    best_lo: Option<(Rational, Model)>,
    evals: u64,
    splits: u64,
}

impl NetSearch {
    fn new(f: &Formula, n: usize, ops: usize, tol: Rational) -> Result<Self, DegreeError> {
        let modulus = f.modulus()?;
        let per = operator_angles(n);
        let mut angles = Vec::new();
        let mut weight = Vec::new();
        for k in 1..=ops {
            let s = modulus.ops.get(&format!("U{k}")).cloned().unwrap_or_else(Rational::zero);
            for a in &per {
                angles.push(*a);
                weight.push(s.clone());
            }
        }
        let mut search = NetSearch {
            f: f.clone(),
            n,
            ops,
            angles,
            weight,
            tol,
            cap: f.range()?.hi().clone(),
            heap: BinaryHeap::new(),
            best_lo: None,
            evals: 0,
            splits: 0,
        };
        let phases: Vec<usize> = (0..search.angles.len()).filter(|&i| search.angles[i] == Angle::Phase).collect();
        let mut roots = Vec::new();
        for mask in 0..(1u64 << phases.len()) {
            let mut charts = vec![false; search.angles.len()];
            for (b, &i) in phases.iter().enumerate() {
                charts[i] = (mask >> b) & 1 == 1;
            }
            let lo = search
                .angles
                .iter()
                .map(|a| if *a == Angle::Rot { Rational::zero() } else { int(-1) })
                .collect();
            let hi = vec![Rational::one(); search.angles.len()];
            roots.push((charts, lo, hi));
        }
        let boxes = search.evaluate(roots)?;
        search.heap.extend(boxes);
        Ok(search)
    }

    fn model_at(&self, charts: &[bool], ts: &[Rational]) -> Model {
        let per = operator_angles(self.n).len();
        let mut m = Model::new(self.n);
        for k in 0..self.ops {
            let r = k * per..(k + 1) * per;
            m = m.with_operator(&format!("U{}", k + 1), build_unitary(self.n, &ts[r.clone()], &charts[r]));
        }
        m
    }

    fn evaluate(&mut self, boxes: Vec<(Vec<bool>, Vec<Rational>, Vec<Rational>)>) -> Result<Vec<NetBox>, DegreeError> {
        use rayon::prelude::*;
        let results: Result<Vec<(NetBox, Model)>, DegreeError> = boxes
            .into_par_iter()
            .map(|(charts, lo, hi)| {
                let center: Vec<Rational> = lo.iter().zip(&hi).map(|(a, b)| (a + b) / int(2)).collect();
                let model = self.model_at(&charts, &center);
                let r = eval_certified(&self.f, &model, &self.tol)?;
                // |angle − angle(center)| ≤ 2|t − t_c| ≤ hi − lo for either chart
                let slack: Rational =
                    lo.iter().zip(&hi).zip(&self.weight).map(|((a, b), w)| (b - a) * w).fold(Rational::zero(), |x, y| x + y);
                let upper = r.interval.hi() + &slack;
                Ok((NetBox { charts, lo, hi, value: r.interval, upper }, model))
            })
            .collect();
        let mut out = Vec::new();
        for (b, model) in results? {
            self.evals += 1;
            if self.best_lo.as_ref().map_or(true, |(l, _)| b.value.lo() > l) {
                self.best_lo = Some((b.value.lo().clone(), model));
            }
            out.push(b);
        }
        Ok(out)
    }

    /// Splits the box with the largest upper bound along its most sensitive
    /// parameter.
    fn refine(&mut self) -> Result<bool, DegreeError> {
        let top = match self.heap.pop() {
            Some(t) => t,
            None => return Ok(false),
        };
        let k = (0..self.angles.len())
            .max_by(|&i, &j| ((&top.hi[i] - &top.lo[i]) * &self.weight[i]).cmp(&((&top.hi[j] - &top.lo[j]) * &self.weight[j])))
            .expect("at least one parameter");
        if (&top.hi[k] - &top.lo[k]) * &self.weight[k] == Rational::zero() {
            // nothing left to refine: the bound at the center is exact up to tol
            self.heap.push(top);
            return Ok(false);
        }
        let mid = (&top.lo[k] + &top.hi[k]) / int(2);
        let mut left_hi = top.hi.clone();
        left_hi[k] = mid.clone();
        let mut right_lo = top.lo.clone();
        right_lo[k] = mid;
        let children = vec![(top.charts.clone(), top.lo.clone(), left_hi), (top.charts.clone(), right_lo, top.hi.clone())];
        let boxes = self.evaluate(children)?;
        self.heap.extend(boxes);
        self.splits += 1;
        Ok(true)
    }

    fn upper(&self) -> Rational {
        let top = self.heap.peek().map(|b| b.upper.clone()).unwrap_or_else(Rational::zero);
        top.min(self.cap.clone())
    }

    fn lower(&self) -> Rational {
        self.best_lo.as_ref().map(|(l, _)| l.clone()).unwrap_or_else(Rational::zero)
    }

    fn lower_provenance(&self) -> String {
        match &self.best_lo {
            Some((l, m)) => format!("lower bound {} at model {}", fmt_rational(l), compact_json(&model_to_json(m))),
            None => String::new(),
        }
    }

    fn upper_provenance(&self) -> String {
        format!("adaptive net: {} boxes after {} splits, {} evaluations", self.heap.len(), self.splits, self.evals)
    }
}

fn compact_json(s: &str) -> String {
    serde_json::from_str::<serde_json::Value>(s).map(|v| v.to_string()).unwrap_or_else(|_| s.to_string())
}

struct NetLower(Rc<RefCell<NetSearch>>, u64);
struct NetUpper(Rc<RefCell<NetSearch>>, u64);

impl BoundStream for NetLower {
    fn pull(&mut self) -> Result<Option<Rational>, DegreeError> {
        let mut s = self.0.borrow_mut();
        if self.1 > 0 && !s.refine()? {
            return Ok(None);
        }
        self.1 += 1;
        Ok(Some(s.lower()))
    }
    fn steps(&self) -> u64 {
        self.1
    }
    fn provenance(&self) -> String {
        self.0.borrow().lower_provenance()
    }
}

impl BoundStream for NetUpper {
    fn pull(&mut self) -> Result<Option<Rational>, DegreeError> {
        let mut s = self.0.borrow_mut();
        if self.1 > 0 && !s.refine()? {
            return Ok(None);
        }
        self.1 += 1;
        Ok(Some(s.upper()))
    }
    fn steps(&self) -> u64 {
        self.1
    }
    fn provenance(&self) -> String {
        self.0.borrow().upper_provenance()
    }
}

/// Operators U1..Ut that `f` may use, after checking it is a closed formula
/// over them and nothing else.
fn check_formula(f: &Formula, ops: usize) -> Result<(), DegreeError> {
    f.range()?;
    if !f.is_closed() {
        return Err(DegreeError::NotClosed);
    }
    if !f.constants().is_empty() {
        return Err(DegreeError::Unsupported);
    }
    if uses_marked(f) {
        return Err(DegreeError::Unsupported);
    }
    for name in f.operators() {
        let ok = name.strip_prefix('U').and_then(|k| k.parse::<usize>().ok()).is_some_and(|k| k >= 1 && k <= ops);
        if !ok {
            return Err(DegreeError::UnknownOperator(name, ops));
        }
    }
    Ok(())
}

fn uses_marked(f: &Formula) -> bool {
    use crate::formula::Sort;
    match f {
        Formula::Sup(_, Sort::Marked, _) | Formula::Inf(_, Sort::Marked, _) => true,
        _ => f.children().into_iter().any(uses_marked),
    }
}

/// Number of real parameters of U(N)^t.
pub fn parameter_count(n: usize, ops: usize) -> usize {
    ops * n * n
}

/// Degree of truth of `f` over all dynamical Hilbert spaces of dimension `n`
/// with operators U1..U`ops`.
pub fn degree_ndim(f: &Formula, n: usize, ops: usize, eps: &Rational, mode: DegreeMode, budget: u64) -> Result<DegreeResult, DegreeError> {
    if !eps.is_positive() {
        return Err(DegreeError::BadTolerance);
    }
    if n == 0 {
        return Err(DegreeError::ZeroDimension);
    }
    check_formula(f, ops)?;
    let used = f.operators().len();
    let params = parameter_count(n, ops);
    if mode == DegreeMode::Certified && params > PARAM_LIMIT {
        return Err(DegreeError::CostGate { params, limit: PARAM_LIMIT });
    }
    if used == 0 {
        // the value does not depend on the operators: one model decides it
        let model = (1..=ops).fold(Model::new(n), |m, k| m.with_operator(&format!("U{k}"), CMatrix::identity(n)));
        let r = eval_certified(f, &model, eps)?;
        let prov = format!("single model of dimension {n}");
        let mut lo = ConstStream::new(r.interval.lo().clone());
        let mut hi = ConstStream::new(r.interval.hi().clone());
        let mut out = ershov_sandwich(&mut lo, &mut hi, eps, budget.max(2))?;
        out.lower_provenance = prov.clone();
        out.upper_provenance = prov;
        return Ok(out);
    }
    let tol = eps / int(4);
    let search = Rc::new(RefCell::new(NetSearch::new(f, n, ops, tol)?));
    let mut lower = NetLower(search.clone(), 0);
    match mode {
        DegreeMode::Certified => {
            let mut upper = NetUpper(search, 0);
            ershov_sandwich(&mut lower, &mut upper, eps, budget)
        }
        DegreeMode::LowerOnly => {
            let mut upper = ConstStream::new(f.range()?.hi().clone());
            let mut out = ershov_sandwich(&mut lower, &mut upper, eps, budget)?;
            out.upper_provenance = "syntactic range of the formula".into();
            Ok(out)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfilePoint {
    pub dim: usize,
    /// Best certified lower bound found in this dimension.
    pub lower: String,
    /// Best lower bound over dimensions up to this one.
    pub cumulative: String,
    pub steps: u64,
    #[serde(skip)]
    pub lower_exact: Rational,
    #[serde(skip)]
    pub cumulative_exact: Rational,
}

/// Lower-bound profile of the degree over finite-dimensional models, one
/// entry per dimension 1..=n_max. Not an upper bound in any dimension.
pub fn degree_fd_lower(f: &Formula, n_max: usize, eps: &Rational, budget: u64) -> Result<Vec<ProfilePoint>, DegreeError> {
    let ops = f
        .operators()
        .iter()
        .filter_map(|o| o.strip_prefix('U').and_then(|k| k.parse::<usize>().ok()))
        .max()
        .unwrap_or(0);
    let mut out: Vec<ProfilePoint> = Vec::new();
    for n in 1..=n_max {
        let r = degree_ndim(f, n, ops, eps, DegreeMode::LowerOnly, budget)?;
        let lower = r.interval.lo().clone();
        let cumulative = match out.last() {
            Some(p) if p.cumulative_exact > lower => p.cumulative_exact.clone(),
            _ => lower.clone(),
        };
        out.push(ProfilePoint {
            dim: n,
            lower: fmt_rational(&lower),
            cumulative: fmt_rational(&cumulative),
            steps: r.steps,
            lower_exact: lower,
            cumulative_exact: cumulative,
        });
    }
    Ok(out)
}

/// Parameters of a point in U(N) for tests: the exact unitary at the given
/// half-angle tangents (all on the first chart).
pub fn unitary_from_tangents(n: usize, ts: &[Rational]) -> CMatrix {
    build_unitary(n, ts, &vec![false; ts.len()])
}

pub fn default_budget() -> u64 {
    20_000
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rational::rat;
    use crate::parser::parse;

    #[test]
    fn synthetic_streams_meet() {
        let q = rat(37, 100);
        let (ql, qh) = (q.clone(), q.clone());
        let mut lo = FnStream::new(move |k| &ql - rat(1, k as i64));
        let mut hi = FnStream::new(move |k| &qh + rat(1, k as i64));
        let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 10_000).unwrap();
        assert!(r.success);
        assert!(r.interval.contains(&q));
        assert!(r.interval.width() <= rat(1, 100));
    }

    #[test]
    fn stuck_streams_exhaust() {
        let mut lo = ConstStream::new(int(0));
        let mut hi = ConstStream::new(int(1));
        let r = ershov_sandwich(&mut lo, &mut hi, &rat(1, 100), 100).unwrap();
        assert!(!r.success);
        assert_eq!(r.interval, RatInterval::new(int(0), int(1)));
    }

    #[test]
    fn parameterization_is_unitary() {
        let u = unitary_from_tangents(2, &[rat(1, 3), rat(-1, 2), rat(2, 7), rat(0, 1)]);
        assert!(u.is_unitary());
        let v = build_unitary(3, &[rat(1, 2), rat(1, 5), rat(1, 3), rat(-1, 4), rat(3, 4), rat(1, 7), rat(0, 1), rat(1, 2), rat(-1, 3)], &[false, true, false, false, true, true, false, true, false]);
        assert!(v.is_unitary());
    }

    #[test]
    fn one_dimensional_displacement() {
        let f = parse("sup v:B1 . d(U1(v), v)").unwrap();
        let r = degree_ndim(&f, 1, 1, &rat(1, 20), DegreeMode::Certified, 20_000).unwrap();
        assert!(r.success, "{}", r.interval);
        assert!(r.interval.contains(&int(2)), "{}", r.interval);
    }
}
