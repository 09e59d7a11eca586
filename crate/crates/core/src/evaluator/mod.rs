//! Evaluation of closed formulas on concrete models.
//!
//! Certified mode encloses the value by branch and bound over the parameter
//! boxes of each vector quantifier, with first-order interval Taylor models
//! bounding every box. Symmetries shrink the search: with no operators,
//! constants or marked vectors the formula is unitarily invariant and the
//! k-th nested vector can be taken in span(e1..ek) with a nonnegative last
//! coordinate; a body invariant under x ↦ e^{iθ}x lets the first coordinate
//! be real and nonnegative. sup_x d(s, t) with s − t = A·x is n·‖A‖.

mod compile;
mod engine;
mod heuristic;
mod tm;

use std::collections::BTreeMap;

use num_traits::Signed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use engine::Cache;

use crate::formula::{Formula, Sort, TypeError};
use crate::model::Model;
use crate::numeric::rational::{f64_down, to_f64};
use crate::numeric::{Ival, RatInterval, Rational};
use compile::{compile, CompileOptions, Layout, Prepared};
use engine::{Engine, Heur};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Certified,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    /// Coordinates (re, im) in the standard basis.
    Vector { var: String, value: Vec<(f64, f64)> },
    /// 1-based basis label.
    Label { var: String, label: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalResult {
    pub interval: RatInterval,
    pub witnesses: Vec<Witness>,
    pub mode: Mode,
    /// Boxes (certified) or point evaluations (heuristic) consumed.
    pub cost: u64,
}

#[derive(Clone, Debug)]
pub struct EvalOptions {
    /// Maximum number of boxes evaluated in certified mode.
    pub budget: u64,
    pub slicing: bool,
    pub fast_path: bool,
    /// Boxes per inner quantifier while outer variables are still boxes.
    pub inner_limit: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { budget: 10_000_000, slicing: true, fast_path: true, inner_limit: 24 }
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("formula has free variables: {0:?}")]
    NotClosed(Vec<String>),
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("model has no operator `{0}`")]
    UnknownOperator(String),
    #[error("model has no constant `{0}`")]
    UnknownConstant(String),
    #[error("formula quantifies over the marked sort but the model is not marked")]
    NotMarked,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("assignment for `{0}` is missing or has the wrong shape")]
    BadAssignment(String),
    #[error("budget of {boxes} boxes exhausted; best enclosure {best}; a uniform net would need about 10^{estimate_log10:.1} points; try heuristic mode")]
    Budget { best: RatInterval, boxes: u64, estimate_log10: f64 },
}

/// A value for a free variable in point evaluation.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Vector(Vec<(f64, f64)>),
    /// 1-based basis label.
    Label(usize),
}

/// Evaluates formulas on one model, sharing quantifier results between
/// calls.
pub struct Evaluator<'m> {
    model: &'m Model,
    prep: Prepared,
    cache: Cache,
    pub options: EvalOptions,
}

fn to_rat(iv: Ival) -> RatInterval {
    iv.to_rat_interval()
}

fn clamp_to(iv: RatInterval, range: &RatInterval) -> RatInterval {
    iv.intersect(range).unwrap_or(iv)
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m Model) -> Evaluator<'m> {
        Evaluator { model, prep: Prepared::new(model), cache: Cache::default(), options: EvalOptions::default() }
    }

    pub fn with_options(model: &'m Model, options: EvalOptions) -> Evaluator<'m> {
        Evaluator { options, ..Evaluator::new(model) }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    fn copts(&self) -> CompileOptions {
        CompileOptions { slicing: self.options.slicing, fast_path: self.options.fast_path }
    }

    fn check_closed(f: &Formula) -> Result<RatInterval, EvalError> {
        let range = f.range()?;
        let free: Vec<String> = f.free_vars().into_iter().map(|(n, _)| n).collect();
        if !free.is_empty() {
            return Err(EvalError::NotClosed(free));
        }
        Ok(range)
    }

    /// Interval of width ≤ eps containing the value of the closed formula.
    pub fn certified(&mut self, f: &Formula, eps: &Rational) -> Result<EvalResult, EvalError> {
        if !eps.is_positive() {
            return Err(EvalError::BadTolerance);
        }
        let range = Self::check_closed(f)?;
        let prog = compile(f, &self.prep, &[], &self.copts())?;
        let mut tau = f64_down(eps) / 2.0;
        let mut used = 0u64;
        let mut last = range.clone();
        for _ in 0..10 {
            let mut eng = Engine::new(&prog, &self.prep, &mut self.cache, tau, self.options.budget.saturating_sub(used));
            eng.inner_limit = self.options.inner_limit;
            let iv = eng.eval_root();
            used += eng.boxes;
            let r = clamp_to(to_rat(iv), &range);
            if eng.exhausted && &r.width() > eps {
                return Err(EvalError::Budget {
                    best: r,
                    boxes: used,
                    estimate_log10: grid_cost_log10(f, self.model.dim, eps),
                });
            }
            if &r.width() <= eps {
                let witnesses = eng.witnesses();
                return Ok(EvalResult { interval: r, witnesses, mode: Mode::Certified, cost: used });
            }
            last = r;
            tau /= 4.0;
        }
        Err(EvalError::Budget { best: last, boxes: used, estimate_log10: grid_cost_log10(f, self.model.dim, eps) })
    }

    /// Optimization-based bounds. For a leading sup the lower end is a
    /// certified value at the best witness found and the upper end a
    /// certified bound over the whole ball (dually for inf).
    pub fn heuristic(&mut self, f: &Formula, budget: u64, seed: u64) -> Result<EvalResult, EvalError> {
        let range = Self::check_closed(f)?;
        let prog = compile(f, &self.prep, &[], &self.copts())?;
        let sup = match f {
            Formula::Sup(_, Sort::Ball(_), _) => true,
            Formula::Inf(_, Sort::Ball(_), _) => false,
            _ => {
                let mut opts = self.options.clone();
                opts.budget = budget.max(1);
                let saved = std::mem::replace(&mut self.options, opts);
                let r = self.certified(f, &Rational::new(1.into(), 1_000_000.into()));
                self.options = saved;
                return match r {
                    Ok(mut res) => {
                        res.mode = Mode::Heuristic;
                        Ok(res)
                    }
                    Err(EvalError::Budget { best, boxes, .. }) => {
                        Ok(EvalResult { interval: best, witnesses: vec![], mode: Mode::Heuristic, cost: boxes })
                    }
                    Err(e) => Err(e),
                };
            }
        };
        let tau = 1e-6;
        let mut eng = Engine::new(&prog, &self.prep, &mut self.cache, tau, 200_000);
        eng.heur = Some(Heur {
            rng: ChaCha8Rng::seed_from_u64(seed),
            inner_evals: (budget as f64).sqrt().max(50.0) as usize,
            restarts: 16,
        });
        // the root search gets the whole budget
        let pt = {
            let h = eng.heur.as_mut().unwrap();
            h.inner_evals = budget as usize;
            let pt = eng.search_root().expect("leading vector quantifier");
            pt
        };
        let points = eng.points;
        eng.heur = None;
        let at = eng.root_body_bound(Some(&pt)).unwrap();
        let whole = eng.root_body_bound(None).unwrap();
        let (lo, hi) = if sup { (at.lo, whole.hi) } else { (whole.lo, at.hi) };
        let lo = lo.min(hi);
        let r = clamp_to(to_rat(Ival::new(lo, hi)), &range);
        let witnesses = match &prog.nodes[prog.root].kind {
            compile::NKind::QBall(q) => vec![Witness::Vector { var: q.name.clone(), value: q.layout.to_vector(&pt) }],
            _ => vec![],
        };
        Ok(EvalResult { interval: r, witnesses, mode: Mode::Heuristic, cost: points })
    }

    /// Enclosure of the formula's value under an assignment of its free
    /// variables; inner quantifiers are resolved to width about eps.
    pub fn point(&mut self, f: &Formula, assignment: &BTreeMap<String, Value>, eps: &Rational) -> Result<RatInterval, EvalError> {
        if !eps.is_positive() {
            return Err(EvalError::BadTolerance);
        }
        let range = f.range()?;
        let free: Vec<(String, Sort)> = f.free_vars().into_iter().collect();
        let prog = compile(f, &self.prep, &free, &self.copts())?;
        let dim = self.model.dim;
        let mut binds = vec![];
        for (name, sort) in &free {
            let v = assignment.get(name).ok_or_else(|| EvalError::BadAssignment(name.clone()))?;
            match (sort, v) {
                (Sort::Ball(n), Value::Vector(xs)) if xs.len() == dim => {
                    let ns = xs.iter().fold(Ival::ZERO, |a, (re, im)| a + Ival::point(*re).sqr() + Ival::point(*im).sqr());
                    if ns.lo > (*n as f64) * (*n as f64) {
                        return Err(EvalError::BadAssignment(name.clone()));
                    }
                    let params: Vec<f64> = xs.iter().flat_map(|(a, b)| [*a, *b]).collect();
                    binds.push((Some((Layout::full(dim, *n), params)), 0));
                }
                (Sort::Marked, Value::Label(k)) if (1..=dim).contains(k) && self.model.marked.is_some() => {
                    binds.push((None, k - 1));
                }
                _ => return Err(EvalError::BadAssignment(name.clone())),
            }
        }
        let mut eng = Engine::new(&prog, &self.prep, &mut self.cache, f64_down(eps) / 2.0, self.options.budget);
        for (b, k) in binds {
            match b {
                Some((layout, params)) => eng.bind_vector(layout, &params),
                None => eng.bind_label(k),
            }
        }
        let iv = eng.eval_root();
        Ok(clamp_to(to_rat(iv), &range))
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }
}

pub fn eval_certified(f: &Formula, model: &Model, eps: &Rational) -> Result<EvalResult, EvalError> {
    Evaluator::new(model).certified(f, eps)
}

pub fn eval_certified_with(f: &Formula, model: &Model, eps: &Rational, options: EvalOptions) -> Result<EvalResult, EvalError> {
    Evaluator::with_options(model, options).certified(f, eps)
}

/// Heuristic evaluation with a budget of point evaluations and a fixed seed.
pub fn eval_heuristic(f: &Formula, model: &Model, budget: u64) -> Result<EvalResult, EvalError> {
    Evaluator::new(model).heuristic(f, budget, 0x5eed)
}

pub fn eval_point(f: &Formula, model: &Model, assignment: &BTreeMap<String, Value>, eps: &Rational) -> Result<RatInterval, EvalError> {
    Evaluator::new(model).point(f, assignment, eps)
}

/// log10 of the number of points a uniform net of mesh δ with
/// L·δ·√(2·dim) ≤ ε/2 would need, multiplied along nested quantifiers.
pub fn grid_cost_log10(f: &Formula, dim: usize, eps: &Rational) -> f64 {
    let e = to_f64(eps);
    fn go(f: &Formula, dim: usize, e: f64) -> f64 {
        match f {
            Formula::Sup(v, s, b) | Formula::Inf(v, s, b) => {
                let inner = go(b, dim, e);
                match s {
                    Sort::Marked => (dim as f64).log10() + inner,
                    Sort::Ball(n) => {
                        let l = b.modulus().map(|m| to_f64(&m.var(v))).unwrap_or(1.0).max(1e-9);
                        let rd = 2.0 * dim as f64;
                        let delta = e / (2.0 * l * rd.sqrt());
                        let per = 2.0 * *n as f64 / delta + 1.0;
                        rd * per.log10() + inner
                    }
                }
            }
            _ => f.children().iter().map(|c| go(c, dim, e)).fold(0.0, f64::max),
        }
    }
    go(f, dim, e)
}
