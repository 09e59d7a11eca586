//! Box evaluation of compiled formulas and best-first branch and bound for
//! vector quantifiers.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::compile::{CTerm, Coord, Layout, NId, NKind, Prepared, Program, QBall};
use super::heuristic::nelder_mead;
use super::tm::{inner, norm, STm, VTm};
use super::Witness;
use crate::numeric::rational::from_f64;
use crate::numeric::{op_norm, CIval, Ival};

#[derive(Clone, Debug)]
pub(crate) enum Bind {
    Ball { base: usize, layout: Layout },
    Label(usize),
}

/// Results of closed (or label-only) quantifier evaluations, shared across
/// formulas evaluated on the same model.
#[derive(Default)]
pub struct Cache {
    map: HashMap<String, (Ival, Vec<f64>)>,
}

impl Cache {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

struct BoxEntry {
    upper: f64,
    seq: u64,
    c: Vec<f64>,
    r: Vec<f64>,
    split: usize,
}

impl PartialEq for BoxEntry {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for BoxEntry {}
impl PartialOrd for BoxEntry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for BoxEntry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.upper.total_cmp(&o.upper).then_with(|| o.seq.cmp(&self.seq))
    }
}

pub(crate) struct Heur {
    pub rng: ChaCha8Rng,
    pub inner_evals: usize,
    pub restarts: usize,
}

pub(crate) struct Engine<'a> {
    prog: &'a Program,
    prep: &'a Prepared,
    pub center: Vec<f64>,
    pub radius: Vec<f64>,
    pub env: Vec<Bind>,
    act: Vec<usize>,
    hr: Vec<f64>,
    pos: Vec<usize>,
    pub tau: f64,
    pub budget: u64,
    pub boxes: u64,
    pub points: u64,
    pub exhausted: bool,
    pub inner_limit: u64,
    cache: &'a mut Cache,
    hints: HashMap<NId, Vec<f64>>,
    pub heur: Option<Heur>,
}

const NONE: usize = usize::MAX;

fn transform(iv: Ival, sup: bool) -> Ival {
    if sup {
        iv
    } else {
        -iv
    }
}

impl<'a> Engine<'a> {
    pub fn new(prog: &'a Program, prep: &'a Prepared, cache: &'a mut Cache, tau: f64, budget: u64) -> Engine<'a> {
        Engine {
            prog,
            prep,
            center: vec![],
            radius: vec![],
            env: vec![],
            act: vec![],
            hr: vec![],
            pos: vec![],
            tau,
            budget,
            boxes: 0,
            points: 0,
            exhausted: false,
            inner_limit: 24,
            cache,
            hints: HashMap::new(),
            heur: None,
        }
    }

    /// Binds a caller-supplied vector at the next slot.
    pub fn bind_vector(&mut self, layout: Layout, values: &[f64]) {
        let base = self.center.len();
        self.center.extend_from_slice(values);
        self.radius.extend(std::iter::repeat(0.0).take(values.len()));
        self.env.push(Bind::Ball { base, layout });
    }

    pub fn bind_label(&mut self, k: usize) {
        self.env.push(Bind::Label(k));
    }

    fn refresh(&mut self) {
        self.act.clear();
        self.hr.clear();
        self.pos.clear();
        self.pos.resize(self.center.len(), NONE);
        for (i, r) in self.radius.iter().enumerate() {
            if *r > 0.0 {
                self.pos[i] = self.act.len();
                self.act.push(i);
                self.hr.push(*r);
            }
        }
    }

    pub fn eval_root(&mut self) -> Ival {
        self.refresh();
        let root = self.prog.root;
        self.eval(root).bound
    }

    fn term(&self, t: &CTerm) -> VTm {
        let dim = self.prep.dim;
        let p = self.act.len();
        match t {
            CTerm::Var(slot) => match &self.env[*slot] {
                Bind::Ball { base, layout } => {
                    let mut v = VTm::zero(dim, p, layout.radius);
                    for (j, c) in layout.coords.iter().enumerate() {
                        match *c {
                            Coord::Zero => {}
                            Coord::Real(i) => {
                                v.c[j] = CIval::point(self.center[base + i], 0.0);
                                let k = self.pos[base + i];
                                if k != NONE {
                                    v.g[k][j] = CIval::ONE;
                                }
                            }
                            Coord::Complex(i, i2) => {
                                v.c[j] = CIval::point(self.center[base + i], self.center[base + i2]);
                                let k = self.pos[base + i];
                                if k != NONE {
                                    v.g[k][j] = CIval::ONE;
                                }
                                let k2 = self.pos[base + i2];
                                if k2 != NONE {
                                    v.g[k2][j] = CIval::I;
                                }
                            }
                        }
                    }
                    v
                }
                Bind::Label(_) => unreachable!("vector use of a label"),
            },
            CTerm::Zero => VTm::zero(dim, p, 1.0),
            CTerm::Add(a, b, n) => self.term(a).combine(&self.term(b), false, *n),
            CTerm::Sub(a, b, n) => self.term(a).combine(&self.term(b), true, *n),
            CTerm::Scale(z, a, n) => self.term(a).scale(*z, *n),
            CTerm::Apply(i, inv, a) => self.term(a).apply(&self.prep.ops[*i][*inv as usize]),
            CTerm::Qu(slot) => match self.env[*slot] {
                Bind::Label(k) => {
                    let mut v = VTm::zero(dim, p, 1.0);
                    v.c[k] = CIval::ONE;
                    v
                }
                _ => unreachable!("qu of a vector"),
            },
            CTerm::Const(i) => VTm::point(self.prep.consts[*i].clone(), p, 1.0),
        }
    }

    fn eval(&mut self, id: NId) -> STm {
        let prog = self.prog;
        let node = &prog.nodes[id];
        let p = self.act.len();
        let range = node.range;
        match &node.kind {
            NKind::Const(q) => STm::constant(*q, p),
            NKind::Dist(s, t, n) => {
                let mut w = self.term(s).combine(&self.term(t), true, *n);
                w.nmax = *n;
                norm(&w, &self.hr)
            }
            NKind::DistMarked(a, b) => {
                let v = match (&self.env[*a], &self.env[*b]) {
                    (Bind::Label(x), Bind::Label(y)) => (x != y) as u8 as f64,
                    _ => unreachable!(),
                };
                STm::constant(Ival::point(v), p)
            }
            NKind::Ip { real, s, t, same } => {
                let vs = self.term(s);
                let vt = if *same { vs.clone() } else { self.term(t) };
                inner(&vs, &vt, *real, *same, &self.hr)
            }
            NKind::Half(a) => {
                let x = self.eval(*a);
                let d = x.bound.half();
                x.scale(Ival::point(0.5)).finish(d, range, &self.hr)
            }
            NKind::Neg(cap, a) => {
                let x = self.eval(*a);
                let d = *cap - x.bound;
                x.neg().add_const(*cap).finish(d, range, &self.hr)
            }
            NKind::TSub(a, b) => {
                let (x, y) = (self.eval(*a), self.eval(*b));
                let dx = x.bound - y.bound;
                let diff = x.sub(&y).finish(dx, Ival::new(f64::NEG_INFINITY, f64::INFINITY), &self.hr);
                let d = diff.bound.pos();
                diff.pos(&self.hr).finish(d, range, &self.hr)
            }
            NKind::Min(a, b) | NKind::Max(a, b) => {
                let is_max = matches!(node.kind, NKind::Max(..));
                let (x, y) = (self.eval(*a), self.eval(*b));
                if is_max && x.bound.lo >= y.bound.hi || !is_max && x.bound.hi <= y.bound.lo {
                    let d = x.bound;
                    return x.finish(d, range, &self.hr);
                }
                if is_max && y.bound.lo >= x.bound.hi || !is_max && y.bound.hi <= x.bound.lo {
                    let d = y.bound;
                    return y.finish(d, range, &self.hr);
                }
                let dx = x.bound - y.bound;
                let diff = x.sub(&y).finish(dx, dx, &self.hr);
                let pp = diff.pos(&self.hr);
                if is_max {
                    let d = x.bound.max(&y.bound);
                    y.add(&pp).finish(d, range, &self.hr)
                } else {
                    let d = x.bound.min(&y.bound);
                    x.sub(&pp).finish(d, range, &self.hr)
                }
            }
            NKind::AbsDiff(a, b) => {
                let (x, y) = (self.eval(*a), self.eval(*b));
                let dx = x.bound - y.bound;
                let diff = x.sub(&y).finish(dx, dx, &self.hr);
                let d = diff.bound.abs();
                if diff.bound.lo >= 0.0 {
                    return diff.finish(d, range, &self.hr);
                }
                if diff.bound.hi <= 0.0 {
                    return diff.neg().finish(d, range, &self.hr);
                }
                let pp = diff.pos(&self.hr);
                pp.scale(Ival::point(2.0)).sub(&diff).finish(d, range, &self.hr)
            }
            NKind::TAdd(cap, a, b) => {
                let (x, y) = (self.eval(*a), self.eval(*b));
                let ds = x.bound + y.bound;
                let s = x.add(&y).finish(ds, ds, &self.hr);
                let d = s.bound.min(cap);
                if s.bound.hi <= cap.lo {
                    return s.finish(d, range, &self.hr);
                }
                let over = s.add_const(-*cap);
                let over = over.finish(s.bound - *cap, s.bound - *cap, &self.hr);
                s.sub(&over.pos(&self.hr)).finish(d, range, &self.hr)
            }
            NKind::Prod(a, b, same) => {
                if *same {
                    let x = self.eval(*a);
                    let t = x.sqr(&self.hr);
                    let d = t.bound;
                    t.finish(d, range, &self.hr)
                } else {
                    let (x, y) = (self.eval(*a), self.eval(*b));
                    let t = x.mul(&y, &self.hr);
                    let d = t.bound;
                    t.finish(d, range, &self.hr)
                }
            }
            NKind::QMarked { sup, body, .. } => {
                let mut acc: Option<STm> = None;
                for k in 0..self.prep.dim {
                    self.env.push(Bind::Label(k));
                    let v = self.eval(*body);
                    self.env.pop();
                    acc = Some(match acc {
                        None => v,
                        Some(a) => {
                            let d = if *sup { a.bound.max(&v.bound) } else { a.bound.min(&v.bound) };
                            if *sup && a.bound.lo >= v.bound.hi || !*sup && a.bound.hi <= v.bound.lo {
                                a
                            } else if *sup && v.bound.lo >= a.bound.hi || !*sup && v.bound.hi <= a.bound.lo {
                                v
                            } else {
                                let dx = a.bound - v.bound;
                                let diff = a.sub(&v).finish(dx, dx, &self.hr);
                                let pp = diff.pos(&self.hr);
                                let t = if *sup { v.add(&pp) } else { a.sub(&pp) };
                                t.finish(d, range, &self.hr)
                            }
                        }
                    });
                }
                acc.expect("positive dimension")
            }
            NKind::QBall(q) => {
                let saved = (self.act.clone(), self.hr.clone(), self.pos.clone());
                let iv = self.quant_ball(id, q);
                self.act = saved.0;
                self.hr = saved.1;
                self.pos = saved.2;
                STm::constant(meet_range(iv, range), p)
            }
        }
    }

    fn cache_key(&self, q: &QBall, tau: f64) -> Option<String> {
        let mut key = format!("{}|{:x}", q.key, tau.to_bits());
        for &slot in &q.free {
            match &self.env[slot] {
                Bind::Label(k) => key.push_str(&format!("|{k}")),
                Bind::Ball { base, layout } => {
                    let n = layout.nparams();
                    if self.radius[*base..base + n].iter().any(|r| *r > 0.0) {
                        return None;
                    }
                    for (re, im) in layout.to_vector(&self.center[*base..base + n]) {
                        key.push_str(&format!("|{:x},{:x}", re.to_bits(), im.to_bits()));
                    }
                }
            }
        }
        if self.heur.is_some() {
            key.push_str("|h");
        }
        Some(key)
    }

    fn quant_ball(&mut self, id: NId, q: &QBall) -> Ival {
        let tau = self.tau;
        let key = self.cache_key(q, tau);
        if let Some(k) = &key {
            if let Some((iv, pt)) = self.cache.map.get(k) {
                let (iv, pt) = (*iv, pt.clone());
                if !pt.is_empty() {
                    self.hints.insert(id, pt);
                }
                return iv;
            }
        }
        let mut result = None;
        if let Some(a) = &q.fast {
            let n = q.layout.radius;
            if !q.sup {
                result = Some((Ival::ZERO, vec![0.0; q.layout.nparams()]));
            } else if let Ok(iv) = op_norm(a, &from_f64(tau / (2.0 * n))) {
                let v = Ival::from_rat_interval(&iv) * Ival::point(n);
                result = Some((v, vec![]));
            }
        }
        let (iv, pt) = match result {
            Some(r) => r,
            None => {
                if self.heur.is_some() {
                    self.search(id, q)
                } else {
                    self.branch_and_bound(id, q)
                }
            }
        };
        if !pt.is_empty() {
            self.hints.insert(id, pt.clone());
        }
        if let Some(k) = key {
            if !self.exhausted {
                self.cache.map.insert(k, (iv, pt));
            }
        }
        iv
    }

    fn push_var(&mut self, q: &QBall) -> usize {
        let base = self.center.len();
        for i in 0..q.layout.nparams() {
            let (lo, hi) = (q.layout.lo[i], q.layout.hi[i]);
            self.center.push(0.5 * (lo + hi));
            self.radius.push(0.5 * (hi - lo));
        }
        self.env.push(Bind::Ball { base, layout: q.layout.clone() });
        base
    }

    fn pop_var(&mut self, base: usize) {
        self.env.pop();
        self.center.truncate(base);
        self.radius.truncate(base);
    }

    /// Value enclosure with the variable's parameters set to the given box.
    fn eval_box(&mut self, q: &QBall, base: usize, c: &[f64], r: &[f64]) -> (Ival, usize) {
        let np = c.len();
        self.center[base..base + np].copy_from_slice(c);
        self.radius[base..base + np].copy_from_slice(r);
        self.refresh();
        let t = self.eval(q.body);
        let mut split = 0;
        let mut best = -1.0;
        for i in 0..np {
            if r[i] <= 0.0 {
                continue;
            }
            let k = self.pos[base + i];
            let g = if k == NONE { 0.0 } else { t.g[k].mag() };
            let score = g * r[i] + r[i] * r[i];
            if score > best {
                best = score;
                split = i;
            }
        }
        (transform(t.bound, q.sup), split)
    }

    fn eval_at(&mut self, q: &QBall, base: usize, x: &[f64]) -> f64 {
        self.points += 1;
        let zeros = vec![0.0; x.len()];
        self.eval_box(q, base, x, &zeros).0.lo
    }

    /// Seeds for the variable: hint, origin, scaled basis directions.
    fn seeds(&self, id: NId, q: &QBall) -> Vec<Vec<f64>> {
        let l = &q.layout;
        let np = l.nparams();
        let mut out = vec![];
        if let Some(h) = self.hints.get(&id) {
            out.push(h.clone());
        }
        out.push(vec![0.0; np]);
        for i in 0..np {
            let mut v = vec![0.0; np];
            v[i] = l.hi[i];
            out.push(v.clone());
            if l.lo[i] < 0.0 {
                v[i] = l.lo[i];
                out.push(v);
            }
        }
        out
    }

    fn branch_and_bound(&mut self, id: NId, q: &QBall) -> (Ival, Vec<f64>) {
        let tau = self.tau;
        let base = self.push_var(q);
        let np = q.layout.nparams();
        let outer_point = self.radius[..base].iter().all(|r| *r == 0.0);
        let limit = if outer_point { u64::MAX } else { self.inner_limit };
        self.tau = tau / 2.0;
        let n = q.layout.radius;

        let mut best = f64::NEG_INFINITY;
        let mut best_pt = vec![0.0; np];
        for s in self.seeds(id, q) {
            let s = project(&s, &q.layout);
            let v = self.eval_at(q, base, &s);
            if v > best {
                best = v;
                best_pt = s;
            }
        }
        let c0: Vec<f64> = (0..np).map(|i| 0.5 * (q.layout.lo[i] + q.layout.hi[i])).collect();
        let r0: Vec<f64> = (0..np).map(|i| 0.5 * (q.layout.hi[i] - q.layout.lo[i])).collect();
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let (iv, split) = self.eval_box(q, base, &c0, &r0);
        self.boxes += 1;
        heap.push(BoxEntry { upper: iv.hi, seq, c: c0, r: r0, split });
        let mut popped = 0u64;
        while let Some(top) = heap.peek() {
            if top.upper - best <= tau || popped >= limit || self.exhausted {
                break;
            }
            let top = heap.pop().unwrap();
            popped += 1;
            if np == 0 {
                break;
            }
            let k = top.split;
            for sgn in [-0.5, 0.5] {
                let mut c = top.c.clone();
                let mut r = top.r.clone();
                r[k] *= 0.5;
                c[k] += sgn * top.r[k];
                if outside_ball(&c, &r, n) {
                    continue;
                }
                let (iv, split) = self.eval_box(q, base, &c, &r);
                self.boxes += 1;
                if self.boxes > self.budget {
                    self.exhausted = true;
                }
                let m = project(&c, &q.layout);
                let v = self.eval_at(q, base, &m);
                if v > best {
                    best = v;
                    best_pt = m;
                }
                if iv.hi > best {
                    seq += 1;
                    heap.push(BoxEntry { upper: iv.hi, seq, c, r, split });
                }
            }
        }
        let hi = heap.peek().map(|t| t.upper).unwrap_or(best).max(best);
        self.tau = tau;
        self.pop_var(base);
        let out = Ival::new(best, hi);
        (transform(out, q.sup), best_pt)
    }

    /// Heuristic counterpart: derivative-free local search from seeds and
    /// random starts; returns a point value, not an enclosure.
    fn search(&mut self, id: NId, q: &QBall) -> (Ival, Vec<f64>) {
        let base = self.push_var(q);
        let np = q.layout.nparams();
        let l = q.layout.clone();
        let (inner_evals, restarts) = {
            let h = self.heur.as_ref().unwrap();
            (h.inner_evals, h.restarts)
        };
        let mut starts = self.seeds(id, q);
        for _ in 0..restarts {
            let h = self.heur.as_mut().unwrap();
            let v: Vec<f64> = (0..np).map(|i| h.rng.gen_range(l.lo[i]..=l.hi[i])).collect();
            starts.push(v);
        }
        let per = (inner_evals / starts.len().max(1)).max(np + 2);
        let mut best = f64::NEG_INFINITY;
        let mut best_pt = vec![0.0; np];
        for s in starts {
            let s = project(&s, &l);
            let step = 0.25 * l.radius;
            let (x, v) = {
                let mut f = |x: &[f64]| -> f64 {
                    let xp = project(x, &l);
                    let iv = self.eval_mid(q, base, &xp);
                    iv
                };
                nelder_mead(&mut f, &s, step, per)
            };
            if v > best {
                best = v;
                best_pt = project(&x, &l);
            }
        }
        self.pop_var(base);
        let out = Ival::point(best);
        (transform(out, q.sup), best_pt)
    }

    fn root_ball(&self) -> Option<&'a QBall> {
        let prog = self.prog;
        match &prog.nodes[prog.root].kind {
            NKind::QBall(q) => Some(q),
            _ => None,
        }
    }

    /// Heuristic search for the leading vector quantifier.
    pub fn search_root(&mut self) -> Option<Vec<f64>> {
        let q = self.root_ball()?;
        self.refresh();
        Some(self.search(self.prog.root, q).1)
    }

    /// Enclosure of the leading quantifier's body at a point, or over the
    /// whole ball when no point is given.
    pub fn root_body_bound(&mut self, pt: Option<&[f64]>) -> Option<Ival> {
        let q = self.root_ball()?;
        let base = self.push_var(q);
        if let Some(p) = pt {
            let n = p.len();
            self.center[base..base + n].copy_from_slice(p);
            self.radius[base..base + n].iter_mut().for_each(|r| *r = 0.0);
        }
        self.refresh();
        let t = self.eval(q.body).bound;
        self.pop_var(base);
        Some(t)
    }

    fn eval_mid(&mut self, q: &QBall, base: usize, x: &[f64]) -> f64 {
        self.points += 1;
        let zeros = vec![0.0; x.len()];
        self.eval_box(q, base, x, &zeros).0.mid()
    }

    /// Re-evaluates the chain of leading quantifiers at their best points and
    /// reports the witnesses.
    pub fn witnesses(&mut self) -> Vec<Witness> {
        let prog = self.prog;
        let mut out = vec![];
        let mut id = prog.root;
        loop {
            self.refresh();
            match &prog.nodes[id].kind {
                NKind::QBall(q) => {
                    let _ = self.eval(id);
                    let pt = match self.hints.get(&id) {
                        Some(p) => p.clone(),
                        None => break,
                    };
                    out.push(Witness::Vector { var: q.name.clone(), value: q.layout.to_vector(&pt) });
                    let base = self.center.len();
                    self.center.extend_from_slice(&pt);
                    self.radius.extend(std::iter::repeat(0.0).take(pt.len()));
                    self.env.push(Bind::Ball { base, layout: q.layout.clone() });
                    id = q.body;
                }
                NKind::QMarked { sup, name, body, .. } => {
                    let mut best: Option<(f64, usize)> = None;
                    for k in 0..self.prep.dim {
                        self.env.push(Bind::Label(k));
                        self.refresh();
                        let b = self.eval(*body).bound;
                        self.env.pop();
                        let v = if *sup { b.lo } else { -b.hi };
                        if best.map_or(true, |(bv, _)| v > bv) {
                            best = Some((v, k));
                        }
                    }
                    let k = best.unwrap().1;
                    out.push(Witness::Label { var: name.clone(), label: k + 1 });
                    self.env.push(Bind::Label(k));
                    id = *body;
                }
                _ => break,
            }
        }
        out
    }
}

fn meet_range(iv: Ival, range: Ival) -> Ival {
    super::tm::meet(iv, range)
}

/// Whether the box misses the closed ball of radius n.
fn outside_ball(c: &[f64], r: &[f64], n: f64) -> bool {
    let mut s = Ival::ZERO;
    for (ci, ri) in c.iter().zip(r) {
        let d = (Ival::point(ci.abs()) - Ival::point(*ri)).lo.max(0.0);
        s = s + Ival::point(d).sqr();
    }
    s.lo > n * n
}

/// Moves a parameter point into the parameter box and the ball.
pub(crate) fn project(x: &[f64], l: &Layout) -> Vec<f64> {
    let n = l.radius;
    let mut v: Vec<f64> = x.iter().enumerate().map(|(i, a)| a.clamp(l.lo[i], l.hi[i])).collect();
    loop {
        let s = v.iter().fold(Ival::ZERO, |acc, a| acc + Ival::point(*a).sqr());
        if s.hi <= n * n {
            return v;
        }
        let f = n / s.hi.sqrt() * (1.0 - 1e-12);
        for a in v.iter_mut() {
            *a *= f;
        }
    }
}
