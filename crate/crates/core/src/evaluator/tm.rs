//! First-order interval Taylor models over the active box parameters.
//!
//! A scalar model stands for every function f with
//! f(c + h) ∈ C + Σ G_k h_k + R for all |h_k| ≤ r_k. Vector models carry the
//! remainder as a norm bound instead of per-component intervals.

use crate::numeric::{CIval, Ival};

pub(crate) fn sym(r: f64) -> Ival {
    Ival::new(-r, r)
}

/// Intersection that falls back to `a` if rounding left the pieces disjoint.
pub(crate) fn meet(a: Ival, b: Ival) -> Ival {
    let lo = a.lo.max(b.lo);
    let hi = a.hi.min(b.hi);
    if lo <= hi {
        Ival::new(lo, hi)
    } else {
        a
    }
}

fn up_add(a: f64, b: f64) -> f64 {
    (Ival::point(a) + Ival::point(b)).hi
}

fn up_mul(a: f64, b: f64) -> f64 {
    (Ival::point(a) * Ival::point(b)).hi
}

/// Upper bound on |z| over a complex rectangle.
pub(crate) fn cabs_hi(z: &CIval) -> f64 {
    z.norm_sqr().sqrt().hi
}

#[derive(Clone, Debug)]
pub(crate) struct STm {
    pub c: Ival,
    pub g: Vec<Ival>,
    pub rem: Ival,
    /// Enclosure of the value over the whole box.
    pub bound: Ival,
}

impl STm {
    pub fn constant(iv: Ival, p: usize) -> STm {
        STm { c: iv, g: vec![Ival::ZERO; p], rem: Ival::ZERO, bound: iv }
    }

    pub fn linear_range(&self, hr: &[f64]) -> Ival {
        let mut acc = Ival::ZERO;
        for (g, r) in self.g.iter().zip(hr) {
            if *r > 0.0 {
                acc = acc + *g * sym(*r);
            }
        }
        acc
    }

    pub fn tm_range(&self, hr: &[f64]) -> Ival {
        self.c + self.linear_range(hr) + self.rem
    }

    /// Sets the bound to direct ∩ model range ∩ node range.
    pub fn finish(mut self, direct: Ival, node: Ival, hr: &[f64]) -> STm {
        let r = self.tm_range(hr);
        self.bound = meet(meet(meet(direct, node), r), direct);
        self
    }

    pub fn add(&self, o: &STm) -> STm {
        STm {
            c: self.c + o.c,
            g: self.g.iter().zip(&o.g).map(|(a, b)| *a + *b).collect(),
            rem: self.rem + o.rem,
            bound: self.bound + o.bound,
        }
    }

    pub fn sub(&self, o: &STm) -> STm {
        STm {
            c: self.c - o.c,
            g: self.g.iter().zip(&o.g).map(|(a, b)| *a - *b).collect(),
            rem: self.rem - o.rem,
            bound: self.bound - o.bound,
        }
    }

    pub fn neg(&self) -> STm {
        STm { c: -self.c, g: self.g.iter().map(|a| -*a).collect(), rem: -self.rem, bound: -self.bound }
    }

    pub fn scale(&self, s: Ival) -> STm {
        STm {
            c: self.c * s,
            g: self.g.iter().map(|a| *a * s).collect(),
            rem: self.rem * s,
            bound: self.bound * s,
        }
    }

    pub fn add_const(&self, k: Ival) -> STm {
        STm { c: self.c + k, g: self.g.clone(), rem: self.rem, bound: self.bound + k }
    }

    /// max(x, 0) by the chord relaxation over the enclosure [l, u].
    pub fn pos(&self, hr: &[f64]) -> STm {
        let e = self.bound;
        if e.lo >= 0.0 {
            return self.clone();
        }
        if e.hi <= 0.0 {
            return STm::constant(Ival::ZERO, self.g.len());
        }
        let (l, u) = (Ival::point(e.lo), Ival::point(e.hi));
        let inv = (u - l).recip();
        let s = u * inv;
        let beta = (u * -l * inv).hi;
        let mut t = self.scale(s);
        t.rem = t.rem + Ival::new(0.0, beta);
        let direct = e.pos();
        t.bound = direct;
        t.finish(direct, direct, hr)
    }

    pub fn mul(&self, o: &STm, hr: &[f64]) -> STm {
        let la = self.linear_range(hr) + self.rem;
        let lb = o.linear_range(hr) + o.rem;
        let g = self.g.iter().zip(&o.g).map(|(ga, gb)| self.c * *gb + o.c * *ga).collect();
        let rem = la * lb + self.c * o.rem + o.c * self.rem;
        let direct = self.bound * o.bound;
        STm { c: self.c * o.c, g, rem, bound: direct }
    }

    pub fn sqr(&self, hr: &[f64]) -> STm {
        let l = self.linear_range(hr) + self.rem;
        let two = Ival::point(2.0);
        let g = self.g.iter().map(|gk| two * self.c * *gk).collect();
        let rem = two * self.c * self.rem + l.sqr();
        STm { c: self.c.sqr(), g, rem, bound: self.bound.sqr() }
    }
}

/// Vector-valued model: value ∈ c + Σ g_k h_k + e with ‖e‖ ≤ rho.
#[derive(Clone, Debug)]
pub(crate) struct VTm {
    pub c: Vec<CIval>,
    pub g: Vec<Vec<CIval>>,
    pub rho: f64,
    /// Norm bound from the sort.
    pub nmax: f64,
}

impl VTm {
    pub fn zero(dim: usize, p: usize, nmax: f64) -> VTm {
        VTm { c: vec![CIval::ZERO; dim], g: vec![vec![CIval::ZERO; dim]; p], rho: 0.0, nmax }
    }

    pub fn point(v: Vec<CIval>, p: usize, nmax: f64) -> VTm {
        let dim = v.len();
        VTm { c: v, g: vec![vec![CIval::ZERO; dim]; p], rho: 0.0, nmax }
    }

    pub fn combine(&self, o: &VTm, sub: bool, nmax: f64) -> VTm {
        let f = |a: &CIval, b: &CIval| if sub { *a - *b } else { *a + *b };
        VTm {
            c: self.c.iter().zip(&o.c).map(|(a, b)| f(a, b)).collect(),
            g: self.g.iter().zip(&o.g).map(|(x, y)| x.iter().zip(y).map(|(a, b)| f(a, b)).collect()).collect(),
            rho: up_add(self.rho, o.rho),
            nmax,
        }
    }

    pub fn scale(&self, z: CIval, nmax: f64) -> VTm {
        VTm {
            c: self.c.iter().map(|a| *a * z).collect(),
            g: self.g.iter().map(|x| x.iter().map(|a| *a * z).collect()).collect(),
            rho: up_mul(self.rho, cabs_hi(&z)),
            nmax,
        }
    }

    /// Application of an exactly unitary matrix given by an enclosure.
    pub fn apply(&self, m: &[Vec<CIval>]) -> VTm {
        let mv = |v: &[CIval]| -> Vec<CIval> {
            m.iter()
                .map(|row| row.iter().zip(v).fold(CIval::ZERO, |acc, (a, b)| acc + *a * *b))
                .collect()
        };
        VTm { c: mv(&self.c), g: self.g.iter().map(|x| mv(x)).collect(), rho: self.rho, nmax: 1.0 }
    }

    /// Upper bound on ‖Σ g_k h_k‖.
    pub fn lin_mag(&self, hr: &[f64]) -> f64 {
        let dim = self.c.len();
        let mut tot = Ival::ZERO;
        for j in 0..dim {
            let mut s = Ival::ZERO;
            for (gk, r) in self.g.iter().zip(hr) {
                if *r > 0.0 {
                    s = s + Ival::point(cabs_hi(&gk[j])) * Ival::point(*r);
                }
            }
            tot = tot + s.sqr();
        }
        tot.sqrt().hi
    }

    pub fn center_norm(&self) -> Ival {
        self.c.iter().fold(Ival::ZERO, |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Componentwise rectangles containing the value.
    pub fn boxes(&self, hr: &[f64]) -> Vec<CIval> {
        let e = sym(self.rho);
        (0..self.c.len())
            .map(|j| {
                let mut z = self.c[j];
                for (gk, r) in self.g.iter().zip(hr) {
                    if *r > 0.0 {
                        z = z + gk[j].scale(sym(*r));
                    }
                }
                z + CIval::new(e, e)
            })
            .collect()
    }

    /// Upper bound on the norm of the value.
    pub fn norm_hi(&self, hr: &[f64]) -> f64 {
        let n = up_add(up_add(self.center_norm().hi, self.lin_mag(hr)), self.rho);
        n.min(self.nmax)
    }
}

/// Re or Im of ⟨s, t⟩ = Σ s_j conj(t_j).
pub(crate) fn inner(s: &VTm, t: &VTm, real: bool, same: bool, hr: &[f64]) -> STm {
    let p = s.g.len();
    let part = |z: CIval| if real { z.re } else { z.im };
    if same {
        if !real {
            return STm::constant(Ival::ZERO, p);
        }
        let c = s.c.iter().fold(Ival::ZERO, |acc, z| acc + z.norm_sqr());
        let g: Vec<Ival> = s
            .g
            .iter()
            .map(|gk| Ival::point(2.0) * gk.iter().zip(&s.c).fold(Ival::ZERO, |acc, (a, b)| acc + a.mul_conj(b).re))
            .collect();
        let a = s.lin_mag(hr);
        let cn = s.center_norm().hi;
        let cross = up_mul(2.0 * s.rho, up_add(cn, a));
        let rem = Ival::new(0.0, up_mul(a, a)) + sym(cross) + Ival::new(0.0, up_mul(s.rho, s.rho));
        let direct = s.boxes(hr).iter().fold(Ival::ZERO, |acc, z| acc + z.norm_sqr());
        let n2 = up_mul(s.nmax, s.nmax);
        let nh = s.norm_hi(hr);
        let clamp = Ival::new(0.0, n2.min(up_mul(nh, nh)));
        return STm { c, g, rem, bound: direct }.finish(direct, clamp, hr);
    }
    let c = part(s.c.iter().zip(&t.c).fold(CIval::ZERO, |acc, (a, b)| acc + a.mul_conj(b)));
    let g: Vec<Ival> = s
        .g
        .iter()
        .zip(&t.g)
        .map(|(gs, gt)| {
            let mut acc = CIval::ZERO;
            for j in 0..s.c.len() {
                acc = acc + gs[j].mul_conj(&t.c[j]) + s.c[j].mul_conj(&gt[j]);
            }
            part(acc)
        })
        .collect();
    let (as_, at) = (s.lin_mag(hr), t.lin_mag(hr));
    let nt = t.norm_hi(hr);
    let slin = up_add(s.center_norm().hi, as_);
    let r = up_add(up_add(up_mul(as_, at), up_mul(s.rho, nt)), up_mul(slin, t.rho));
    let rem = sym(r);
    let bs = s.boxes(hr);
    let bt = t.boxes(hr);
    let direct = part(bs.iter().zip(&bt).fold(CIval::ZERO, |acc, (a, b)| acc + a.mul_conj(b)));
    let m = up_mul(s.norm_hi(hr), nt);
    STm { c, g, rem, bound: direct }.finish(direct, sym(m), hr)
}

/// ‖s − t‖ given w = s − t.
pub(crate) fn norm(w: &VTm, hr: &[f64]) -> STm {
    let p = w.g.len();
    let cn = w.center_norm();
    let a = w.lin_mag(hr);
    let direct = w.boxes(hr).iter().fold(Ival::ZERO, |acc, z| acc + z.norm_sqr()).sqrt();
    let node = Ival::new(0.0, w.nmax);
    let tm = if a == 0.0 {
        STm::constant(cn + sym(w.rho), p)
    } else if cn.lo > 2.0 * a {
        let inv = cn.recip();
        let g = w
            .g
            .iter()
            .map(|gk| gk.iter().zip(&w.c).fold(Ival::ZERO, |acc, (x, y)| acc + x.mul_conj(y).re) * inv)
            .collect();
        let d = (Ival::point(cn.lo) - Ival::point(a)).lo;
        let q = (Ival::point(a) * Ival::point(a) * (Ival::point(2.0) * Ival::point(d)).recip()).hi;
        STm { c: cn, g, rem: Ival::new(0.0, q) + sym(w.rho), bound: direct }
    } else {
        let lo = (cn - Ival::point(a) - Ival::point(w.rho)).lo.max(0.0);
        let hi = up_add(up_add(cn.hi, a), w.rho);
        STm::constant(Ival::new(lo, hi), p)
    };
    tm.finish(direct, node, hr)
}
