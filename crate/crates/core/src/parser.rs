//! Surface syntax for formulas: parsing and canonical printing.
//!
//! ```text
//! sup v:B1 . d(U1(v), v)
//! inf y:Q . not[2](d(qu(y), a1)) -. 1/2 * reip(a1, a2)
//! ```

use std::collections::HashMap;
use std::fmt;

use num_traits::{Signed, Zero};

use crate::formula::{Formula, Sort, Term, TypeError};
use crate::numeric::rational::{fmt_rational, parse_rational};
use crate::numeric::{FieldScalar, Rational};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Type(#[from] TypeError),
}

const KEYWORDS: &[&str] =
    &["d", "reip", "imip", "half", "min", "max", "adiff", "not", "plus", "sup", "inf", "add", "sub", "scale", "qu"];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Parses a formula and checks its sorts.
pub fn parse(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src);
    let f = p.formula()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err("unexpected trailing input"));
    }
    f.infer_ranges()?;
    Ok(f)
}

/// Parses a term with the given variables in scope.
pub fn parse_term(src: &str, scope: &[(&str, Sort)]) -> Result<Term, ParseError> {
    let mut p = Parser::new(src);
    for (n, s) in scope {
        p.scope.entry(n.to_string()).or_default().push(*s);
    }
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err("unexpected trailing input"));
    }
    t.sort()?;
    Ok(t)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    scope: HashMap<String, Vec<Sort>>,
}

impl Parser {
    fn new(src: &str) -> Self {
        Parser { chars: src.chars().collect(), pos: 0, scope: HashMap::new() }
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (mut line, mut col) = (1, 1);
        for &c in &self.chars[..self.pos.min(self.chars.len())] {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() {
            let c = self.chars[self.pos];
            if c == '#' {
                while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                    self.pos += 1;
                }
            } else if c.is_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.pos + n <= self.chars.len() && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            let found = match self.peek() {
                Some(c) => format!("'{c}'"),
                None => "end of input".to_string(),
            };
            Err(self.err(format!("expected '{s}', found {found}")))
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        match self.chars.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() || *c == '_' => {}
            _ => return None,
        }
        while let Some(c) = self.chars.get(self.pos) {
            if c.is_ascii_alphanumeric() || *c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    /// Looks at the identifier ahead without consuming it.
    fn peek_ident(&mut self) -> Option<String> {
        let save = self.pos;
        let id = self.ident();
        self.pos = save;
        id
    }

    fn unsigned_int(&mut self) -> Option<String> {
        let start = self.pos;
        while let Some(c) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.pos == start {
            None
        } else {
            Some(self.chars[start..self.pos].iter().collect())
        }
    }

    /// `-?digits(/digits)?` with no interior whitespace.
    fn rational(&mut self) -> Result<Rational, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let neg = if self.chars.get(self.pos) == Some(&'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let Some(num) = self.unsigned_int() else {
            self.pos = start;
            return Err(self.err("expected a rational number"));
        };
        let mut text = if neg { format!("-{num}") } else { num };
        if self.chars.get(self.pos) == Some(&'/') && self.chars.get(self.pos + 1).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
            let den = self.unsigned_int().expect("digit checked");
            text = format!("{text}/{den}");
        }
        parse_rational(&text).map_err(|e| {
            self.pos = start;
            self.err(e)
        })
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        self.skip_ws();
        match self.chars.get(self.pos) {
            Some('Q') => {
                self.pos += 1;
                if self.chars.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric()) {
                    return Err(self.err("malformed sort"));
                }
                Ok(Sort::Marked)
            }
            Some('B') => {
                self.pos += 1;
                let Some(n) = self.unsigned_int() else {
                    return Err(self.err("expected ball radius after 'B'"));
                };
                match n.parse::<u32>() {
                    Ok(k) if k >= 1 && k <= 1 << 20 => Ok(Sort::Ball(k)),
                    _ => Err(self.err("ball radius must be a positive integer")),
                }
            }
            _ => Err(self.err("expected a sort (B<n> or Q)")),
        }
    }

    // formula := quant | tsub
    fn formula(&mut self) -> Result<Formula, ParseError> {
        if let Some(id) = self.peek_ident() {
            if id == "sup" || id == "inf" {
                return self.quantifier();
            }
        }
        self.tsub()
    }

    fn quantifier(&mut self) -> Result<Formula, ParseError> {
        let q = self.ident().expect("peeked");
        let Some(v) = self.ident() else {
            return Err(self.err("expected a variable name"));
        };
        if is_keyword(&v) {
            return Err(self.err(format!("'{v}' is reserved")));
        }
        self.expect(":")?;
        let s = self.sort()?;
        self.expect(".")?;
        self.scope.entry(v.clone()).or_default().push(s);
        let body = self.formula();
        self.scope.get_mut(&v).expect("pushed").pop();
        let body = Box::new(body?);
        Ok(if q == "sup" { Formula::Sup(v, s, body) } else { Formula::Inf(v, s, body) })
    }

    // tsub := prod ('-.' prod)*
    fn tsub(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.prod()?;
        while self.eat("-.") {
            let rhs = self.prod_or_quant()?;
            lhs = Formula::TruncSub(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // prod := atom ('*' atom)*
    fn prod(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.atom()?;
        while self.eat("*") {
            let rhs = self.atom_or_quant()?;
            lhs = Formula::Prod(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    // a trailing quantifier extends as far right as possible
    fn prod_or_quant(&mut self) -> Result<Formula, ParseError> {
        if matches!(self.peek_ident().as_deref(), Some("sup") | Some("inf")) {
            return self.quantifier();
        }
        self.prod()
    }

    fn atom_or_quant(&mut self) -> Result<Formula, ParseError> {
        if matches!(self.peek_ident().as_deref(), Some("sup") | Some("inf")) {
            return self.quantifier();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            None => return Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect(")")?;
                return Ok(f);
            }
            Some(c) if c.is_ascii_digit() || (c == '-' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                return Ok(Formula::Const(self.rational()?));
            }
            _ => {}
        }
        let save = self.pos;
        let Some(id) = self.ident() else {
            return Err(self.err("expected a formula"));
        };
        let two_terms = |p: &mut Parser| -> Result<(Term, Term), ParseError> {
            p.expect("(")?;
            let a = p.term()?;
            p.expect(",")?;
            let b = p.term()?;
            p.expect(")")?;
            Ok((a, b))
        };
        let two_formulas = |p: &mut Parser| -> Result<(Box<Formula>, Box<Formula>), ParseError> {
            p.expect("(")?;
            let a = p.formula()?;
            p.expect(",")?;
            let b = p.formula()?;
            p.expect(")")?;
            Ok((Box::new(a), Box::new(b)))
        };
        let cap = |p: &mut Parser| -> Result<Rational, ParseError> {
            p.expect("[")?;
            let c = p.rational()?;
            p.expect("]")?;
            Ok(c)
        };
        Ok(match id.as_str() {
            "d" => {
                let (a, b) = two_terms(self)?;
                Formula::D(a, b)
            }
            "reip" => {
                let (a, b) = two_terms(self)?;
                Formula::ReIP(a, b)
            }
            "imip" => {
                let (a, b) = two_terms(self)?;
                Formula::ImIP(a, b)
            }
            "half" => {
                self.expect("(")?;
                let f = self.formula()?;
                self.expect(")")?;
                Formula::Half(Box::new(f))
            }
            "min" => {
                let (a, b) = two_formulas(self)?;
                Formula::Min(a, b)
            }
            "max" => {
                let (a, b) = two_formulas(self)?;
                Formula::Max(a, b)
            }
            "adiff" => {
                let (a, b) = two_formulas(self)?;
                Formula::AbsDiff(a, b)
            }
            "not" => {
                let c = cap(self)?;
                self.expect("(")?;
                let f = self.formula()?;
                self.expect(")")?;
                Formula::Neg(c, Box::new(f))
            }
            "plus" => {
                let c = cap(self)?;
                let (a, b) = two_formulas(self)?;
                Formula::TruncAdd(c, a, b)
            }
            _ => {
                self.pos = save;
                self.skip_ws();
                return Err(self.err(format!("unknown formula '{id}'")));
            }
        })
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&'0') && self.peek_at(1) == Some(':') {
            self.pos += 2;
            return Ok(Term::Zero(self.sort()?));
        }
        let Some(id) = self.ident() else {
            return Err(self.err("expected a term"));
        };
        match id.as_str() {
            "add" | "sub" => {
                self.expect("(")?;
                let a = self.term()?;
                self.expect(",")?;
                let b = self.term()?;
                self.expect(")")?;
                let (a, b) = (Box::new(a), Box::new(b));
                return Ok(if id == "add" { Term::Add(a, b) } else { Term::Sub(a, b) });
            }
            "scale" => {
                self.expect("(")?;
                let c = self.gaussian()?;
                self.expect(",")?;
                let t = self.term()?;
                self.expect(")")?;
                return Ok(Term::Scale(c, Box::new(t)));
            }
            "qu" => {
                self.expect("(")?;
                let t = self.term()?;
                self.expect(")")?;
                return Ok(Term::Qu(Box::new(t)));
            }
            _ => {}
        }
        if is_keyword(&id) {
            return Err(self.err(format!("'{id}' is not a term")));
        }
        // word sugar w[i1,...,ik](t)
        if id == "w" && self.chars.get(self.pos) == Some(&'[') {
            self.pos += 1;
            let mut letters = Vec::new();
            loop {
                self.skip_ws();
                let start = self.pos;
                let neg = self.eat("-");
                let Some(n) = self.unsigned_int() else {
                    self.pos = start;
                    return Err(self.err("expected an operator index"));
                };
                let k: i64 = n.parse().map_err(|_| self.err("operator index too large"))?;
                if k == 0 {
                    self.pos = start;
                    return Err(self.err("operator indices start at 1"));
                }
                letters.push(if neg { -k } else { k });
                if self.eat("]") {
                    break;
                }
                self.expect(",")?;
            }
            self.expect("(")?;
            let mut t = self.term()?;
            self.expect(")")?;
            for &l in letters.iter().rev() {
                let name = format!("U{}", l.unsigned_abs());
                t = if l > 0 { Term::Apply(name, Box::new(t)) } else { Term::ApplyInv(name, Box::new(t)) };
            }
            return Ok(t);
        }
        if self.chars.get(self.pos) == Some(&'~') {
            self.pos += 1;
            self.expect("(")?;
            let t = self.term()?;
            self.expect(")")?;
            return Ok(Term::ApplyInv(id, Box::new(t)));
        }
        if self.peek() == Some('(') {
            self.pos += 1;
            let t = self.term()?;
            self.expect(")")?;
            return Ok(Term::Apply(id, Box::new(t)));
        }
        match self.scope.get(&id).and_then(|v| v.last()) {
            Some(s) => Ok(Term::Var(id, *s)),
            None => Ok(Term::Const(id)),
        }
    }

    /// `r`, `ri`, or `r(+|-)ri` with r an unsigned-or-signed rational.
    fn gaussian(&mut self) -> Result<FieldScalar, ParseError> {
        let first = self.rational()?;
        if self.chars.get(self.pos) == Some(&'i') && !self.peek_at(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
            self.pos += 1;
            return Ok(FieldScalar::gaussian(Rational::zero(), first));
        }
        let sign = match self.chars.get(self.pos) {
            Some('+') => 1,
            Some('-') => -1,
            _ => return Ok(FieldScalar::gaussian(first, Rational::zero())),
        };
        self.pos += 1;
        if !self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            return Err(self.err("expected the imaginary part"));
        }
        let im = self.rational()?;
        if self.chars.get(self.pos) != Some(&'i') {
            return Err(self.err("expected 'i' after the imaginary part"));
        }
        self.pos += 1;
        let im = if sign < 0 { -im } else { im };
        Ok(FieldScalar::gaussian(first, im))
    }
}

pub fn print_sort(s: &Sort) -> String {
    match s {
        Sort::Ball(n) => format!("B{n}"),
        Sort::Marked => "Q".to_string(),
    }
}

fn print_gaussian(c: &FieldScalar) -> String {
    if c.b.is_zero() {
        return fmt_rational(&c.a);
    }
    if c.a.is_zero() {
        return format!("{}i", fmt_rational(&c.b));
    }
    let sign = if c.b.is_negative() { "-" } else { "+" };
    format!("{}{}{}i", fmt_rational(&c.a), sign, fmt_rational(&c.b.abs()))
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_sort(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(n, _) | Term::Const(n) => f.write_str(n),
            Term::Zero(s) => write!(f, "0:{s}"),
            Term::Add(a, b) => write!(f, "add({a}, {b})"),
            Term::Sub(a, b) => write!(f, "sub({a}, {b})"),
            Term::Scale(c, t) => write!(f, "scale({}, {t})", print_gaussian(c)),
            Term::Apply(u, t) => write!(f, "{u}({t})"),
            Term::ApplyInv(u, t) => write!(f, "{u}~({t})"),
            Term::Qu(t) => write!(f, "qu({t})"),
        }
    }
}

// precedence: quantifier 0, '-.' 1, '*' 2, atom 3
fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Sup(..) | Formula::Inf(..) => 0,
        Formula::TruncSub(..) => 1,
        Formula::Prod(..) => 2,
        _ => 3,
    }
}

fn write_at(f: &Formula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(f) < min {
        write!(out, "({f})")
    } else {
        write!(out, "{f}")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        match self {
            D(a, b) => write!(out, "d({a}, {b})"),
            ReIP(a, b) => write!(out, "reip({a}, {b})"),
            ImIP(a, b) => write!(out, "imip({a}, {b})"),
            Const(q) => out.write_str(&fmt_rational(q)),
            Half(f) => write!(out, "half({f})"),
            TruncSub(a, b) => {
                write_at(a, 1, out)?;
                out.write_str(" -. ")?;
                write_at(b, 2, out)
            }
            Prod(a, b) => {
                write_at(a, 2, out)?;
                out.write_str(" * ")?;
                write_at(b, 3, out)
            }
            Min(a, b) => write!(out, "min({a}, {b})"),
            Max(a, b) => write!(out, "max({a}, {b})"),
            AbsDiff(a, b) => write!(out, "adiff({a}, {b})"),
            Neg(c, f) => write!(out, "not[{}]({f})", fmt_rational(c)),
            TruncAdd(c, a, b) => write!(out, "plus[{}]({a}, {b})", fmt_rational(c)),
            Sup(v, s, f) => write!(out, "sup {v}:{s} . {f}"),
            Inf(v, s, f) => write!(out, "inf {v}:{s} . {f}"),
        }
    }
}

/// Canonical text of a formula.
pub fn print(f: &Formula) -> String {
    f.to_string()
}
