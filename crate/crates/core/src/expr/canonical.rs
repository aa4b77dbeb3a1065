//! Normal form as a sum of terms `c · Π atom^k`, used for display.
//!
//! Products are expanded, integer powers of sums up to [`MAX_EXPANDED_POWER`]
//! are multiplied out, like factors and like terms are combined, and
//! `sec u` is rewritten as `cos(u)^-1`. Division by a sum keeps the sum as
//! an atom. Cancellations such as `x/x = 1` are applied, so the result agrees
//! with the input wherever the input is defined.

use std::collections::BTreeMap;

use super::simplify;
use super::{BinOp, Expr, Func, Node};

const MAX_TERMS: usize = 256;
const MAX_EXPANDED_POWER: f64 = 4.0;
/// Merged coefficients this small relative to their parts are roundoff.
const CANCEL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Term {
    coef: f64,
    /// Atom by printed key, with its base and exponent.
    factors: BTreeMap<String, (Expr, f64)>,
}

impl Term {
    fn constant(c: f64) -> Term {
        Term { coef: c, factors: BTreeMap::new() }
    }

    fn atom(base: Expr, exponent: f64) -> Term {
        let mut factors = BTreeMap::new();
        factors.insert(base.to_string(), (base, exponent));
        Term { coef: 1.0, factors }
    }

    fn signature(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|(k, (_, e))| format!("{k}^{e:?}")).collect();
        parts.join("*")
    }

    fn times(&self, other: &Term) -> Term {
        let mut out = self.clone();
        out.coef *= other.coef;
        for (key, (base, e)) in &other.factors {
            let slot = out.factors.entry(key.clone()).or_insert_with(|| (base.clone(), 0.0));
            slot.1 += e;
            if slot.1 == 0.0 {
                out.factors.remove(key);
            }
        }
        out
    }

    fn powi(&self, k: f64) -> Term {
        Term {
            coef: self.coef.powf(k),
            factors: self.factors.iter().map(|(key, (b, e))| (key.clone(), (b.clone(), e * k))).collect(),
        }
    }

    fn to_expr(&self) -> Expr {
        let mut num = match self.coef {
            1.0 | -1.0 => Expr::one(),
            c => Expr::num(c),
        };
        let mut negate = self.coef == -1.0;
        let mut den = Expr::one();
        for (base, e) in self.factors.values() {
            let power = |k: f64| if k == 1.0 { base.clone() } else { simplify::pow(base.clone(), Expr::num(k)) };
            if *e > 0.0 {
                let mut f = power(*e);
                if negate {
                    f = simplify::neg(f);
                    negate = false;
                }
                num = simplify::mul(num, f);
            } else {
                den = simplify::mul(den, power(-e));
            }
        }
        if negate {
            num = Expr::num(-1.0);
        }
        simplify::div(num, den)
    }
}

#[derive(Clone, Debug, Default)]
struct Sum {
    terms: BTreeMap<String, Term>,
}

impl Sum {
    fn from_term(t: Term) -> Sum {
        let mut s = Sum::default();
        s.push(t);
        s
    }

    fn push(&mut self, t: Term) {
        if t.coef == 0.0 {
            return;
        }
        let key = t.signature();
        match self.terms.get_mut(&key) {
            Some(existing) => {
                let merged = existing.coef + t.coef;
                if merged.abs() <= CANCEL_TOL * (existing.coef.abs() + t.coef.abs()) {
                    self.terms.remove(&key);
                } else {
                    existing.coef = merged;
                }
            }
            None => {
                self.terms.insert(key, t);
            }
        }
    }

    fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.values().next().filter(|t| t.factors.is_empty()).map(|t| t.coef),
            _ => None,
        }
    }

    fn single(&self) -> Option<&Term> {
        (self.terms.len() == 1).then(|| self.terms.values().next().expect("one term"))
    }

    fn plus(mut self, other: Sum) -> Option<Sum> {
        for t in other.terms.into_values() {
            self.push(t);
        }
        (self.terms.len() <= MAX_TERMS).then_some(self)
    }

    fn scaled(mut self, c: f64) -> Sum {
        for t in self.terms.values_mut() {
            t.coef *= c;
        }
        self
    }

    fn times(&self, other: &Sum) -> Option<Sum> {
        if self.terms.len() * other.terms.len() > MAX_TERMS * 4 {
            return None;
        }
        let mut out = Sum::default();
        for a in self.terms.values() {
            for b in other.terms.values() {
                out.push(a.times(b));
            }
        }
        (out.terms.len() <= MAX_TERMS).then_some(out)
    }

    fn to_expr(&self) -> Expr {
        // positive terms first, constants last
        let mut ordered: Vec<&Term> = self.terms.values().collect();
        ordered.sort_by_key(|t| (t.coef < 0.0, t.factors.is_empty()));
        let mut acc: Option<Expr> = None;
        for t in ordered {
            acc = Some(match acc {
                None => t.to_expr(),
                Some(a) if t.coef < 0.0 => {
                    let positive = Term { coef: -t.coef, factors: t.factors.clone() };
                    simplify::sub(a, positive.to_expr())
                }
                Some(a) => simplify::add(a, t.to_expr()),
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }

    /// This sum as a single factor: a term stays a term, a sum becomes an
    /// atom.
    fn as_factor(&self, exponent: f64) -> Term {
        match self.single() {
            Some(t) if t.coef > 0.0 || exponent.fract() == 0.0 => t.powi(exponent),
            _ => Term::atom(self.to_expr(), exponent),
        }
    }
}

fn build(e: &Expr) -> Option<Sum> {
    Some(match e.node() {
        Node::Num(v) => Sum::from_term(Term::constant(*v)),
        Node::Var(_) | Node::Param(_) => Sum::from_term(Term::atom(e.clone(), 1.0)),
        Node::Neg(inner) => build(inner)?.scaled(-1.0),
        Node::Call(f, arg) => {
            let arg = build(arg)?.to_expr();
            if arg.as_num().is_some() {
                let folded = simplify::call(*f, arg);
                return match folded.as_num() {
                    Some(v) => Some(Sum::from_term(Term::constant(v))),
                    None => Some(Sum::from_term(Term::atom(folded, 1.0))),
                };
            }
            match f {
                Func::Sec => Sum::from_term(Term::atom(Expr::raw_call(Func::Cos, arg), -1.0)),
                _ => Sum::from_term(Term::atom(Expr::raw_call(*f, arg), 1.0)),
            }
        }
        Node::Binary(op, l, r) => {
            let (l, r) = (build(l)?, build(r)?);
            match op {
                BinOp::Add => l.plus(r)?,
                BinOp::Sub => l.plus(r.scaled(-1.0))?,
                BinOp::Mul => l.times(&r)?,
                BinOp::Div => {
                    if r.as_constant() == Some(0.0) {
                        return None;
                    }
                    if r.terms.len() > 1 && l.terms.len() > 1 {
                        // keep the quotient of two sums intact
                        return Some(Sum::from_term(Term::atom(simplify::div(l.to_expr(), r.to_expr()), 1.0)));
                    }
                    l.times(&Sum::from_term(r.as_factor(-1.0)))?
                }
                BinOp::Pow => power(l, r)?,
            }
        }
    })
}

fn power(base: Sum, exponent: Sum) -> Option<Sum> {
    let Some(k) = exponent.as_constant() else {
        return Some(Sum::from_term(Term::atom(simplify::pow(base.to_expr(), exponent.to_expr()), 1.0)));
    };
    if let Some(b) = base.as_constant() {
        let folded = simplify::pow(Expr::num(b), Expr::num(k));
        return Some(match folded.as_num() {
            Some(v) => Sum::from_term(Term::constant(v)),
            None => Sum::from_term(Term::atom(folded, 1.0)),
        });
    }
    let integer = k.fract() == 0.0;
    if base.terms.len() > 1 && integer && (1.0..=MAX_EXPANDED_POWER).contains(&k) {
        let mut out = base.clone();
        for _ in 1..k as usize {
            out = out.times(&base)?;
        }
        return Some(out);
    }
    if let Some(t) = base.single() {
        // (c·Π a^e)^k distributes for integer k, or for a lone atom to the
        // first power
        let lone = t.coef == 1.0 && t.factors.len() == 1 && t.factors.values().all(|(_, e)| *e == 1.0);
        if integer || lone {
            return Some(Sum::from_term(t.powi(k)));
        }
    }
    Some(Sum::from_term(Term::atom(base.to_expr(), k)))
}

/// Canonical form of `e`, or the light simplification when expansion would
/// exceed the term budget.
pub(super) fn canonical(e: &Expr) -> Expr {
    match build(e) {
        Some(s) => s.to_expr(),
        None => simplify::simplify_light(e),
    }
}
