//! Symbolic expressions over the three state variables `x1, x2, x3` and named
//! real parameters.
//!
//! Expressions are immutable trees with shared subterms, so cloning is cheap
//! and derivative trees can reuse pieces of their source. Evaluation reports
//! domain violations instead of producing non-finite values.

mod canonical;
mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

pub use eval::EvalError;
pub use parse::{parse, parse_with_params, ParseError, ParseErrorKind};

/// A point in phase space.
pub type Point = [f64; 3];

/// Parameter bindings by name.
pub type Params = BTreeMap<String, f64>;

/// One of the three coordinate axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X1,
    X2,
    X3,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X1, Axis::X2, Axis::X3];

    /// Zero-based index into a [`Point`].
    pub fn index(self) -> usize {
        match self {
            Axis::X1 => 0,
            Axis::X2 => 1,
            Axis::X3 => 2,
        }
    }

    /// Axis from its one-based label (`1..=3`).
    pub fn from_label(label: usize) -> Option<Axis> {
        match label {
            1 => Some(Axis::X1),
            2 => Some(Axis::X2),
            3 => Some(Axis::X3),
            _ => None,
        }
    }

    pub fn label(self) -> usize {
        self.index() + 1
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.label())
    }
}

/// Elementary functions available in the expression language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sec,
    Cot,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sec,
        Func::Cot,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sec => "sec",
            Func::Cot => "cot",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Axis),
    Param(String),
    Neg(Expr),
    Call(Func, Expr),
    Binary(BinOp, Expr, Expr),
}

/// Immutable expression tree.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    /// Raw constructor: no simplification is applied.
    pub fn raw_binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::from_node(Node::Binary(op, lhs, rhs))
    }

    pub fn raw_neg(inner: Expr) -> Expr {
        Expr::from_node(Node::Neg(inner))
    }

    pub fn raw_call(func: Func, arg: Expr) -> Expr {
        Expr::from_node(Node::Call(func, arg))
    }

    pub fn num(value: f64) -> Expr {
        Expr::from_node(Node::Num(value))
    }

    pub fn zero() -> Expr {
        Expr::num(0.0)
    }

    pub fn one() -> Expr {
        Expr::num(1.0)
    }

    pub fn var(axis: Axis) -> Expr {
        Expr::from_node(Node::Var(axis))
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::from_node(Node::Param(name.into()))
    }

    pub fn as_num(&self) -> Option<f64> {
        match self.node() {
            Node::Num(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_num() == Some(1.0)
    }

    /// Whether the expression mentions the given state variable.
    pub fn depends_on(&self, axis: Axis) -> bool {
        match self.node() {
            Node::Num(_) | Node::Param(_) => false,
            Node::Var(a) => *a == axis,
            Node::Neg(e) | Node::Call(_, e) => e.depends_on(axis),
            Node::Binary(_, l, r) => l.depends_on(axis) || r.depends_on(axis),
        }
    }

    /// Whether the expression mentions any state variable.
    pub fn has_vars(&self) -> bool {
        Axis::ALL.iter().any(|&a| self.depends_on(a))
    }

    /// Names of all parameters referenced by the expression.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) | Node::Var(_) => {}
            Node::Param(p) => {
                out.insert(p.clone());
            }
            Node::Neg(e) | Node::Call(_, e) => e.collect_params(out),
            Node::Binary(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
        }
    }

    fn map(&self, leaf: &dyn Fn(&Node) -> Option<Expr>) -> Expr {
        if let Some(replaced) = leaf(self.node()) {
            return replaced;
        }
        match self.node() {
            Node::Num(_) | Node::Var(_) | Node::Param(_) => self.clone(),
            Node::Neg(e) => Expr::raw_neg(e.map(leaf)),
            Node::Call(f, e) => Expr::raw_call(*f, e.map(leaf)),
            Node::Binary(op, l, r) => Expr::raw_binary(*op, l.map(leaf), r.map(leaf)),
        }
    }

    /// Replaces each state variable `x_k` by `with[k-1]`.
    pub fn substitute_vars(&self, with: &[Expr; 3]) -> Expr {
        self.map(&|n| match n {
            Node::Var(a) => Some(with[a.index()].clone()),
            _ => None,
        })
    }

    /// Replaces named parameters by expressions. Unlisted parameters are kept.
    pub fn substitute_params(&self, with: &BTreeMap<String, Expr>) -> Expr {
        self.map(&|n| match n {
            Node::Param(p) => with.get(p).cloned(),
            _ => None,
        })
    }

    /// Substitutes numeric values for every bound parameter and constant-folds.
    pub fn bind(&self, params: &Params) -> Expr {
        self.map(&|n| match n {
            Node::Param(p) => params.get(p).map(|&v| Expr::num(v)),
            _ => None,
        })
        .simplify_light()
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::num(value)
    }
}

impl From<Axis> for Expr {
    fn from(axis: Axis) -> Self {
        Expr::var(axis)
    }
}

pub fn x1() -> Expr {
    Expr::var(Axis::X1)
}

pub fn x2() -> Expr {
    Expr::var(Axis::X2)
}

pub fn x3() -> Expr {
    Expr::var(Axis::X3)
}

macro_rules! impl_op {
    ($trait:ident, $method:ident, $ctor:ident) => {
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                simplify::$ctor(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                simplify::$ctor(self.clone(), rhs.clone())
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                simplify::$ctor(self, Expr::num(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                simplify::$ctor(Expr::num(self), rhs)
            }
        }
    };
}

impl_op!(Add, add, add);
impl_op!(Sub, sub, sub);
impl_op!(Mul, mul, mul);
impl_op!(Div, div, div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        simplify::neg(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        simplify::neg(self.clone())
    }
}

impl Expr {
    pub fn pow(self, exponent: impl Into<Expr>) -> Expr {
        simplify::pow(self, exponent.into())
    }

    pub fn powi(self, exponent: i32) -> Expr {
        simplify::pow(self, Expr::num(f64::from(exponent)))
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        simplify::call(func, arg)
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn tan(self) -> Expr {
        Expr::call(Func::Tan, self)
    }
    pub fn sec(self) -> Expr {
        Expr::call(Func::Sec, self)
    }
    pub fn cot(self) -> Expr {
        Expr::call(Func::Cot, self)
    }
    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn ln(self) -> Expr {
        Expr::call(Func::Ln, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }

    /// Light simplification: removes additive/multiplicative identities and
    /// folds numeric subterms. Semantics are preserved wherever the input is
    /// evaluable.
    pub fn simplify_light(&self) -> Expr {
        simplify::simplify_light(self)
    }

    /// Expanded normal form with like terms and factors combined, for
    /// display. Agrees with `self` wherever `self` is defined.
    pub fn canonical(&self) -> Expr {
        canonical::canonical(self)
    }

    /// Exact partial derivative with respect to `axis`.
    pub fn diff(&self, axis: Axis) -> Expr {
        diff::diff(self, axis)
    }

    /// Gradient `(∂₁e, ∂₂e, ∂₃e)`.
    pub fn gradient(&self) -> [Expr; 3] {
        Axis::ALL.map(|a| self.diff(a))
    }

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), |acc, t| acc + t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitution_replaces_leaves() {
        let e = parse("x1*a + x2").unwrap();
        let s = e.substitute_vars(&[x2(), x3(), Expr::num(2.0)]);
        let p: Params = [("a".to_string(), 3.0)].into();
        assert_eq!(s.eval(&[0.0, 5.0, 7.0], &p).unwrap(), 5.0 * 3.0 + 7.0);

        let mut with = BTreeMap::new();
        with.insert("a".to_string(), x3());
        let t = e.substitute_params(&with);
        assert!(t.params().is_empty());
        assert_eq!(t.eval(&[2.0, 1.0, 4.0], &Params::new()).unwrap(), 9.0);
    }

    #[test]
    fn bind_folds_parameters() {
        let e = parse("(I2-I3)/(I2*I3)*x2*x3").unwrap();
        let p: Params = [("I2".to_string(), 2.0), ("I3".to_string(), 3.0)].into();
        let b = e.bind(&p);
        assert!(b.params().is_empty());
        assert_eq!(b.to_string(), format!("{}*x2*x3", -1.0 / 6.0));
    }

    #[test]
    fn dependency_tracking() {
        let e = parse("x3*sec(x1)").unwrap();
        assert!(e.depends_on(Axis::X1));
        assert!(!e.depends_on(Axis::X2));
        assert!(e.has_vars());
        assert!(!parse("a*b").unwrap().has_vars());
    }
}
