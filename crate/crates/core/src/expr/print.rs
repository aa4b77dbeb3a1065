use std::fmt;

use super::{BinOp, Expr, Node};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => NEG,
        Node::Num(_) | Node::Var(_) | Node::Param(_) | Node::Call(..) => ATOM,
        Node::Neg(_) => NEG,
        Node::Binary(BinOp::Add | BinOp::Sub, ..) => ADD,
        Node::Binary(BinOp::Mul | BinOp::Div, ..) => MUL,
        Node::Binary(BinOp::Pow, ..) => POW,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(f, "{v}")
    } else {
        // shortest representation that round-trips, with an exponent when long
        write!(f, "{v:?}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Num(v) => write_num(f, *v),
            Node::Var(a) => write!(f, "{a}"),
            Node::Param(p) => f.write_str(p),
            Node::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Node::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, precedence(inner) < NEG)
            }
            Node::Binary(op, l, r) => {
                let p = precedence(self);
                // `a-(b-c)`, `a/(b*c)` and `a+(b+c)` all keep their grouping so
                // that re-parsing reproduces the same evaluation order.
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    (precedence(l) <= POW, precedence(r) < POW)
                } else {
                    (precedence(l) < p, precedence(r) <= p || precedence(r) == NEG)
                };
                write_child(f, l, left_parens)?;
                write!(f, "{}", op.symbol())?;
                write_child(f, r, right_parens)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, x1, x2, Expr, Params};

    #[test]
    fn minimal_parentheses() {
        for s in [
            "x1+x2*x3",
            "(x1+x2)*x3",
            "x1-(x2-x3)",
            "x1/(x2*x3)",
            "-x1^2",
            "(-x1)^2",
            "x1^x2^x3",
            "(x1^x2)^x3",
            "-(x1*x2)",
            "-a*cos(x1)",
            "x1*(-x2)",
            "x1^(-2)",
        ] {
            assert_eq!(parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn negative_literals_are_guarded() {
        let e = Expr::raw_binary(super::BinOp::Pow, Expr::num(-2.0), x1());
        assert_eq!(e.to_string(), "(-2)^x1");
        let e = Expr::raw_binary(super::BinOp::Sub, x2(), Expr::num(-0.5));
        assert_eq!(e.to_string(), "x2-(-0.5)");
        assert_eq!(Expr::num(1e-12).to_string(), "1e-12");
        assert_eq!(Expr::num(0.1).to_string(), "0.1");
    }

    #[test]
    fn printed_numbers_round_trip_exactly() {
        let v = 1.0 / 3.0;
        let e = Expr::num(v) * x1();
        let back = parse(&e.to_string()).unwrap();
        assert_eq!(back.eval(&[1.0, 0.0, 0.0], &Params::new()).unwrap(), v);
    }
}
