use super::{Axis, BinOp, Expr, Func, Node};

pub(super) fn diff(e: &Expr, axis: Axis) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Param(_) => Expr::zero(),
        Node::Var(a) => {
            if *a == axis {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Neg(u) => -diff(u, axis),
        Node::Call(f, u) => {
            let du = diff(u, axis);
            if du.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => u.clone().cos(),
                Func::Cos => -u.clone().sin(),
                Func::Tan => u.clone().sec().powi(2),
                Func::Sec => u.clone().sec() * u.clone().tan(),
                Func::Cot => -(u.clone().cot().powi(2) + 1.0),
                Func::Exp => e.clone(),
                Func::Ln => return du / u.clone(),
                Func::Sqrt => return du / (2.0 * e.clone()),
            };
            outer * du
        }
        Node::Binary(op, u, w) => match op {
            BinOp::Add => diff(u, axis) + diff(w, axis),
            BinOp::Sub => diff(u, axis) - diff(w, axis),
            BinOp::Mul => diff(u, axis) * w.clone() + u.clone() * diff(w, axis),
            BinOp::Div => {
                let (du, dw) = (diff(u, axis), diff(w, axis));
                du / w.clone() - u.clone() * dw / w.clone().powi(2)
            }
            BinOp::Pow => {
                let du = diff(u, axis);
                if !w.has_vars() {
                    if du.is_zero() {
                        return Expr::zero();
                    }
                    let lowered = match w.as_num() {
                        Some(c) => Expr::num(c - 1.0),
                        None => w.clone() - 1.0,
                    };
                    return w.clone() * u.clone().pow(lowered) * du;
                }
                let dw = diff(w, axis);
                e.clone() * (dw * u.clone().ln() + w.clone() * du / u.clone())
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Axis, Params};

    fn d(s: &str, axis: Axis) -> String {
        parse(s).unwrap().diff(axis).to_string()
    }

    #[test]
    fn hamiltonian_partials() {
        assert_eq!(d("x3*sec(x1)", Axis::X3), "sec(x1)");
        assert_eq!(d("x2^2", Axis::X1), "0");
        let e = parse("x3*sec(x1)").unwrap().diff(Axis::X1);
        let p = [0.4, 0.0, 1.7];
        let expected = 1.7 / 0.4f64.cos() * 0.4f64.tan();
        assert!((e.eval(&p, &Params::new()).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn chain_rule_for_each_function() {
        let none = Params::new();
        let p = [0.3, 0.8, 1.3];
        let cases: [(&str, f64); 8] = [
            ("sin(2*x1)", 2.0 * 0.6f64.cos()),
            ("cos(x1^2)", -(0.09f64).sin() * 0.6),
            ("tan(x1)", 1.0 / 0.3f64.cos().powi(2)),
            ("sec(x1)", 0.3f64.tan() / 0.3f64.cos()),
            ("cot(x1)", -1.0 / 0.3f64.sin().powi(2)),
            ("exp(3*x1)", 3.0 * 0.9f64.exp()),
            ("ln(x1)", 1.0 / 0.3),
            ("sqrt(x1)", 0.5 / 0.3f64.sqrt()),
        ];
        for (s, expected) in cases {
            let v = parse(s).unwrap().diff(Axis::X1).eval(&p, &none).unwrap();
            assert!((v - expected).abs() < 1e-12, "{s}: {v} vs {expected}");
        }
    }

    #[test]
    fn variable_exponent_power() {
        let v = parse("x1^x2").unwrap().diff(Axis::X2).eval(&[2.0, 3.0, 0.0], &Params::new()).unwrap();
        assert!((v - 8.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn parameters_are_constants() {
        assert_eq!(d("a*b", Axis::X1), "0");
        assert_eq!(d("x1^alpha", Axis::X1), "alpha*x1^(alpha-1)");
    }
}
