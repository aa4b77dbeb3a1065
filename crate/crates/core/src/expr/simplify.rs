use super::{BinOp, Expr, Func, Node};

fn fold(value: f64) -> Option<Expr> {
    value.is_finite().then(|| Expr::num(value))
}

pub(super) fn neg(e: Expr) -> Expr {
    match e.node() {
        Node::Num(v) => Expr::num(-v),
        Node::Neg(inner) => inner.clone(),
        _ => Expr::raw_neg(e),
    }
}

pub(super) fn add(l: Expr, r: Expr) -> Expr {
    if l.is_zero() {
        return r;
    }
    if r.is_zero() {
        return l;
    }
    if let (Some(a), Some(b)) = (l.as_num(), r.as_num()) {
        if let Some(f) = fold(a + b) {
            return f;
        }
    }
    Expr::raw_binary(BinOp::Add, l, r)
}

pub(super) fn sub(l: Expr, r: Expr) -> Expr {
    if r.is_zero() {
        return l;
    }
    if l.is_zero() {
        return neg(r);
    }
    if let (Some(a), Some(b)) = (l.as_num(), r.as_num()) {
        if let Some(f) = fold(a - b) {
            return f;
        }
    }
    Expr::raw_binary(BinOp::Sub, l, r)
}

pub(super) fn mul(l: Expr, r: Expr) -> Expr {
    if l.is_zero() || r.is_zero() {
        return Expr::zero();
    }
    if l.is_one() {
        return r;
    }
    if r.is_one() {
        return l;
    }
    match (l.as_num(), r.as_num()) {
        (Some(a), Some(b)) => {
            if let Some(f) = fold(a * b) {
                return f;
            }
        }
        (Some(-1.0), None) => return neg(r),
        (None, Some(-1.0)) => return neg(l),
        _ => {}
    }
    // products are kept left-nested: a*(b*c) -> (a*b)*c
    if let Node::Binary(BinOp::Mul, b, c) = r.node() {
        return mul(mul(l, b.clone()), c.clone());
    }
    Expr::raw_binary(BinOp::Mul, l, r)
}

pub(super) fn div(l: Expr, r: Expr) -> Expr {
    if r.is_one() {
        return l;
    }
    if l.is_zero() {
        return Expr::zero();
    }
    if let (Some(a), Some(b)) = (l.as_num(), r.as_num()) {
        if b != 0.0 {
            if let Some(f) = fold(a / b) {
                return f;
            }
        }
    }
    // x / sec(u) = x cos(u)
    if let Node::Call(Func::Sec, arg) = r.node() {
        return mul(l, call(Func::Cos, arg.clone()));
    }
    Expr::raw_binary(BinOp::Div, l, r)
}

pub(super) fn pow(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_one() {
        return base;
    }
    if exponent.is_zero() {
        return Expr::one();
    }
    if let (Some(b), Some(e)) = (base.as_num(), exponent.as_num()) {
        if let Ok(v) = super::eval::eval_pow(b, e) {
            if let Some(f) = fold(v) {
                return f;
            }
        }
    }
    Expr::raw_binary(BinOp::Pow, base, exponent)
}

pub(super) fn call(func: Func, arg: Expr) -> Expr {
    if let Some(a) = arg.as_num() {
        if let Ok(v) = super::eval::eval_call(func, a) {
            if let Some(f) = fold(v) {
                return f;
            }
        }
    }
    Expr::raw_call(func, arg)
}

pub(super) fn simplify_light(e: &Expr) -> Expr {
    match e.node() {
        Node::Num(_) | Node::Var(_) | Node::Param(_) => e.clone(),
        Node::Neg(inner) => neg(simplify_light(inner)),
        Node::Call(f, arg) => call(*f, simplify_light(arg)),
        Node::Binary(op, l, r) => {
            let (l, r) = (simplify_light(l), simplify_light(r));
            match op {
                BinOp::Add => add(l, r),
                BinOp::Sub => sub(l, r),
                BinOp::Mul => mul(l, r),
                BinOp::Div => div(l, r),
                BinOp::Pow => pow(l, r),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse, Params};

    fn simp(s: &str) -> String {
        parse(s).unwrap().simplify_light().to_string()
    }

    #[test]
    fn identities_are_removed() {
        assert_eq!(simp("0*x1 + x2"), "x2");
        assert_eq!(simp("x1^1"), "x1");
        assert_eq!(simp("sin(x1)*1 + 0"), "sin(x1)");
        assert_eq!(simp("x1^0"), "1");
        assert_eq!(simp("0 - x2"), "-x2");
        assert_eq!(simp("--x3"), "x3");
        assert_eq!(simp("x2/1"), "x2");
        assert_eq!(simp("0/x2"), "0");
    }

    #[test]
    fn constants_fold() {
        assert_eq!(simp("2*3 + 1"), "7");
        assert_eq!(simp("cos(0)*x1"), "x1");
        assert_eq!(simp("2^-1"), "0.5");
        assert_eq!(simp("-1*x1"), "-x1");
    }

    #[test]
    fn invalid_constants_are_not_folded() {
        assert_eq!(simp("1/0"), "1/0");
        assert_eq!(simp("ln(-1)"), "ln(-1)");
    }

    #[test]
    fn division_by_secant_becomes_cosine() {
        assert_eq!(simp("-a/sec(x1)"), "-a*cos(x1)");
    }

    #[test]
    fn simplification_preserves_values() {
        let e = parse("(x1*1 + 0)*sec(x2)/sec(x3) - 0*x3 + 2^3").unwrap();
        let s = e.simplify_light();
        let p = [0.3, -0.7, 1.1];
        let (a, b) = (e.eval(&p, &Params::new()).unwrap(), s.eval(&p, &Params::new()).unwrap());
        assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
    }
}
