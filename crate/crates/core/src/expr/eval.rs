use super::{BinOp, Expr, Func, Node, Params, Point};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain violation in `{subterm}` at ({}, {}, {})", point[0], point[1], point[2])]
    Domain { subterm: String, point: Point },
}

/// Raw domain failure; the caller attaches the offending subterm.
pub(super) struct OutOfDomain;

pub(super) fn eval_pow(base: f64, exponent: f64) -> Result<f64, OutOfDomain> {
    if exponent.fract() == 0.0 && exponent.abs() <= f64::from(i32::MAX) {
        if base == 0.0 && exponent < 0.0 {
            return Err(OutOfDomain);
        }
        #[allow(clippy::cast_possible_truncation)]
        return Ok(base.powi(exponent as i32));
    }
    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
        return Err(OutOfDomain);
    }
    Ok(base.powf(exponent))
}

pub(super) fn eval_call(func: Func, arg: f64) -> Result<f64, OutOfDomain> {
    let v = match func {
        Func::Sin => arg.sin(),
        Func::Cos => arg.cos(),
        Func::Tan | Func::Sec => {
            let c = arg.cos();
            if c == 0.0 {
                return Err(OutOfDomain);
            }
            if func == Func::Tan {
                arg.tan()
            } else {
                1.0 / c
            }
        }
        Func::Cot => {
            let s = arg.sin();
            if s == 0.0 {
                return Err(OutOfDomain);
            }
            arg.cos() / s
        }
        Func::Exp => arg.exp(),
        Func::Ln => {
            if arg <= 0.0 {
                return Err(OutOfDomain);
            }
            arg.ln()
        }
        Func::Sqrt => {
            if arg < 0.0 {
                return Err(OutOfDomain);
            }
            arg.sqrt()
        }
    };
    Ok(v)
}

/// Distance of a subterm from its nearest singularity as seen during evaluation.
fn call_margin(func: Func, arg: f64) -> f64 {
    match func {
        Func::Tan | Func::Sec => arg.cos().abs(),
        Func::Cot => arg.sin().abs(),
        Func::Ln | Func::Sqrt => arg,
        Func::Sin | Func::Cos | Func::Exp => f64::INFINITY,
    }
}

fn pow_margin(base: f64, exponent: f64) -> f64 {
    if exponent.fract() != 0.0 {
        base
    } else if exponent < 0.0 {
        base.abs()
    } else {
        f64::INFINITY
    }
}

impl Expr {
    /// Evaluates the expression at `point` with the given parameter bindings.
    pub fn eval(&self, point: &Point, params: &Params) -> Result<f64, EvalError> {
        let mut margin = f64::INFINITY;
        self.eval_inner(point, params, &mut margin)
    }

    /// Evaluates and also returns the smallest singularity margin met on the
    /// way: `|denominator|`, `|cos u|` under `tan`/`sec`, `|sin u|` under
    /// `cot`, and the argument of `ln`/`sqrt` or of a non-integer power.
    pub fn eval_with_margin(&self, point: &Point, params: &Params) -> Result<(f64, f64), EvalError> {
        let mut margin = f64::INFINITY;
        let v = self.eval_inner(point, params, &mut margin)?;
        Ok((v, margin))
    }

    fn domain_error(&self, point: &Point) -> EvalError {
        EvalError::Domain { subterm: self.to_string(), point: *point }
    }

    fn eval_inner(&self, point: &Point, params: &Params, margin: &mut f64) -> Result<f64, EvalError> {
        let value = match self.node() {
            Node::Num(v) => *v,
            Node::Var(a) => point[a.index()],
            Node::Param(name) => *params
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            Node::Neg(e) => -e.eval_inner(point, params, margin)?,
            Node::Call(f, e) => {
                let arg = e.eval_inner(point, params, margin)?;
                *margin = margin.min(call_margin(*f, arg));
                eval_call(*f, arg).map_err(|_| self.domain_error(point))?
            }
            Node::Binary(op, l, r) => {
                let a = l.eval_inner(point, params, margin)?;
                let b = r.eval_inner(point, params, margin)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        *margin = margin.min(b.abs());
                        if b == 0.0 {
                            return Err(self.domain_error(point));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        *margin = margin.min(pow_margin(a, b));
                        eval_pow(a, b).map_err(|_| self.domain_error(point))?
                    }
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain_error(point))
        }
    }
}
