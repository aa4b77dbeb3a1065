//! Random expression generators and numerical oracles shared by the
//! integration tests.
#![allow(dead_code)]

use poisson3d::expr::{Axis, Expr, Func, Params, Point};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_leaf(rng: &mut ChaCha8Rng) -> Expr {
    match rng.gen_range(0..5) {
        0..=2 => Expr::var(Axis::ALL[rng.gen_range(0..3)]),
        3 => Expr::num(rng.gen_range(-3i32..=3) as f64),
        _ => Expr::num((rng.gen_range(-20i32..=20) as f64) / 8.0),
    }
}

/// Random expression of depth at most `depth` over every operator and
/// function of the language.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return random_leaf(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..10) {
        0 => random_expr(rng, d) + random_expr(rng, d),
        1 => random_expr(rng, d) - random_expr(rng, d),
        2 | 3 => random_expr(rng, d) * random_expr(rng, d),
        4 => random_expr(rng, d) / random_expr(rng, d),
        5 => -random_expr(rng, d),
        6 => random_expr(rng, d).powi(rng.gen_range(-2..=3)),
        7 => {
            // non-integer powers of a positive base
            let base = Expr::num(1.0) + random_expr(rng, d).powi(2);
            base.pow(Expr::num(rng.gen_range(-3i32..=3) as f64 / 2.0 + 0.25))
        }
        _ => {
            let f = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            Expr::call(f, random_expr(rng, d))
        }
    }
}

/// Random polynomial of total degree `≤ degree` with integer-ish
/// coefficients.
pub fn random_polynomial(rng: &mut ChaCha8Rng, degree: u32) -> Expr {
    let mut terms = Vec::new();
    for i in 0..=degree {
        for j in 0..=degree - i {
            for k in 0..=degree - i - j {
                if rng.gen_bool(0.5) {
                    continue;
                }
                let c = rng.gen_range(-4i32..=4) as f64 / 2.0;
                let mono = Expr::var(Axis::X1).powi(i as i32)
                    * Expr::var(Axis::X2).powi(j as i32)
                    * Expr::var(Axis::X3).powi(k as i32);
                terms.push(Expr::num(c) * mono);
            }
        }
    }
    Expr::sum(terms)
}

pub fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    std::array::from_fn(|_| rng.gen_range(lo..hi))
}

/// Central difference `(e(p + h e_k) − e(p − h e_k)) / 2h`.
pub fn central_difference(e: &Expr, axis: Axis, p: &Point, params: &Params, h: f64) -> Option<f64> {
    let at = |s: f64| {
        let mut q = *p;
        q[axis.index()] += s;
        e.eval(&q, params).ok()
    };
    Some((at(h)? - at(-h)?) / (2.0 * h))
}

/// Step of the derivative oracle.
pub const FD_STEP: f64 = 1e-6;

/// `|∂e − central difference| / (1 + |∂e|)` at `p`.
///
/// Returns `None` when the oracle itself is unreliable at `p`: within 0.2 of
/// a singularity of `e` or of its derivative, values above 1e4 in magnitude,
/// or difference quotients at `h` and `2h` that disagree by more than 1e-7
/// relative (truncation or cancellation dominates).
pub fn derivative_agreement(e: &Expr, axis: Axis, p: &Point, params: &Params) -> Option<f64> {
    let d = e.diff(axis);
    let (val, margin) = e.eval_with_margin(p, params).ok()?;
    let (dv, dmargin) = d.eval_with_margin(p, params).ok()?;
    if margin < 0.2 || dmargin < 0.2 || val.abs() > 1e4 || dv.abs() > 1e4 {
        return None;
    }
    let fd = central_difference(e, axis, p, params, FD_STEP)?;
    let fd2 = central_difference(e, axis, p, params, 2.0 * FD_STEP)?;
    if (fd - fd2).abs() > 1e-7 * (1.0 + fd.abs()) {
        return None;
    }
    Some((dv - fd).abs() / (1.0 + dv.abs()))
}
