use std::fmt::Write as _;

use crate::expr::{Expr, Params, Point};
use crate::Result;

/// Plaintext table `t,x1,x2,x3[,J][,invariant…]`, one row per time point.
/// Invariants are evaluated on the stored states.
pub fn trajectory_csv(
    t: &[f64],
    x: &[Point],
    j: Option<&[f64]>,
    invariants: &[(String, Expr)],
    params: &Params,
) -> Result<String> {
    let mut out = String::from("t,x1,x2,x3");
    if j.is_some() {
        out.push_str(",J");
    }
    for (name, _) in invariants {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let bound: Vec<Expr> = invariants.iter().map(|(_, e)| e.bind(params)).collect();
    let empty = Params::new();
    for (k, (ti, p)) in t.iter().zip(x).enumerate() {
        write!(out, "{ti:e},{:e},{:e},{:e}", p[0], p[1], p[2]).expect("write to string");
        if let Some(j) = j {
            write!(out, ",{:e}", j[k]).expect("write to string");
        }
        for e in &bound {
            write!(out, ",{:e}", e.eval(p, &empty)?).expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}
