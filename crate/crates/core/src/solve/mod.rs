//! Producing `J`: along characteristics, by closed-form shortcuts, or by
//! polynomial collocation; plus trajectory integration with invariant drift
//! monitoring.

mod ansatz;
mod characteristics;
mod csv;
mod flow;
mod linalg;
mod rk4;
mod shortcuts;

pub use ansatz::{monomial_basis, solve_ansatz, AnsatzOptions, AnsatzSolution, Anchor, REGULARIZATION};
pub use characteristics::{integrate_characteristics, CharacteristicRun, ESCAPE_FACTOR};
pub use csv::trajectory_csv;
pub use flow::{flow_with_invariants, DriftReport, InvariantDrift};
pub use shortcuts::{particular_solution_shortcuts, Shortcut, ShortcutKind};

use crate::expr::{EvalError, Expr, Params, Point};
use crate::Error;

/// Evaluates bound expressions at `p`, tagging failures with the time `t`.
fn eval_all<const N: usize>(exprs: &[Expr; N], p: &Point, t: f64) -> Result<[f64; N], Error> {
    let empty = Params::new();
    let mut out = [0.0; N];
    for (o, e) in out.iter_mut().zip(exprs) {
        *o = e.eval(p, &empty).map_err(|err| integration_error(t, err))?;
    }
    Ok(out)
}

fn integration_error(t: f64, err: EvalError) -> Error {
    Error::Integration { t, reason: err.to_string() }
}

/// Number of fixed steps covering `horizon`; the final step is shortened
/// when `horizon` is not a multiple of `step`.
fn step_count(horizon: f64, step: f64) -> Result<usize, Error> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::precondition(format!("step must be positive, got {step}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::precondition(format!("horizon must be positive, got {horizon}")));
    }
    let n = horizon / step;
    let rounded = n.round();
    let count = if (n - rounded).abs() <= 1e-9 * n.max(1.0) { rounded } else { n.ceil() };
    Ok(count.max(1.0) as usize)
}

/// Time grid `t_0 = 0 < t_1 < … < t_n = horizon`.
fn time_grid(horizon: f64, step: f64) -> Result<Vec<f64>, Error> {
    let n = step_count(horizon, step)?;
    let mut grid: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
    grid.push(horizon);
    Ok(grid)
}
