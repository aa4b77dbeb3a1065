use serde::Serialize;

use super::{eval_all, rk4, time_grid};
use crate::expr::{Params, Point};
use crate::model::{regular_at, Model3D};
use crate::structure::ABPair;
use crate::{Error, Result};

/// Trajectories may leave the model box by this many box widths on every
/// side before the run is aborted.
pub const ESCAPE_FACTOR: f64 = 10.0;

/// Joint RK4 solution of `ẋ = v(x)`, `J̇ = A(x) J + B(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicRun {
    pub x0: Point,
    pub j0: f64,
    pub step: f64,
    pub horizon: f64,
    pub t: Vec<f64>,
    pub x: Vec<Point>,
    pub j: Vec<f64>,
    pub steps: usize,
    /// Step-doubling estimate of the local error of `(x, J)` for the step
    /// ending at each `t[k + 1]`.
    pub step_errors: Vec<f64>,
    /// Largest entry of `step_errors`.
    pub max_step_error: f64,
}

impl CharacteristicRun {
    pub fn final_state(&self) -> (Point, f64) {
        (*self.x.last().expect("non-empty run"), *self.j.last().expect("non-empty run"))
    }
}

/// Integrates the characteristics of `v·∇J = A J + B` from `(x0, J0)`.
///
/// Fails if `x0` is singular for `v`, `A` or `B`, if any evaluation becomes
/// singular mid-run, or if the trajectory leaves the model box inflated by
/// [`ESCAPE_FACTOR`].
pub fn integrate_characteristics(
    m: &Model3D,
    ab: &ABPair,
    x0: Point,
    j0: f64,
    horizon: f64,
    step: f64,
) -> Result<CharacteristicRun> {
    let grid = time_grid(horizon, step)?;
    let [v1, v2, v3] = m.bound_field();
    let rhs = [v1, v2, v3, ab.a.bind(&m.params), ab.b.bind(&m.params)];
    if !regular_at(&rhs, &x0, &Params::new(), m.domain.sing_tol) {
        return Err(Error::precondition(format!("initial point {x0:?} is singular for the characteristic system")));
    }
    if !j0.is_finite() {
        return Err(Error::precondition("initial value J0 must be finite"));
    }
    let escape = m.domain.inflated(ESCAPE_FACTOR);
    let t_now = std::cell::Cell::new(0.0);
    let mut f = |y: &[f64; 4]| -> Result<[f64; 4]> {
        let p = [y[0], y[1], y[2]];
        let [a1, a2, a3, a, b] = eval_all(&rhs, &p, t_now.get())?;
        Ok([a1, a2, a3, a * y[3] + b])
    };
    let mut y = [x0[0], x0[1], x0[2], j0];
    let mut run = CharacteristicRun {
        x0,
        j0,
        step,
        horizon,
        t: vec![0.0],
        x: vec![x0],
        j: vec![j0],
        steps: 0,
        step_errors: Vec::with_capacity(grid.len().saturating_sub(1)),
        max_step_error: 0.0,
    };
    for w in grid.windows(2) {
        t_now.set(w[0]);
        let h = w[1] - w[0];
        let next = rk4::step(&mut f, &y, h)?;
        let err = rk4::local_error(&mut f, &y, &next, h)?;
        run.max_step_error = run.max_step_error.max(err);
        y = next;
        let p = [y[0], y[1], y[2]];
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Integration { t: w[1], reason: "state became non-finite".into() });
        }
        if !escape.contains(&p) {
            return Err(Error::Integration { t: w[1], reason: format!("trajectory left the inflated box at {p:?}") });
        }
        run.t.push(w[1]);
        run.x.push(p);
        run.j.push(y[3]);
        run.step_errors.push(err);
        run.steps += 1;
    }
    Ok(run)
}
