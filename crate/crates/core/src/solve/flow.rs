use serde::Serialize;

use super::characteristics::ESCAPE_FACTOR;
use super::{eval_all, rk4, time_grid};
use crate::expr::{Expr, Params, Point};
use crate::model::{regular_at, Model3D};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct InvariantDrift {
    pub name: String,
    pub initial: f64,
    pub max_abs_drift: f64,
    /// `max |I(t) − I(0)| / |I(0)|`, or the absolute drift when `I(0) = 0`.
    pub max_rel_drift: f64,
}

/// RK4 trajectory of `ẋ = v(x)` with the drift of each monitored invariant.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub x0: Point,
    pub step: f64,
    pub horizon: f64,
    pub t: Vec<f64>,
    pub x: Vec<Point>,
    pub drifts: Vec<InvariantDrift>,
}

impl DriftReport {
    pub fn max_rel_drift(&self) -> f64 {
        self.drifts.iter().map(|d| d.max_rel_drift).fold(0.0, f64::max)
    }
}

pub fn flow_with_invariants(
    m: &Model3D,
    invariants: &[(String, Expr)],
    x0: Point,
    horizon: f64,
    step: f64,
) -> Result<DriftReport> {
    let grid = time_grid(horizon, step)?;
    let v = m.bound_field();
    let bound: Vec<Expr> = invariants.iter().map(|(_, e)| e.bind(&m.params)).collect();
    let mut guards = v.to_vec();
    guards.extend(bound.iter().cloned());
    if !regular_at(&guards, &x0, &Params::new(), m.domain.sing_tol) {
        return Err(Error::precondition(format!("initial point {x0:?} is singular for the field or an invariant")));
    }
    let empty = Params::new();
    let initial: Vec<f64> = bound.iter().map(|e| e.eval(&x0, &empty)).collect::<Result<_, _>>()?;
    let mut drifts: Vec<InvariantDrift> = invariants
        .iter()
        .zip(&initial)
        .map(|((name, _), &i0)| InvariantDrift { name: name.clone(), initial: i0, max_abs_drift: 0.0, max_rel_drift: 0.0 })
        .collect();
    let escape = m.domain.inflated(ESCAPE_FACTOR);
    let t_now = std::cell::Cell::new(0.0);
    let mut f = |y: &[f64; 3]| eval_all(&v, y, t_now.get());
    let mut y = x0;
    let mut report = DriftReport { x0, step, horizon, t: vec![0.0], x: vec![x0], drifts: Vec::new() };
    for w in grid.windows(2) {
        t_now.set(w[0]);
        y = rk4::step(&mut f, &y, w[1] - w[0])?;
        if !escape.contains(&y) {
            return Err(Error::Integration { t: w[1], reason: format!("trajectory left the inflated box at {y:?}") });
        }
        for (d, e) in drifts.iter_mut().zip(&bound) {
            let value = e.eval(&y, &empty).map_err(|err| super::integration_error(w[1], err))?;
            let abs = (value - d.initial).abs();
            d.max_abs_drift = d.max_abs_drift.max(abs);
            let rel = if d.initial == 0.0 { abs } else { abs / d.initial.abs() };
            d.max_rel_drift = d.max_rel_drift.max(rel);
        }
        report.t.push(w[1]);
        report.x.push(y);
    }
    report.drifts = drifts;
    Ok(report)
}
