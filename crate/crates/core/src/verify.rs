//! Residual certification.
//!
//! Each identity is evaluated from exact symbolic derivatives at seeded
//! samples of the box; points within the singular tolerance of any subterm's
//! pole are skipped. Residuals are divided by `1 + Σ|terms|` over the
//! identity's additive terms at each point, so tolerances do not depend on
//! the scale of the model's parameters.

use std::fmt;

use serde::Serialize;

use crate::expr::{Axis, Expr, Params, Point};
use crate::model::{check_first_integral_on, choose_axis, preferred_axis, regular_at, AxisPermutation, Model3D, SampleBox};
use crate::structure::{compute_ab, lie_tensor_from_j, rescaling_factor, ABPair, InvariantFunction, LieTensor};
use crate::Result;

/// Tolerance for identities that hold exactly (only rounding remains).
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for quantities produced by a numerical solver.
pub const NUMERIC_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Absolute,
    AdditiveTerms,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub samples: usize,
    pub max: f64,
    pub mean: f64,
    pub argmax: Point,
    pub pass: bool,
    pub tolerance: f64,
    pub normalization: Normalization,
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<22} {:>6} {:>11.3e} {:>11.3e} {:>9.1e}  {}  at ({:.4}, {:.4}, {:.4})",
            self.check,
            self.samples,
            self.max,
            self.mean,
            self.tolerance,
            if self.pass { "PASS" } else { "FAIL" },
            self.argmax[0],
            self.argmax[1],
            self.argmax[2]
        )
    }
}

impl ResidualReport {
    pub fn table_header() -> String {
        format!(
            "{:<22} {:>6} {:>11} {:>11} {:>9}  {}",
            "check", "n", "max", "mean", "tol", "result"
        )
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> ResidualReport {
        self.tolerance = tolerance;
        self.pass = self.max <= tolerance;
        self
    }
}

/// `|Σ terms| / (1 + Σ|terms|)`.
pub fn normalized(terms: &[f64]) -> f64 {
    let sum: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    sum.abs() / (1.0 + scale)
}

/// Evaluates `residual(values of targets)` at every accepted sample.
pub(crate) fn sampled_identity<F>(
    check: &str,
    targets: &[Expr],
    params: &Params,
    b: &SampleBox,
    tolerance: f64,
    normalization: Normalization,
    residual: F,
) -> Result<ResidualReport>
where
    F: Fn(&[f64]) -> f64,
{
    let bound: Vec<Expr> = targets.iter().map(|e| e.bind(params)).collect();
    let none = Params::new();
    let pts = b.sample_where(b.samples, |p| regular_at(&bound, p, &none, b.sing_tol))?;
    let mut values = vec![0.0; bound.len()];
    let (mut max, mut sum, mut argmax) = (0.0f64, 0.0f64, pts[0]);
    for p in &pts {
        for (slot, e) in values.iter_mut().zip(&bound) {
            *slot = e.eval(p, &none)?;
        }
        let mut r = residual(&values);
        if r.is_nan() {
            r = f64::INFINITY;
        }
        if r > max {
            max = r;
            argmax = *p;
        }
        sum += r;
    }
    Ok(ResidualReport {
        check: check.to_string(),
        samples: pts.len(),
        max,
        mean: sum / pts.len() as f64,
        argmax,
        pass: max <= tolerance,
        tolerance,
        normalization,
    })
}

/// Sampled comparison of two expressions: `|a − b| / (1 + |a| + |b|)`.
pub fn expr_deviation(check: &str, a: &Expr, b: &Expr, params: &Params, bx: &SampleBox, tolerance: f64) -> Result<ResidualReport> {
    sampled_identity(check, &[a.clone(), b.clone()], params, bx, tolerance, Normalization::AdditiveTerms, |v| {
        normalized(&[v[0], -v[1]])
    })
}

fn tensor_targets(t: &LieTensor) -> Vec<Expr> {
    let mut out: Vec<Expr> = t.upper().to_vec();
    for e in t.upper() {
        out.extend(e.gradient());
    }
    out
}

/// Terms of the single independent Jacobi component
/// `J^{μ1}∂_μJ^{23} + J^{μ2}∂_μJ^{31} + J^{μ3}∂_μJ^{12}` from the values of
/// `[J12, J13, J23, ∇J12, ∇J13, ∇J23]`.
fn jacobi_terms(v: &[f64]) -> [f64; 9] {
    let (j12, j13, j23) = (v[0], v[1], v[2]);
    let g12 = &v[3..6];
    let g13 = &v[6..9];
    let g23 = &v[9..12];
    // columns of the full matrix (rows μ = 1..3)
    let col1 = [0.0, -j12, -j13];
    let col2 = [j12, 0.0, -j23];
    let col3 = [j13, j23, 0.0];
    let mut terms = [0.0; 9];
    for mu in 0..3 {
        terms[mu] = col1[mu] * g23[mu];
        terms[3 + mu] = -col2[mu] * g13[mu];
        terms[6 + mu] = col3[mu] * g12[mu];
    }
    terms
}

/// Raw value of the Jacobi component at one point.
pub fn jacobi_scalar(t: &LieTensor, params: &Params, p: &Point) -> Result<f64> {
    let values = tensor_targets(t)
        .iter()
        .map(|e| e.eval(p, params))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(jacobi_terms(&values).iter().sum())
}

pub fn jacobi_residual(t: &LieTensor, params: &Params, b: &SampleBox) -> Result<ResidualReport> {
    jacobi_residual_tol(t, params, b, EXACT_TOL)
}

fn jacobi_residual_tol(t: &LieTensor, params: &Params, b: &SampleBox, tol: f64) -> Result<ResidualReport> {
    sampled_identity("jacobi", &tensor_targets(t), params, b, tol, Normalization::AdditiveTerms, |v| {
        normalized(&jacobi_terms(v))
    })
}

/// Targets `[v, ∇H, J12, J13, J23]` and the per-row terms of `v^μ − J^{μν}∂_νH`.
fn hamiltonian_targets(m: &Model3D, t: &LieTensor, h: &Expr) -> Vec<Expr> {
    let mut targets: Vec<Expr> = m.v.to_vec();
    targets.extend(h.gradient());
    targets.extend(t.upper().iter().cloned());
    targets
}

fn hamiltonian_row_terms(v: &[f64], row: usize) -> [f64; 4] {
    let field = v[row];
    let g = &v[3..6];
    let (j12, j13, j23) = (v[6], v[7], v[8]);
    let matrix = [[0.0, j12, j13], [-j12, 0.0, j23], [-j13, -j23, 0.0]];
    [
        field,
        -matrix[row][0] * g[0],
        -matrix[row][1] * g[1],
        -matrix[row][2] * g[2],
    ]
}

/// `max_μ |v^μ − J^{μν}∂_νH|`, normalized per row.
pub fn hamiltonian_form_residual(m: &Model3D, t: &LieTensor, h: &Expr, b: &SampleBox) -> Result<ResidualReport> {
    hamiltonian_form_residual_tol(m, t, h, b, EXACT_TOL)
}

fn hamiltonian_form_residual_tol(m: &Model3D, t: &LieTensor, h: &Expr, b: &SampleBox, tol: f64) -> Result<ResidualReport> {
    let targets = hamiltonian_targets(m, t, h);
    sampled_identity("hamiltonian_form", &targets, &m.params, b, tol, Normalization::AdditiveTerms, |v| {
        (0..3).map(|row| normalized(&hamiltonian_row_terms(v, row))).fold(0.0, f64::max)
    })
}

/// `max_μ |J^{μν}∂_νC|`, normalized per row.
pub fn casimir_residual(t: &LieTensor, c: &Expr, params: &Params, b: &SampleBox) -> Result<ResidualReport> {
    casimir_residual_tol(t, c, params, b, EXACT_TOL)
}

fn casimir_residual_tol(t: &LieTensor, c: &Expr, params: &Params, b: &SampleBox, tol: f64) -> Result<ResidualReport> {
    let mut targets: Vec<Expr> = vec![Expr::zero(), Expr::zero(), Expr::zero()];
    targets.extend(c.gradient());
    targets.extend(t.upper().iter().cloned());
    sampled_identity("casimir", &targets, params, b, tol, Normalization::AdditiveTerms, |v| {
        (0..3)
            .map(|row| {
                let terms = hamiltonian_row_terms(v, row);
                normalized(&terms[1..])
            })
            .fold(0.0, f64::max)
    })
}

/// `|v·∇J − A J − B|`.
pub fn pde_residual(m: &Model3D, ab: &ABPair, j: &Expr, b: &SampleBox) -> Result<ResidualReport> {
    pde_residual_tol(m, ab, j, b, EXACT_TOL)
}

pub(crate) fn pde_residual_tol(m: &Model3D, ab: &ABPair, j: &Expr, b: &SampleBox, tol: f64) -> Result<ResidualReport> {
    let mut targets: Vec<Expr> = m.v.to_vec();
    targets.extend(j.gradient());
    targets.extend([j.clone(), ab.a.clone(), ab.b.clone()]);
    sampled_identity("pde", &targets, &m.params, b, tol, Normalization::AdditiveTerms, |v| {
        normalized(&[v[0] * v[3], v[1] * v[4], v[2] * v[5], -v[7] * v[6], -v[8]])
    })
}

/// Builds the first two role rows from `J12` and reports the residual of the
/// third Hamiltonian equation, which is not imposed by the construction.
pub fn lemma_check(m: &Model3D, h: &Expr, j12: &Expr, b: &SampleBox) -> Result<ResidualReport> {
    let perm = choose_axis(m, h, b)?;
    let t = lie_tensor_from_j(m, h, j12, perm)?;
    let row = perm.axis(3).index();
    let targets = hamiltonian_targets(m, &t, h);
    sampled_identity("lemma_third_equation", &targets, &m.params, b, EXACT_TOL, Normalization::AdditiveTerms, |v| {
        normalized(&hamiltonian_row_terms(v, row))
    })
}

/// Checks that `J̄ = J/∂₁F(H,C)` solves the PDE whose coefficients are
/// computed from the rescaled Hamiltonian `F(H,C)`.
pub fn scale_invariance_check(
    m: &Model3D,
    h: &Expr,
    c: Option<&Expr>,
    j: &Expr,
    f: &InvariantFunction,
    perm: Option<AxisPermutation>,
) -> Result<ResidualReport> {
    let b = &m.domain;
    let perm = match perm {
        Some(p) => p,
        None => preferred_axis(m, h, b)?,
    };
    let gamma = rescaling_factor(m, h, c, f, b)?;
    let j_bar = (gamma * j.clone()).simplify_light();
    let h_bar = f.compose(h, c)?;
    let ab_bar = compute_ab(m, &h_bar, perm)?;
    let mut r = pde_residual(m, &ab_bar, &j_bar, b)?;
    r.check = "scale_invariance".into();
    Ok(r)
}

/// Outcome of [`full_certify`].
#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub perm: AxisPermutation,
    #[serde(skip)]
    pub tensor: LieTensor,
    #[serde(skip)]
    pub ab: ABPair,
    pub reports: Vec<ResidualReport>,
    pub passed: bool,
}

/// Runs the first-integral, PDE, Jacobi, Hamiltonian-form and (when a
/// Casimir is given) Casimir checks for `(H, J)`.
///
/// `perm` overrides [`preferred_axis`]; `tolerance` applies to every
/// check.
pub fn full_certify(
    m: &Model3D,
    h: &Expr,
    j: &Expr,
    casimir: Option<&Expr>,
    perm: Option<AxisPermutation>,
    tolerance: f64,
) -> Result<Certification> {
    let b = &m.domain;
    let perm = match perm {
        Some(p) => p,
        None => preferred_axis(m, h, b)?,
    };
    let ab = compute_ab(m, h, perm)?;
    let tensor = lie_tensor_from_j(m, h, j, perm)?;
    let mut reports = vec![
        check_first_integral_on(m, h, b)?.with_tolerance(tolerance),
        pde_residual_tol(m, &ab, j, b, tolerance)?,
        jacobi_residual_tol(&tensor, &m.params, b, tolerance)?,
        hamiltonian_form_residual_tol(m, &tensor, h, b, tolerance)?,
    ];
    if let Some(c) = casimir {
        reports.push(casimir_residual_tol(&tensor, c, &m.params, b, tolerance)?);
    }
    let passed = reports.iter().all(|r| r.pass);
    Ok(Certification { perm, tensor, ab, reports, passed })
}

/// Certifies a tensor given directly (not assembled from `J`) against a
/// Hamiltonian and optional Casimir.
pub fn certify_tensor(
    m: &Model3D,
    t: &LieTensor,
    h: &Expr,
    casimir: Option<&Expr>,
    tolerance: f64,
) -> Result<Vec<ResidualReport>> {
    let b = &m.domain;
    let mut reports = vec![
        check_first_integral_on(m, h, b)?.with_tolerance(tolerance),
        jacobi_residual_tol(t, &m.params, b, tolerance)?,
        hamiltonian_form_residual_tol(m, t, h, b, tolerance)?,
    ];
    if let Some(c) = casimir {
        reports.push(casimir_residual_tol(t, c, &m.params, b, tolerance)?);
    }
    Ok(reports)
}

/// Gradient rank of a pair of functions at a point (0, 1 or 2), used to
/// confirm functional independence.
pub fn gradient_rank(f: &Expr, g: &Expr, params: &Params, p: &Point) -> Result<usize> {
    let a: Vec<f64> = Axis::ALL.iter().map(|&k| f.diff(k).eval(p, params)).collect::<Result<_, _>>()?;
    let c: Vec<f64> = Axis::ALL.iter().map(|&k| g.diff(k).eval(p, params)).collect::<Result<_, _>>()?;
    let cross = [a[1] * c[2] - a[2] * c[1], a[2] * c[0] - a[0] * c[2], a[0] * c[1] - a[1] * c[0]];
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nc = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ncross = cross.iter().map(|x| x * x).sum::<f64>().sqrt();
    let eps = 1e-10 * (1.0 + na * nc);
    Ok(if ncross > eps {
        2
    } else if na > 1e-12 || nc > 1e-12 {
        1
    } else {
        0
    })
}
