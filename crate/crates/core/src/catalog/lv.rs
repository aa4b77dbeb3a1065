//! Three-species Lotka–Volterra systems `ẋᵏ = xᵏ(a_k + b_{kμ}x^μ)` with a
//! singular interaction matrix, and the particular structure `J = εU/(γH)`
//! with `U = x¹x²x³`.

use std::fmt;

use serde::Serialize;

use crate::expr::{parse, Axis, Expr, Params};
use crate::model::{AxisPermutation, Model3D, SampleBox};
use crate::structure::{lie_tensor_from_j, LieTensor};
use crate::{Error, Result};

/// Relative tolerance for the coefficient constraints.
pub const LV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LVParams {
    pub a: [f64; 3],
    pub b: [[f64; 3]; 3],
}

impl LVParams {
    /// Coefficients of the relabeled system in role coordinates of `perm`:
    /// `a'_r = a_{σ(r)}`, `b'_{rs} = b_{σ(r)σ(s)}`.
    pub fn permuted(&self, perm: AxisPermutation) -> LVParams {
        let ax = perm.axes().map(Axis::index);
        LVParams {
            a: std::array::from_fn(|r| self.a[ax[r]]),
            b: std::array::from_fn(|r| std::array::from_fn(|s| self.b[ax[r]][ax[s]])),
        }
    }

    pub fn det(&self) -> f64 {
        let b = &self.b;
        b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
            + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])
    }

    fn scale(&self) -> f64 {
        self.a.iter().chain(self.b.iter().flatten()).fold(1.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LVExponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub s: f64,
}

/// `α = b22 b31 − b21 b32`, `β = b11 b32 − b12 b31`, `γ = b12 b21 − b11 b22`,
/// `s = a1 α + a2 β + a3 γ`.
pub fn lv_exponents(p: &LVParams) -> LVExponents {
    let b = &p.b;
    let alpha = b[1][1] * b[2][0] - b[1][0] * b[2][1];
    let beta = b[0][0] * b[2][1] - b[0][1] * b[2][0];
    let gamma = b[0][1] * b[1][0] - b[0][0] * b[1][1];
    let s = p.a[0] * alpha + p.a[1] * beta + p.a[2] * gamma;
    LVExponents { alpha, beta, gamma, s }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `a3 ≠ 0`: `ε = (a1 b23 − a2 b13)/a3`, needs conditions I and II.
    I,
    /// `b31 ≠ b11`: `ε = (b23 b11 − b13 b21)/(b31 − b11)`, needs I and III.
    II,
    /// `b32 ≠ b22`: `ε = (b23 b12 − b13 b22)/(b32 − b22)`, needs II and III.
    III,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::I => "i",
            Branch::II => "ii",
            Branch::III => "iii",
        })
    }
}

/// One equation `lhs = rhs` and whether it holds within tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Relation {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Relation {
    fn new(lhs: f64, rhs: f64, scale: f64) -> Relation {
        Relation { lhs, rhs, holds: (lhs - rhs).abs() <= LV_TOL * (scale + lhs.abs() + rhs.abs()) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LVConstraints {
    pub det: Relation,
    pub s: Relation,
    pub cond_i: Relation,
    pub cond_ii: Relation,
    pub cond_iii: Relation,
    /// Branches whose precondition (`a3 ≠ 0`, `b31 ≠ b11`, `b32 ≠ b22`) holds.
    pub applicable: Vec<Branch>,
}

impl LVConstraints {
    fn branch_conditions(&self, branch: Branch) -> bool {
        match branch {
            Branch::I => self.cond_i.holds && self.cond_ii.holds,
            Branch::II => self.cond_i.holds && self.cond_iii.holds,
            Branch::III => self.cond_ii.holds && self.cond_iii.holds,
        }
    }

    /// `det b = 0`, `s = 0`, and the conditions of the first applicable branch.
    pub fn passes(&self) -> bool {
        self.det.holds
            && self.s.holds
            && self.applicable.first().is_some_and(|&br| self.branch_conditions(br))
    }
}

fn c0(p: &LVParams) -> f64 {
    p.a[0] * p.b[1][2] - p.a[1] * p.b[0][2]
}

fn c1(p: &LVParams) -> f64 {
    p.b[1][2] * p.b[0][0] - p.b[0][2] * p.b[1][0]
}

fn c2(p: &LVParams) -> f64 {
    p.b[1][2] * p.b[0][1] - p.b[0][2] * p.b[1][1]
}

fn nonzero(x: f64, scale: f64) -> bool {
    x.abs() > LV_TOL * scale
}

pub fn lv_constraints_check(p: &LVParams) -> LVConstraints {
    let e = lv_exponents(p);
    let b = &p.b;
    let k = p.scale();
    let d31 = b[2][0] - b[0][0];
    let d32 = b[2][1] - b[1][1];
    let mut applicable = Vec::new();
    if nonzero(p.a[2], k) {
        applicable.push(Branch::I);
    }
    if nonzero(d31, k) {
        applicable.push(Branch::II);
    }
    if nonzero(d32, k) {
        applicable.push(Branch::III);
    }
    LVConstraints {
        det: Relation::new(p.det(), 0.0, k.powi(3)),
        s: Relation::new(e.s, 0.0, k.powi(3)),
        cond_i: Relation::new(c0(p) * d31, p.a[2] * c1(p), k.powi(3)),
        cond_ii: Relation::new(c0(p) * d32, p.a[2] * c2(p), k.powi(3)),
        cond_iii: Relation::new(c1(p) * d32, c2(p) * d31, k.powi(3)),
        applicable,
    }
}

fn branch_epsilon(p: &LVParams, branch: Branch) -> f64 {
    match branch {
        Branch::I => c0(p) / p.a[2],
        Branch::II => c1(p) / (p.b[2][0] - p.b[0][0]),
        Branch::III => c2(p) / (p.b[2][1] - p.b[1][1]),
    }
}

/// `ε` from the first applicable branch, checked against every other
/// applicable branch.
pub fn lv_epsilon(p: &LVParams) -> Result<(f64, Branch)> {
    let c = lv_constraints_check(p);
    let Some(&first) = c.applicable.first() else {
        return Err(Error::precondition("no ε branch applies: a3 = 0, b31 = b11 and b32 = b22"));
    };
    if !c.passes() {
        return Err(Error::precondition(format!("Lotka–Volterra constraints fail: {c:?}")));
    }
    let eps = branch_epsilon(p, first);
    for &other in &c.applicable[1..] {
        let e = branch_epsilon(p, other);
        if (e - eps).abs() > 1e-8 * (1.0 + eps.abs()) {
            return Err(Error::precondition(format!(
                "branches {first} and {other} give different ε ({eps} vs {e})"
            )));
        }
    }
    Ok((eps, first))
}

fn param_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=3).map(|k| format!("a{k}")).collect();
    for i in 1..=3 {
        for j in 1..=3 {
            names.push(format!("b{i}{j}"));
        }
    }
    names
}

fn params_of(p: &LVParams) -> Params {
    let values = p.a.iter().chain(p.b.iter().flatten());
    param_names().into_iter().zip(values.copied()).collect()
}

/// `x1^α x2^β x3^γ` in role coordinates of `perm`.
fn monomial_invariant(e: &LVExponents, perm: AxisPermutation) -> Expr {
    let exps = [e.alpha, e.beta, e.gamma];
    let mut h = Expr::one();
    for (r, &k) in exps.iter().enumerate() {
        h = h * Expr::var(perm.axis(r + 1)).pow(k);
    }
    h
}

/// The Lotka–Volterra model with symbolic coefficients `a_k`, `b_ij` bound to
/// `p`, the invariant `H = x1^α x2^β x3^γ`, and the positive-orthant box
/// `[0.1, 2]³`.
pub fn lv_model(p: &LVParams, name: &str) -> Result<Model3D> {
    let v = [1, 2, 3].map(|k| {
        parse(&format!("x{k}*(a{k}+b{k}1*x1+b{k}2*x2+b{k}3*x3)")).expect("lotka-volterra component")
    });
    let h = monomial_invariant(&lv_exponents(p), AxisPermutation::Identity);
    Model3D::new(name, v, params_of(p), SampleBox::cube(0.1, 2.0)?)?.with_invariant("H", h)
}

/// Data of the particular structure `J = εU/(γH)`.
#[derive(Debug, Clone)]
pub struct LVStructureData {
    pub epsilon: f64,
    pub branch: Branch,
    /// Exponents of the (possibly relabeled) system actually used.
    pub exponents: LVExponents,
    pub perm: AxisPermutation,
    pub hamiltonian: Expr,
    pub j: Expr,
    pub tensor: LieTensor,
    /// `B'`; identically zero exactly when `J` solves the PDE.
    pub b_prime: Expr,
    pub model: Model3D,
}

/// `B' = a1b23 − a2b13 − εa3 + [ε(b11−b31) + b23b11 − b13b21] x1
///      + [ε(b22−b32) + b23b12 − b13b22] x2` in role coordinates.
fn b_prime(p: &LVParams, eps: f64, perm: AxisPermutation) -> Expr {
    let b = &p.b;
    let k0 = c0(p) - eps * p.a[2];
    let k1 = eps * (b[0][0] - b[2][0]) + c1(p);
    let k2 = eps * (b[1][1] - b[2][1]) + c2(p);
    (Expr::num(k0) + Expr::num(k1) * Expr::var(perm.axis(1)) + Expr::num(k2) * Expr::var(perm.axis(2)))
        .simplify_light()
}

/// Builds the particular Poisson structure of a constrained Lotka–Volterra
/// system. When `γ = 0` the axes are relabeled cyclically until the role-3
/// exponent is nonzero.
pub fn lv_structure(p: &LVParams) -> Result<LVStructureData> {
    let model = lv_model(p, "lotka_volterra")?;
    let scale = p.scale();
    let perm = AxisPermutation::ALL
        .into_iter()
        .find(|&perm| nonzero(lv_exponents(&p.permuted(perm)).gamma, scale * scale))
        .ok_or_else(|| Error::precondition("all exponents α, β, γ vanish; no invariant of this form"))?;
    let q = p.permuted(perm);
    let exponents = lv_exponents(&q);
    let (epsilon, branch) = lv_epsilon(&q)?;
    let hamiltonian = monomial_invariant(&exponents, perm);
    let u = Expr::var(Axis::X1) * Expr::var(Axis::X2) * Expr::var(Axis::X3);
    let j = (Expr::num(epsilon) * u / (Expr::num(exponents.gamma) * hamiltonian.clone())).simplify_light();
    let tensor = lie_tensor_from_j(&model, &hamiltonian, &j, perm)?;
    Ok(LVStructureData {
        epsilon,
        branch,
        exponents,
        perm,
        hamiltonian,
        j,
        tensor,
        b_prime: b_prime(&q, epsilon, perm),
        model,
    })
}

/// `b` with a vanishing third column and `a = (1,1,1)`: `(α,β,γ,s) = (2,−4,2,0)`
/// and `ε = 0`.
pub fn lv_fixture_zero_epsilon() -> LVParams {
    LVParams { a: [1.0, 1.0, 1.0], b: [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [5.0, 6.0, 0.0]] }
}

/// A self-limiting parameter set with `ε = −1`, `(α,β,γ) = (4,1,−2)`; every
/// branch applies and all constraints hold exactly.
pub fn lv_fixture_nonzero_epsilon() -> LVParams {
    LVParams { a: [1.0, -2.0, 1.0], b: [[-1.0, -1.0, 0.0], [0.0, -2.0, -1.0], [-2.0, -3.0, -0.5]] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{expr_deviation, EXACT_TOL};

    #[test]
    fn exponents_of_first_fixture() {
        let e = lv_exponents(&lv_fixture_zero_epsilon());
        assert_eq!((e.alpha, e.beta, e.gamma, e.s), (2.0, -4.0, 2.0, 0.0));
    }

    #[test]
    fn exponents_of_identity_matrix() {
        let p = LVParams { a: [1.0, 2.0, 3.0], b: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] };
        let e = lv_exponents(&p);
        assert_eq!((e.alpha, e.beta, e.gamma), (0.0, 0.0, -1.0));
    }

    #[test]
    fn proportional_rows_flag_gamma() {
        let p = LVParams { a: [1.0; 3], b: [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.5, 0.1, 0.7]] };
        assert_eq!(lv_exponents(&p).gamma, 0.0);
    }

    #[test]
    fn first_fixture_constraints() {
        let c = lv_constraints_check(&lv_fixture_zero_epsilon());
        assert!(c.det.holds && c.s.holds);
        for r in [c.cond_i, c.cond_ii, c.cond_iii] {
            assert!(r.holds);
            assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
        }
        assert_eq!(c.applicable, [Branch::I, Branch::II, Branch::III]);
        assert!(c.passes());
        assert_eq!(lv_epsilon(&lv_fixture_zero_epsilon()).unwrap(), (0.0, Branch::I));
    }

    #[test]
    fn dense_matrix_fails_determinant() {
        let p = LVParams { a: [1.0, 2.0, 3.0], b: [[2.0, 1.0, 0.3], [0.4, 3.0, 1.1], [0.9, 0.2, 1.7]] };
        let c = lv_constraints_check(&p);
        assert!(!c.det.holds && !c.passes());
    }

    #[test]
    fn s_is_linear_in_rates() {
        let mut p = LVParams { a: [0.3, -1.2, 2.0], b: [[2.0, 1.0, 0.3], [0.4, 3.0, 1.1], [0.9, 0.2, 1.7]] };
        let s = lv_exponents(&p).s;
        p.a = p.a.map(|x| 2.5 * x);
        assert!((lv_exponents(&p).s - 2.5 * s).abs() < 1e-12);
    }

    #[test]
    fn no_branch_is_an_error() {
        let p = LVParams { a: [1.0, 1.0, 0.0], b: [[1.0, 2.0, 0.0], [3.0, 4.0, 0.0], [1.0, 4.0, 0.0]] };
        assert!(matches!(lv_epsilon(&p), Err(Error::Precondition(_))));
    }

    #[test]
    fn second_fixture_has_consistent_nonzero_epsilon() {
        let p = lv_fixture_nonzero_epsilon();
        let c = lv_constraints_check(&p);
        assert!(c.passes());
        assert_eq!(c.applicable, [Branch::I, Branch::II, Branch::III]);
        for br in [Branch::I, Branch::II, Branch::III] {
            assert_eq!(branch_epsilon(&p, br), -1.0);
        }
        let e = lv_exponents(&p);
        assert_eq!((e.alpha, e.beta, e.gamma, e.s), (4.0, 1.0, -2.0, 0.0));
    }

    #[test]
    fn first_fixture_structure() {
        let d = lv_structure(&lv_fixture_zero_epsilon()).unwrap();
        assert_eq!(d.epsilon, 0.0);
        assert!(d.j.is_zero());
        assert!(d.b_prime.is_zero());
        assert_eq!(d.hamiltonian.to_string(), "x1^2*x2^-4*x3^2".replace("^-4", "^(-4)"));
        // J13 = x1 x3 (1 + x1 + 2 x2) / (2H) when J = 0
        let expected = parse("x1*x3*(1+x1+2*x2)/(2*x1^2*x2^(-4)*x3^2)").unwrap();
        let r = expr_deviation("j13", &d.tensor.upper()[1], &expected, &d.model.params, &d.model.domain, EXACT_TOL)
            .unwrap();
        assert!(r.pass, "{}", r.max);
    }

    #[test]
    fn gamma_zero_relabels_axes() {
        // first fixture relabeled by x -> (x2, x3, x1): the zero column moves
        let base = lv_fixture_zero_epsilon();
        let p = base.permuted(AxisPermutation::Cycle231);
        assert_eq!(lv_exponents(&p).gamma, 0.0);
        let d = lv_structure(&p).unwrap();
        assert_eq!(d.perm, AxisPermutation::Cycle312);
        assert_eq!(d.epsilon, 0.0);
        let r = crate::model::check_first_integral(&d.model, &d.hamiltonian).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn vanishing_exponents_fail() {
        let p = LVParams { a: [1.0; 3], b: [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0], [3.0, 3.0, 3.0]] };
        assert!(lv_structure(&p).is_err());
    }

    #[test]
    fn model_parameters_are_named() {
        let m = lv_model(&lv_fixture_nonzero_epsilon(), "lv").unwrap();
        assert_eq!(m.params["b23"], -1.0);
        assert_eq!(m.params["a2"], -2.0);
        assert_eq!(m.v[0].to_string(), "x1*(a1+b11*x1+b12*x2+b13*x3)");
    }
}
