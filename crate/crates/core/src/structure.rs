//! PDE coefficients `A`, `B` and assembly of the structure matrix from the
//! scalar `J = J^{12}`.
//!
//! All formulas are written in role coordinates: with a cyclic permutation
//! `σ`, role `r` is the actual axis `σ(r)` and `∂_r` means `∂/∂x_{σ(r)}`.
//! Results are mapped back to actual coordinates before being stored.

use std::collections::BTreeMap;
use std::fmt;

use crate::expr::{x1, x2, Axis, Expr, Params};
use crate::model::{regular_at, AxisPermutation, Model3D, SampleBox};
use crate::{Error, Result};

/// Coefficients of `v·∇J = A J + B` for one Hamiltonian and permutation.
#[derive(Debug, Clone)]
pub struct ABPair {
    pub a: Expr,
    pub b: Expr,
    pub perm: AxisPermutation,
    pub hamiltonian: Expr,
}

/// Antisymmetric 3×3 structure matrix stored by its independent entries
/// `J^{12}, J^{13}, J^{23}` in actual coordinates.
#[derive(Debug, Clone)]
pub struct LieTensor {
    upper: [Expr; 3],
    /// Labeling used when the tensor was assembled.
    pub perm: AxisPermutation,
}

fn upper_index(i: Axis, j: Axis) -> usize {
    match (i, j) {
        (Axis::X1, Axis::X2) => 0,
        (Axis::X1, Axis::X3) => 1,
        (Axis::X2, Axis::X3) => 2,
        _ => unreachable!("upper_index called with i >= j"),
    }
}

impl LieTensor {
    pub fn new(j12: Expr, j13: Expr, j23: Expr) -> LieTensor {
        LieTensor { upper: [j12, j13, j23], perm: AxisPermutation::Identity }
    }

    pub fn zero() -> LieTensor {
        LieTensor::new(Expr::zero(), Expr::zero(), Expr::zero())
    }

    /// `J^{ij}`; the diagonal is zero and the lower triangle is the negated
    /// upper triangle.
    pub fn entry(&self, i: Axis, j: Axis) -> Expr {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.upper[upper_index(i, j)].clone(),
            std::cmp::Ordering::Greater => -self.upper[upper_index(j, i)].clone(),
        }
    }

    /// `[J^{12}, J^{13}, J^{23}]`.
    pub fn upper(&self) -> &[Expr; 3] {
        &self.upper
    }

    /// Entry in role coordinates of the stored permutation.
    pub fn role_entry(&self, a: usize, b: usize) -> Expr {
        self.entry(self.perm.axis(a), self.perm.axis(b))
    }

    fn from_role_entries(perm: AxisPermutation, entries: [(usize, usize, Expr); 3]) -> LieTensor {
        let mut upper = [Expr::zero(), Expr::zero(), Expr::zero()];
        for (a, b, value) in entries {
            let (i, j) = (perm.axis(a), perm.axis(b));
            if i < j {
                upper[upper_index(i, j)] = value;
            } else {
                upper[upper_index(j, i)] = -value;
            }
        }
        LieTensor { upper, perm }
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> LieTensor {
        LieTensor { upper: self.upper.clone().map(|e| f(&e)), perm: self.perm }
    }

    pub fn with_perm(mut self, perm: AxisPermutation) -> LieTensor {
        self.perm = perm;
        self
    }
}

impl fmt::Display for LieTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "J12 = {}", self.upper[0])?;
        writeln!(f, "J13 = {}", self.upper[1])?;
        write!(f, "J23 = {}", self.upper[2])
    }
}

struct Roles<'a> {
    m: &'a Model3D,
    perm: AxisPermutation,
}

impl Roles<'_> {
    fn v(&self, r: usize) -> Expr {
        self.m.v[self.perm.axis(r).index()].clone()
    }

    fn d(&self, e: &Expr, r: usize) -> Expr {
        e.diff(self.perm.axis(r))
    }
}

/// Rejects a role-3 partial that vanishes identically (symbolically or at
/// every box sample).
fn role3_partial(m: &Model3D, h: &Expr, perm: AxisPermutation) -> Result<Expr> {
    let h3 = h.diff(perm.axis(3)).simplify_light();
    let fail = || {
        Error::precondition(format!(
            "∂H/∂{} vanishes identically for H = {h}; choose another axis permutation",
            perm.axis(3)
        ))
    };
    if h3.is_zero() {
        return Err(fail());
    }
    let b = &m.domain;
    let bound = h3.bind(&m.params);
    let pts = b.sample_where(b.samples.min(200), |p| bound.eval(p, &Params::new()).is_ok());
    match pts {
        Ok(pts) if pts.iter().all(|p| bound.eval(p, &Params::new()).is_ok_and(|v| v == 0.0)) => Err(fail()),
        _ => Ok(h3),
    }
}

/// `A = ∂_μ v^μ − (∂_3 v^μ)(∂_μ H)/∂_3 H` and
/// `B = (v^1 ∂_3 v^2 − v^2 ∂_3 v^1)/∂_3 H`, in role coordinates of `perm`.
pub fn compute_ab(m: &Model3D, h: &Expr, perm: AxisPermutation) -> Result<ABPair> {
    let h3 = role3_partial(m, h, perm)?;
    let r = Roles { m, perm };
    let divergence = Expr::sum((1..=3).map(|k| r.d(&r.v(k), k)));
    let transport = Expr::sum((1..=3).map(|k| r.d(&r.v(k), 3) * r.d(h, k)));
    let a = (divergence - transport / h3.clone()).simplify_light();
    let b = ((r.v(1) * r.d(&r.v(2), 3) - r.v(2) * r.d(&r.v(1), 3)) / h3).simplify_light();
    Ok(ABPair { a, b, perm, hamiltonian: h.clone() })
}

/// Structure matrix with role entries `J^{12} = J`,
/// `J^{13} = (v^1 − J ∂_2H)/∂_3H` and `J^{23} = (v^2 + J ∂_1H)/∂_3H`.
///
/// The first two Hamiltonian equations hold by construction; the third and
/// the Jacobi identity depend on `H` being invariant and `J` solving the PDE.
pub fn lie_tensor_from_j(m: &Model3D, h: &Expr, j: &Expr, perm: AxisPermutation) -> Result<LieTensor> {
    let h3 = role3_partial(m, h, perm)?;
    let r = Roles { m, perm };
    let j13 = ((r.v(1) - j.clone() * r.d(h, 2)) / h3.clone()).simplify_light();
    let j23 = ((r.v(2) + j.clone() * r.d(h, 1)) / h3).simplify_light();
    Ok(LieTensor::from_role_entries(perm, [(1, 2, j.clone()), (1, 3, j13), (2, 3, j23)]))
}

/// Last row of the structure matrix from its upper-left block:
/// `J^{μ3} = (v^μ − Σ_{ν<3} J^{μν} ∂_νH)/∂_3H` and `J^{3μ} = −J^{μ3}`.
///
/// Returns the role entries `[J^{31}, J^{32}]`.
pub fn corollary_row(m: &Model3D, h: &Expr, j12: &Expr, perm: AxisPermutation) -> Result<[Expr; 2]> {
    let h3 = role3_partial(m, h, perm)?;
    let r = Roles { m, perm };
    let block = |mu: usize, nu: usize| -> Expr {
        match (mu, nu) {
            (1, 2) => j12.clone(),
            (2, 1) => -j12.clone(),
            _ => Expr::zero(),
        }
    };
    let row = |mu: usize| -> Expr {
        let partial = Expr::sum((1..=2).map(|nu| block(mu, nu) * r.d(h, nu)));
        let upper = (r.v(mu) - partial) / h3.clone();
        (-upper).simplify_light()
    };
    Ok([row(1), row(2)])
}

/// A function `F(H, C)` of a Hamiltonian and a Casimir (or second invariant).
///
/// Stored as an expression in which `x1` stands for `H` and `x2` for `C`.
#[derive(Debug, Clone)]
pub struct InvariantFunction(Expr);

impl InvariantFunction {
    /// Parses text written in the slot names `H` and `C`; other identifiers
    /// are parameters.
    pub fn parse(text: &str) -> Result<InvariantFunction> {
        let e = crate::expr::parse(text)?;
        if e.has_vars() {
            return Err(Error::precondition(format!(
                "`{text}` must be written in terms of H and C, not state variables"
            )));
        }
        let mut slots = BTreeMap::new();
        slots.insert("H".to_string(), x1());
        slots.insert("C".to_string(), x2());
        Ok(InvariantFunction(e.substitute_params(&slots)))
    }

    /// `F(H, C) = H`.
    pub fn identity() -> InvariantFunction {
        InvariantFunction(x1())
    }

    pub fn uses_casimir(&self) -> bool {
        self.0.depends_on(Axis::X2)
    }

    /// `∂F/∂H` as a function of the same slots.
    pub fn d_hamiltonian(&self) -> InvariantFunction {
        InvariantFunction(self.0.diff(Axis::X1))
    }

    /// `F(h, c)` as an expression in the state variables.
    pub fn compose(&self, h: &Expr, c: Option<&Expr>) -> Result<Expr> {
        let c = match c {
            Some(c) => c.clone(),
            None if self.uses_casimir() => {
                return Err(Error::precondition(format!("F = {self} depends on C but no Casimir was given")))
            }
            None => Expr::zero(),
        };
        Ok(self.0.substitute_vars(&[h.clone(), c, Expr::zero()]).simplify_light())
    }
}

impl fmt::Display for InvariantFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let named = self.0.substitute_vars(&[Expr::param("H"), Expr::param("C"), Expr::zero()]);
        write!(f, "{named}")
    }
}

/// `γ = 1/(∂F/∂H)(H, C)` as an expression, after checking that `∂F/∂H`
/// is nonzero with a constant sign at every box sample (a sign change
/// implies a zero in between).
pub fn rescaling_factor(
    m: &Model3D,
    h: &Expr,
    c: Option<&Expr>,
    f: &InvariantFunction,
    b: &SampleBox,
) -> Result<Expr> {
    let df = f.d_hamiltonian().compose(h, c)?;
    let vanishing = || Error::precondition(format!("∂F/∂H vanishes on the box for F = {f}"));
    if df.is_zero() {
        return Err(vanishing());
    }
    let bound = df.bind(&m.params);
    let mut guards = vec![bound.clone(), h.bind(&m.params)];
    if let Some(c) = c {
        guards.push(c.bind(&m.params));
    }
    let pts = b.sample_where(b.samples, |p| regular_at(&guards[1..], p, &Params::new(), b.sing_tol))?;
    let mut sign = 0.0;
    for p in &pts {
        match bound.eval(p, &Params::new()) {
            Ok(v) if v != 0.0 && v.is_finite() && (sign == 0.0 || v.signum() == sign) => sign = v.signum(),
            _ => return Err(vanishing()),
        }
    }
    Ok((Expr::one() / df).simplify_light())
}

/// Rescales `t` by `γ = 1/∂₁F(H, C)`; returns the new tensor and the new
/// Hamiltonian `F(H, C)`. No Casimir is derived for the rescaled structure.
pub fn apply_rescaling(
    m: &Model3D,
    t: &LieTensor,
    h: &Expr,
    c: Option<&Expr>,
    f: &InvariantFunction,
) -> Result<(LieTensor, Expr)> {
    let gamma = rescaling_factor(m, h, c, f, &m.domain)?;
    let rescaled = t.map(|e| (gamma.clone() * e.clone()).simplify_light());
    Ok((rescaled, f.compose(h, c)?))
}
