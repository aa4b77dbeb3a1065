use serde::Serialize;

use crate::expr::Expr;
use crate::model::Model3D;
use crate::structure::{ABPair, InvariantFunction};
use crate::verify::{normalized, sampled_identity, Normalization, EXACT_TOL};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortcutKind {
    /// `B ≡ 0`, so `J = 0`.
    ZeroB,
    /// `B = −f(H,C) A`, so `J = f(H,C)`.
    InvariantFunction,
}

#[derive(Debug, Clone)]
pub struct Shortcut {
    pub kind: ShortcutKind,
    pub j: Expr,
}

/// Closed-form particular solutions of `v·∇J = A J + B`.
///
/// Returns `J = 0` when `B` vanishes on the samples of the model box, else
/// `J = f(H, C)` when `f` is given and `B + f A` vanishes there, else `None`.
pub fn particular_solution_shortcuts(
    m: &Model3D,
    ab: &ABPair,
    h: &Expr,
    c: Option<&Expr>,
    f: Option<&InvariantFunction>,
) -> Result<Option<Shortcut>> {
    let b = &m.domain;
    let b_zero = ab.b.is_zero()
        || sampled_identity("b_zero", std::slice::from_ref(&ab.b), &m.params, b, EXACT_TOL, Normalization::AdditiveTerms, |v| {
            normalized(&[v[0]])
        })?
        .pass;
    if b_zero {
        return Ok(Some(Shortcut { kind: ShortcutKind::ZeroB, j: Expr::zero() }));
    }
    let Some(f) = f else { return Ok(None) };
    let fe = f.compose(h, c)?;
    let targets = [ab.b.clone(), fe.clone(), ab.a.clone()];
    let r = sampled_identity("b_plus_fa", &targets, &m.params, b, EXACT_TOL, Normalization::AdditiveTerms, |v| {
        normalized(&[v[0], v[1] * v[2]])
    })?;
    Ok(r.pass.then_some(Shortcut { kind: ShortcutKind::InvariantFunction, j: fe }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{euler_top, ice_skate};
    use crate::model::AxisPermutation;
    use crate::structure::compute_ab;
    use crate::verify::pde_residual;

    #[test]
    fn euler_top_has_zero_b() {
        let m = euler_top(1.0, 2.0, 3.0).unwrap();
        let h = m.invariant("H").unwrap();
        let ab = compute_ab(&m, h, AxisPermutation::Identity).unwrap();
        let s = particular_solution_shortcuts(&m, &ab, h, None, None).unwrap().unwrap();
        assert_eq!(s.kind, ShortcutKind::ZeroB);
        assert!(s.j.is_zero());
    }

    #[test]
    fn ice_skate_h2_accepts_minus_one_only() {
        let m = ice_skate(1.0).unwrap();
        let h = m.invariant("H2").unwrap();
        let c = m.invariant("H1").unwrap();
        let ab = compute_ab(&m, h, AxisPermutation::Identity).unwrap();
        let minus_one = InvariantFunction::parse("-1").unwrap();
        let s = particular_solution_shortcuts(&m, &ab, h, Some(c), Some(&minus_one)).unwrap().unwrap();
        assert_eq!(s.kind, ShortcutKind::InvariantFunction);
        assert_eq!(s.j.as_num(), Some(-1.0));
        assert!(pde_residual(&m, &ab, &s.j, &m.domain).unwrap().pass);
        let plus_one = InvariantFunction::parse("1").unwrap();
        assert!(particular_solution_shortcuts(&m, &ab, h, Some(c), Some(&plus_one)).unwrap().is_none());
        assert!(!pde_residual(&m, &ab, &Expr::one(), &m.domain).unwrap().pass);
    }

    #[test]
    fn ice_skate_h1_has_no_shortcut() {
        let m = ice_skate(1.0).unwrap();
        let h = m.invariant("H1").unwrap();
        let ab = compute_ab(&m, h, AxisPermutation::Identity).unwrap();
        assert!(particular_solution_shortcuts(&m, &ab, h, None, None).unwrap().is_none());
        let f = InvariantFunction::parse("H").unwrap();
        assert!(particular_solution_shortcuts(&m, &ab, h, None, Some(&f)).unwrap().is_none());
    }
}
