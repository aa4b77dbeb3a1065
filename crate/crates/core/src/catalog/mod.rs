//! Worked examples: the ice skate, the Euler top and the 3D Lotka–Volterra
//! system, with their known invariants and structure families.

mod lv;

pub use lv::{
    lv_constraints_check, lv_epsilon, lv_exponents, lv_fixture_nonzero_epsilon, lv_fixture_zero_epsilon, lv_model,
    lv_structure, Branch, LVConstraints, LVExponents, LVParams, LVStructureData, LV_TOL,
};

use crate::expr::{parse, Expr, Params};
use crate::model::{Model3D, SampleBox};
use crate::structure::{InvariantFunction, LieTensor};
use crate::{Error, Result};

fn p(text: &str) -> Expr {
    parse(text).expect("catalog expression")
}

/// `ẋ¹ = −a, ẋ² = x³, ẋ³ = a x³ tan x¹` with invariants
/// `H1 = x³ sec x¹` and `H2 = a x² + x³ tan x¹`.
pub fn ice_skate(a: f64) -> Result<Model3D> {
    if a == 0.0 || !a.is_finite() {
        return Err(Error::precondition("ice skate parameter a must be nonzero"));
    }
    let params: Params = [("a".to_string(), a)].into();
    let domain = SampleBox::new([-1.2, -2.0, 0.1], [1.2, 2.0, 2.0])?;
    Model3D::new("ice_skate", [p("-a"), p("x3"), p("a*x3*tan(x1)")], params, domain)?
        .with_invariant("H1", p("x3*sec(x1)"))?
        .with_invariant("H2", p("a*x2+x3*tan(x1)"))
}

/// Which ice-skate invariant acts as the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IceSkateRole {
    /// `H1 = x³ sec x¹`, Casimir `H2` when `F = 0`.
    H1,
    /// `H2 = a x² + x³ tan x¹`, Casimir `H1` when `F = 0`.
    H2,
}

/// The scalar `J` of the ice-skate families: `sin x¹ + F(H1,H2)` for `H1`
/// and `−1 + F(H1,H2) sin x¹` for `H2`.
pub fn ice_skate_scalar(m: &Model3D, role: IceSkateRole, f: &InvariantFunction) -> Result<Expr> {
    let f = f.compose(m.invariant("H1")?, Some(m.invariant("H2")?))?;
    Ok(match role {
        IceSkateRole::H1 => (p("sin(x1)") + f).simplify_light(),
        IceSkateRole::H2 => (f * p("sin(x1)") - 1.0).simplify_light(),
    })
}

/// Closed-form ice-skate structure families.
pub fn ice_skate_family(m: &Model3D, role: IceSkateRole, f: &InvariantFunction) -> Result<LieTensor> {
    let fe = f.compose(m.invariant("H1")?, Some(m.invariant("H2")?))?;
    let t = match role {
        IceSkateRole::H1 => LieTensor::new(
            p("sin(x1)") + fe.clone(),
            p("-a*cos(x1)"),
            p("x3") * (p("sec(x1)") + fe * p("tan(x1)")),
        ),
        IceSkateRole::H2 => LieTensor::new(
            fe.clone() * p("sin(x1)") - 1.0,
            -(p("a") * fe.clone() * p("cos(x1)")),
            p("x3") * (fe * p("sec(x1)") - p("tan(x1)")),
        ),
    };
    Ok(t.map(Expr::simplify_light))
}

/// Free rigid body in body-frame angular momenta, with kinetic energy `H`
/// and squared angular momentum `L` as invariants.
pub fn euler_top(i1: f64, i2: f64, i3: f64) -> Result<Model3D> {
    if !(i1 > 0.0 && i2 > 0.0 && i3 > 0.0) {
        return Err(Error::precondition("moments of inertia must be positive"));
    }
    if i1 == i2 && i2 == i3 {
        return Err(Error::precondition("moments of inertia must not all be equal"));
    }
    let params: Params = [("I1".to_string(), i1), ("I2".to_string(), i2), ("I3".to_string(), i3)].into();
    let v = [
        p("(I2-I3)/(I2*I3)*x2*x3"),
        p("(I3-I1)/(I3*I1)*x3*x1"),
        p("(I1-I2)/(I1*I2)*x1*x2"),
    ];
    let domain = SampleBox::cube(0.1, 2.0)?;
    Model3D::new("euler_top", v, params, domain)?
        .with_invariant("H", p("(x1^2/I1+x2^2/I2+x3^2/I3)/2"))?
        .with_invariant("L", p("x1^2+x2^2+x3^2"))
}

/// Which Euler-top invariant acts as the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EulerRole {
    /// Kinetic energy `H`; Casimir `L` when `F = 0`.
    Energy,
    /// Angular momentum `L`; Casimir `H` when `F = 0`.
    Momentum,
}

/// The `(1,2)` entry of the Euler-top families.
pub fn euler_top_scalar(m: &Model3D, role: EulerRole, f: &InvariantFunction) -> Result<Expr> {
    let fe = f.compose(m.invariant("H")?, Some(m.invariant("L")?))?;
    Ok(match role {
        EulerRole::Energy => (-(p("x3") * (fe + 1.0))).simplify_light(),
        EulerRole::Momentum => (p("x3") * (p("1/I3") + fe) / 2.0).simplify_light(),
    })
}

/// Closed-form Euler-top structure families.
///
/// `Energy`: `(−x³(1+F), x²(1 + I₃F/I₂), −x¹(1 + I₃F/I₁))`.
/// `Momentum`: `½(x³(1/I₃+F), −x²(1/I₂+F), x¹(1/I₁+F))`. The factor `½`
/// makes `v = J ∇L` hold for `L = |x|²`; without it the matrix generates
/// the flow from `L/2`.
pub fn euler_top_family(m: &Model3D, role: EulerRole, f: &InvariantFunction) -> Result<LieTensor> {
    let fe = f.compose(m.invariant("H")?, Some(m.invariant("L")?))?;
    let t = match role {
        EulerRole::Energy => LieTensor::new(
            -(p("x3") * (fe.clone() + 1.0)),
            p("x2") * (p("I3") * fe.clone() / p("I2") + 1.0),
            -(p("x1") * (p("I3") * fe / p("I1") + 1.0)),
        ),
        EulerRole::Momentum => LieTensor::new(
            p("x3") * (p("1/I3") + fe.clone()) / 2.0,
            -(p("x2") * (p("1/I2") + fe.clone())) / 2.0,
            p("x1") * (p("1/I1") + fe) / 2.0,
        ),
    };
    Ok(t.map(Expr::simplify_light))
}

/// Names accepted by [`by_name`].
pub const CATALOG_NAMES: [&str; 4] = ["ice_skate", "euler_top", "lv_fixture", "lv_fixture_eps"];

/// Catalog models with their default parameters (`a = 1`, `I = (1,2,3)`).
pub fn by_name(name: &str) -> Result<Model3D> {
    match name {
        "ice_skate" => ice_skate(1.0),
        "euler_top" => euler_top(1.0, 2.0, 3.0),
        "lv_fixture" => lv_model(&lv_fixture_zero_epsilon(), "lv_fixture"),
        "lv_fixture_eps" => lv_model(&lv_fixture_nonzero_epsilon(), "lv_fixture_eps"),
        other => Err(Error::precondition(format!(
            "unknown catalog model `{other}` (known: {})",
            CATALOG_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Axis;
    use crate::model::check_first_integral;
    use crate::verify::gradient_rank;

    #[test]
    fn ice_skate_field_by_substitution() {
        let m = ice_skate(1.0).unwrap();
        let v: Vec<f64> = m.v.iter().map(|c| c.eval(&[0.0, 0.0, 1.0], &m.params).unwrap()).collect();
        assert_eq!(v, [-1.0, 1.0, 0.0]);
        assert!(ice_skate(0.0).is_err());
    }

    #[test]
    fn ice_skate_invariants_are_independent() {
        let m = ice_skate(1.0).unwrap();
        for name in ["H1", "H2"] {
            let r = check_first_integral(&m, m.invariant(name).unwrap()).unwrap();
            assert!(r.pass && r.max <= 1e-12, "{name}: {}", r.max);
        }
        for p in [[0.3, 0.5, 1.0], [-0.9, 1.5, 0.2], [1.1, -1.0, 1.8]] {
            let rank = gradient_rank(m.invariant("H1").unwrap(), m.invariant("H2").unwrap(), &m.params, &p).unwrap();
            assert_eq!(rank, 2);
        }
    }

    #[test]
    fn euler_top_field_by_substitution() {
        let m = euler_top(1.0, 2.0, 3.0).unwrap();
        let v: Vec<f64> = m.v.iter().map(|c| c.eval(&[1.0; 3], &m.params).unwrap()).collect();
        let expected = [-1.0 / 6.0, 2.0 / 3.0, -0.5];
        for k in 0..3 {
            assert!((v[k] - expected[k]).abs() < 1e-15);
        }
        assert!(euler_top(1.0, 1.0, 1.0).is_err());
        assert!(euler_top(-1.0, 2.0, 3.0).is_err());
    }

    #[test]
    fn euler_top_invariants() {
        let m = euler_top(1.0, 2.0, 3.0).unwrap();
        for name in ["H", "L"] {
            let r = check_first_integral(&m, m.invariant(name).unwrap()).unwrap();
            assert!(r.max <= 1e-12, "{name}: {}", r.max);
        }
        let fake = check_first_integral(&m, &Expr::var(Axis::X1)).unwrap();
        assert!(!fake.pass && fake.max > 0.0);
    }

    #[test]
    fn catalog_lookup() {
        for name in CATALOG_NAMES {
            assert_eq!(by_name(name).unwrap().name, name);
        }
        assert!(by_name("lorenz").is_err());
    }
}
