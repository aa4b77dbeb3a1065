//! Autonomous 3D vector fields with candidate first integrals.

pub mod file;
mod sample;

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::expr::{Axis, Expr, Params};
use crate::verify::{self, Normalization, ResidualReport};
use crate::{Error, Result};

pub use sample::{regular_at, sample_points, SampleBox, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SING_TOL};

/// A cyclic relabeling of the axes. `axis(r)` is the actual coordinate that
/// plays the role of `x_r` in the structure formulas; the role-3 axis is the
/// one divided by (`∂₃H`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisPermutation {
    /// Roles `(1,2,3)` are axes `(x1,x2,x3)`.
    Identity,
    /// Roles `(1,2,3)` are axes `(x2,x3,x1)`.
    Cycle231,
    /// Roles `(1,2,3)` are axes `(x3,x1,x2)`.
    Cycle312,
}

impl AxisPermutation {
    pub const ALL: [AxisPermutation; 3] =
        [AxisPermutation::Identity, AxisPermutation::Cycle231, AxisPermutation::Cycle312];

    pub fn axes(self) -> [Axis; 3] {
        use Axis::*;
        match self {
            AxisPermutation::Identity => [X1, X2, X3],
            AxisPermutation::Cycle231 => [X2, X3, X1],
            AxisPermutation::Cycle312 => [X3, X1, X2],
        }
    }

    /// Actual axis playing role `role` (1-based).
    pub fn axis(self, role: usize) -> Axis {
        self.axes()[role - 1]
    }

    /// The cyclic permutation whose role-3 axis is `axis`.
    pub fn with_role3(axis: Axis) -> AxisPermutation {
        match axis {
            Axis::X3 => AxisPermutation::Identity,
            Axis::X1 => AxisPermutation::Cycle231,
            Axis::X2 => AxisPermutation::Cycle312,
        }
    }

    pub fn parse(text: &str) -> Option<AxisPermutation> {
        match text.trim() {
            "identity" | "123" | "1,2,3" => Some(AxisPermutation::Identity),
            "231" | "2,3,1" => Some(AxisPermutation::Cycle231),
            "312" | "3,1,2" => Some(AxisPermutation::Cycle312),
            _ => None,
        }
    }
}

impl fmt::Display for AxisPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = self.axes();
        write!(f, "({a},{b},{c})")
    }
}

/// An autonomous dynamical system `ẋ = v(x)` in three dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Model3D {
    pub name: String,
    pub v: [Expr; 3],
    pub params: Params,
    /// Candidate Hamiltonians and Casimirs, in declaration order.
    pub invariants: IndexMap<String, Expr>,
    pub domain: SampleBox,
}

impl Model3D {
    pub fn new(name: impl Into<String>, v: [Expr; 3], params: Params, domain: SampleBox) -> Result<Model3D> {
        let m = Model3D { name: name.into(), v, params, invariants: IndexMap::new(), domain };
        for (k, c) in m.v.iter().enumerate() {
            m.check_bound(c, &format!("v{}", k + 1))?;
        }
        m.domain.validate()?;
        Ok(m)
    }

    pub fn with_invariant(mut self, name: impl Into<String>, e: Expr) -> Result<Model3D> {
        let name = name.into();
        self.check_bound(&e, &name)?;
        self.invariants.insert(name, e);
        Ok(self)
    }

    fn check_bound(&self, e: &Expr, what: &str) -> Result<()> {
        match e.params().into_iter().find(|p| !self.params.contains_key(p)) {
            Some(p) => Err(Error::precondition(format!("{what} uses unbound parameter `{p}`"))),
            None => Ok(()),
        }
    }

    pub fn invariant(&self, name: &str) -> Result<&Expr> {
        self.invariants.get(name).ok_or_else(|| {
            let known: Vec<&str> = self.invariants.keys().map(String::as_str).collect();
            Error::precondition(format!(
                "model `{}` has no invariant `{name}` (known: {})",
                self.name,
                known.join(", ")
            ))
        })
    }

    /// `v` with every parameter replaced by its value.
    pub fn bound_field(&self) -> [Expr; 3] {
        self.v.clone().map(|c| c.bind(&self.params))
    }

    pub fn with_domain(mut self, domain: SampleBox) -> Model3D {
        self.domain = domain;
        self
    }
}

/// Samples `|v·∇H|`, normalized by `1 + Σ|v^μ ∂_μH|`.
pub fn check_first_integral(m: &Model3D, h: &Expr) -> Result<ResidualReport> {
    check_first_integral_on(m, h, &m.domain)
}

pub fn check_first_integral_on(m: &Model3D, h: &Expr, b: &SampleBox) -> Result<ResidualReport> {
    let grad = h.gradient();
    let mut targets: Vec<Expr> = m.v.to_vec();
    targets.extend(grad.iter().cloned());
    targets.push(h.clone());
    verify::sampled_identity("first_integral", &targets, &m.params, b, verify::EXACT_TOL, Normalization::AdditiveTerms, |vals| {
        let terms = [vals[0] * vals[3], vals[1] * vals[4], vals[2] * vals[5]];
        verify::normalized(&terms)
    })
}

/// `min |∂_{σ(3)}H|` over the box samples for each permutation in
/// [`AxisPermutation::ALL`] order.
fn role3_minima(m: &Model3D, h: &Expr, b: &SampleBox) -> Result<[f64; 3]> {
    let grad = h.gradient();
    if grad.iter().all(Expr::is_zero) {
        return Err(Error::precondition(format!("all partial derivatives of `{h}` vanish identically")));
    }
    let bound: Vec<Expr> = grad.iter().map(|g| g.bind(&m.params)).collect();
    let mut guards = bound.clone();
    guards.push(h.bind(&m.params));
    let pts = b.sample_where(b.samples, |p| regular_at(&guards, p, &Params::new(), b.sing_tol))?;
    let mut minima = [f64::INFINITY; 3];
    for (slot, perm) in minima.iter_mut().zip(AxisPermutation::ALL) {
        let g = &bound[perm.axis(3).index()];
        for p in &pts {
            *slot = slot.min(g.eval(p, &Params::new())?.abs());
        }
    }
    Ok(minima)
}

/// Picks the cyclic permutation whose role-3 partial `∂_{σ(3)}H` has the
/// largest minimum magnitude over the box samples. Ties keep the earlier
/// permutation in the order identity, (2,3,1), (3,1,2).
pub fn choose_axis(m: &Model3D, h: &Expr, b: &SampleBox) -> Result<AxisPermutation> {
    let minima = role3_minima(m, h, b)?;
    let mut best: Option<(AxisPermutation, f64)> = None;
    for (perm, min) in AxisPermutation::ALL.into_iter().zip(minima) {
        if best.is_none_or(|(_, m)| min > m) {
            best = Some((perm, min));
        }
    }
    match best {
        Some((perm, min)) if min > 0.0 => Ok(perm),
        _ => Err(Error::precondition(format!("every partial derivative of `{h}` vanishes somewhere on the box"))),
    }
}

/// The identity labeling when `|∂₃H|` stays above the singularity tolerance
/// on the box samples, otherwise [`choose_axis`]. Used when a user-supplied
/// `J` is meant as the actual `J^{12}` entry.
pub fn preferred_axis(m: &Model3D, h: &Expr, b: &SampleBox) -> Result<AxisPermutation> {
    let minima = role3_minima(m, h, b)?;
    if minima[0] > b.sing_tol {
        Ok(AxisPermutation::Identity)
    } else {
        choose_axis(m, h, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn toy() -> Model3D {
        let v = [parse("x2").unwrap(), parse("-x1").unwrap(), parse("0").unwrap()];
        Model3D::new("rotation", v, Params::new(), SampleBox::cube(0.1, 2.0).unwrap().with_samples(100)).unwrap()
    }

    #[test]
    fn permutations_are_cyclic() {
        for perm in AxisPermutation::ALL {
            let axes = perm.axes();
            assert_eq!(AxisPermutation::with_role3(axes[2]), perm);
            // successor relation x_k -> x_{k+1} is preserved
            for r in 0..3 {
                assert_eq!((axes[r].index() + 1) % 3, axes[(r + 1) % 3].index());
            }
            assert_eq!(AxisPermutation::parse(&format!("{}{}{}", axes[0].label(), axes[1].label(), axes[2].label())), Some(perm));
        }
    }

    #[test]
    fn choose_axis_follows_nonvanishing_partial() {
        let m = toy();
        assert_eq!(choose_axis(&m, &parse("x2").unwrap(), &m.domain).unwrap(), AxisPermutation::Cycle312);
        assert_eq!(choose_axis(&m, &parse("x1").unwrap(), &m.domain).unwrap(), AxisPermutation::Cycle231);
        assert_eq!(choose_axis(&m, &parse("x1+x2+3*x3").unwrap(), &m.domain).unwrap(), AxisPermutation::Identity);
        assert!(matches!(choose_axis(&m, &parse("1").unwrap(), &m.domain), Err(Error::Precondition(_))));
    }

    #[test]
    fn preferred_axis_keeps_identity_when_possible() {
        let m = toy();
        let h = parse("x1^2+x2^2+x3^2").unwrap();
        assert_eq!(preferred_axis(&m, &h, &m.domain).unwrap(), AxisPermutation::Identity);
        let h = parse("x1+x2").unwrap();
        assert_eq!(preferred_axis(&m, &h, &m.domain).unwrap(), choose_axis(&m, &h, &m.domain).unwrap());
    }

    #[test]
    fn rotation_invariant() {
        let m = toy();
        let r = check_first_integral(&m, &parse("x1^2+x2^2").unwrap()).unwrap();
        assert!(r.pass && r.max < 1e-15);
        let r = check_first_integral(&m, &parse("x1").unwrap()).unwrap();
        assert!(!r.pass);
    }

    #[test]
    fn unbound_parameters_are_rejected() {
        let v = [parse("a*x2").unwrap(), parse("0").unwrap(), parse("0").unwrap()];
        assert!(Model3D::new("bad", v, Params::new(), SampleBox::cube(0.0, 1.0).unwrap()).is_err());
        assert!(toy().with_invariant("H", parse("k*x1").unwrap()).is_err());
        assert!(toy().invariant("missing").is_err());
    }
}
