use super::linalg::{gram, solve_complete_pivoting, transpose_apply};
use crate::expr::{Axis, Expr, Params, Point};
use crate::model::{regular_at, Model3D, SampleBox};
use crate::structure::{lie_tensor_from_j, ABPair};
use crate::verify::{full_certify, Certification, NUMERIC_TOL};
use crate::{Error, Result};

/// Diagonal regularization of the normal equations.
pub const REGULARIZATION: f64 = 1e-12;

const RANK_TOL: f64 = 1e-10;
const SOLVE_TOL: f64 = 1e-15;
/// Columns whose norm is below this fraction of the largest column or
/// right-hand-side norm are treated as identically zero: they are zeroed
/// and left unscaled.
const NULL_COLUMN: f64 = 1e-12;

/// Pins the value of `J` at one point, selecting a member of a solution
/// family when the collocation system is rank-deficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub point: Point,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct AnsatzOptions {
    /// Functions appended to the monomial basis.
    pub extra: Vec<Expr>,
    pub anchor: Option<Anchor>,
    /// Casimir `C`: its conditions `J^{μν}∂_νC = 0`, which are affine in
    /// `J`, join the collocation system, and it is certified.
    pub casimir: Option<Expr>,
    pub tolerance: f64,
}

impl Default for AnsatzOptions {
    fn default() -> Self {
        AnsatzOptions { extra: Vec::new(), anchor: None, casimir: None, tolerance: NUMERIC_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct AnsatzSolution {
    pub degree: u32,
    pub basis: Vec<Expr>,
    pub coefficients: Vec<f64>,
    pub j: Expr,
    pub collocation_points: usize,
    /// `max |v·∇J − A J − B|` over the collocation points.
    pub residual_max: f64,
    pub residual_rms: f64,
    /// Effective rank of the collocation matrix; below `basis.len()` the
    /// solutions form a family.
    pub rank: usize,
    pub certification: Certification,
}

impl AnsatzSolution {
    pub fn passed(&self) -> bool {
        self.certification.passed
    }

    /// Coefficient of the basis function printed as `name` (e.g. `"x1*x3"`).
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.basis.iter().position(|b| b.to_string() == name).map(|k| self.coefficients[k])
    }
}

/// Monomials `x1^i x2^j x3^k` with `i + j + k ≤ degree`, by total degree and
/// then by decreasing powers of `x1`, `x2`.
pub fn monomial_basis(degree: u32) -> Vec<Expr> {
    let mut out = Vec::new();
    for total in 0..=degree {
        for i in (0..=total).rev() {
            for j in (0..=total - i).rev() {
                let k = total - i - j;
                let mut e = Expr::one();
                for (axis, p) in Axis::ALL.into_iter().zip([i, j, k]) {
                    if p > 0 {
                        e = e * Expr::var(axis).powi(p as i32);
                    }
                }
                out.push(e);
            }
        }
    }
    out
}

/// Least-squares collocation of `v·∇J = A J + B` over the monomials of
/// total degree `≤ degree` plus `options.extra`, followed by certification
/// of the resulting `J` on `box`.
pub fn solve_ansatz(m: &Model3D, ab: &ABPair, degree: u32, b: &SampleBox, options: &AnsatzOptions) -> Result<AnsatzSolution> {
    let mut basis = monomial_basis(degree);
    basis.extend(options.extra.iter().cloned());
    let n = basis.len();
    let v = m.bound_field();
    let a = ab.a.bind(&m.params);
    let rhs_expr = ab.b.bind(&m.params);
    let ops: Vec<Expr> = basis
        .iter()
        .map(|phi| {
            let phi = phi.bind(&m.params);
            let transport = Expr::sum(Axis::ALL.iter().map(|&k| v[k.index()].clone() * phi.diff(k)));
            (transport - a.clone() * phi).simplify_light()
        })
        .collect();
    let casimir_rows = match &options.casimir {
        Some(c) => casimir_conditions(m, ab, c)?,
        None => Vec::new(),
    };
    let mut guards = v.to_vec();
    guards.extend([a, rhs_expr.clone()]);
    guards.extend(ops.iter().cloned());
    guards.extend(casimir_rows.iter().flat_map(|(s, o)| [s.clone(), o.clone()]));
    let bound_basis: Vec<Expr> = basis.iter().map(|phi| phi.bind(&m.params)).collect();
    if !casimir_rows.is_empty() {
        guards.extend(bound_basis.iter().cloned());
    }
    let count = (4 * n).max(200);
    let none = Params::new();
    let pts = b.latin_hypercube_where(count, |p| regular_at(&guards, p, &none, b.sing_tol))?;
    if pts.len() < 2 * n {
        return Err(Error::Sampling(format!("{} collocation points for {n} basis functions", pts.len())));
    }

    let mut rows = Vec::with_capacity(pts.len());
    let mut rhs = Vec::with_capacity(pts.len());
    for p in &pts {
        rows.push(ops.iter().map(|e| e.eval(p, &none)).collect::<Result<Vec<f64>, _>>()?);
        rhs.push(rhs_expr.eval(p, &none)?);
    }
    let pde_rows = rows.len();
    for p in &pts {
        for (slope, offset) in &casimir_rows {
            let s = slope.eval(p, &none)?;
            rows.push(bound_basis.iter().map(|phi| phi.eval(p, &none).map(|x| s * x)).collect::<Result<Vec<f64>, _>>()?);
            rhs.push(-offset.eval(p, &none)?);
        }
    }
    let norms: Vec<f64> = (0..n).map(|i| rows.iter().map(|r| r[i] * r[i]).sum::<f64>().sqrt()).collect();
    let rhs_norm = rhs.iter().map(|y| y * y).sum::<f64>().sqrt();
    let reference = norms.iter().copied().fold(rhs_norm, f64::max);
    let null: Vec<bool> = norms.iter().map(|&s| s <= NULL_COLUMN * reference).collect();
    let scale: Vec<f64> = norms.iter().zip(&null).map(|(&s, &z)| if z { 1.0 } else { s }).collect();
    let scaled: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(scale.iter().zip(&null)).map(|(x, (s, &z))| if z { 0.0 } else { x / s }).collect())
        .collect();

    let g = gram(&scaled, n);
    let (_, rank) = solve_complete_pivoting(g.clone(), vec![0.0; n], RANK_TOL);
    let mut normal = g;
    for (i, row) in normal.iter_mut().enumerate() {
        row[i] += REGULARIZATION;
    }
    let mut target = transpose_apply(&scaled, &rhs, n);
    if let Some(anchor) = options.anchor {
        let cons: Vec<f64> = basis
            .iter()
            .zip(&scale)
            .map(|(phi, s)| phi.eval(&anchor.point, &m.params).map(|x| x / s))
            .collect::<Result<_, _>>()?;
        for (row, c) in normal.iter_mut().zip(&cons) {
            row.push(*c);
        }
        let mut last = cons;
        last.push(0.0);
        normal.push(last);
        target.push(anchor.value);
    }
    let (sol, _) = solve_complete_pivoting(normal, target, SOLVE_TOL);
    let coefficients: Vec<f64> = sol[..n].iter().zip(&scale).map(|(c, s)| c / s).collect();

    let residuals: Vec<f64> = rows[..pde_rows]
        .iter()
        .zip(&rhs)
        .map(|(r, y)| r.iter().zip(&coefficients).map(|(p, c)| p * c).sum::<f64>() - y)
        .collect();
    let residual_max = residuals.iter().fold(0.0f64, |acc, r| acc.max(r.abs()));
    let residual_rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();

    let j = Expr::sum(
        basis.iter().zip(&coefficients).filter(|(_, &c)| c != 0.0).map(|(phi, &c)| Expr::num(c) * phi.clone()),
    );
    let on_box = m.clone().with_domain(b.clone());
    let certification =
        full_certify(&on_box, &ab.hamiltonian, &j, options.casimir.as_ref(), Some(ab.perm), options.tolerance)?;
    Ok(AnsatzSolution {
        degree,
        basis,
        coefficients,
        j,
        collocation_points: pts.len(),
        residual_max,
        residual_rms,
        rank,
        certification,
    })
}

/// The rows `J^{μν}∂_νC` of the tensor assembled from `J`, each written as
/// `slope·J + offset` with parameters bound.
fn casimir_conditions(m: &Model3D, ab: &ABPair, c: &Expr) -> Result<Vec<(Expr, Expr)>> {
    let t0 = lie_tensor_from_j(m, &ab.hamiltonian, &Expr::zero(), ab.perm)?;
    let t1 = lie_tensor_from_j(m, &ab.hamiltonian, &Expr::one(), ab.perm)?;
    let grad = c.gradient();
    let row = |t: &crate::structure::LieTensor, mu: Axis| {
        Expr::sum(Axis::ALL.iter().map(|&nu| t.entry(mu, nu) * grad[nu.index()].clone()))
    };
    Ok(Axis::ALL
        .iter()
        .map(|&mu| {
            let offset = row(&t0, mu).bind(&m.params).simplify_light();
            let slope = (row(&t1, mu).bind(&m.params) - offset.clone()).simplify_light();
            (slope, offset)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::euler_top;
    use crate::model::AxisPermutation;
    use crate::structure::compute_ab;

    #[test]
    fn basis_sizes_and_order() {
        assert_eq!(monomial_basis(0).len(), 1);
        assert_eq!(monomial_basis(3).len(), 20);
        let names: Vec<String> = monomial_basis(2).iter().map(|e| e.to_string()).collect();
        assert_eq!(names, ["1", "x1", "x2", "x3", "x1^2", "x1*x2", "x1*x3", "x2^2", "x2*x3", "x3^2"]);
    }

    #[test]
    fn euler_top_degree_one_is_a_family() {
        let m = euler_top(1.0, 2.0, 3.0).unwrap();
        let ab = compute_ab(&m, m.invariant("H").unwrap(), AxisPermutation::Identity).unwrap();
        let free = solve_ansatz(&m, &ab, 1, &m.domain, &AnsatzOptions::default()).unwrap();
        assert_eq!(free.rank, 3);
        assert!(free.residual_max < 1e-12);
        let anchored = AnsatzOptions { anchor: Some(Anchor { point: [1.0; 3], value: -1.0 }), ..Default::default() };
        let s = solve_ansatz(&m, &ab, 1, &m.domain, &anchored).unwrap();
        assert!((s.coefficient("x3").unwrap() + 1.0).abs() < 1e-10);
        for name in ["1", "x1", "x2"] {
            assert!(s.coefficient(name).unwrap().abs() < 1e-8, "{name}");
        }
        assert!(s.passed());
    }

    #[test]
    fn casimir_selects_the_family_member() {
        let m = euler_top(1.0, 2.0, 3.0).unwrap();
        let ab = compute_ab(&m, m.invariant("H").unwrap(), AxisPermutation::Identity).unwrap();
        let opts = AnsatzOptions { casimir: Some(m.invariant("L").unwrap().clone()), ..Default::default() };
        let s = solve_ansatz(&m, &ab, 1, &m.domain, &opts).unwrap();
        assert!((s.coefficient("x3").unwrap() + 1.0).abs() < 1e-10);
        for name in ["1", "x1", "x2"] {
            assert!(s.coefficient(name).unwrap().abs() < 1e-10, "{name}");
        }
        assert!(s.passed(), "{:?}", s.certification.reports);
    }
}
