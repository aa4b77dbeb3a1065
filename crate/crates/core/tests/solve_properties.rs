use poisson3d::catalog::{euler_top, ice_skate, lv_fixture_nonzero_epsilon, lv_structure};
use poisson3d::expr::{parse, Expr, Params};
use poisson3d::model::{AxisPermutation, SampleBox};
use poisson3d::solve::{
    flow_with_invariants, integrate_characteristics, solve_ansatz, trajectory_csv, AnsatzOptions,
};
use poisson3d::structure::compute_ab;
use poisson3d::Error;

fn named(m: &poisson3d::Model3D, names: &[&str]) -> Vec<(String, Expr)> {
    names.iter().map(|n| (n.to_string(), m.invariant(n).unwrap().clone())).collect()
}

#[test]
fn step_halving_is_fourth_order() {
    let m = ice_skate(1.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H1").unwrap(), AxisPermutation::Identity).unwrap();
    for horizon in [1.0, 10.0] {
        let err = |step: f64| {
            let run = integrate_characteristics(&m, &ab, [0.0, 0.0, 1.0], 0.0, horizon, step).unwrap();
            let (x, j) = run.final_state();
            (j - x[0].sin()).abs()
        };
        for (h, h2) in [(0.1, 0.05), (0.05, 0.025)] {
            let ratio = err(h) / err(h2);
            assert!((12.0..=20.0).contains(&ratio), "horizon {horizon}, steps {h}/{h2}: ratio {ratio}");
        }
    }
}

#[test]
fn euler_top_characteristic_follows_minus_x3() {
    let m = euler_top(1.0, 2.0, 3.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H").unwrap(), AxisPermutation::Identity).unwrap();
    let x0 = [1.0, 1.0, 1.0];
    let run = integrate_characteristics(&m, &ab, x0, -x0[2], 10.0, 1e-3).unwrap();
    let err = run.x.iter().zip(&run.j).map(|(p, j)| (j + p[2]).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "{err}");
    assert!(run.t.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(run.t.len(), run.x.len());
}

#[test]
fn characteristic_values_satisfy_the_transport_equation() {
    // centered differences of the computed J along the run against A J + B
    let m = euler_top(1.0, 2.0, 3.0).unwrap();
    let ab = compute_ab(&m, m.invariant("L").unwrap(), AxisPermutation::Identity).unwrap();
    let step = 1e-3;
    let run = integrate_characteristics(&m, &ab, [0.7, 1.2, 0.9], 0.3, 2.0, step).unwrap();
    let (a, b) = (ab.a.bind(&m.params), ab.b.bind(&m.params));
    let none = Params::new();
    for k in 1..run.t.len() - 1 {
        let djdt = (run.j[k + 1] - run.j[k - 1]) / (2.0 * step);
        let rhs = a.eval(&run.x[k], &none).unwrap() * run.j[k] + b.eval(&run.x[k], &none).unwrap();
        assert!((djdt - rhs).abs() <= 1e-5 * (1.0 + rhs.abs()), "t = {}: {djdt} vs {rhs}", run.t[k]);
    }
    assert!(run.max_step_error < 1e-10);
}

#[test]
fn flows_conserve_invariants() {
    let m = euler_top(1.0, 2.0, 3.0).unwrap();
    let r = flow_with_invariants(&m, &named(&m, &["H", "L"]), [1.0, 1.0, 1.0], 100.0, 1e-3).unwrap();
    assert!(r.max_rel_drift() <= 1e-6, "{}", r.max_rel_drift());

    let m = ice_skate(1.0).unwrap();
    let r = flow_with_invariants(&m, &named(&m, &["H1", "H2"]), [0.0, 0.0, 1.0], 1.0, 1e-3).unwrap();
    assert!(r.max_rel_drift() <= 1e-6, "{}", r.max_rel_drift());

    let d = lv_structure(&lv_fixture_nonzero_epsilon()).unwrap();
    let inv = vec![("H".to_string(), d.hamiltonian.clone())];
    let r = flow_with_invariants(&d.model, &inv, [1.0, 1.0, 1.0], 10.0, 1e-3).unwrap();
    assert!(r.max_rel_drift() <= 1e-6, "{}", r.max_rel_drift());
}

#[test]
fn drift_converges_under_step_halving() {
    let m = euler_top(1.0, 2.0, 3.0).unwrap();
    let inv = named(&m, &["H"]);
    let drift = |h: f64| flow_with_invariants(&m, &inv, [1.0, 1.0, 1.0], 10.0, h).unwrap().max_rel_drift();
    let ratio = drift(0.1) / drift(0.05);
    assert!(ratio > 8.0, "{ratio}");
}

#[test]
fn escaping_flows_are_errors() {
    let m = poisson3d::Model3D::new(
        "growth",
        [parse("x1").unwrap(), parse("0").unwrap(), parse("0").unwrap()],
        Params::new(),
        SampleBox::cube(0.5, 1.0).unwrap(),
    )
    .unwrap();
    let err = flow_with_invariants(&m, &[], [1.0, 1.0, 1.0], 10.0, 1e-2).unwrap_err();
    assert!(matches!(err, Error::Integration { .. }), "{err}");
}

fn ice_skate_box() -> SampleBox {
    SampleBox::new([-1.0, -2.0, 0.1], [1.0, 2.0, 2.0]).unwrap().with_samples(300)
}

#[test]
fn polynomial_ansatz_on_ice_skate_converges_with_degree() {
    let m = ice_skate(1.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H1").unwrap(), AxisPermutation::Identity).unwrap();
    let opts = AnsatzOptions { casimir: None, ..Default::default() };
    let d5 = solve_ansatz(&m, &ab, 5, &ice_skate_box(), &opts).unwrap();
    let d7 = solve_ansatz(&m, &ab, 7, &ice_skate_box(), &opts).unwrap();
    // degree 5 is limited by the best quartic approximation of cos on [-1, 1]
    assert!(d5.residual_max > 1e-6 && d5.residual_max < 1e-4, "{}", d5.residual_max);
    assert!(d7.residual_max <= 1e-6, "{}", d7.residual_max);
    assert!(d7.residual_max < d5.residual_max);
    assert!(d7.passed(), "{:?}", d7.certification.reports);
    // the fitted J differs from sin x1 by an approximate invariant
    let none = Params::new();
    let v = m.bound_field();
    for p in [[0.3, 0.1, 1.0], [-0.8, 1.5, 0.4], [0.9, -1.0, 1.7]] {
        let grad: Vec<f64> = d7.j.gradient().iter().map(|g| g.eval(&p, &none).unwrap()).collect();
        let transport: f64 = (0..3).map(|k| v[k].eval(&p, &none).unwrap() * grad[k]).sum();
        assert!((transport + p[0].cos()).abs() < 1e-5);
    }
}

#[test]
fn constant_ansatz_cannot_solve_ice_skate() {
    let m = ice_skate(1.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H1").unwrap(), AxisPermutation::Identity).unwrap();
    let s = solve_ansatz(&m, &ab, 0, &ice_skate_box(), &AnsatzOptions::default()).unwrap();
    assert!(s.residual_max > 0.1);
    assert!(!s.passed());
    assert_eq!(s.rank, 0);
}

#[test]
fn appending_the_exact_solution_never_hurts() {
    let m = ice_skate(1.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H1").unwrap(), AxisPermutation::Identity).unwrap();
    for degree in [0, 2, 4] {
        let plain = solve_ansatz(&m, &ab, degree, &ice_skate_box(), &AnsatzOptions::default()).unwrap();
        let opts = AnsatzOptions { extra: vec![parse("sin(x1)").unwrap()], ..Default::default() };
        let aug = solve_ansatz(&m, &ab, degree, &ice_skate_box(), &opts).unwrap();
        assert!(aug.residual_rms <= plain.residual_rms + 1e-15, "degree {degree}");
        assert!(aug.residual_max < 1e-8, "degree {degree}: {}", aug.residual_max);
        assert!(aug.passed());
    }
}

#[test]
fn exported_runs_have_invariant_columns() {
    let m = ice_skate(1.0).unwrap();
    let ab = compute_ab(&m, m.invariant("H1").unwrap(), AxisPermutation::Identity).unwrap();
    let run = integrate_characteristics(&m, &ab, [0.0, 0.0, 1.0], 0.0, 1.0, 0.1).unwrap();
    let csv = trajectory_csv(&run.t, &run.x, Some(&run.j), &named(&m, &["H1", "H2"]), &m.params).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x1,x2,x3,J,H1,H2"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for row in &rows {
        assert!((row[4] - row[1].sin()).abs() < 1e-5);
        assert!((row[5] - 1.0).abs() < 1e-5);
    }
}
