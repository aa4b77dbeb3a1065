use std::path::PathBuf;

use poisson3d::catalog::{by_name, CATALOG_NAMES};
use poisson3d::expr::parse;
use poisson3d::model::file::{load_model, to_model_file, LoadError};
use poisson3d::model::{check_first_integral, AxisPermutation};
use poisson3d::verify::{full_certify, EXACT_TOL};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("poisson3d-model-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn catalog_models_survive_disk_round_trip() {
    for name in CATALOG_NAMES {
        let m = by_name(name).unwrap();
        let path = scratch(&format!("{name}.p3"));
        std::fs::write(&path, to_model_file(&m)).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded, m, "{name}");
        for (inv, h) in &loaded.invariants {
            let a = check_first_integral(&m, h).unwrap();
            let b = check_first_integral(&loaded, h).unwrap();
            assert_eq!(a.max.to_bits(), b.max.to_bits(), "{name}/{inv}");
        }
    }
}

#[test]
fn handwritten_file_certifies() {
    let text = r#"
# rigid body with unequal moments
[model]
name = "top"

[params]
I1 = 1
I2 = 2   # intermediate axis
I3 = 3

[field]
v1 = "(I2-I3)/(I2*I3)*x2*x3"
v2 = "(I3-I1)/(I3*I1)*x3*x1"
v3 = "(I1-I2)/(I1*I2)*x1*x2"

[invariants]
H = "(x1^2/I1 + x2^2/I2 + x3^2/I3)/2"
L = "x1^2 + x2^2 + x3^2"

[domain]
box = 0.1:2, 0.1:2, 0.1:2
samples = 200
seed = 7
"#;
    let path = scratch("top.p3");
    std::fs::write(&path, text).unwrap();
    let m = load_model(&path).unwrap();
    assert_eq!(m.domain.samples, 200);
    let cert = full_certify(
        &m,
        m.invariant("H").unwrap(),
        &parse("-x3").unwrap(),
        Some(m.invariant("L").unwrap()),
        Some(AxisPermutation::Identity),
        EXACT_TOL,
    )
    .unwrap();
    assert!(cert.passed, "{:?}", cert.reports);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_model(&scratch("does-not-exist.p3")).unwrap_err();
    assert!(matches!(err, LoadError::Io { .. }), "{err}");
}

#[test]
fn expression_errors_report_file_lines() {
    let text = "[model]\nname = \"bad\"\n[field]\nv1 = \"x1\"\nv2 = \"x2 +* 1\"\nv3 = \"0\"\n";
    let path = scratch("bad.p3");
    std::fs::write(&path, text).unwrap();
    match load_model(&path).unwrap_err() {
        LoadError::Expression { line, key, .. } => assert_eq!((line, key.as_str()), (5, "v2")),
        other => panic!("unexpected {other}"),
    }
}
