//! Plain-text model files.
//!
//! ```text
//! [model]
//! name = "euler_top"
//! [params]
//! I1 = 1
//! [field]
//! v1 = "(I2-I3)/(I2*I3)*x2*x3"
//! v2 = "..."
//! v3 = "..."
//! [invariants]
//! H = "..."
//! [domain]
//! box = 0.1:2,0.1:2,0.1:2
//! seed = 7
//! samples = 500
//! sing_tol = 0.001
//! ```
//!
//! `#` starts a comment outside quoted strings. Unknown sections or keys are
//! errors. Expressions may only reference parameters declared in `[params]`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use indexmap::IndexMap;

use super::{Model3D, SampleBox, DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_SING_TOL};
use crate::expr::{parse_with_params, Expr, Params, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: unknown key `{key}` in section `[{section}]`")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("missing required entry `{0}`")]
    Missing(String),
    #[error("line {line}: in `{key}`: {source}")]
    Expression { line: usize, key: String, source: ParseError },
    #[error("line {line}: invalid model: {msg}")]
    Invalid { line: usize, msg: String },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Model,
    Params,
    Field,
    Invariants,
    Domain,
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn unquote(value: &str, line: usize) -> Result<String, LoadError> {
    let v = value.trim();
    if v.len() >= 2 && v.starts_with('"') && v.ends_with('"') {
        Ok(v[1..v.len() - 1].to_string())
    } else {
        Err(LoadError::Syntax { line, msg: format!("expected a quoted string, found `{v}`") })
    }
}

fn parse_real(value: &str, line: usize) -> Result<f64, LoadError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| LoadError::Syntax { line, msg: format!("expected a real number, found `{}`", value.trim()) })
}

fn parse_box(value: &str, line: usize) -> Result<([f64; 3], [f64; 3]), LoadError> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 3 {
        return Err(LoadError::Syntax { line, msg: "box needs three `lo:hi` ranges".into() });
    }
    let mut lo = [0.0; 3];
    let mut hi = [0.0; 3];
    for (k, part) in parts.iter().enumerate() {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| LoadError::Syntax { line, msg: format!("range `{}` is not `lo:hi`", part.trim()) })?;
        lo[k] = parse_real(a, line)?;
        hi[k] = parse_real(b, line)?;
    }
    Ok((lo, hi))
}

fn is_identifier(key: &str) -> bool {
    let mut chars = key.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses model file text.
pub fn parse_model(text: &str) -> Result<Model3D, LoadError> {
    let mut section: Option<Section> = None;
    let mut name: Option<String> = None;
    let mut params = Params::new();
    let mut field: [Option<(usize, String)>; 3] = [None, None, None];
    let mut invariants: IndexMap<String, (usize, String)> = IndexMap::new();
    let mut bounds: Option<([f64; 3], [f64; 3], usize)> = None;
    let (mut seed, mut samples, mut sing_tol) = (None, None, None);
    let mut seen = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = strip_comment(raw).trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let header = inner
                .strip_suffix(']')
                .ok_or_else(|| LoadError::Syntax { line, msg: "unterminated section header".into() })?
                .trim();
            section = Some(match header {
                "model" => Section::Model,
                "params" => Section::Params,
                "field" => Section::Field,
                "invariants" => Section::Invariants,
                "domain" => Section::Domain,
                other => return Err(LoadError::UnknownSection { line, name: other.into() }),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| LoadError::Syntax { line, msg: "expected `key = value`".into() })?;
        let key = key.trim();
        let sect = section.ok_or_else(|| LoadError::Syntax { line, msg: "entry before any section header".into() })?;
        let section_name = match sect {
            Section::Model => "model",
            Section::Params => "params",
            Section::Field => "field",
            Section::Invariants => "invariants",
            Section::Domain => "domain",
        };
        if !seen.insert((section_name, key.to_string())) {
            return Err(LoadError::Duplicate { line, key: key.into() });
        }
        let unknown = || LoadError::UnknownKey { line, section: section_name.into(), key: key.into() };
        match sect {
            Section::Model => match key {
                "name" => name = Some(unquote(value, line)?),
                _ => return Err(unknown()),
            },
            Section::Params => {
                if !is_identifier(key) || key == "t" || crate::expr::parse(key).map(|e| e.has_vars()).unwrap_or(true) {
                    return Err(LoadError::Syntax { line, msg: format!("`{key}` is not a valid parameter name") });
                }
                params.insert(key.to_string(), parse_real(value, line)?);
            }
            Section::Field => {
                let k = match key {
                    "v1" => 0,
                    "v2" => 1,
                    "v3" => 2,
                    _ => return Err(unknown()),
                };
                field[k] = Some((line, unquote(value, line)?));
            }
            Section::Invariants => {
                if !is_identifier(key) {
                    return Err(LoadError::Syntax { line, msg: format!("`{key}` is not a valid invariant name") });
                }
                invariants.insert(key.to_string(), (line, unquote(value, line)?));
            }
            Section::Domain => match key {
                "box" => {
                    let (lo, hi) = parse_box(value, line)?;
                    bounds = Some((lo, hi, line));
                }
                "seed" => {
                    seed = Some(value.trim().parse::<u64>().map_err(|_| LoadError::Syntax {
                        line,
                        msg: format!("seed must be a non-negative integer, found `{}`", value.trim()),
                    })?)
                }
                "samples" => {
                    samples = Some(value.trim().parse::<usize>().map_err(|_| LoadError::Syntax {
                        line,
                        msg: format!("samples must be a positive integer, found `{}`", value.trim()),
                    })?)
                }
                "sing_tol" => sing_tol = Some(parse_real(value, line)?),
                _ => return Err(unknown()),
            },
        }
    }

    let name = name.ok_or_else(|| LoadError::Missing("[model] name".into()))?;
    let scope: BTreeSet<String> = params.keys().cloned().collect();
    let expr = |line: usize, key: &str, text: &str| -> Result<Expr, LoadError> {
        parse_with_params(text, &scope).map_err(|source| LoadError::Expression { line, key: key.into(), source })
    };
    let mut v = Vec::with_capacity(3);
    for (k, entry) in field.iter().enumerate() {
        let key = format!("v{}", k + 1);
        let (line, text) = entry.as_ref().ok_or_else(|| LoadError::Missing(format!("[field] {key}")))?;
        v.push(expr(*line, &key, text)?);
    }
    let (lo, hi, box_line) = bounds.ok_or_else(|| LoadError::Missing("[domain] box".into()))?;
    let domain = SampleBox {
        lower: lo,
        upper: hi,
        sing_tol: sing_tol.unwrap_or(DEFAULT_SING_TOL),
        samples: samples.unwrap_or(DEFAULT_SAMPLES),
        seed: seed.unwrap_or(DEFAULT_SEED),
    };
    domain.validate().map_err(|e| LoadError::Invalid { line: box_line, msg: e.to_string() })?;
    let v: [Expr; 3] = v.try_into().expect("three field components");
    let mut model = Model3D::new(name, v, params, domain).map_err(|e| LoadError::Invalid { line: 0, msg: e.to_string() })?;
    for (key, (line, text)) in &invariants {
        model.invariants.insert(key.clone(), expr(*line, key, text)?);
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<Model3D, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| LoadError::Io { path: path.display().to_string(), source })?;
    parse_model(&text)
}

/// Renders a model in the file format accepted by [`parse_model`].
pub fn to_model_file(m: &Model3D) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[model]\nname = \"{}\"", m.name);
    if !m.params.is_empty() {
        out.push_str("\n[params]\n");
        for (k, v) in &m.params {
            let _ = writeln!(out, "{k} = {v}");
        }
    }
    out.push_str("\n[field]\n");
    for (k, c) in m.v.iter().enumerate() {
        let _ = writeln!(out, "v{} = \"{c}\"", k + 1);
    }
    if !m.invariants.is_empty() {
        out.push_str("\n[invariants]\n");
        for (k, e) in &m.invariants {
            let _ = writeln!(out, "{k} = \"{e}\"");
        }
    }
    let d = &m.domain;
    let _ = writeln!(
        out,
        "\n[domain]\nbox = {}:{},{}:{},{}:{}\nseed = {}\nsamples = {}\nsing_tol = {}",
        d.lower[0], d.upper[0], d.lower[1], d.upper[1], d.lower[2], d.upper[2], d.seed, d.samples, d.sing_tol
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = r#"
# a rigid rotation about x3
[model]
name = "rotation"   # trailing comment
[params]
w = 2
[field]
v1 = "w*x2"
v2 = "-w*x1  # inline expression comment"
v3 = "0"
[invariants]
R = "x1^2 + x2^2"
Z = "x3"
[domain]
box = -1:1,-1:1,0.5:2
seed = 11
samples = 64
"#;

    #[test]
    fn loads_all_sections() {
        let m = parse_model(ROTATION).unwrap();
        assert_eq!(m.name, "rotation");
        assert_eq!(m.params["w"], 2.0);
        assert_eq!(m.v[1].to_string(), "-w*x1");
        assert_eq!(m.invariants.keys().collect::<Vec<_>>(), ["R", "Z"]);
        assert_eq!(m.domain.lower, [-1.0, -1.0, 0.5]);
        assert_eq!(m.domain.seed, 11);
        assert_eq!(m.domain.samples, 64);
        assert_eq!(m.domain.sing_tol, DEFAULT_SING_TOL);
    }

    #[test]
    fn writer_output_reloads() {
        let m = parse_model(ROTATION).unwrap();
        let again = parse_model(&to_model_file(&m)).unwrap();
        assert_eq!(again.name, m.name);
        assert_eq!(again.params, m.params);
        assert_eq!(again.domain, m.domain);
        for k in 0..3 {
            assert_eq!(again.v[k], m.v[k]);
        }
    }

    #[test]
    fn unknown_keys_and_sections_fail() {
        let bad = ROTATION.replace("seed = 11", "seeds = 11");
        assert!(matches!(parse_model(&bad), Err(LoadError::UnknownKey { key, .. }) if key == "seeds"));
        let bad = ROTATION.replace("[domain]", "[region]");
        assert!(matches!(parse_model(&bad), Err(LoadError::UnknownSection { .. })));
        let bad = ROTATION.replace("v3 = \"0\"", "v4 = \"0\"");
        assert!(matches!(parse_model(&bad), Err(LoadError::UnknownKey { .. })));
    }

    #[test]
    fn expressions_are_scoped_to_declared_params() {
        let bad = ROTATION.replace("w*x2", "k*x2");
        match parse_model(&bad) {
            Err(LoadError::Expression { line, key, .. }) => {
                assert_eq!(key, "v1");
                assert_eq!(line, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad = ROTATION.replace("w*x2", "w*x2*t");
        assert!(matches!(parse_model(&bad), Err(LoadError::Expression { .. })));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(parse_model(&ROTATION.replace("v3 = \"0\"", "")), Err(LoadError::Missing(_))));
        assert!(matches!(parse_model(&ROTATION.replace("w = 2", "w = two")), Err(LoadError::Syntax { .. })));
        assert!(matches!(parse_model(&ROTATION.replace("0.5:2", "2:0.5")), Err(LoadError::Invalid { .. })));
        assert!(matches!(parse_model(&format!("{ROTATION}\nseed = 3")), Err(LoadError::Duplicate { .. })));
        assert!(matches!(
            load_model(Path::new("/nonexistent/missing.p3")),
            Err(LoadError::Io { .. })
        ));
    }
}
