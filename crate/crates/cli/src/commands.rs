use std::collections::BTreeSet;
use std::fmt::Write as _;

use poisson3d::catalog::{by_name, CATALOG_NAMES};
use poisson3d::expr::parse_with_params;
use poisson3d::model::file::load_model;
use poisson3d::model::preferred_axis;
use poisson3d::solve::{
    integrate_characteristics, particular_solution_shortcuts, solve_ansatz, trajectory_csv, AnsatzOptions,
    AnsatzSolution, CharacteristicRun,
};
use poisson3d::structure::{compute_ab, InvariantFunction};
use poisson3d::verify::{expr_deviation, full_certify, Normalization, EXACT_TOL, NUMERIC_TOL};
use poisson3d::{AxisPermutation, Certification, Expr, Model3D, Params, Point, ResidualReport, SampleBox};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{CertifyArgs, Command, Common, Method, SolveArgs};
use crate::error::CliError;

type Outcome = Result<bool, CliError>;

/// Runs one subcommand; `Ok(false)` means a check failed.
pub fn run(command: Command) -> Outcome {
    match command {
        Command::Ab(c) => ab(&c),
        Command::Certify(a) => certify(&a),
        Command::Solve(a) => solve(&a),
    }
}

/// Everything that determines the result of a run.
#[derive(Debug, Serialize)]
struct RunConfig {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model_file: Option<String>,
    invariant: String,
    hamiltonian: String,
    params: Params,
    domain: SampleBox,
    tolerance: f64,
    perm: String,
    perm_auto: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    j: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    casimir: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x0: Option<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    j0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    degree: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anchor: Option<Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    extra: Vec<String>,
}

/// Model, Hamiltonian and axis choice shared by every subcommand.
struct Setup {
    model: Model3D,
    h: Expr,
    perm: AxisPermutation,
    config: RunConfig,
}

impl Setup {
    fn new(command: &'static str, c: &Common, default_tol: f64) -> Result<Setup, CliError> {
        let model = load(c)?;
        let h = resolve(&model, &c.invariant)?;
        let (perm, perm_auto) = match c.perm {
            Some(p) => (p, false),
            None => (preferred_axis(&model, &h, &model.domain)?, true),
        };
        let config = RunConfig {
            command,
            catalog: c.catalog.clone(),
            model_file: c.model.as_ref().map(|p| p.display().to_string()),
            invariant: c.invariant.clone(),
            hamiltonian: h.to_string(),
            params: model.params.clone(),
            domain: model.domain.clone(),
            tolerance: c.tol.unwrap_or(default_tol),
            perm: perm.to_string(),
            perm_auto,
            j: None,
            casimir: None,
            method: None,
            f: None,
            x0: None,
            j0: None,
            horizon: None,
            step: None,
            degree: None,
            anchor: None,
            extra: Vec::new(),
        };
        Ok(Setup { model, h, perm, config })
    }

    fn tol(&self) -> f64 {
        self.config.tolerance
    }

    fn scope(&self) -> BTreeSet<String> {
        self.model.params.keys().cloned().collect()
    }

    fn parse(&self, text: &str) -> Result<Expr, CliError> {
        Ok(parse_with_params(text, &self.scope())?)
    }

    fn casimir(&mut self, text: Option<&str>) -> Result<Option<Expr>, CliError> {
        let c = text.map(|t| resolve(&self.model, t)).transpose()?;
        self.config.casimir = c.as_ref().map(Expr::to_string);
        Ok(c)
    }

    fn header(&self) -> String {
        format!("# config: {}\n", serde_json::to_string(&self.config).expect("config serializes"))
    }

    fn json(&self, reports: &[ResidualReport], result: Value, passed: bool) -> String {
        let doc = json!({
            "command": self.config.command,
            "model": self.model.name,
            "config": self.config,
            "reports": reports,
            "result": result,
            "passed": passed,
        });
        let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
        out.push('\n');
        out
    }
}

fn load(c: &Common) -> Result<Model3D, CliError> {
    let mut m = match (&c.catalog, &c.model) {
        (Some(name), _) => {
            if !CATALOG_NAMES.contains(&name.as_str()) {
                return Err(CliError::Input(format!(
                    "unknown catalog model `{name}` (known: {})",
                    CATALOG_NAMES.join(", ")
                )));
            }
            by_name(name)?
        }
        (None, Some(path)) => load_model(path)?,
        (None, None) => return Err(CliError::Input("one of --catalog or --model is required".into())),
    };
    for (name, value) in &c.params {
        match m.params.get_mut(name) {
            Some(slot) => *slot = *value,
            None => {
                let known: Vec<&str> = m.params.keys().map(String::as_str).collect();
                return Err(CliError::Input(format!(
                    "model `{}` has no parameter `{name}` (known: {})",
                    m.name,
                    known.join(", ")
                )));
            }
        }
    }
    let mut domain = m.domain.clone();
    if let Some((lower, upper)) = c.bounds {
        domain.lower = lower;
        domain.upper = upper;
    }
    if let Some(n) = c.samples {
        domain.samples = n;
    }
    if let Some(seed) = c.seed {
        domain.seed = seed;
    }
    if let Some(tol) = c.sing_tol {
        domain.sing_tol = tol;
    }
    domain.validate()?;
    Ok(m.with_domain(domain))
}

/// A model invariant by name, otherwise an expression in the model's
/// parameters.
fn resolve(m: &Model3D, text: &str) -> Result<Expr, CliError> {
    if let Some(e) = m.invariants.get(text) {
        return Ok(e.clone());
    }
    let identifier = text.chars().all(|c| c.is_alphanumeric() || c == '_');
    let variable = matches!(text, "x1" | "x2" | "x3");
    if identifier && !variable && !m.params.contains_key(text) && !text.starts_with(|c: char| c.is_ascii_digit()) {
        m.invariant(text)?;
    }
    let scope: BTreeSet<String> = m.params.keys().cloned().collect();
    Ok(parse_with_params(text, &scope)?)
}

fn emit(c: &Common, text: &str) -> Result<(), CliError> {
    match &c.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|source| CliError::Write { path: path.display().to_string(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table(reports: &[ResidualReport]) -> String {
    let mut out = ResidualReport::table_header();
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{r}");
    }
    out
}

fn verdict(reports: &[ResidualReport]) -> String {
    let failing: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    if failing.is_empty() {
        let n = reports.len();
        format!("result: PASS ({n} check{})\n", if n == 1 { "" } else { "s" })
    } else {
        format!("result: FAIL (failing: {})\n", failing.join(", "))
    }
}

fn axes_line(perm: AxisPermutation) -> String {
    format!("axes: {perm} (divides by d{}H)\n", perm.axis(3))
}

fn ab(c: &Common) -> Outcome {
    let s = Setup::new("ab", c, EXACT_TOL)?;
    let ab = compute_ab(&s.model, &s.h, s.perm)?;
    let (a_expr, b_expr) = (ab.a.canonical(), ab.b.canonical());
    let vanishes = |e: &Expr, name: &str| -> Result<bool, CliError> {
        Ok(e.is_zero() || expr_deviation(name, e, &Expr::zero(), &s.model.params, &s.model.domain, s.tol())?.pass)
    };
    let a_zero = vanishes(&a_expr, "a_vanishes")?;
    let b_zero = vanishes(&b_expr, "b_vanishes")?;
    let out = if c.json {
        let result = json!({
            "A": a_expr.to_string(),
            "B": b_expr.to_string(),
            "perm": s.perm.to_string(),
            "a_vanishes": a_zero,
            "b_vanishes": b_zero,
        });
        s.json(&[], result, true)
    } else {
        let mut out = s.header();
        let _ = writeln!(out, "A = {a_expr}, B = {b_expr}");
        out.push_str(&axes_line(s.perm));
        let n = s.model.domain.samples;
        if a_zero && !a_expr.is_zero() {
            let _ = writeln!(out, "note: A vanishes on all {n} samples");
        }
        if b_zero && !b_expr.is_zero() {
            let _ = writeln!(out, "note: B vanishes on all {n} samples");
        }
        if b_zero {
            out.push_str("note: B = 0, so J = 0 solves the PDE\n");
        }
        out
    };
    emit(c, &out)?;
    Ok(true)
}

fn certification_text(s: &Setup, j: &Expr, cert: &Certification) -> String {
    let mut out = s.header();
    let _ = writeln!(out, "J = {j}");
    out.push_str(&axes_line(cert.perm));
    out.push_str(&table(&cert.reports));
    out.push_str(&verdict(&cert.reports));
    out
}

fn certify(a: &CertifyArgs) -> Outcome {
    let mut s = Setup::new("certify", &a.common, EXACT_TOL)?;
    let j = s.parse(&a.j)?;
    s.config.j = Some(j.to_string());
    let casimir = s.casimir(a.casimir.as_deref())?;
    let cert = full_certify(&s.model, &s.h, &j, casimir.as_ref(), Some(s.perm), s.tol())?;
    let out = if a.common.json {
        s.json(&cert.reports, json!({ "J": j.to_string(), "perm": cert.perm.to_string() }), cert.passed)
    } else {
        certification_text(&s, &j, &cert)
    };
    emit(&a.common, &out)?;
    Ok(cert.passed)
}

fn solve(a: &SolveArgs) -> Outcome {
    let default_tol = match a.method {
        Method::Shortcuts => EXACT_TOL,
        Method::Characteristics | Method::Ansatz => NUMERIC_TOL,
    };
    let mut s = Setup::new("solve", &a.common, default_tol)?;
    s.config.method = Some(a.method);
    let casimir = s.casimir(a.casimir.as_deref())?;
    match a.method {
        Method::Shortcuts => shortcuts(a, s, casimir),
        Method::Characteristics => characteristics(a, s, casimir),
        Method::Ansatz => ansatz(a, s, casimir),
    }
}

fn shortcuts(a: &SolveArgs, mut s: Setup, casimir: Option<Expr>) -> Outcome {
    let f = a.f.as_deref().map(InvariantFunction::parse).transpose()?;
    s.config.f = f.as_ref().map(InvariantFunction::to_string);
    let ab = compute_ab(&s.model, &s.h, s.perm)?;
    let found = particular_solution_shortcuts(&s.model, &ab, &s.h, casimir.as_ref(), f.as_ref())?;
    let Some(shortcut) = found else {
        let reason = match &f {
            Some(f) => format!("B does not vanish and B + ({f})*A does not vanish"),
            None => "B does not vanish (try --f)".to_string(),
        };
        let out = if a.common.json {
            s.json(&[], json!({ "shortcut": Value::Null, "reason": reason }), false)
        } else {
            format!("{}no shortcut applies: {reason}\n", s.header())
        };
        emit(&a.common, &out)?;
        return Ok(false);
    };
    let cert = full_certify(&s.model, &s.h, &shortcut.j, casimir.as_ref(), Some(s.perm), s.tol())?;
    let out = if a.common.json {
        let result = json!({ "shortcut": shortcut.kind, "J": shortcut.j.to_string(), "perm": cert.perm.to_string() });
        s.json(&cert.reports, result, cert.passed)
    } else {
        let mut out = certification_text(&s, &shortcut.j, &cert);
        let kind = serde_json::to_value(shortcut.kind).expect("kind serializes");
        let _ = writeln!(out, "shortcut: {}", kind.as_str().unwrap_or_default());
        out
    };
    emit(&a.common, &out)?;
    Ok(cert.passed)
}

/// `|I(x_k) − I(x_0)|` along a run, relative to `1 + |I(x_0)| + ‖x_k‖·‖∇I(x_k)‖`
/// so that states where `I` is ill-conditioned are not over-weighted.
fn drift_report(name: &str, e: &Expr, params: &Params, xs: &[Point], tol: f64) -> Result<ResidualReport, CliError> {
    let bound = e.bind(params);
    let grad = bound.gradient();
    let none = Params::new();
    let eval = |f: &Expr, p: &Point| f.eval(p, &none).map_err(poisson3d::Error::from);
    let initial = eval(&bound, &xs[0])?;
    let (mut max, mut sum, mut argmax) = (0.0f64, 0.0, xs[0]);
    for p in xs {
        let g = grad.iter().map(|d| eval(d, p).map(|v| v * v)).sum::<Result<f64, _>>()?.sqrt();
        let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        let d = (eval(&bound, p)? - initial).abs() / (1.0 + initial.abs() + norm * g);
        sum += d;
        if d > max {
            max = d;
            argmax = *p;
        }
    }
    Ok(ResidualReport {
        check: format!("drift:{name}"),
        samples: xs.len(),
        max,
        mean: sum / xs.len() as f64,
        argmax,
        pass: max <= tol,
        tolerance: tol,
        normalization: Normalization::AdditiveTerms,
    })
}

fn column_name(text: &str, m: &Model3D, fallback: &str) -> String {
    if m.invariants.contains_key(text) { text.to_string() } else { fallback.to_string() }
}

fn step_error_report(run: &CharacteristicRun, tol: f64) -> ResidualReport {
    let (mut max, mut argmax) = (0.0f64, run.x0);
    for (k, &e) in run.step_errors.iter().enumerate() {
        if e > max {
            max = e;
            argmax = run.x[k];
        }
    }
    let n = run.step_errors.len();
    ResidualReport {
        check: "step_error".to_string(),
        samples: n,
        max,
        mean: run.step_errors.iter().sum::<f64>() / n.max(1) as f64,
        argmax,
        pass: max <= tol,
        tolerance: tol,
        normalization: Normalization::Absolute,
    }
}

fn characteristics(a: &SolveArgs, mut s: Setup, casimir: Option<Expr>) -> Outcome {
    let x0 = a.x0.ok_or_else(|| CliError::Input("--method characteristics requires --x0".into()))?;
    s.config.x0 = Some(x0);
    s.config.j0 = Some(a.j0);
    s.config.horizon = Some(a.horizon);
    s.config.step = Some(a.step);
    let ab = compute_ab(&s.model, &s.h, s.perm)?;
    let run = integrate_characteristics(&s.model, &ab, x0, a.j0, a.horizon, a.step)?;
    let mut monitored = vec![(column_name(&a.common.invariant, &s.model, "H"), s.h.clone())];
    if let (Some(c), Some(text)) = (&casimir, &a.casimir) {
        monitored.push((column_name(text, &s.model, "C"), c.clone()));
    }
    let reports = vec![step_error_report(&run, s.tol())];
    // invariants may be ill-conditioned along the run (e.g. where all level
    // sets meet), so their drift is reported without entering the verdict
    let diagnostics = monitored
        .iter()
        .map(|(name, e)| drift_report(name, e, &s.model.params, &run.x, s.tol()))
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.pass);
    let (x_end, j_end) = run.final_state();
    if a.common.json {
        let result = json!({
            "perm": s.perm.to_string(),
            "steps": run.steps,
            "max_step_error": run.max_step_error,
            "diagnostics": diagnostics,
            "final": { "t": run.t.last(), "x": x_end, "J": j_end },
            "trajectory": { "t": run.t, "x": run.x, "J": run.j },
        });
        emit(&a.common, &s.json(&reports, result, passed))?;
    } else {
        let csv = trajectory_csv(&run.t, &run.x, Some(&run.j), &monitored, &s.model.params)?;
        emit(&a.common, &csv)?;
        let mut out = s.header();
        out.push_str(&axes_line(s.perm));
        let _ = writeln!(
            out,
            "steps: {}, final J = {j_end:e} at ({:e}, {:e}, {:e})",
            run.steps, x_end[0], x_end[1], x_end[2]
        );
        out.push_str(&table(&reports));
        out.push_str("diagnostics (not part of the verdict):\n");
        for d in &diagnostics {
            let _ = writeln!(out, "{d}");
        }
        out.push_str(&verdict(&reports));
        eprint!("{out}");
    }
    Ok(passed)
}

/// Coefficients rounded for display; terms below `1e-10` of the largest
/// coefficient are dropped.
fn rounded(sol: &AnsatzSolution) -> String {
    let top = sol.coefficients.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut out = String::new();
    for (phi, &c) in sol.basis.iter().zip(&sol.coefficients) {
        if c.abs() <= 1e-10 * top || c == 0.0 {
            continue;
        }
        let mag = c.abs();
        let num = if (1e-3..1e6).contains(&mag) { format!("{mag:.6}") } else { format!("{mag:.6e}") };
        let sign = if c < 0.0 { "-" } else { "+" };
        if out.is_empty() {
            if c < 0.0 {
                out.push('-');
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if phi.is_one() {
            out.push_str(&num);
        } else {
            let _ = write!(out, "{num}*{phi}");
        }
    }
    if out.is_empty() { "0".to_string() } else { out }
}

fn ansatz(a: &SolveArgs, mut s: Setup, casimir: Option<Expr>) -> Outcome {
    let extra = a.extra.iter().map(|t| s.parse(t)).collect::<Result<Vec<_>, _>>()?;
    s.config.degree = Some(a.degree);
    s.config.anchor = a.anchor.map(|an| json!({ "point": an.point, "value": an.value }));
    s.config.extra = extra.iter().map(Expr::to_string).collect();
    let ab = compute_ab(&s.model, &s.h, s.perm)?;
    let opts = AnsatzOptions { extra, anchor: a.anchor, casimir, tolerance: s.tol() };
    let sol = solve_ansatz(&s.model, &ab, a.degree, &s.model.domain, &opts)?;
    let reports = &sol.certification.reports;
    let passed = sol.passed();
    let family = sol.rank < sol.basis.len();
    let out = if a.common.json {
        let coefficients: Vec<Value> = sol
            .basis
            .iter()
            .zip(&sol.coefficients)
            .map(|(phi, c)| json!({ "term": phi.to_string(), "value": c }))
            .collect();
        let result = json!({
            "J": sol.j.to_string(),
            "J_rounded": rounded(&sol),
            "perm": sol.certification.perm.to_string(),
            "degree": sol.degree,
            "basis_size": sol.basis.len(),
            "rank": sol.rank,
            "collocation_points": sol.collocation_points,
            "residual_max": sol.residual_max,
            "residual_rms": sol.residual_rms,
            "coefficients": coefficients,
        });
        s.json(reports, result, passed)
    } else {
        let mut out = s.header();
        let _ = writeln!(out, "J = {}", rounded(&sol));
        out.push_str(&axes_line(sol.certification.perm));
        let _ = writeln!(
            out,
            "basis: {} functions, rank {}, {} collocation points, residual max {:.3e}, rms {:.3e}",
            sol.basis.len(),
            sol.rank,
            sol.collocation_points,
            sol.residual_max,
            sol.residual_rms
        );
        if family && a.anchor.is_none() && s.config.casimir.is_none() {
            out.push_str("note: the collocation system is rank-deficient; J is one member of a family (select one with --anchor or --casimir)\n");
        }
        for (phi, c) in sol.basis.iter().zip(&sol.coefficients) {
            let _ = writeln!(out, "  {:>12}  {c:+.15e}", phi.to_string());
        }
        out.push_str(&table(reports));
        out.push_str(&verdict(reports));
        out
    };
    emit(&a.common, &out)?;
    Ok(passed)
}
