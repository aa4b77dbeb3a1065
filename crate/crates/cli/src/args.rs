use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use poisson3d::solve::Anchor;
use poisson3d::{Point, SampleBox};

#[derive(Debug, Parser)]
#[command(name = "poisson3d", version, about = "Construct and certify Poisson structures of 3D dynamical systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the coefficients A, B of the PDE v·∇J = A J + B.
    Ab(Common),
    /// Run the residual suite for a given J.
    Certify(CertifyArgs),
    /// Find J by a shortcut, along characteristics, or by polynomial collocation.
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["catalog", "model"])))]
pub struct Common {
    /// Built-in model (ice_skate, euler_top, lv_fixture, lv_fixture_eps).
    #[arg(long)]
    pub catalog: Option<String>,
    /// Model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Hamiltonian: an invariant name from the model, or an expression.
    #[arg(long)]
    pub invariant: String,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// Sampling box, either `LO:HI` for a cube or `LO:HI,LO:HI,LO:HI`.
    #[arg(long = "box", value_name = "BOX", value_parser = parse_bounds)]
    pub bounds: Option<(Point, Point)>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Singularity exclusion distance for sampling.
    #[arg(long)]
    pub sing_tol: Option<f64>,
    /// Residual tolerance for every check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Axis permutation: 123, 231 or 312 (default: automatic).
    #[arg(long, value_parser = parse_perm)]
    pub perm: Option<poisson3d::AxisPermutation>,
    /// Emit a JSON report.
    #[arg(long)]
    pub json: bool,
    /// Write the primary output to a file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// The (1,2) entry of the structure matrix.
    #[arg(long = "J", value_name = "EXPR", allow_hyphen_values = true)]
    pub j: String,
    /// Casimir: an invariant name from the model, or an expression.
    #[arg(long, allow_hyphen_values = true)]
    pub casimir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Shortcuts,
    Characteristics,
    Ansatz,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Casimir: an invariant name from the model, or an expression.
    #[arg(long, allow_hyphen_values = true)]
    pub casimir: Option<String>,
    /// Shortcut candidate F(H, C), written in H and C.
    #[arg(long = "f", value_name = "EXPR", allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Initial point for characteristics.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x0: Option<Point>,
    /// Initial value of J for characteristics.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub j0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Total polynomial degree of the ansatz.
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Pin J at a point, `X1,X2,X3:VALUE`.
    #[arg(long, value_parser = parse_anchor, allow_hyphen_values = true)]
    pub anchor: Option<Anchor>,
    /// Extra ansatz basis function, repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub extra: Vec<String>,
}

fn parse_f64(text: &str) -> Result<f64, String> {
    text.trim().parse::<f64>().map_err(|_| format!("`{text}` is not a number"))
}

pub fn parse_point(text: &str) -> Result<Point, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got `{text}`"));
    }
    let mut p = [0.0; 3];
    for (slot, part) in p.iter_mut().zip(parts) {
        *slot = parse_f64(part)?;
    }
    Ok(p)
}

fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{text}`"))?;
    Ok((name.trim().to_string(), parse_f64(value)?))
}

fn parse_interval(text: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = text.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{text}`"))?;
    Ok((parse_f64(lo)?, parse_f64(hi)?))
}

fn parse_bounds(text: &str) -> Result<(Point, Point), String> {
    let parts: Vec<&str> = text.split(',').collect();
    let intervals = match parts.len() {
        1 => vec![parse_interval(parts[0])?; 3],
        3 => parts.iter().map(|p| parse_interval(p)).collect::<Result<_, _>>()?,
        _ => return Err(format!("expected LO:HI or three LO:HI intervals, got `{text}`")),
    };
    let lower = [intervals[0].0, intervals[1].0, intervals[2].0];
    let upper = [intervals[0].1, intervals[1].1, intervals[2].1];
    SampleBox::new(lower, upper).map_err(|e| e.to_string())?;
    Ok((lower, upper))
}

fn parse_perm(text: &str) -> Result<poisson3d::AxisPermutation, String> {
    poisson3d::AxisPermutation::parse(text).ok_or_else(|| format!("unknown permutation `{text}` (use 123, 231 or 312)"))
}

fn parse_anchor(text: &str) -> Result<Anchor, String> {
    let (point, value) = text.rsplit_once(':').ok_or_else(|| format!("expected X1,X2,X3:VALUE, got `{text}`"))?;
    Ok(Anchor { point: parse_point(point)?, value: parse_f64(value)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(parse_point("0,0,1").unwrap(), [0.0, 0.0, 1.0]);
        assert!(parse_point("0,1").is_err());
        assert_eq!(parse_param("a=2.5").unwrap(), ("a".to_string(), 2.5));
        assert_eq!(parse_bounds("0.1:2").unwrap(), ([0.1; 3], [2.0; 3]));
        assert_eq!(parse_bounds("-1:1,-2:2,0.1:2").unwrap(), ([-1.0, -2.0, 0.1], [1.0, 2.0, 2.0]));
        assert!(parse_bounds("2:1").is_err());
        let a = parse_anchor("1,1,1:-1").unwrap();
        assert_eq!((a.point, a.value), ([1.0; 3], -1.0));
        assert_eq!(parse_perm("231").unwrap(), poisson3d::AxisPermutation::Cycle231);
    }
}
