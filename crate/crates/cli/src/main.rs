//! Convergence-study driver for the space-time dG-IgA heat solver.
//!
//! Runs h-refinement sweeps over one or more B-spline degrees on a built-in
//! benchmark case or a user-supplied multi-patch geometry file, and writes a
//! CSV or JSON error table with convergence rates.

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use stiga::study::{run_study, write_configured, CaseSpec, OutputFormat, StudyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Space-time multi-patch dG-IgA convergence studies for the heat equation.
#[derive(Debug, Parser)]
#[command(name = "stiga", version, about)]
struct Args {
    /// Built-in case: unit-box, moving-2d or moving-3d.
    #[arg(long, conflicts_with = "geometry")]
    case: Option<String>,

    /// Multi-patch geometry file (JSON: patches with degrees, knots,
    /// control_points); solved with the built-in manufactured solution.
    #[arg(long)]
    geometry: Option<PathBuf>,

    /// Comma-separated B-spline degrees, e.g. 1,2,3.
    #[arg(long, default_value = "2", value_delimiter = ',')]
    degrees: Vec<usize>,

    /// Number of uniform refinement levels (runs levels 1..=N).
    #[arg(long, default_value_t = 4)]
    levels: usize,

    /// Time-upwind stabilization parameter.
    #[arg(long, default_value_t = 0.1)]
    theta: f64,

    /// Penalty override; defaults to the rule 2(p+d+1)(p+1).
    #[arg(long)]
    delta1: Option<f64>,

    /// Penalty override; defaults to the rule 2(p+d+1)(p+1).
    #[arg(long)]
    delta2: Option<f64>,

    /// Quadrature points per direction; defaults to degree+1.
    #[arg(long)]
    quad: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let case = match (&args.case, &args.geometry) {
        (Some(name), None) => CaseSpec::Builtin(name.clone()),
        (None, Some(path)) => CaseSpec::GeometryFile(path.clone()),
        (None, None) => bail!("one of --case or --geometry is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
    };
    let cfg = StudyConfig {
        case,
        degrees: args.degrees.clone(),
        levels: args.levels,
        theta: args.theta,
        delta1: args.delta1,
        delta2: args.delta2,
        quad: args.quad,
        out: args.out.clone(),
        format: match args.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
    };
    let table = run_study(&cfg).context("study failed")?;
    write_configured(&table, &cfg).context("writing output")?;
    Ok(())
}
