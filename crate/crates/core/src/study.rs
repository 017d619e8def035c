//! Convergence-study driver: sweeps refinement levels and degrees, solves
//! each discrete system, and tabulates dG and L2 errors with rates.
//!
//! Output is deterministic: numbers are printed with 12 significant digits so
//! rates can be recomputed from the files alone.

use crate::analysis::{convergence_rates, dg_error, l2_error, ErrorReport};
use crate::assembly::{assemble_system, default_penalties, DGParameters};
use crate::cases::{self, ManufacturedProblem};
use crate::geometry::{build_multipatch, geometry_from_json, MultiPatchDomain, Patch};
use crate::solve::solve;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::PathBuf;

/// What to run the study on: a built-in case or a geometry file.
#[derive(Debug, Clone)]
pub enum CaseSpec {
    Builtin(String),
    GeometryFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Study configuration. Degrees are restricted to 1..=4; levels run from 1 to
/// `levels` inclusive.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub case: CaseSpec,
    pub degrees: Vec<usize>,
    pub levels: usize,
    pub theta: f64,
    /// Penalty overrides; `None` uses 2(p+d+1)(p+1).
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    /// Quadrature points per direction; `None` uses degree+1.
    pub quad: Option<usize>,
    /// Output file; stdout when `None`.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl StudyConfig {
    pub fn new(case: CaseSpec, degrees: Vec<usize>, levels: usize) -> Self {
        Self {
            case,
            degrees,
            levels,
            theta: 0.1,
            delta1: None,
            delta2: None,
            quad: None,
            out: None,
            format: OutputFormat::Csv,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.degrees.is_empty() {
            return Err(Error::Config("no degrees requested".into()));
        }
        if let Some(&p) = self.degrees.iter().find(|&&p| !(1..=4).contains(&p)) {
            return Err(Error::Config(format!(
                "degree {p} outside the supported range 1..=4"
            )));
        }
        if self.levels < 1 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.theta <= 0.0 {
            return Err(Error::Config("theta must be positive".into()));
        }
        if self.delta1.is_some_and(|v| v <= 0.0) || self.delta2.is_some_and(|v| v <= 0.0) {
            return Err(Error::Config("penalty parameters must be positive".into()));
        }
        Ok(())
    }
}

/// One study row; rate fields are empty on each degree's first level.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StudyRow {
    pub case: String,
    pub degree: usize,
    pub level: usize,
    pub dofs: usize,
    pub h: f64,
    pub err_dg: f64,
    pub rate_dg: Option<f64>,
    pub err_l2: f64,
    pub rate_l2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

/// Loads the configured case: built-in by name, or a geometry file paired
/// with the moving-domain manufactured solution.
pub fn load_case(spec: &CaseSpec) -> Result<(MultiPatchDomain, ManufacturedProblem)> {
    match spec {
        CaseSpec::Builtin(name) => cases::case_by_name(name),
        CaseSpec::GeometryFile(path) => {
            let text = std::fs::read_to_string(path)?;
            let maps = geometry_from_json(&text)?;
            let dims = maps[0].num_dims();
            let space = crate::bspline::TensorBasis::single_span(1, dims);
            let patches = maps
                .into_iter()
                .enumerate()
                .map(|(id, g)| Patch::new(id, g, space.clone()))
                .collect::<Result<Vec<_>>>()?;
            let domain = build_multipatch(patches, crate::geometry::DEFAULT_MATCHING_TOL)?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "geometry".to_string());
            let problem = cases::manufactured_sin(&name, dims - 1);
            Ok((domain, problem))
        }
    }
}

/// Runs the full sweep: for each degree and level, build spaces, assemble,
/// solve, and measure errors. Deterministic across reruns.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let (base_domain, problem) = load_case(&cfg.case)?;
    let d = base_domain.spatial_dims();
    let mut rows = Vec::new();

    for &p in &cfg.degrees {
        let (d1, d2) = default_penalties(p, d);
        let params = DGParameters {
            theta: cfg.theta,
            delta1: cfg.delta1.unwrap_or(d1),
            delta2: cfg.delta2.unwrap_or(d2),
            quad_orders: cfg.quad.map(|n| vec![n; d + 1]),
        };
        let mut reports: Vec<ErrorReport> = Vec::new();
        for level in 1..=cfg.levels {
            let domain = base_domain.with_discretization(p, level)?;
            let system = assemble_system(&domain, &problem, &params).map_err(|e| {
                Error::Config(format!("degree {p} level {level}: {e}"))
            })?;
            // Cross-check the analytic dof count (2^level + p per direction).
            let analytic_total: usize = domain
                .patches()
                .iter()
                .map(|patch| ((1usize << level) + p).pow(patch.space.num_dims() as u32))
                .sum();
            if system.dof_map.total != analytic_total {
                return Err(Error::Config(format!(
                    "dof bookkeeping mismatch: {} vs analytic {analytic_total}",
                    system.dof_map.total
                )));
            }
            let report = solve(&system).map_err(|e| {
                Error::Solver(format!("degree {p} level {level}: {e}"))
            })?;
            let coeffs = system.dof_map.expand(&report.solution);
            let err_dg = dg_error(&coeffs, &problem, &domain, &params)?;
            let err_l2 = l2_error(&coeffs, &problem, &domain)?;
            let h = domain
                .patches()
                .iter()
                .map(|patch| patch.h)
                .fold(0.0, f64::max);
            if let Some(prev) = reports.last() {
                if system.n() <= prev.dofs {
                    return Err(Error::Config(
                        "dof count must increase strictly with level".into(),
                    ));
                }
            }
            reports.push(ErrorReport {
                level,
                dofs: system.n(),
                h,
                err_dg,
                err_l2,
            });
        }
        let dg_rates = convergence_rates(&reports.iter().map(|r| r.err_dg).collect::<Vec<_>>())?;
        let l2_rates = convergence_rates(&reports.iter().map(|r| r.err_l2).collect::<Vec<_>>())?;
        for (k, r) in reports.iter().enumerate() {
            rows.push(StudyRow {
                case: problem.name.clone(),
                degree: p,
                level: r.level,
                dofs: r.dofs,
                h: r.h,
                err_dg: r.err_dg,
                rate_dg: (k > 0).then(|| dg_rates[k - 1]),
                err_l2: r.err_l2,
                rate_l2: (k > 0).then(|| l2_rates[k - 1]),
            });
        }
    }
    Ok(StudyTable { rows })
}

/// 12 significant digits, reproducible across runs.
fn fmt(v: f64) -> String {
    format!("{v:.11e}")
}

/// Serializes the table: CSV columns are exactly
/// `case,degree,level,dofs,h,err_dg,rate_dg,err_l2,rate_l2` with empty rate
/// fields on each degree's first level; JSON mirrors the same fields.
pub fn write_output(table: &StudyTable, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::Config("empty study table".into()));
    }
    match format {
        OutputFormat::Csv => {
            writeln!(out, "case,degree,level,dofs,h,err_dg,rate_dg,err_l2,rate_l2")?;
            for r in &table.rows {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    r.case,
                    r.degree,
                    r.level,
                    r.dofs,
                    fmt(r.h),
                    fmt(r.err_dg),
                    r.rate_dg.map(fmt).unwrap_or_default(),
                    fmt(r.err_l2),
                    r.rate_l2.map(fmt).unwrap_or_default(),
                )?;
            }
        }
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, table)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Writes the table to a file path.
pub fn write_output_file(
    table: &StudyTable,
    format: OutputFormat,
    path: &std::path::Path,
) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_output(table, format, &mut file)
}

/// Writes the table to the configured destination (file or stdout).
pub fn write_configured(table: &StudyTable, cfg: &StudyConfig) -> Result<()> {
    match &cfg.out {
        Some(path) => write_output_file(table, cfg.format, path),
        None => {
            let mut stdout = std::io::stdout().lock();
            write_output(table, cfg.format, &mut stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> StudyConfig {
        StudyConfig::new(CaseSpec::Builtin("unit-box".into()), vec![1], 2)
    }

    #[test]
    fn rejects_degree_zero_and_bad_levels() {
        let mut cfg = small_config();
        cfg.degrees = vec![0];
        assert!(matches!(run_study(&cfg), Err(Error::Config(_))));
        let mut cfg = small_config();
        cfg.degrees = vec![5];
        assert!(run_study(&cfg).is_err());
        let mut cfg = small_config();
        cfg.levels = 0;
        assert!(run_study(&cfg).is_err());
    }

    #[test]
    fn unknown_case_is_a_config_error() {
        let cfg = StudyConfig::new(CaseSpec::Builtin("nope".into()), vec![1], 1);
        assert!(run_study(&cfg).is_err());
    }

    #[test]
    fn csv_layout_and_rate_columns() {
        let table = run_study(&small_config()).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows[0].rate_dg.is_none());
        assert!(table.rows[1].rate_dg.is_some());
        let mut buf = Vec::new();
        write_output(&table, OutputFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "case,degree,level,dofs,h,err_dg,rate_dg,err_l2,rate_l2"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[0], "unit-box");
        assert_eq!(first[6], "");
        assert_eq!(first[8], "");
    }

    #[test]
    fn single_level_table_has_one_row_with_empty_rates() {
        let cfg = StudyConfig::new(CaseSpec::Builtin("unit-box".into()), vec![2], 1);
        let table = run_study(&cfg).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!(table.rows[0].rate_dg.is_none() && table.rows[0].rate_l2.is_none());
        let mut buf = Vec::new();
        write_output(&table, OutputFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }

    #[test]
    fn csv_rates_match_recomputation_from_error_columns() {
        let table = run_study(&small_config()).unwrap();
        let e: Vec<f64> = table.rows.iter().map(|r| r.err_dg).collect();
        let rates = convergence_rates(&e).unwrap();
        assert!((table.rows[1].rate_dg.unwrap() - rates[0]).abs() < 1e-15);
    }

    #[test]
    fn json_roundtrip_is_equal() {
        let table = run_study(&small_config()).unwrap();
        let mut buf = Vec::new();
        write_output(&table, OutputFormat::Json, &mut buf).unwrap();
        let back: StudyTable = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let cfg = small_config();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_output(&run_study(&cfg).unwrap(), OutputFormat::Csv, &mut a).unwrap();
        write_output(&run_study(&cfg).unwrap(), OutputFormat::Csv, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn moving_2d_sweep_has_strictly_decreasing_errors() {
        let cfg = StudyConfig::new(CaseSpec::Builtin("moving-2d".into()), vec![2], 4);
        let table = run_study(&cfg).unwrap();
        assert_eq!(table.rows.len(), 4);
        for w in table.rows.windows(2) {
            assert!(w[1].err_dg < w[0].err_dg);
            assert!(w[1].dofs > w[0].dofs);
        }
    }

    #[test]
    fn geometry_file_case_runs() {
        let dir = std::env::temp_dir().join("stiga-study-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("box.json");
        std::fs::write(
            &path,
            r#"{"patches":[{"degrees":[1,1],"knots":[[0,0,1,1],[0,0,1,1]],
                "control_points":[[0,0],[1,0],[0,1],[1,1]]}]}"#,
        )
        .unwrap();
        let cfg = StudyConfig::new(CaseSpec::GeometryFile(path), vec![2], 2);
        let table = run_study(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert_eq!(table.rows[0].case, "box");
        // Errors decrease under refinement.
        assert!(table.rows[1].err_dg < table.rows[0].err_dg);
    }
}
