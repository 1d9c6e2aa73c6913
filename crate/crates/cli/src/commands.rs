//! The three subcommands.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bpr_core::domain::{aligned_relative_error, ramp_aligned_errors, Model};
use bpr_core::lifted::{solve_lifted, LiftedReport};
use bpr_core::solvers::{run, Algorithm, Estimate};
use bpr_core::{AlignedErrors, SolverConfig, SolverReport};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::images::dump;
use crate::sim::{read_dataset, read_json, simulate, write_dataset, write_json, Dataset, Manifest, SimConfig};
use crate::{config_err, CliResult};

pub const LIFTED: &str = "lifted";

/// Files written by `reconstruct`.
pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";

/// Result of the lifted solver as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedRecord {
    pub algorithm: String,
    pub iterations_run: usize,
    pub h: Vec<C64>,
    pub m: Vec<C64>,
    pub h_spectrum: Vec<f64>,
    pub m_spectrum: Vec<f64>,
    pub rank_ratios: (f64, f64),
    pub report: LiftedReport,
    /// `probe` holds the error of `h`, `sample` that of `m`
    pub errors: Option<AlignedErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub algorithm: String,
    pub wall_time_s: f64,
}

pub fn load_sim_config(path: Option<&Path>) -> CliResult<SimConfig> {
    match path {
        Some(p) => read_json(p),
        None => Ok(SimConfig::default()),
    }
}

pub fn cmd_simulate(config: &SimConfig, seed: u64, noiseless: bool, out: &Path) -> CliResult<()> {
    let mut config = config.clone();
    if noiseless {
        config.poisson_scale = None;
    }
    let set = simulate(&config, seed)?;
    let manifest = Manifest { kind: set.kind(), seed, config };
    write_dataset(out, &set, &manifest)
}

pub struct ReconstructArgs {
    pub input: PathBuf,
    pub algorithm: String,
    pub config: SolverConfig,
    pub out: PathBuf,
    pub resume: Option<PathBuf>,
}

pub fn cmd_reconstruct(args: &ReconstructArgs) -> CliResult<()> {
    args.config.validate()?;
    let set = read_dataset(&args.input)?;
    fs::create_dir_all(&args.out).map_err(|e| config_err(format!("{}: {e}", args.out.display())))?;
    let start = Instant::now();
    match &set {
        Dataset::Lifted { instance, truth } => {
            if args.algorithm != LIFTED {
                return Err(config_err(format!("a lifted data set needs `{LIFTED}`, not `{}`", args.algorithm)));
            }
            if args.resume.is_some() {
                return Err(config_err("--resume is not supported for the lifted solver"));
            }
            let sol = solve_lifted(instance, &args.config)?;
            let errors = match truth {
                Some((h, m)) => Some(AlignedErrors {
                    probe: aligned_relative_error(&sol.h, h)?,
                    sample: aligned_relative_error(&sol.m, m)?,
                }),
                None => None,
            };
            let record = LiftedRecord {
                algorithm: LIFTED.into(),
                iterations_run: sol.report.iterations_run,
                h: sol.h.clone(),
                m: sol.m.clone(),
                h_spectrum: sol.h_spectrum.clone(),
                m_spectrum: sol.m_spectrum.clone(),
                rank_ratios: sol.rank_ratios(),
                report: sol.report.clone(),
                errors,
            };
            let elapsed = start.elapsed().as_secs_f64();
            write_json(&args.out.join(REPORT_FILE), &record)?;
            let (k1, k2) = (sol.h_mat.nrows(), sol.m_mat.nrows());
            dump(&args.out, "H", sol.h_mat.transpose().as_slice(), k1, k1)?;
            dump(&args.out, "M", sol.m_mat.transpose().as_slice(), k2, k2)?;
            write_json(&args.out.join(TIMING_FILE), &Timing { algorithm: LIFTED.into(), wall_time_s: elapsed })?;
        }
        Dataset::Bilinear { .. } => {
            if args.algorithm == LIFTED {
                return Err(config_err("the lifted solver needs a lifted data set"));
            }
            let algorithm: Algorithm = args.algorithm.parse()?;
            let mut problem = set.problem()?;
            if let Some(path) = &args.resume {
                let prev: SolverReport = read_json(path)?;
                problem = problem.with_init(Estimate { probe: prev.final_w, sample: prev.final_u })?;
            }
            let report = run(algorithm, &problem, &args.config)?;
            let elapsed = start.elapsed().as_secs_f64();
            write_json(&args.out.join(REPORT_FILE), &report)?;
            let (ws, us) = (report.final_w.side(), report.final_u.side());
            dump(&args.out, "w", report.final_w.as_slice(), ws, ws)?;
            dump(&args.out, "u", report.final_u.as_slice(), us, us)?;
            write_json(
                &args.out.join(TIMING_FILE),
                &Timing { algorithm: algorithm.name().into(), wall_time_s: elapsed },
            )?;
        }
    }
    Ok(())
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub source: String,
    pub algorithm: String,
    pub iterations: usize,
    pub error_probe: f64,
    pub error_sample: f64,
    /// ptychography only, see `SolverReport::ramp_errors`
    pub ramp_error_probe: Option<f64>,
    pub ramp_error_sample: Option<f64>,
    pub wall_time_s: Option<f64>,
}

/// Column order of the comparison table and CSV.
pub const COLUMNS: [&str; 8] = [
    "source",
    "algorithm",
    "iterations",
    "error_probe",
    "error_sample",
    "ramp_error_probe",
    "ramp_error_sample",
    "wall_time_s",
];

fn timing_for(report: &Path) -> Option<f64> {
    let path = report.parent()?.join(TIMING_FILE);
    read_json::<Timing>(&path).ok().map(|t| t.wall_time_s)
}

fn row_for(report: &Path, truth: &Dataset) -> CliResult<Row> {
    let value: serde_json::Value = read_json(report)?;
    let is_lifted = value.get("algorithm").and_then(|a| a.as_str()) == Some(LIFTED);
    let source = report.display().to_string();
    let wall_time_s = timing_for(report);
    match (truth, is_lifted) {
        (Dataset::Lifted { truth: Some((h, m)), .. }, true) => {
            let r: LiftedRecord = serde_json::from_value(value)?;
            Ok(Row {
                source,
                algorithm: r.algorithm,
                iterations: r.iterations_run,
                error_probe: aligned_relative_error(&r.h, h).map_err(|e| config_err(format!("{}: {e}", report.display())))?,
                error_sample: aligned_relative_error(&r.m, m).map_err(|e| config_err(format!("{}: {e}", report.display())))?,
                ramp_error_probe: None,
                ramp_error_sample: None,
                wall_time_s,
            })
        }
        (Dataset::Bilinear { truth: Some(t), model, .. }, false) => {
            let r: SolverReport = serde_json::from_value(value)?;
            let mismatch = |e| config_err(format!("{}: geometry does not match the ground truth ({e})", report.display()));
            let error_probe = aligned_relative_error(r.final_w.as_slice(), t.probe.as_slice()).map_err(mismatch)?;
            let error_sample = aligned_relative_error(r.final_u.as_slice(), t.sample.as_slice()).map_err(mismatch)?;
            let ramp = match model {
                Model::Ptycho { .. } => Some(ramp_aligned_errors(&r.final_w, &t.probe, &r.final_u, &t.sample)?),
                _ => None,
            };
            Ok(Row {
                source,
                algorithm: r.algorithm,
                iterations: r.iterations_run,
                error_probe,
                error_sample,
                ramp_error_probe: ramp.as_ref().map(|e| e.probe),
                ramp_error_sample: ramp.as_ref().map(|e| e.sample),
                wall_time_s,
            })
        }
        (Dataset::Bilinear { truth: None, .. }, _) | (Dataset::Lifted { truth: None, .. }, _) => {
            Err(config_err("the ground-truth directory holds no truth files"))
        }
        _ => Err(config_err(format!("{}: report kind does not match the ground truth", report.display()))),
    }
}

/// Ground truth against itself, as a reference row.
fn truth_row(truth: &Dataset) -> CliResult<Row> {
    let (p, s) = match truth {
        Dataset::Bilinear { truth: Some(t), .. } => (t.probe.as_slice().to_vec(), t.sample.as_slice().to_vec()),
        Dataset::Lifted { truth: Some((h, m)), .. } => (h.clone(), m.clone()),
        _ => return Err(config_err("the ground-truth directory holds no truth files")),
    };
    Ok(Row {
        source: "truth".into(),
        algorithm: "truth".into(),
        iterations: 0,
        error_probe: aligned_relative_error(&p, &p)?,
        error_sample: aligned_relative_error(&s, &s)?,
        ramp_error_probe: None,
        ramp_error_sample: None,
        wall_time_s: None,
    })
}

pub fn compare_rows(truth_dir: &Path, reports: &[PathBuf], include_truth: bool) -> CliResult<Vec<Row>> {
    let truth = read_dataset(truth_dir)?;
    let mut rows = Vec::new();
    if include_truth {
        rows.push(truth_row(&truth)?);
    }
    for r in reports {
        rows.push(row_for(r, &truth)?);
    }
    Ok(rows)
}

fn fmt_time(t: Option<f64>) -> String {
    t.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into())
}

pub fn render_text(rows: &[Row]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
    let cells: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            [
                r.source.clone(),
                r.algorithm.clone(),
                r.iterations.to_string(),
                format!("{:.3e}", r.error_probe),
                format!("{:.3e}", r.error_sample),
                opt(r.ramp_error_probe),
                opt(r.ramp_error_sample),
                fmt_time(r.wall_time_s),
            ]
        })
        .collect();
    let mut width = COLUMNS.map(str::len);
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, c: &[&str]| {
        let parts: Vec<String> = c.iter().zip(&width).map(|(s, w)| format!("{s:<w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(&mut out, &COLUMNS);
    for c in &cells {
        let refs: Vec<&str> = c.iter().map(String::as_str).collect();
        line(&mut out, &refs);
    }
    out
}

pub fn render_csv(rows: &[Row]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let source = if r.source.contains([',', '"']) { format!("\"{}\"", r.source.replace('"', "\"\"")) } else { r.source.clone() };
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{source},{},{},{:e},{:e},{},{},{}",
            r.algorithm,
            r.iterations,
            r.error_probe,
            r.error_sample,
            opt(r.ramp_error_probe),
            opt(r.ramp_error_sample),
            opt(r.wall_time_s)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(e: f64) -> Row {
        Row {
            source: "a,b".into(),
            algorithm: "rpie".into(),
            iterations: 3,
            error_probe: e,
            error_sample: 2.0 * e,
            ramp_error_probe: None,
            ramp_error_sample: Some(e),
            wall_time_s: Some(0.5),
        }
    }

    #[test]
    fn csv_has_fixed_columns_and_quotes() {
        let csv = render_csv(&[row(1e-3)]);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "source,algorithm,iterations,error_probe,error_sample,ramp_error_probe,ramp_error_sample,wall_time_s");
        assert_eq!(lines.next().unwrap(), "\"a,b\",rpie,3,1e-3,2e-3,,1e-3,5e-1");
    }

    #[test]
    fn text_table_aligns_columns() {
        let t = render_text(&[row(1e-3), row(0.25)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 3);
        let col = lines[0].find("algorithm").unwrap();
        assert!(lines[1..].iter().all(|l| &l[col..col + 4] == "rpie"));
    }
}
