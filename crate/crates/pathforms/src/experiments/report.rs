//! CSV, JSON and plot output for suite reports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use serde::Serialize;

use super::{ReportRow, SuiteReport};
use crate::error::{Error, Result};

pub const CSV_NAME: &str = "report.csv";
pub const JSON_NAME: &str = "report.json";

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    manifold: &'a str,
    #[serde(rename = "N")]
    n: usize,
    samples: usize,
    estimate: f64,
    std_error: f64,
    tolerance: f64,
    verdict: &'static str,
}

pub fn csv_string(report: &SuiteReport) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    for r in &report.rows {
        w.serialize(CsvRow {
            experiment: &r.experiment,
            manifold: &r.manifold,
            n: r.n_steps,
            samples: r.samples,
            estimate: r.estimate,
            std_error: r.std_error,
            tolerance: r.tolerance,
            verdict: r.verdict.as_str(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.csv`, `report.json` and, when asked, one SVG per experiment.
pub fn emit_report(report: &SuiteReport, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(CSV_NAME);
    fs::write(&csv_path, csv_string(report)?)?;
    let json_path = dir.join(JSON_NAME);
    let mut f = fs::File::create(&json_path)?;
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    let mut written = vec![csv_path, json_path];
    if plots {
        let pdir = dir.join("plots");
        fs::create_dir_all(&pdir)?;
        for row in &report.rows {
            let path = pdir.join(format!("{}.svg", row.experiment));
            match plot_row(row, &path) {
                Ok(true) => written.push(path),
                Ok(false) => {}
                Err(e) => log::warn!("plot for {} failed: {e}", row.experiment),
            }
        }
    }
    Ok(written)
}

pub fn read_report(path: &Path) -> Result<SuiteReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Fixed-width table of the CSV columns.
pub fn format_table(report: &SuiteReport) -> String {
    let mut s = format!("{:<28} {:<28} {:>5} {:>7} {:>13} {:>11} {:>11}  {}\n", "experiment", "manifold", "N", "samples", "estimate", "std_error", "tolerance", "verdict");
    for r in &report.rows {
        s.push_str(&format!(
            "{:<28} {:<28} {:>5} {:>7} {:>13.5e} {:>11.3e} {:>11.3e}  {}\n",
            r.experiment,
            r.manifold,
            r.n_steps,
            r.samples,
            r.estimate,
            r.std_error,
            r.tolerance,
            r.verdict.as_str()
        ));
    }
    s
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("plotting: {e}"))
}

/// Refinement rows: residual against step size on log axes, one line per case.
/// Multi-case Monte Carlo rows: deviation from target with its tolerance band.
fn plot_row(row: &ReportRow, path: &Path) -> Result<bool> {
    let refine: Vec<(f64, f64)> = row.cases.iter().filter_map(|c| Some((c.coarse?, c.fine?))).filter(|(c, f)| *c > 0.0 && *f > 0.0).collect();
    let root = SVGBackend::new(path, (640, 420)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    if !refine.is_empty() && row.n_steps > 0 {
        let n = row.n_steps as f64;
        let (lo, hi) = refine.iter().fold((f64::MAX, 0.0f64), |(l, h), (c, f)| (l.min(*f), h.max(*c)));
        let mut chart = ChartBuilder::on(&root)
            .caption(&row.experiment, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(60)
            .build_cartesian_2d((0.5 / n..1.0 / n).log_scale(), (lo * 0.5..hi * 2.0).log_scale())
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("Δt").y_desc("residual").draw().map_err(plot_err)?;
        for (c, f) in &refine {
            chart.draw_series(LineSeries::new(vec![(1.0 / n, *c), (0.5 / n, *f)], &BLUE)).map_err(plot_err)?;
        }
    } else if row.cases.len() > 1 {
        let pts: Vec<(f64, f64, f64)> = row.cases.iter().filter(|c| c.tolerance > 0.0).map(|c| (c.estimate - c.target, c.tolerance, c.std_error)).collect();
        if pts.is_empty() {
            return Ok(false);
        }
        let span = pts.iter().fold(0.0f64, |s, (d, t, _)| s.max(d.abs()).max(*t)) * 1.2;
        let mut chart = ChartBuilder::on(&root)
            .caption(&row.experiment, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(60)
            .build_cartesian_2d(-0.5..pts.len() as f64 - 0.5, -span..span)
            .map_err(plot_err)?;
        chart.configure_mesh().x_desc("configuration").y_desc("estimate − target").draw().map_err(plot_err)?;
        for (k, (d, t, _)) in pts.iter().enumerate() {
            let x = k as f64;
            chart.draw_series(LineSeries::new(vec![(x, -t), (x, *t)], &RED.mix(0.4))).map_err(plot_err)?;
            chart.draw_series(std::iter::once(Circle::new((x, *d), 4, BLUE.filled()))).map_err(plot_err)?;
        }
    } else {
        return Ok(false);
    }
    root.present().map_err(plot_err)?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_suite, RunConfig};
    use crate::manifold::ManifoldSpec;

    fn small() -> SuiteReport {
        let cfg = RunConfig {
            manifold: ManifoldSpec::sphere(2).unwrap(),
            steps: 16,
            samples: 100,
            suite: vec!["mutual-inverses,heat-mean,flat-collapse".into()],
            ..RunConfig::default()
        };
        run_suite(&cfg).unwrap()
    }

    #[test]
    fn csv_has_one_row_per_experiment() {
        let r = small();
        let csv = csv_string(&r).unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "experiment,manifold,N,samples,estimate,std_error,tolerance,verdict");
        assert_eq!(lines.len(), 1 + r.rows.len());
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn json_round_trip_and_plots() {
        let r = small();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&r, dir.path(), true).unwrap();
        assert!(files.iter().any(|p| p.extension().is_some_and(|e| e == "svg")));
        let back = read_report(&dir.path().join(JSON_NAME)).unwrap();
        assert_eq!(back, r);
    }
}
