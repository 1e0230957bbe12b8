use std::io::Write;
use std::path::Path;

use nalgebra::DVector;

use super::config::ReportFormat;
use super::run::{RecoveryReport, RunOutcome};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// CSV columns, one row per run.
pub const CSV_HEADER: &str =
    "run,seed,status,mcs_db,single_ch0_db,single_ch1_db,mcs_rank,mcs_cond,floor_hits,fallbacks,pr_defect,error";

fn fmt_db(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "inf".into()
    }
}

pub fn write_report(
    report: &RecoveryReport,
    format: ReportFormat,
    mut out: impl Write,
) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in &report.runs {
                match r {
                    RunOutcome::Ok(rec) => writeln!(
                        out,
                        "{},{},ok,{},{},{},{},{},{},{},{},",
                        rec.run,
                        rec.seed,
                        fmt_db(rec.mse_db.mcs),
                        fmt_db(rec.mse_db.single_ch0),
                        fmt_db(rec.mse_db.single_ch1),
                        rec.mcs_conditioning.rank,
                        rec.mcs_conditioning.cond,
                        rec.selection.floor_hits,
                        rec.selection.fallbacks,
                        rec.bridge
                            .as_ref()
                            .map(|b| b.pr_defect.to_string())
                            .unwrap_or_default(),
                    )?,
                    RunOutcome::Failed {
                        run, seed, error, ..
                    } => writeln!(
                        out,
                        "{run},{seed},failed,,,,,,,,,\"{}\"",
                        error.replace('"', "'")
                    )?,
                }
            }
        }
    }
    Ok(())
}

pub fn emit_report(
    report: &RecoveryReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_report(report, format, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Per-vertex CSV: `vertex,x,y,original,mcs,ch0,ch1`. Coordinates are
/// blank when the graph has none.
pub fn write_signal_dump(
    g: &Graph,
    original: &DVector<f64>,
    recovered: &[DVector<f64>; 3],
    mut out: impl Write,
) -> Result<()> {
    let n = g.n();
    for v in std::iter::once(original).chain(recovered.iter()) {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
    }
    writeln!(out, "vertex,x,y,original,mcs,ch0,ch1")?;
    for i in 0..n {
        let (x, y) = match g.coords() {
            Some(c) => (
                c[i].first().map(|v| v.to_string()).unwrap_or_default(),
                c[i].get(1).map(|v| v.to_string()).unwrap_or_default(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{i},{x},{y},{},{},{},{}",
            original[i], recovered[0][i], recovered[1][i], recovered[2][i]
        )?;
    }
    Ok(())
}

pub fn emit_signal_dump(
    g: &Graph,
    original: &DVector<f64>,
    recovered: &[DVector<f64>; 3],
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_signal_dump(g, original, recovered, &mut w)?;
    w.flush()?;
    Ok(())
}
