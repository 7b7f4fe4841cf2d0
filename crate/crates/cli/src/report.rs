use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use groundstate::hierarchy::CheckRecord;
use groundstate::RunReport;
use serde::Serialize;

use crate::config::Format;
use crate::failure::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct IterationRow {
    pub n: usize,
    #[serde(rename = "calE")]
    pub cal_e: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub charge_residual: f64,
    pub f_min: f64,
    pub f_max: f64,
}

pub fn iteration_rows(rep: &RunReport) -> Vec<IterationRow> {
    rep.records
        .iter()
        .map(|r| IterationRow {
            n: r.n,
            cal_e: r.cal_e,
            e: r.e,
            charge_residual: r.charge_residual,
            f_min: r.f_min,
            f_max: r.f_max,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, margin: f64) -> Self {
        Self { name: name.into(), pass, margin }
    }

    /// Passes when `value` stays below `limit`; the margin is the headroom.
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value < limit, limit - value)
    }
}

impl From<CheckRecord> for Check {
    fn from(c: CheckRecord) -> Self {
        Self { name: format!("{}#{}", c.name, c.index), pass: c.pass, margin: c.margin }
    }
}

/// Config block of a report: the subcommand plus every resolved setting.
#[derive(Serialize)]
pub struct Embedded<'a, C: Serialize> {
    pub command: &'static str,
    #[serde(flatten)]
    pub settings: &'a C,
}

#[derive(Serialize)]
pub struct RunOutput<'a, C: Serialize> {
    pub config: Embedded<'a, C>,
    pub iterations: Vec<IterationRow>,
    pub checks: Vec<Check>,
    pub converged: bool,
    #[serde(rename = "final_E")]
    pub final_e: f64,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| Failure::config(format!("cannot create {}: {e}", path.display())))?;
            Box::new(BufWriter::new(file))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::config(format!("cannot write report: {e}"))
}

/// Write `doc` as JSON, or `rows` as CSV with a header row.
pub fn emit<D: Serialize, R: Serialize>(
    format: Format,
    out: Option<&Path>,
    doc: &D,
    rows: &[R],
) -> Result<(), Failure> {
    let mut w = sink(out)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, doc).map_err(io_failure)?;
            writeln!(w).map_err(io_failure)?;
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut w);
            for row in rows {
                c.serialize(row).map_err(io_failure)?;
            }
            c.flush().map_err(io_failure)?;
        }
    }
    w.flush().map_err(io_failure)
}
