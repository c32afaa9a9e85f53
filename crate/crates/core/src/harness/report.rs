//! CSV and markdown output for experiment reports.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::runner::ExperimentReport;
use crate::error::{BsecError, Result};

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algo: String,
    pub family: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub capacity: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_value: f64,
    pub ratio: f64,
    pub wall_ms: u128,
}

pub const CSV_COLUMNS: [&str; 12] =
    ["algo", "family", "n", "K", "trials", "seed", "success_rate", "ci_low", "ci_high", "mean_value", "ratio", "wall_ms"];

impl From<&ExperimentReport> for ReportRow {
    fn from(r: &ExperimentReport) -> Self {
        ReportRow {
            algo: r.algo.clone(),
            family: r.family.clone(),
            n: r.n,
            capacity: r.capacity,
            trials: r.trials,
            seed: r.seed,
            success_rate: r.success_rate,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            mean_value: r.mean_value,
            ratio: r.ratio,
            wall_ms: r.wall_ms,
        }
    }
}

fn csv_err(e: csv::Error) -> BsecError {
    BsecError::Io(e.to_string())
}

/// Writes rows as CSV; an empty slice gives the header alone.
pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn csv_string(rows: &[ReportRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    String::from_utf8(buf).map_err(|e| BsecError::Io(e.to_string()))
}

/// Markdown table, one row per run.
pub fn markdown(rows: &[ReportRow]) -> String {
    let mut s = String::from(
        "| algo | family | n | K | trials | seed | success | 95% CI | mean value | ratio | ms |\n\
         |---|---|---:|---:|---:|---:|---:|---|---:|---:|---:|\n",
    );
    for r in rows {
        let k = r.capacity.map(|k| format!("{k}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {:.4} | [{:.4}, {:.4}] | {:.4} | {:.4} | {} |\n",
            r.algo,
            r.family,
            r.n,
            k,
            r.trials,
            r.seed,
            r.success_rate,
            r.ci_low,
            r.ci_high,
            r.mean_value,
            r.ratio,
            r.wall_ms
        ));
    }
    s
}
