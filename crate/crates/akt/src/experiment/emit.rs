//! Deterministic serialization of experiment results.
//!
//! Floats are rendered as shortest round-trip decimals and the column order
//! is fixed, so identical inputs produce byte-identical files. The measured
//! per-trial wall time is deliberately zeroed on emission: files must be
//! reproducible across reruns and worker counts (timings go to stderr).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::{AggregateRow, RateFit, TrialRecord};

/// Output format of [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub(crate) const TRIALS_HEADER: &str = "n,trial,w1,bound_total,t,lower,wall_ms";
pub(crate) const AGGREGATES_HEADER: &str = "n,mean,stderr,min,max,bound_mean,paper_bound,pass";

/// Companion path holding the aggregate table when writing CSV:
/// `results.csv` -> `results.agg.csv`.
pub fn aggregates_sibling_path(path: &Path) -> PathBuf {
    path.with_extension("agg.csv")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = || -> std::io::Result<()> {
        writeln!(w, "{TRIALS_HEADER}")?;
        for r in records {
            writeln!(
                w,
                "{},{},{},{},{},{},0",
                r.n,
                r.trial_index,
                r.w1,
                opt(r.bound_total),
                opt(r.t_used),
                opt(r.lower),
            )?;
        }
        w.flush()
    };
    out().map_err(|e| Error::io(path, e))
}

fn write_aggregates_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut out = || -> std::io::Result<()> {
        writeln!(w, "{AGGREGATES_HEADER}")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.mean,
                r.stderr,
                r.min,
                r.max,
                opt(r.bound_mean),
                r.paper_bound,
                r.pass,
            )?;
        }
        w.flush()
    };
    out().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct TrialOut {
    n: usize,
    trial: usize,
    w1: f64,
    bound_total: Option<f64>,
    t: Option<f64>,
    lower: Option<f64>,
    wall_ms: u64,
}

#[derive(Serialize)]
struct ResultsOut<'a> {
    trials: Vec<TrialOut>,
    aggregates: &'a [AggregateRow],
    fit: Option<&'a RateFit>,
}

fn write_json(
    path: &Path,
    records: &[TrialRecord],
    rows: &[AggregateRow],
    fit: Option<&RateFit>,
) -> Result<()> {
    let doc = ResultsOut {
        trials: records
            .iter()
            .map(|r| TrialOut {
                n: r.n,
                trial: r.trial_index,
                w1: r.w1,
                bound_total: r.bound_total,
                t: r.t_used,
                lower: r.lower,
                wall_ms: 0,
            })
            .collect(),
        aggregates: rows,
        fit,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes results to `path`. CSV mode produces the trial table at `path` and
/// the aggregate table at [`aggregates_sibling_path`]; JSON mode writes one
/// document containing trials, aggregates, and the optional fit.
pub fn emit_results(
    records: &[TrialRecord],
    aggregates: &[AggregateRow],
    fit: Option<&RateFit>,
    format: OutputFormat,
    path: &Path,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            write_trials_csv(path, records)?;
            write_aggregates_csv(&aggregates_sibling_path(path), aggregates)
        }
        OutputFormat::Json => write_json(path, records, aggregates, fit),
    }
}

/// Reads an aggregate table back from CSV (the `fit` subcommand's input).
pub fn read_aggregates_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e.to_string()))?;
    {
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(path, e.to_string()))?;
        let expected: Vec<&str> = AGGREGATES_HEADER.split(',').collect();
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(Error::parse(
                path,
                format!("unexpected header {got:?}, expected {expected:?}"),
            ));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, e.to_string()))?;
        let field = |idx: usize| -> Result<&str> {
            record
                .get(idx)
                .ok_or_else(|| Error::parse(path, format!("row {}: missing column {idx}", i + 1)))
        };
        let num = |idx: usize| -> Result<f64> {
            field(idx)?
                .parse()
                .map_err(|_| Error::parse(path, format!("row {}: bad float", i + 1)))
        };
        let bound_mean =
            {
                let s = field(5)?;
                if s.is_empty() {
                    None
                } else {
                    Some(s.parse().map_err(|_| {
                        Error::parse(path, format!("row {}: bad bound_mean", i + 1))
                    })?)
                }
            };
        rows.push(AggregateRow {
            n: field(0)?
                .parse()
                .map_err(|_| Error::parse(path, format!("row {}: bad n", i + 1)))?,
            mean: num(1)?,
            stderr: num(2)?,
            min: num(3)?,
            max: num(4)?,
            bound_mean,
            paper_bound: num(6)?,
            pass: field(7)?
                .parse()
                .map_err(|_| Error::parse(path, format!("row {}: bad pass flag", i + 1)))?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_records() -> Vec<TrialRecord> {
        vec![
            TrialRecord {
                n: 8,
                trial_index: 0,
                w1: 0.125,
                bound_total: Some(0.5),
                t_used: Some(0.0625),
                lower: Some(0.01),
                wall_time_ms: 3.5,
            },
            TrialRecord {
                n: 8,
                trial_index: 1,
                w1: 0.25,
                bound_total: None,
                t_used: None,
                lower: None,
                wall_time_ms: 2.0,
            },
        ]
    }

    fn sample_aggregates() -> Vec<AggregateRow> {
        vec![AggregateRow {
            n: 8,
            mean: 0.1875,
            stderr: 0.0625,
            min: 0.125,
            max: 0.25,
            bound_mean: None,
            paper_bound: 1.2,
            pass: true,
        }]
    }

    #[test]
    fn csv_emission_is_byte_stable_and_zeroes_wall_time() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let records = sample_records();
        let aggregates = sample_aggregates();
        emit_results(&records, &aggregates, None, OutputFormat::Csv, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        let text = String::from_utf8(first.clone()).unwrap();
        assert!(text.starts_with("n,trial,w1,bound_total,t,lower,wall_ms\n"));
        assert!(text.contains("8,0,0.125,0.5,0.0625,0.01,0\n"));
        assert!(text.contains("8,1,0.25,,,,0\n"));

        // Different measured timings must not change the bytes.
        let mut slower = records.clone();
        slower[0].wall_time_ms = 99.0;
        emit_results(&slower, &aggregates, None, OutputFormat::Csv, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());

        let agg_path = aggregates_sibling_path(&path);
        let agg_text = std::fs::read_to_string(&agg_path).unwrap();
        assert!(agg_text.starts_with("n,mean,stderr,min,max,bound_mean,paper_bound,pass\n"));
        assert!(agg_text.contains("8,0.1875,0.0625,0.125,0.25,,1.2,true\n"));
    }

    #[test]
    fn aggregates_roundtrip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_results(
            &sample_records(),
            &sample_aggregates(),
            None,
            OutputFormat::Csv,
            &path,
        )
        .unwrap();
        let rows = read_aggregates_csv(&aggregates_sibling_path(&path)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n, 8);
        assert_eq!(rows[0].mean, 0.1875);
        assert_eq!(rows[0].bound_mean, None);
        assert!(rows[0].pass);
    }

    #[test]
    fn empty_records_give_header_only_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_results(&[], &[], None, OutputFormat::Csv, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "n,trial,w1,bound_total,t,lower,wall_ms\n");
        let rows = read_aggregates_csv(&aggregates_sibling_path(&path)).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn json_emission_contains_all_sections() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        emit_results(
            &sample_records(),
            &sample_aggregates(),
            None,
            OutputFormat::Json,
            &path,
        )
        .unwrap();
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(doc["trials"].as_array().unwrap().len(), 2);
        assert_eq!(doc["trials"][0]["wall_ms"], 0);
        assert_eq!(doc["aggregates"][0]["n"], 8);
        assert!(doc["fit"].is_null());
    }
}
