//! Metrics records and their CSV (and optional JSONL) serialization.
//!
//! One record per (layer, epoch) during training; one per layer plus one
//! model record per evaluation. The CSV is append-only during a run and
//! parses back losslessly: floats are written in shortest round-trip form.

use crate::error::{CliError, Result};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub const METRICS_HEADER: &str = "run_id,seed,variant,layer,epoch,loss,accuracy,wall_ms,flops";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub run_id: String,
    pub seed: u64,
    pub variant: String,
    /// Layer index ("0"), grid cell ("1.2"), or "model".
    pub layer: String,
    pub epoch: Option<u64>,
    pub loss: Option<f64>,
    pub accuracy: Option<f64>,
    pub wall_ms: Option<u64>,
    pub flops: Option<u64>,
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt<T: std::str::FromStr>(s: &str, what: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|_| CliError::Data(format!("bad {what} field '{s}' in metrics row")))
}

impl MetricsRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.seed,
            self.variant,
            self.layer,
            fmt_opt(&self.epoch),
            fmt_opt(&self.loss),
            fmt_opt(&self.accuracy),
            fmt_opt(&self.wall_ms),
            fmt_opt(&self.flops),
        )
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 9 {
            return Err(CliError::Data(format!(
                "metrics row has {} fields, expected 9: '{row}'",
                fields.len()
            )));
        }
        Ok(MetricsRecord {
            run_id: fields[0].to_string(),
            seed: fields[1]
                .parse()
                .map_err(|_| CliError::Data(format!("bad seed '{}'", fields[1])))?,
            variant: fields[2].to_string(),
            layer: fields[3].to_string(),
            epoch: parse_opt(fields[4], "epoch")?,
            loss: parse_opt(fields[5], "loss")?,
            accuracy: parse_opt(fields[6], "accuracy")?,
            wall_ms: parse_opt(fields[7], "wall_ms")?,
            flops: parse_opt(fields[8], "flops")?,
        })
    }
}

/// Parses a whole metrics file (header plus rows).
pub fn parse_metrics_file(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == METRICS_HEADER => {}
        other => {
            return Err(CliError::Data(format!(
                "bad metrics header: {other:?}"
            )))
        }
    }
    lines.map(MetricsRecord::from_csv_row).collect()
}

/// Append-only writer for one run's metrics, CSV plus optional JSONL twin.
pub struct MetricsWriter {
    csv: std::io::BufWriter<std::fs::File>,
    jsonl: Option<std::io::BufWriter<std::fs::File>>,
}

impl MetricsWriter {
    pub fn create(csv_path: &Path, jsonl: bool) -> Result<Self> {
        let mk = |p: &Path| {
            std::fs::File::create(p).map_err(|e| {
                CliError::Other(format!("cannot create {}: {e}", p.display()))
            })
        };
        let mut csv = std::io::BufWriter::new(mk(csv_path)?);
        writeln!(csv, "{METRICS_HEADER}")
            .map_err(|e| CliError::Other(format!("metrics write failed: {e}")))?;
        let jsonl = if jsonl {
            Some(std::io::BufWriter::new(mk(&csv_path.with_extension(
                "jsonl",
            ))?))
        } else {
            None
        };
        Ok(MetricsWriter { csv, jsonl })
    }

    pub fn append(&mut self, record: &MetricsRecord) -> Result<()> {
        writeln!(self.csv, "{}", record.to_csv_row())
            .map_err(|e| CliError::Other(format!("metrics write failed: {e}")))?;
        if let Some(j) = &mut self.jsonl {
            let line = serde_json::to_string(record)
                .map_err(|e| CliError::Other(format!("jsonl encode failed: {e}")))?;
            writeln!(j, "{line}")
                .map_err(|e| CliError::Other(format!("metrics write failed: {e}")))?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.csv
            .flush()
            .map_err(|e| CliError::Other(format!("metrics flush failed: {e}")))?;
        if let Some(j) = &mut self.jsonl {
            j.flush()
                .map_err(|e| CliError::Other(format!("metrics flush failed: {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricsRecord {
        MetricsRecord {
            run_id: "blobs-ffdl-s1".into(),
            seed: 1,
            variant: "ffdl".into(),
            layer: "1.2".into(),
            epoch: Some(7),
            loss: Some(0.6931471805599453),
            accuracy: None,
            wall_ms: Some(12),
            flops: None,
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let r = sample();
        let row = r.to_csv_row();
        assert_eq!(MetricsRecord::from_csv_row(&row).unwrap(), r);

        let eval = MetricsRecord {
            layer: "model".into(),
            epoch: None,
            loss: None,
            accuracy: Some(0.97),
            wall_ms: None,
            flops: Some(9_633_792),
            ..sample()
        };
        assert_eq!(
            MetricsRecord::from_csv_row(&eval.to_csv_row()).unwrap(),
            eval
        );
    }

    #[test]
    fn shortest_float_form_survives_extremes() {
        let mut r = sample();
        r.loss = Some(f64::MIN_POSITIVE);
        assert_eq!(MetricsRecord::from_csv_row(&r.to_csv_row()).unwrap(), r);
        r.loss = Some(1.0 / 3.0);
        assert_eq!(MetricsRecord::from_csv_row(&r.to_csv_row()).unwrap(), r);
    }

    #[test]
    fn file_parse_checks_header_and_rows() {
        let text = format!("{METRICS_HEADER}\n{}\n", sample().to_csv_row());
        let rows = parse_metrics_file(&text).unwrap();
        assert_eq!(rows, vec![sample()]);
        assert!(parse_metrics_file("nope\n").is_err());
    }
}
