use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One snapshot of a run. Field order is the on-disk column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iter: usize,
    pub test_acc: f64,
    /// Fraction of the validation set whose observed label is correct.
    pub val_clean: f64,
    pub dc_precision: f64,
    pub dc_recall: f64,
    pub lr: f64,
    /// Mean normalised weight of truly clean batch members since the last record.
    pub omega_clean_mean: f64,
    pub omega_noisy_mean: f64,
    pub info_obj: f64,
    pub clean_obj: f64,
}

impl MetricsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.test_acc,
            self.val_clean,
            self.dc_precision,
            self.dc_recall,
            self.lr,
            self.omega_clean_mean,
            self.omega_noisy_mean,
            self.info_obj,
            self.clean_obj,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// The CSV summary written next to a JSON-lines file.
pub fn csv_path_for(jsonl: &Path) -> PathBuf {
    jsonl.with_extension("csv")
}

/// Writes `records` as JSON lines to `path` and as CSV to [`csv_path_for`]`(path)`.
pub fn emit_metrics(records: &[MetricsRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::io(path, e.into()))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;

    let csv_path = csv_path_for(path);
    let csv_err = |e: csv::Error| Error::io(&csv_path, std::io::Error::other(e.to_string()));
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&csv_path)
        .map_err(csv_err)?;
    writer
        .write_record([
            "iter",
            "test_acc",
            "val_clean",
            "dc_precision",
            "dc_recall",
            "lr",
            "omega_clean_mean",
            "omega_noisy_mean",
            "info_obj",
            "clean_obj",
        ])
        .map_err(csv_err)?;
    for r in records {
        writer.serialize(r).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(&csv_path, e))
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (k, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
    reader
        .deserialize()
        .enumerate()
        .map(|(k, r)| {
            r.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: k + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(iter: usize) -> MetricsRecord {
        MetricsRecord {
            iter,
            test_acc: 0.875,
            val_clean: 1.0 / 3.0,
            dc_precision: 0.1 + 0.2,
            dc_recall: 1e-300,
            lr: 0.05,
            omega_clean_mean: 0.0,
            omega_noisy_mean: 1.0,
            info_obj: -12.5e10,
            clean_obj: 7.0,
        }
    }

    #[test]
    fn empty_stream() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        emit_metrics(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "");
        let csv = std::fs::read_to_string(csv_path_for(&path)).unwrap();
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("iter,test_acc,val_clean,"));
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let records: Vec<MetricsRecord> = (0..4).map(|i| record(i * 10)).collect();
        emit_metrics(&records, &path).unwrap();
        assert_eq!(read_jsonl(&path).unwrap(), records);
        assert_eq!(read_csv(csv_path_for(&path)).unwrap(), records);
    }

    #[test]
    fn key_order_is_fixed() {
        let line = serde_json::to_string(&record(3)).unwrap();
        let keys: Vec<&str> = line
            .trim_matches(|c| c == '{' || c == '}')
            .split(',')
            .map(|kv| kv.split(':').next().unwrap().trim_matches('"'))
            .collect();
        assert_eq!(
            keys,
            [
                "iter",
                "test_acc",
                "val_clean",
                "dc_precision",
                "dc_recall",
                "lr",
                "omega_clean_mean",
                "omega_noisy_mean",
                "info_obj",
                "clean_obj"
            ]
        );
    }

    #[test]
    fn unwritable_path_reports_it() {
        let err = emit_metrics(&[record(0)], "/nonexistent-dir/m.jsonl").unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/m.jsonl"));
    }
}
