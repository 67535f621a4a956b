//! CSV schema: header `f0,...,f{d-1},label[,clean_label]`.
//!
//! An optional `clean_label` column carries the hidden ground truth; the
//! reserved value `C` marks an open-set sample.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>, num_classes: usize) -> Result<Dataset> {
    let path = path.as_ref();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let columns: Vec<&str> = header.iter().collect();
    let (dim, has_clean) = match columns.as_slice() {
        [.., "label", "clean_label"] => (columns.len() - 2, true),
        [.., "label"] => (columns.len() - 1, false),
        _ => return Err(parse_err(1, "last column must be `label` (optionally followed by `clean_label`)".into())),
    };
    if dim == 0 {
        return Err(parse_err(1, "no feature columns".into()));
    }
    for (k, name) in columns[..dim].iter().enumerate() {
        if *name != format!("f{k}") {
            return Err(parse_err(1, format!("expected column `f{k}`, found `{name}`")));
        }
    }

    let mut features = Vec::new();
    let mut observed = Vec::new();
    let mut clean = Vec::new();
    let mut openset = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        if record.len() != columns.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", columns.len(), record.len()),
            ));
        }
        let x = record
            .iter()
            .take(dim)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(line, format!("invalid feature `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = parse_label(&record[dim], line, &parse_err)?;
        if label >= num_classes {
            return Err(parse_err(
                line,
                format!("label {label} out of range [0, {num_classes})"),
            ));
        }
        let truth = if has_clean {
            let t = parse_label(&record[dim + 1], line, &parse_err)?;
            if t > num_classes {
                return Err(parse_err(
                    line,
                    format!("clean label {t} out of range [0, {num_classes}]"),
                ));
            }
            t
        } else {
            label
        };
        features.push(x);
        observed.push(label);
        clean.push(truth);
        openset.push(truth == num_classes);
    }
    Dataset::with_hidden(features, observed, clean, openset, num_classes)
}

fn parse_label(
    field: &str,
    line: usize,
    err: &dyn Fn(usize, String) -> Error,
) -> Result<usize> {
    field
        .parse::<usize>()
        .map_err(|_| err(line, format!("invalid label `{field}`")))
}

/// Writes `ds` with a trailing `clean_label` diagnostic column.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    };
    let mut writer = csv::Writer::from_path(path).map_err(io_err)?;
    let mut header: Vec<String> = (0..ds.dim()).map(|k| format!("f{k}")).collect();
    header.push("label".into());
    header.push("clean_label".into());
    writer.write_record(&header).map_err(io_err)?;
    for i in 0..ds.len() {
        // `{}` on f64 prints the shortest representation that round-trips exactly
        let mut row: Vec<String> = ds.x(i).iter().map(|v| format!("{v}")).collect();
        row.push(ds.observed(i).to_string());
        row.push(ds.hidden_clean_labels()[i].to_string());
        writer.write_record(&row).map_err(io_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_synthetic, inject_openset, inject_symmetric, OutlierGenerator, SyntheticKind};
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, body: &str) -> std::path::PathBuf {
        let path = dir.path().join("data.csv");
        std::fs::File::create(&path).unwrap().write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn reads_hand_written_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "f0,f1,label\n0.5,-1.25,0\n2,3e-2,2\n-0.0,7.5,1\n");
        let ds = load_csv(&path, 3).unwrap();
        assert_eq!(ds.features(), &[vec![0.5, -1.25], vec![2.0, 0.03], vec![-0.0, 7.5]]);
        assert_eq!(ds.observed_labels(), &[0, 2, 1]);
        assert_eq!(ds.hidden_clean_labels(), &[0, 2, 1]);
        assert_eq!(ds.openset_mask(), &[false, false, false]);
    }

    #[test]
    fn rejects_label_equal_to_class_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "f0,f1,label\n0.5,1,0\n0.5,1,3\n");
        match load_csv(&path, 3) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "f0,f1,label\n0.5,abc,0\n");
        assert!(matches!(load_csv(&path, 2), Err(Error::Parse { line: 2, .. })));
        let path = write_file(&dir, "f0,label\n0.5,1,0\n");
        assert!(matches!(load_csv(&path, 2), Err(Error::Parse { line: 2, .. })));
        let path = write_file(&dir, "x,label\n0.5,1\n");
        assert!(matches!(load_csv(&path, 2), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_csv("/nonexistent/data.csv", 2), Err(Error::Io { .. })));
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let ds = gen_synthetic(SyntheticKind::GaussianBlobs, 3, 40, 3, 0.7, 1).unwrap();
        let ds = inject_symmetric(&ds, 0.3, 2).unwrap();
        let outliers = OutlierGenerator::displaced_from(&ds, 0.7, 5.0);
        let ds = inject_openset(&ds, 0.2, &outliers, 3).unwrap();
        let path = dir.path().join("rt.csv");
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, 3).unwrap();
        assert_eq!(back, ds);
    }
}
