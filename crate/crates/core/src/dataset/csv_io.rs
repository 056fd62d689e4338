//! `x1,...,xd,label` text files.
//!
//! The label column holds an integer in `1..=K`, or several joined with `|`
//! for multi-label points (the form written by [`write_csv_dataset`]).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{LabelSet, LabeledDataset, Normalization};
use crate::error::{Error, Result};

struct RawRows {
    dim: usize,
    points: Vec<f64>,
    labels: Vec<LabelSet>,
}

fn parse_label(field: &str, classes: usize, line: usize) -> Result<LabelSet> {
    let mut set = Vec::new();
    for part in field.split('|') {
        let value: i64 = part.trim().parse().map_err(|_| Error::Parse {
            line,
            message: format!("label '{part}' is not an integer"),
        })?;
        if value < 1 || value as usize > classes {
            return Err(Error::validation(format!(
                "line {line}: label {value} outside 1..={classes}"
            )));
        }
        set.push(value as u32);
    }
    LabelSet::new(set)
}

fn read_rows(path: &Path, classes: usize) -> Result<RawRows> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut dim = None;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(index + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if index == 0 && record.iter().all(|f| f.parse::<f64>().is_err()) {
            // header row
            continue;
        }
        if record.len() < 2 {
            return Err(Error::Parse {
                line,
                message: "expected at least one coordinate and a label".into(),
            });
        }
        let width = record.len() - 1;
        match dim {
            None => dim = Some(width),
            Some(d) if d != width => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} coordinates, found {width}", d),
                })
            }
            _ => {}
        }
        for field in record.iter().take(width) {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite coordinate '{field}'"),
                });
            }
            points.push(v);
        }
        labels.push(parse_label(&record[width], classes, line)?);
    }
    let dim = dim.ok_or_else(|| {
        Error::validation(format!("{} contains no data rows", path.display()))
    })?;
    Ok(RawRows {
        dim,
        points,
        labels,
    })
}

fn needs_normalization(points: &[f64]) -> bool {
    points.iter().any(|v| !(0.0..=1.0).contains(v))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into())
}

/// Loads one CSV file. Coordinates are min-max normalized per dimension
/// when any of them falls outside `[0,1]`.
pub fn load_csv_dataset(path: impl AsRef<Path>, classes: usize) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut rows = read_rows(path, classes)?;
    let norm = if needs_normalization(&rows.points) {
        let mut norm = Normalization::fit(&rows.points, rows.dim);
        norm.apply(&mut rows.points);
        Some(norm)
    } else {
        None
    };
    Ok(
        LabeledDataset::new(file_stem(path), rows.dim, classes, rows.points, rows.labels)?
            .with_normalization(norm),
    )
}

/// Loads a train/test pair. If either file needs normalization, both are
/// mapped with the statistics of the train file; test coordinates beyond
/// the train range are clamped and counted.
pub fn load_csv_pair(
    train_path: impl AsRef<Path>,
    test_path: impl AsRef<Path>,
    classes: usize,
) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train_path, test_path) = (train_path.as_ref(), test_path.as_ref());
    let mut train = read_rows(train_path, classes)?;
    let mut test = read_rows(test_path, classes)?;
    if train.dim != test.dim {
        return Err(Error::validation(format!(
            "train has dimension {} but test has {}",
            train.dim, test.dim
        )));
    }
    let (train_norm, test_norm) =
        if needs_normalization(&train.points) || needs_normalization(&test.points) {
            let mut train_norm = Normalization::fit(&train.points, train.dim);
            let mut test_norm = train_norm.clone();
            train_norm.apply(&mut train.points);
            test_norm.apply(&mut test.points);
            (Some(train_norm), Some(test_norm))
        } else {
            (None, None)
        };
    let train = LabeledDataset::new(
        file_stem(train_path),
        train.dim,
        classes,
        train.points,
        train.labels,
    )?
    .with_normalization(train_norm);
    let test = LabeledDataset::new(
        file_stem(test_path),
        test.dim,
        classes,
        test.points,
        test.labels,
    )?
    .with_normalization(test_norm);
    Ok((train, test))
}

/// Writes `x1,...,xd,label` rows with a header line.
pub fn write_csv_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    let header: Vec<String> = (1..=ds.dim())
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("label".to_string()))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..ds.len() {
        for v in ds.point(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&ds.label(i).to_string());
        out.push('\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn parses_plain_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "0.1,1\n0.9,2\n");
        let ds = load_csv_dataset(&p, 2).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 1));
        assert_eq!(ds.points(), &[0.1, 0.9]);
        assert_eq!(ds.single_labels().unwrap(), vec![1, 2]);
        assert!(ds.normalization().is_none());
    }

    #[test]
    fn label_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "0.1,1\n0.9,3\n");
        assert!(matches!(load_csv_dataset(&p, 2), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,label\n0.1,1\n0.x,2\n");
        match load_csv_dataset(&p, 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_validation_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "");
        assert!(matches!(load_csv_dataset(&p, 2), Err(Error::Validation(_))));
    }

    #[test]
    fn normalizes_pixel_range() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "0,10,1\n255,20,2\n100,15,1\n");
        let ds = load_csv_dataset(&p, 2).unwrap();
        assert_eq!(ds.point(0), &[0.0, 0.0]);
        assert_eq!(ds.point(1), &[1.0, 1.0]);
        assert!((ds.point(2)[0] - 100.0 / 255.0).abs() < 1e-15);
        assert!(ds.normalization().is_some());
    }

    #[test]
    fn pair_uses_train_statistics() {
        let dir = tempfile::tempdir().unwrap();
        let a = write(&dir, "tr.csv", "0,1\n200,2\n");
        let b = write(&dir, "te.csv", "100,1\n300,2\n");
        let (tr, te) = load_csv_pair(&a, &b, 2).unwrap();
        assert_eq!(tr.points(), &[0.0, 1.0]);
        assert_eq!(te.points(), &[0.5, 1.0]);
        assert_eq!(te.normalization().unwrap().clamped, 1);
    }

    #[test]
    fn export_round_trip_keeps_label_sets() {
        let dir = tempfile::tempdir().unwrap();
        let ds = LabeledDataset::new(
            "g",
            1,
            2,
            vec![0.0, 0.5, 1.0],
            vec![
                LabelSet::single(1),
                LabelSet::new(vec![1, 2]).unwrap(),
                LabelSet::single(2),
            ],
        )
        .unwrap();
        let p = dir.path().join("g.csv");
        write_csv_dataset(&ds, &p).unwrap();
        let back = load_csv_dataset(&p, 2).unwrap();
        assert_eq!(back.points(), ds.points());
        assert_eq!(back.labels(), ds.labels());
    }
}
