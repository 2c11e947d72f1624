//! CSV datasets with one sample per row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{ClusterError, Result};
use crate::model::DataMatrix;

pub fn read_dataset(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file =
        File::open(path).map_err(|e| ClusterError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(file)
}

/// Parses rows of comma-separated numbers into a matrix whose columns are the
/// rows. A first row with any non-numeric cell is treated as a header.
pub fn parse_dataset(reader: impl Read) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| ClusterError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(|c| c.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => continue,
            Err(_) => {
                let bad = record
                    .iter()
                    .find(|c| c.parse::<f64>().is_err())
                    .unwrap_or("");
                return Err(ClusterError::Parse {
                    line,
                    message: format!("non-numeric cell {bad:?}"),
                });
            }
        };
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ClusterError::Parse {
                line,
                message: format!("non-finite value {v}"),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(ClusterError::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", values.len()),
                });
            }
            Some(_) => {}
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(ClusterError::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    DataMatrix::from_samples(&rows)
}

/// Writes one sample per row, full precision, no header.
pub fn write_dataset(path: impl AsRef<Path>, x: &DataMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for j in 0..x.n_samples() {
        w.write_record(x.sample(j).iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Sidecar file with header `label,outlier`, one row per sample.
pub fn write_labels(path: impl AsRef<Path>, labels: &[usize], outlier_mask: &[bool]) -> Result<()> {
    if labels.len() != outlier_mask.len() {
        return Err(ClusterError::Shape(
            "labels and outlier mask differ in length".into(),
        ));
    }
    let mut out = String::from("label,outlier\n");
    for (l, o) in labels.iter().zip(outlier_mask) {
        out.push_str(&format!("{l},{}\n", u8::from(*o)));
    }
    File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

fn csv_err(e: csv::Error) -> ClusterError {
    ClusterError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_become_columns() {
        let x = parse_dataset("1,2\n3,4\n5,6\n7,8\n".as_bytes()).unwrap();
        assert_eq!((x.n_features(), x.n_samples()), (2, 4));
        assert_eq!(x.sample(2).as_slice(), &[5.0, 6.0]);
    }

    #[test]
    fn header_is_skipped() {
        let a = parse_dataset("x,y\n1,2\n3,4\n".as_bytes()).unwrap();
        let b = parse_dataset("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ragged_row_names_line() {
        let err = parse_dataset("1,2\n3,4\n5\n".as_bytes()).unwrap_err();
        assert!(
            matches!(err, ClusterError::Parse { line: 3, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn bad_cells_and_empty_input() {
        let err = parse_dataset("1,2\n3,oops\n".as_bytes()).unwrap_err();
        assert!(
            matches!(err, ClusterError::Parse { line: 2, .. }),
            "{err:?}"
        );
        assert!(matches!(
            parse_dataset("".as_bytes()),
            Err(ClusterError::Parse { .. })
        ));
        assert!(matches!(
            parse_dataset("a,b\n".as_bytes()),
            Err(ClusterError::Parse { .. })
        ));
        assert!(matches!(
            parse_dataset("1,inf\n".as_bytes()),
            Err(ClusterError::Parse { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let x = DataMatrix::from_column_slice(2, 3, &[0.1, -2.5, 1e-300, 3.0, 7.25, 1.0 / 3.0])
            .unwrap();
        write_dataset(&path, &x).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), x);

        let lp = dir.path().join("l.csv");
        write_labels(&lp, &[0, 1, 1], &[false, true, false]).unwrap();
        assert_eq!(
            std::fs::read_to_string(lp).unwrap(),
            "label,outlier\n0,0\n1,1\n1,0\n"
        );
    }
}
