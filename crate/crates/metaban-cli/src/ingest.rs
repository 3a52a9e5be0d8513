//! CSV ingestion: rating files, precomputed feature files, and labeled
//! classification rows. Formats are plain headered CSV:
//!
//! - ratings: `user_id,item_id,rating`
//! - features: `item_id,f1,...,fd`
//! - classification: `label,p1,...,pd` (features normalized on load)

use std::collections::BTreeMap;
use std::path::Path;

use metaban::env::classification::ClassificationEnv;
use metaban::env::rating::RatingRecord;

use crate::{CliError, Result};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                CliError::Io(std::io::Error::new(std::io::ErrorKind::NotFound, e))
            }
            _ => parse_err(path, 1, e.to_string()),
        })
}

/// Line number of a record for error messages (1-based, header included).
fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Read `user_id,item_id,rating` rows.
pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    if headers.len() < 3 {
        return Err(parse_err(path, 1, "expected header user_id,item_id,rating"));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() < 3 {
            return Err(parse_err(path, line, "expected 3 fields"));
        }
        let rating: f64 = record[2]
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad rating '{}'", &record[2])))?;
        out.push(RatingRecord {
            user: record[0].to_string(),
            item: record[1].to_string(),
            rating,
        });
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no rating rows"));
    }
    Ok(out)
}

/// Read `item_id,f1,...,fd` rows into a feature map.
pub fn read_features(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let dim = headers.len().saturating_sub(1);
    if dim == 0 {
        return Err(parse_err(path, 1, "expected header item_id,f1,...,fd"));
    }
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != dim + 1 {
            return Err(parse_err(path, line, format!("expected {} fields", dim + 1)));
        }
        let mut f = Vec::with_capacity(dim);
        for field in record.iter().skip(1) {
            f.push(
                field
                    .parse()
                    .map_err(|_| parse_err(path, line, format!("bad feature '{field}'")))?,
            );
        }
        out.insert(record[0].to_string(), f);
    }
    if out.is_empty() {
        return Err(parse_err(path, 1, "no feature rows"));
    }
    Ok(out)
}

/// Read `label,p1,...,pd` rows and build a classification environment.
/// Labels are mapped to class indices in sorted order; features are
/// normalized to unit length on load.
pub fn read_classification(path: &Path, seed: u64) -> Result<ClassificationEnv> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers().map_err(|e| parse_err(path, 1, e.to_string()))?;
    let dim = headers.len().saturating_sub(1);
    if dim == 0 {
        return Err(parse_err(path, 1, "expected header label,p1,...,pd"));
    }
    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, 0, e.to_string()))?;
        let line = line_of(&record);
        if record.len() != dim + 1 {
            return Err(parse_err(path, line, format!("expected {} fields", dim + 1)));
        }
        let mut x = Vec::with_capacity(dim);
        for field in record.iter().skip(1) {
            x.push(
                field
                    .parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("bad feature '{field}'")))?,
            );
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            return Err(parse_err(path, line, "zero feature vector"));
        }
        for v in x.iter_mut() {
            *v /= norm;
        }
        raw.push((record[0].to_string(), x));
    }
    if raw.is_empty() {
        return Err(parse_err(path, 1, "no classification rows"));
    }
    let mut labels: Vec<String> = raw.iter().map(|(l, _)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let rows: Vec<(usize, Vec<f64>)> = raw
        .into_iter()
        .map(|(l, x)| (index[l.as_str()], x))
        .collect();
    Ok(ClassificationEnv::new(rows, labels.len(), seed)?)
}

/// Write an `item_id,f1,...,fd` feature CSV (the ingest subcommand output;
/// loadable back through [`read_features`]). Items with empty features are
/// skipped.
pub fn write_features(
    path: &Path,
    keys: &[String],
    features: &[Vec<f64>],
    dim: usize,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "item_id")?;
    for i in 1..=dim {
        write!(out, ",f{i}")?;
    }
    writeln!(out)?;
    for (key, f) in keys.iter().zip(features.iter()) {
        if f.is_empty() {
            continue;
        }
        write!(out, "{key}")?;
        for v in f {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_well_formed_ratings() {
        let f = write_tmp("user_id,item_id,rating\nu1,i1,3.5\nu2,i1,1\n");
        let records = read_ratings(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].user, "u1");
        assert_eq!(records[1].rating, 1.0);
    }

    #[test]
    fn malformed_rating_reports_line_number() {
        let f = write_tmp("user_id,item_id,rating\nu1,i1,3.5\nu2,i1,notanumber\n");
        match read_ratings(f.path()) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn feature_file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        let keys = vec!["a".to_string(), "b".to_string()];
        let feats = vec![vec![0.6, 0.8], vec![1.0, 0.0]];
        write_features(&path, &keys, &feats, 2).unwrap();
        let back = read_features(&path).unwrap();
        assert_eq!(back["a"], vec![0.6, 0.8]);
        assert_eq!(back["b"], vec![1.0, 0.0]);
    }

    #[test]
    fn classification_rows_are_normalized_and_indexed() {
        let f = write_tmp("label,p1,p2\nb,3,4\na,1,0\nb,0,2\na,0,5\n");
        let mut env = read_classification(f.path(), 1).unwrap();
        use metaban::env::Environment;
        assert_eq!(env.num_users(), 2);
        assert_eq!(env.arm_dim(), 3); // d=2, k=2
        let round = env.step(1);
        for arm in round.arms.arms() {
            let n = arm.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn classification_rejects_zero_vectors() {
        let f = write_tmp("label,p1,p2\na,0,0\n");
        assert!(matches!(
            read_classification(f.path(), 0),
            Err(CliError::Parse { line: 2, .. })
        ));
    }
}
