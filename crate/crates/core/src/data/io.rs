//! CSV and LIBSVM readers and writers.
//!
//! CSV: comma separated, optional header row, one label column; every
//! other column must parse as a finite real. Data rows are numbered from 1
//! in error messages, not counting the header.
//!
//! LIBSVM: `label idx:val idx:val ...` with 1-based, strictly increasing
//! indices. Omitted indices are zero. Text after `#` is ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{DataError, Dataset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

/// Maps raw label tokens onto classes 1 and 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self {
            positive: vec!["1".into(), "+1".into()],
            negative: vec!["0".into(), "-1".into()],
        }
    }
}

impl LabelMap {
    pub fn class_of(&self, token: &str) -> Option<u8> {
        let token = token.trim();
        if self.positive.iter().any(|p| p == token) {
            Some(1)
        } else if self.negative.iter().any(|n| n == token) {
            Some(0)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
    pub labels: LabelMap,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            label: LabelColumn::Last,
            labels: LabelMap::default(),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset, DataError> {
    read_csv(File::open(path)?, options)
}

pub fn read_csv(reader: impl Read, options: &CsvOptions) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header: Option<Vec<String>> = if options.has_header {
        match records.next() {
            Some(rec) => Some(
                rec.map_err(|e| DataError::Csv {
                    row: 0,
                    message: e.to_string(),
                })?
                .iter()
                .map(str::to_owned)
                .collect(),
            ),
            None => return Err(DataError::Empty),
        }
    } else {
        None
    };

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = header.as_ref().map(Vec::len);
    let mut label_idx: Option<usize> = None;
    let column_name = |c: usize| -> String {
        header
            .as_ref()
            .and_then(|h| h.get(c).cloned())
            .unwrap_or_else(|| c.to_string())
    };

    for (i, rec) in records.enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| DataError::Csv {
            row,
            message: e.to_string(),
        })?;
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(DataError::Ragged {
                row,
                expected,
                found: rec.len(),
            });
        }
        let li = match label_idx {
            Some(li) => li,
            None => {
                let li = resolve_label(&options.label, header.as_deref(), expected)?;
                label_idx = Some(li);
                li
            }
        };
        for (c, cell) in rec.iter().enumerate() {
            if c == li {
                let class = options.labels.class_of(cell).ok_or_else(|| DataError::BadLabel {
                    row,
                    column: column_name(c),
                    value: cell.to_owned(),
                })?;
                labels.push(class);
            } else {
                let x: f64 = cell
                    .parse()
                    .ok()
                    .filter(|x: &f64| x.is_finite())
                    .ok_or_else(|| DataError::NonNumeric {
                        row,
                        column: column_name(c),
                        value: cell.to_owned(),
                    })?;
                values.push(x);
            }
        }
    }

    let width = width.ok_or(DataError::Empty)?;
    let li = match label_idx {
        Some(li) => li,
        None => resolve_label(&options.label, header.as_deref(), width)?,
    };
    if width < 2 {
        return Err(DataError::NoFeatures);
    }
    let ds = Dataset::dense(values, width - 1, labels)?;
    Ok(match header {
        Some(mut h) => {
            h.remove(li);
            ds.with_feature_names(h)
        }
        None => ds,
    })
}

fn resolve_label(
    label: &LabelColumn,
    header: Option<&[String]>,
    width: usize,
) -> Result<usize, DataError> {
    match label {
        LabelColumn::Last if width > 0 => Ok(width - 1),
        LabelColumn::Last => Err(DataError::UnknownLabelColumn("last".into())),
        LabelColumn::Index(i) if *i < width => Ok(*i),
        LabelColumn::Index(i) => Err(DataError::UnknownLabelColumn(i.to_string())),
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| DataError::UnknownLabelColumn(name.clone())),
    }
}

/// Writes features then a trailing `label` column, with a header row.
pub fn write_csv(ds: &Dataset, writer: impl Write) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv {
        row: 0,
        message: e.to_string(),
    };
    let mut header: Vec<String> = match ds.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..ds.n_features()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    w.write_record(&header).map_err(csv_err)?;
    for r in 0..ds.n_rows() {
        let mut record: Vec<String> = ds.row(r).iter().map(|x| x.to_string()).collect();
        record.push(ds.labels()[r].to_string());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_libsvm(
    path: impl AsRef<Path>,
    n_features: Option<usize>,
    labels: &LabelMap,
) -> Result<Dataset, DataError> {
    read_libsvm(BufReader::new(File::open(path)?), n_features, labels)
}

/// `n_features = None` infers N from the largest index seen.
pub fn read_libsvm(
    reader: impl BufRead,
    n_features: Option<usize>,
    label_map: &LabelMap,
) -> Result<Dataset, DataError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| DataError::Libsvm {
            line: line_no,
            message,
        };
        let mut tokens = content.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a token");
        let class = label_map
            .class_of(label_token)
            .ok_or_else(|| err(format!("unrecognised label {label_token:?}")))?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad feature index in {tok:?}")))?;
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("bad feature value in {tok:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            if let Some(&(prev, _)) = row.last() {
                if idx - 1 <= prev {
                    return Err(err(format!("index {idx} does not increase")));
                }
            }
            if let Some(n) = n_features {
                if idx > n {
                    return Err(err(format!("index {idx} exceeds {n} features")));
                }
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
        labels.push(class);
    }
    Dataset::sparse(rows, n_features.unwrap_or(max_index), labels)
}

/// Writes `+1`/`-1` labels and the nonzero entries of each row.
pub fn write_libsvm(ds: &Dataset, mut writer: impl Write) -> Result<(), DataError> {
    for r in 0..ds.n_rows() {
        write!(writer, "{}", if ds.labels()[r] == 1 { "+1" } else { "-1" })?;
        for (c, x) in ds.row(r).into_iter().enumerate() {
            if x != 0.0 {
                write!(writer, " {}:{}", c + 1, x)?;
            }
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn named(label: &str) -> CsvOptions {
        CsvOptions {
            label: LabelColumn::Name(label.into()),
            ..CsvOptions::default()
        }
    }

    #[test]
    fn csv_basic() {
        let ds = read_csv("a,b,y\n1,2,0\n3,4,1\n5,6,1".as_bytes(), &named("y")).unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 1, 1]);
        assert_eq!(ds.row(2), vec![5.0, 6.0]);
        assert_eq!(ds.feature_names().unwrap(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn csv_label_in_middle_and_index() {
        let ds = read_csv("a,y,b\n1,1,2\n3,0,4".as_bytes(), &named("y")).unwrap();
        assert_eq!(ds.row(0), vec![1.0, 2.0]);
        let opts = CsvOptions {
            has_header: false,
            label: LabelColumn::Index(0),
            ..CsvOptions::default()
        };
        let ds = read_csv("-1,7\n+1,8".as_bytes(), &opts).unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.row(1), vec![8.0]);
    }

    #[test]
    fn csv_errors_name_position() {
        let err = read_csv("a,b,y\n1,x,0".as_bytes(), &named("y")).unwrap_err();
        match err {
            DataError::NonNumeric { row, column, .. } => {
                assert_eq!(row, 1);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(
            read_csv("a,b,y\n1,2,0\n1,2".as_bytes(), &named("y")),
            Err(DataError::Ragged { row: 2, .. })
        ));
        assert!(matches!(
            read_csv("a,b,y\n1,2,0".as_bytes(), &named("z")),
            Err(DataError::UnknownLabelColumn(_))
        ));
        assert!(matches!(
            read_csv("a,b,y\n1,2,3".as_bytes(), &named("y")),
            Err(DataError::BadLabel { row: 1, .. })
        ));
        assert!(matches!(
            read_csv("a,b,y\n1,inf,1".as_bytes(), &named("y")),
            Err(DataError::NonNumeric { .. })
        ));
    }

    #[test]
    fn csv_custom_label_tokens() {
        let opts = CsvOptions {
            labels: LabelMap {
                positive: vec!["yes".into()],
                negative: vec!["no".into()],
            },
            ..CsvOptions::default()
        };
        let ds = read_csv("a,y\n1,yes\n2,no".as_bytes(), &opts).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn csv_generated_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 6;
        let rows: Vec<Vec<f64>> = (0..1000)
            .map(|_| (0..d).map(|_| rng.gen::<f64>() * 1e3 - 500.0).collect())
            .collect();
        let labels = (0..1000).map(|_| rng.gen_range(0..2)).collect();
        let ds = Dataset::from_rows(&rows, labels).unwrap();
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &CsvOptions::default()).unwrap();
        let mut buf2 = Vec::new();
        write_csv(&back, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.dense_values(), ds.dense_values());
    }

    #[test]
    fn libsvm_basic() {
        let ds = read_libsvm("+1 3:0.5".as_bytes(), Some(4), &LabelMap::default()).unwrap();
        assert_eq!(ds.row(0), vec![0.0, 0.0, 0.5, 0.0]);
        assert_eq!(ds.labels(), &[1]);

        let ds = read_libsvm("-1".as_bytes(), Some(3), &LabelMap::default()).unwrap();
        assert_eq!(ds.row(0), vec![0.0; 3]);
        assert_eq!(ds.labels(), &[0]);

        let ds = read_libsvm("1 1:1\n-1 2:1".as_bytes(), None, &LabelMap::default()).unwrap();
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn libsvm_errors() {
        let map = LabelMap::default();
        assert!(read_libsvm("1 2:1 2:3".as_bytes(), None, &map).is_err());
        assert!(read_libsvm("1 3:1 2:3".as_bytes(), None, &map).is_err());
        assert!(read_libsvm("1 5:1".as_bytes(), Some(4), &map).is_err());
        assert!(read_libsvm("1 a:1".as_bytes(), None, &map).is_err());
        assert!(read_libsvm("1 1:z".as_bytes(), None, &map).is_err());
        assert!(read_libsvm("1 0:1".as_bytes(), None, &map).is_err());
        assert!(read_libsvm("2 1:1".as_bytes(), None, &map).is_err());
        let err = read_libsvm("1 1:1\n0 2:1 1:1".as_bytes(), None, &map).unwrap_err();
        assert!(matches!(err, DataError::Libsvm { line: 2, .. }));
    }

    #[test]
    fn libsvm_comments_and_roundtrip() {
        let text = "# header\n+1 1:0.25 4:-2 # trailing\n\n-1 2:3\n";
        let ds = read_libsvm(text.as_bytes(), Some(4), &LabelMap::default()).unwrap();
        assert_eq!(ds.n_rows(), 2);
        let mut buf = Vec::new();
        write_libsvm(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "+1 1:0.25 4:-2\n-1 2:3\n");
        let back = read_libsvm(buf.as_slice(), Some(4), &LabelMap::default()).unwrap();
        assert_eq!(back, ds);
    }
}
