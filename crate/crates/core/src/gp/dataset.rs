//! Regression datasets and their CSV form (`x0,..,x(k-1),y`).

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    arity: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be x0,..,x(k-1),y with k >= 1, found `{0}`")]
    Header(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("line {line}: `{field}` is not a number")]
    Number { line: u64, field: String },
    #[error("dataset has no rows")]
    Empty,
    #[error("row {row} has {found} inputs, expected {expected}")]
    Arity { row: usize, expected: usize, found: usize },
}

impl Dataset {
    /// Builds a dataset from `(inputs, target)` rows sharing one arity.
    pub fn new(rows: Vec<(Vec<f64>, f64)>) -> Result<Self, DatasetError> {
        let arity = rows.first().ok_or(DatasetError::Empty)?.0.len();
        if arity == 0 {
            return Err(DatasetError::Arity {
                row: 0,
                expected: 1,
                found: 0,
            });
        }
        let mut inputs = Vec::with_capacity(rows.len());
        let mut targets = Vec::with_capacity(rows.len());
        for (row, (x, y)) in rows.into_iter().enumerate() {
            if x.len() != arity {
                return Err(DatasetError::Arity {
                    row,
                    expected: arity,
                    found: x.len(),
                });
            }
            inputs.push(x);
            targets.push(y);
        }
        Ok(Dataset { arity, inputs, targets })
    }

    /// Samples `f` at `n` points drawn uniformly from `[lo, hi]` (one input).
    pub fn sample_1d(
        n: usize,
        lo: f64,
        hi: f64,
        rng: &mut impl rand::Rng,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, DatasetError> {
        let rows = (0..n)
            .map(|_| {
                let x = rng.random_range(lo..=hi);
                (vec![x], f(x))
            })
            .collect();
        Dataset::new(rows)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.inputs.iter().map(Vec::as_slice).zip(self.targets.iter().copied())
    }

    pub fn from_csv_str(text: &str) -> Result<Self, DatasetError> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_reader(file)
    }

    fn from_reader(r: impl std::io::Read) -> Result<Self, DatasetError> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let header = reader.headers()?.clone();
        let fields: Vec<&str> = header.iter().collect();
        let k = fields.len().saturating_sub(1);
        let expected_names: Vec<String> = (0..k).map(super::var_name).chain(["y".to_string()]).collect();
        if k == 0 || fields != expected_names {
            return Err(DatasetError::Header(fields.join(",")));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != k + 1 {
                return Err(DatasetError::Ragged {
                    line,
                    expected: k + 1,
                    found: record.len(),
                });
            }
            let mut values = Vec::with_capacity(k + 1);
            for field in record.iter() {
                let v: f64 = field.parse().map_err(|_| DatasetError::Number {
                    line,
                    field: field.to_string(),
                })?;
                values.push(v);
            }
            let y = values.pop().expect("k + 1 fields");
            rows.push((values, y));
        }
        Dataset::new(rows)
    }

    /// CSV text with a header; values use Rust's shortest round-trip formatting.
    pub fn to_csv_string(&self) -> String {
        let mut out: Vec<String> = (0..self.arity).map(super::var_name).collect();
        out.push("y".into());
        let mut text = out.join(",");
        text.push('\n');
        for (x, y) in self.rows() {
            let cells: Vec<String> = x.iter().chain([&y]).map(|v| format!("{v:?}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        text
    }
}
