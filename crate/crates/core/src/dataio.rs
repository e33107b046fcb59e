//! Matrix files, standardization and label-based partitioning of classification tables.
//!
//! Matrix CSV: one observation per line, comma-separated numbers. Lines starting with `#` are
//! metadata; they are kept verbatim (minus the marker) on the returned [`DataMatrix`]. Blank
//! lines are skipped. Values are written with Rust's shortest round-trip float formatting, so a
//! matrix written and read back is bit-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Sample standard deviations below this mark a column as constant.
pub const ZERO_STD_TOL: f64 = 1e-12;

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, origin: impl Into<PathBuf>) -> Result<DataMatrix> {
    let origin = origin.into();
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: origin.clone(),
        line,
        column,
        message,
    };
    let mut metadata = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut rows = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            metadata.push(meta.trim().to_string());
            continue;
        }
        let mut count = 0;
        for (col, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let v: f64 = cell.parse().map_err(|_| {
                parse_err(line_no, col + 1, format!("cannot parse {cell:?} as a number"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(line_no, col + 1, format!("non-finite value {cell:?}")));
            }
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(parse_err(
                    line_no,
                    count.min(w) + 1,
                    format!("ragged row: {count} fields, expected {w}"),
                ));
            }
            Some(_) => {}
        }
        rows += 1;
    }
    let m = width.ok_or_else(|| Error::EmptyData(format!("{} has no data rows", origin.display())))?;
    Ok(DataMatrix::new(DMatrix::from_row_slice(rows, m, &values))?.with_metadata(metadata))
}

/// Renders a matrix file: `# ` metadata lines, an optional `# `-prefixed column header, rows.
pub fn format_matrix(
    values: &DMatrix<f64>,
    metadata: &[String],
    column_names: Option<&[String]>,
) -> String {
    let mut out = String::new();
    for line in metadata {
        let _ = writeln!(out, "# {line}");
    }
    if let Some(names) = column_names {
        let _ = writeln!(out, "# {}", names.join(","));
    }
    for row in values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix(
    path: impl AsRef<Path>,
    values: &DMatrix<f64>,
    metadata: &[String],
    column_names: Option<&[String]>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_matrix(values, metadata, column_names)).map_err(|e| Error::io(path, e))
}

/// Output of [`standardize`].
#[derive(Debug, Clone)]
pub struct Standardized {
    pub data: DataMatrix,
    /// Input column index of every output column.
    pub kept_columns: Vec<usize>,
    pub means: Vec<f64>,
    /// Sample standard deviations (divisor n - 1) of the kept columns.
    pub stds: Vec<f64>,
}

/// Drops constant columns, then centers and scales the rest to unit sample standard deviation.
pub fn standardize(a: &DataMatrix) -> Result<Standardized> {
    let n = a.n();
    if n < 2 {
        return Err(Error::param(format!(
            "standardization needs at least 2 observations, got {n}"
        )));
    }
    let mut kept_columns = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for (j, col) in a.values().column_iter().enumerate() {
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        if std >= ZERO_STD_TOL {
            kept_columns.push(j);
            means.push(mean);
            stds.push(std);
        }
    }
    if kept_columns.is_empty() {
        return Err(Error::EmptyData(
            "every column has zero standard deviation".into(),
        ));
    }
    let out = DMatrix::from_fn(n, kept_columns.len(), |i, k| {
        (a.values()[(i, kept_columns[k])] - means[k]) / stds[k]
    });
    let mut metadata = a.metadata().to_vec();
    metadata.push(format!(
        "standardized kept_columns={}",
        kept_columns
            .iter()
            .map(|j| j.to_string())
            .collect::<Vec<_>>()
            .join(";")
    ));
    Ok(Standardized {
        data: DataMatrix::new(out)?.with_metadata(metadata),
        kept_columns,
        means,
        stds,
    })
}

/// A classification table: numeric attributes plus one categorical label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTable {
    pub values: DMatrix<f64>,
    pub labels: Vec<String>,
    pub attribute_names: Vec<String>,
}

impl LabeledTable {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>, attribute_names: Vec<String>) -> Result<Self> {
        if labels.len() != values.nrows() || attribute_names.len() != values.ncols() {
            return Err(Error::param(format!(
                "table is {}x{} but has {} labels and {} attribute names",
                values.nrows(),
                values.ncols(),
                labels.len(),
                attribute_names.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("table has non-finite entries".into()));
        }
        Ok(LabeledTable { values, labels, attribute_names })
    }
}

/// Which column of a labeled CSV holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Last,
    /// Zero-based column index.
    Index(usize),
    /// Header name.
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => s
                .parse()
                .map(LabelColumn::Index)
                .unwrap_or_else(|_| LabelColumn::Name(s.to_string())),
        })
    }
}

/// Reads a labeled CSV. The first record is treated as a header when any of its attribute
/// cells fails to parse as a number; otherwise attributes are named `attr1, attr2, ...`.
pub fn read_labeled(path: impl AsRef<Path>, label: &LabelColumn) -> Result<LabeledTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(|e| csv_error(path, e))?);
    }
    let first = records
        .first()
        .ok_or_else(|| Error::EmptyData(format!("{} has no rows", path.display())))?;
    let width = first.len();
    let label_idx = match label {
        LabelColumn::Last => width - 1,
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(Error::param(format!("label column {i} out of range (width {width})")))
        }
        LabelColumn::Name(name) => first.iter().position(|c| c == name).ok_or_else(|| {
            Error::param(format!("no column named {name:?} in {}", path.display()))
        })?,
    };
    let has_header = matches!(label, LabelColumn::Name(_))
        || first
            .iter()
            .enumerate()
            .any(|(j, c)| j != label_idx && c.parse::<f64>().is_err());
    let attribute_names: Vec<String> = if has_header {
        first
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != label_idx)
            .map(|(_, c)| c.to_string())
            .collect()
    } else {
        (1..width).map(|k| format!("attr{k}")).collect()
    };

    let body = if has_header { &records[1..] } else { &records[..] };
    let mut values = Vec::with_capacity(body.len() * (width - 1));
    let mut labels = Vec::with_capacity(body.len());
    for rec in body {
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: rec.len().min(width) + 1,
                message: format!("ragged row: {} fields, expected {width}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                labels.push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line,
                        column: j + 1,
                        message: format!("cannot parse {cell:?} as a finite number"),
                    })
                }
            }
        }
    }
    LabeledTable::new(
        DMatrix::from_row_slice(labels.len(), width - 1, &values),
        labels,
        attribute_names,
    )
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: (len.min(expected_len) + 1) as usize,
            message: format!("ragged row: {len} fields, expected {expected_len}"),
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// One label's rows.
#[derive(Debug, Clone)]
pub struct LabelGroup {
    pub label: String,
    /// Row indices into the source table.
    pub rows: Vec<usize>,
    pub raw: DataMatrix,
    /// `None` when the group cannot be standardized (a single row, or only constant columns).
    pub standardized: Option<Standardized>,
}

/// Groups rows by label, largest groups first (ties by label), and keeps the first `top_k`.
pub fn partition_by_label(tbl: &LabeledTable, top_k: usize) -> Result<Vec<LabelGroup>> {
    if top_k < 1 {
        return Err(Error::param("top_k must be at least 1"));
    }
    if tbl.labels.is_empty() {
        return Err(Error::EmptyData("table has no rows".into()));
    }
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, label) in tbl.labels.iter().enumerate() {
        by_label.entry(label.as_str()).or_default().push(i);
    }
    let mut groups: Vec<(&str, Vec<usize>)> = by_label.into_iter().collect();
    // BTreeMap order is lexicographic, and the sort is stable
    groups.sort_by_key(|g| std::cmp::Reverse(g.1.len()));
    groups
        .into_iter()
        .take(top_k)
        .map(|(label, rows)| {
            let raw = DataMatrix::new(tbl.values.select_rows(rows.iter()))?
                .with_metadata(vec![format!("label={label} rows={}", rows.len())]);
            let standardized = standardize(&raw).ok();
            Ok(LabelGroup {
                label: label.to_string(),
                rows,
                raw,
                standardized,
            })
        })
        .collect()
}
