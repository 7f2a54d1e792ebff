//! Mixed-type datasets: typed columns, CSV ingestion, indicator coding.
//!
//! ## Purpose
//! Holds observations on numerical and categorical variables in a form the
//! distance engine can consume: numeric columns as `f64`, categorical
//! columns as integer codes plus level labels.
//!
//! ## Design notes
//! - Levels are coded in order of first appearance, so ingestion is
//!   deterministic and row order matters only for label assignment, never
//!   for the distances themselves.
//! - Missing values are rejected at the door. Every downstream formula
//!   assumes complete data, and silently imputing would change the
//!   distances.
//! - Equal-width discretization keeps the declared number of bins even if
//!   some end up unpopulated; strict proportions flag that downstream when
//!   a method actually needs every level observed.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Declared type of a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Schema: which CSV columns to load and how to treat them. Dataset column
/// order always follows the CSV header, not the schema.
#[derive(Debug, Clone, Default)]
pub struct Schema {
    entries: Vec<(String, ColumnKind)>,
}

impl Schema {
    pub fn new(entries: Vec<(String, ColumnKind)>) -> Self {
        Schema { entries }
    }

    pub fn kind_of(&self, name: &str) -> Option<ColumnKind> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Column payload: parsed numbers, or first-appearance integer codes with
/// their level labels.
#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<usize>, levels: Vec<String> },
}

/// A named column of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical(
        name: impl Into<String>,
        codes: Vec<usize>,
        levels: Vec<String>,
    ) -> Self {
        Column {
            name: name.into(),
            data: ColumnData::Categorical { codes, levels },
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self.data {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric values, if this is a numeric column.
    pub fn as_numeric(&self) -> Option<&[f64]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            _ => None,
        }
    }

    /// Codes and levels, if this is a categorical column.
    pub fn as_categorical(&self) -> Option<(&[usize], &[String])> {
        match &self.data {
            ColumnData::Categorical { codes, levels } => Some((codes, levels)),
            _ => None,
        }
    }
}

/// Observations on a fixed set of typed columns, all of length `n >= 2`.
#[derive(Debug, Clone)]
pub struct MixedDataset {
    n: usize,
    columns: Vec<Column>,
}

impl MixedDataset {
    /// Validate and assemble a dataset from columns.
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n = columns.first().map_or(0, Column::len);
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::Config(format!(
                    "column '{}' has {} rows, expected {}",
                    col.name,
                    col.len(),
                    n
                )));
            }
            match &col.data {
                ColumnData::Numeric(values) => {
                    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                        return Err(Error::NumericParse {
                            column: col.name.clone(),
                            row: bad + 1,
                            value: values[bad].to_string(),
                        });
                    }
                }
                ColumnData::Categorical { codes, levels } => {
                    if levels.len() < 2 {
                        return Err(Error::SingleLevel(col.name.clone()));
                    }
                    if let Some(&bad) = codes.iter().find(|&&c| c >= levels.len()) {
                        return Err(Error::Config(format!(
                            "column '{}' has code {} outside its {} levels",
                            col.name,
                            bad,
                            levels.len()
                        )));
                    }
                }
            }
        }
        Ok(MixedDataset { n, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn numeric_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].kind() == ColumnKind::Numeric)
            .collect()
    }

    pub fn categorical_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].kind() == ColumnKind::Categorical)
            .collect()
    }

    /// The dataset with column `j` removed; used by leave-one-out analyses.
    pub fn without_column(&self, j: usize) -> Result<MixedDataset> {
        if self.columns.len() < 2 {
            return Err(Error::Config(
                "cannot drop the only variable in the dataset".into(),
            ));
        }
        let columns = self
            .columns
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, c)| c.clone())
            .collect();
        MixedDataset::new(columns)
    }
}

/// Load a dataset from CSV text: comma-separated, UTF-8, first row a header.
/// Only columns named in the schema are kept, in header order.
pub fn load_csv<R: Read>(reader: R, schema: &Schema) -> Result<MixedDataset> {
    if schema.is_empty() {
        return Err(Error::Config("schema has no columns".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    for name in schema.names() {
        if !header.iter().any(|h| h == name) {
            return Err(Error::ColumnNotFound(name.to_owned()));
        }
    }

    // (header position, name, kind) for the columns we keep, header order.
    let selected: Vec<(usize, String, ColumnKind)> = header
        .iter()
        .enumerate()
        .filter_map(|(pos, name)| schema.kind_of(name).map(|k| (pos, name.clone(), k)))
        .collect();

    enum Builder {
        Numeric(Vec<f64>),
        Categorical {
            codes: Vec<usize>,
            levels: Vec<String>,
        },
    }
    let mut builders: Vec<Builder> = selected
        .iter()
        .map(|(_, _, kind)| match kind {
            ColumnKind::Numeric => Builder::Numeric(Vec::new()),
            ColumnKind::Categorical => Builder::Categorical {
                codes: Vec::new(),
                levels: Vec::new(),
            },
        })
        .collect();

    let mut row = 0usize;
    for record in rdr.records() {
        let record = record?;
        row += 1;
        for ((pos, name, _), builder) in selected.iter().zip(&mut builders) {
            let cell = record.get(*pos).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::MissingValue {
                    column: name.clone(),
                    row,
                });
            }
            match builder {
                Builder::Numeric(values) => {
                    let parsed: f64 = cell.parse().map_err(|_| Error::NumericParse {
                        column: name.clone(),
                        row,
                        value: cell.to_owned(),
                    })?;
                    if !parsed.is_finite() {
                        return Err(Error::NumericParse {
                            column: name.clone(),
                            row,
                            value: cell.to_owned(),
                        });
                    }
                    values.push(parsed);
                }
                Builder::Categorical { codes, levels } => {
                    let code = match levels.iter().position(|l| l == cell) {
                        Some(code) => code,
                        None => {
                            levels.push(cell.to_owned());
                            levels.len() - 1
                        }
                    };
                    codes.push(code);
                }
            }
        }
    }
    if row < 2 {
        return Err(Error::TooFewRows(row));
    }

    let columns = selected
        .into_iter()
        .zip(builders)
        .map(|((_, name, _), builder)| match builder {
            Builder::Numeric(values) => Ok(Column::numeric(name, values)),
            Builder::Categorical { codes, levels } => {
                if levels.len() < 2 {
                    return Err(Error::SingleLevel(name));
                }
                Ok(Column::categorical(name, codes, levels))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MixedDataset::new(columns)
}

/// Load a dataset from a CSV file on disk.
pub fn load_csv_path(path: impl AsRef<Path>, schema: &Schema) -> Result<MixedDataset> {
    load_csv(File::open(path)?, schema)
}

/// One-hot indicator matrix of a categorical column: n rows, one column per
/// level, exactly one 1 per row.
pub fn indicator(codes: &[usize], n_levels: usize) -> Matrix {
    let mut z = Matrix::zeros(codes.len(), n_levels);
    for (i, &c) in codes.iter().enumerate() {
        z[(i, c)] = 1.0;
    }
    z
}

/// Observation counts per level, including zeros for unobserved levels.
pub fn level_counts(codes: &[usize], n_levels: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_levels];
    for &c in codes {
        counts[c] += 1;
    }
    counts
}

/// Relative frequencies per level. `column` only labels errors.
///
/// Strict by construction: a declared level with zero observations is an
/// error, because the dissimilarities that consume proportions divide by
/// them. Use [`level_counts`] when zeros are acceptable.
pub fn proportions(codes: &[usize], levels: &[String], column: &str) -> Result<Vec<f64>> {
    let counts = level_counts(codes, levels.len());
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyLevel {
            column: column.to_owned(),
            level: levels[empty].clone(),
        });
    }
    let n = codes.len() as f64;
    Ok(counts.iter().map(|&c| c as f64 / n).collect())
}

/// Discretize a numeric column into `q` equal-width bins over its observed
/// range. The last bin is closed so the maximum lands in bin `q - 1`; all
/// other bins are half-open `[lo, hi)`. Bins are labeled by their intervals
/// and ordered by value, so codes preserve the variable's ordering.
pub fn discretize(name: &str, values: &[f64], q: usize) -> Result<Column> {
    if q < 2 {
        return Err(Error::Config(format!(
            "discretization needs at least 2 bins, got {q}"
        )));
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) || max == min {
        return Err(Error::DegenerateColumn {
            column: name.to_owned(),
            reason: "zero range, cannot discretize".into(),
        });
    }
    let width = (max - min) / q as f64;
    let codes = values
        .iter()
        .map(|&x| (((x - min) / width) as usize).min(q - 1))
        .collect();
    let levels = (0..q)
        .map(|b| {
            let lo = min + b as f64 * width;
            if b + 1 == q {
                format!("[{lo}, {max}]")
            } else {
                format!("[{lo}, {})", min + (b + 1) as f64 * width)
            }
        })
        .collect();
    Ok(Column::categorical(name, codes, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema(pairs: &[(&str, ColumnKind)]) -> Schema {
        Schema::new(
            pairs
                .iter()
                .map(|(n, k)| (n.to_string(), *k))
                .collect(),
        )
    }

    const CSV: &str = "\
height,foot,city
1.80,left,ams
1.65,right,rot
1.72,left,ams
1.90,right,utr
";

    #[test]
    fn loads_mixed_csv_with_first_appearance_coding() {
        let s = schema(&[
            ("height", ColumnKind::Numeric),
            ("foot", ColumnKind::Categorical),
            ("city", ColumnKind::Categorical),
        ]);
        let ds = load_csv(CSV.as_bytes(), &s).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.n_columns(), 3);
        assert_eq!(ds.column(0).as_numeric().unwrap(), &[1.80, 1.65, 1.72, 1.90]);
        let (codes, levels) = ds.column(1).as_categorical().unwrap();
        assert_eq!(codes, &[0, 1, 0, 1]);
        assert_eq!(levels, &["left".to_string(), "right".to_string()]);
        let (codes, levels) = ds.column(2).as_categorical().unwrap();
        assert_eq!(codes, &[0, 1, 0, 2]);
        assert_eq!(levels.len(), 3);
    }

    #[test]
    fn schema_subset_keeps_header_order() {
        let s = schema(&[
            ("city", ColumnKind::Categorical),
            ("height", ColumnKind::Numeric),
        ]);
        let ds = load_csv(CSV.as_bytes(), &s).unwrap();
        // header order wins over schema order
        assert_eq!(ds.column(0).name, "height");
        assert_eq!(ds.column(1).name, "city");
    }

    #[test]
    fn missing_schema_column_is_an_error() {
        let s = schema(&[("weight", ColumnKind::Numeric)]);
        let err = load_csv(CSV.as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::ColumnNotFound(name) if name == "weight"));
    }

    #[test]
    fn parse_error_names_row_and_column() {
        let s = schema(&[("height", ColumnKind::Numeric)]);
        let bad = "height\n1.80\noops\n1.90\n";
        let err = load_csv(bad.as_bytes(), &s).unwrap_err();
        match err {
            Error::NumericParse { column, row, value } => {
                assert_eq!(column, "height");
                assert_eq!(row, 2);
                assert_eq!(value, "oops");
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn empty_cell_is_rejected() {
        // A fully blank line is not a record in CSV, so the empty cell
        // sits next to a populated one.
        let s = schema(&[
            ("foot", ColumnKind::Categorical),
            ("city", ColumnKind::Categorical),
        ]);
        let bad = "foot,city\nleft,ams\n,rot\nright,utr\n";
        let err = load_csv(bad.as_bytes(), &s).unwrap_err();
        match err {
            Error::MissingValue { column, row } => {
                assert_eq!(column, "foot");
                assert_eq!(row, 2);
            }
            other => panic!("unexpected error: {other:?}"),
        }
    }

    #[test]
    fn single_observed_level_is_rejected() {
        let s = schema(&[("foot", ColumnKind::Categorical)]);
        let bad = "foot\nleft\nleft\nleft\n";
        let err = load_csv(bad.as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::SingleLevel(name) if name == "foot"));
    }

    #[test]
    fn fewer_than_two_rows_is_an_error() {
        let s = schema(&[("height", ColumnKind::Numeric)]);
        let err = load_csv("height\n1.80\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::TooFewRows(1)));
    }

    #[test]
    fn non_finite_numeric_is_rejected() {
        let s = schema(&[("height", ColumnKind::Numeric)]);
        let err = load_csv("height\n1.0\nNaN\n".as_bytes(), &s).unwrap_err();
        assert!(matches!(err, Error::NumericParse { row: 2, .. }));
    }

    #[test]
    fn indicator_is_one_hot() {
        let z = indicator(&[0, 2, 1, 2], 3);
        assert_eq!(z.rows(), 4);
        assert_eq!(z.cols(), 3);
        for i in 0..4 {
            let sum: f64 = z.row(i).iter().sum();
            assert_eq!(sum, 1.0);
        }
        assert_eq!(z[(1, 2)], 1.0);
        assert_eq!(z[(1, 0)], 0.0);
    }

    #[test]
    fn proportions_sum_to_one_and_catch_empty_levels() {
        let levels: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let p = proportions(&[0, 1, 2, 1], &levels, "x").unwrap();
        assert_eq!(p, vec![0.25, 0.5, 0.25]);

        let err = proportions(&[0, 1, 1, 0], &levels, "x").unwrap_err();
        assert!(matches!(err, Error::EmptyLevel { level, .. } if level == "c"));
    }

    #[test]
    fn discretize_assigns_equal_width_bins_with_closed_last_bin() {
        let col = discretize("x", &[0.0, 0.4, 1.6, 2.0, 4.0], 4).unwrap();
        let (codes, levels) = col.as_categorical().unwrap();
        assert_eq!(codes, &[0, 0, 1, 2, 3]); // the max lands in the last bin
        assert_eq!(levels.len(), 4);
        assert!(levels[3].ends_with(']'));
        assert!(levels[0].ends_with(')'));
    }

    #[test]
    fn discretize_rejects_constant_columns() {
        let err = discretize("x", &[3.0, 3.0, 3.0], 2).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { .. }));
    }

    #[test]
    fn without_column_drops_exactly_one() {
        let ds = MixedDataset::new(vec![
            Column::numeric("a", vec![1.0, 2.0]),
            Column::numeric("b", vec![3.0, 4.0]),
        ])
        .unwrap();
        let reduced = ds.without_column(0).unwrap();
        assert_eq!(reduced.n_columns(), 1);
        assert_eq!(reduced.column(0).name, "b");
        assert!(reduced.without_column(0).is_err());
    }

    proptest! {
        #[test]
        fn indicator_rows_always_sum_to_one(codes in proptest::collection::vec(0usize..5, 2..40)) {
            let z = indicator(&codes, 5);
            for i in 0..codes.len() {
                let sum: f64 = z.row(i).iter().sum();
                prop_assert_eq!(sum, 1.0);
            }
        }

        #[test]
        fn observed_proportions_sum_to_one(codes in proptest::collection::vec(0usize..4, 4..60)) {
            let q = codes.iter().max().unwrap() + 1;
            let levels: Vec<String> = (0..q).map(|i| i.to_string()).collect();
            if (0..q).all(|c| codes.contains(&c)) {
                let p = proportions(&codes, &levels, "x").unwrap();
                let total: f64 = p.iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }
}
