//! Descriptive statistics and Pearson correlation.

use std::fmt::Write as _;
use std::io::Write;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Summary of one column, as drawn by a box plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub count: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile of pre-sorted data with linear interpolation between the two
/// closest ranks (position `q·(n−1)`).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn summarize(name: &str, col: ArrayView1<'_, f64>) -> ColumnSummary {
    let n = col.len();
    let mean = col.sum() / n as f64;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    ColumnSummary {
        name: name.to_owned(),
        count: n,
        mean,
        std: var.sqrt(),
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

pub fn describe(ds: &Dataset) -> Result<Vec<ColumnSummary>> {
    if ds.n_rows() == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    Ok(ds
        .column_names
        .iter()
        .zip(ds.features.columns())
        .map(|(name, col)| summarize(name, col))
        .collect())
}

pub fn write_describe_csv<W: Write>(rows: &[ColumnSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["column", "count", "mean", "std", "min", "q1", "median", "q3", "max"])?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.count.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.min.to_string(),
            r.q1.to_string(),
            r.median.to_string(),
            r.q3.to_string(),
            r.max.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
}

impl CorrelationMatrix {
    /// Coefficient between two columns addressed by name.
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.column_names.iter().position(|c| c == a)?;
        let j = self.column_names.iter().position(|c| c == b)?;
        Some(self.values[[i, j]])
    }

    /// CSV grid with the column names as header row and first column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.column_names.iter().zip(self.values.rows()) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width text grid with two decimals, for terminals.
    pub fn render_text(&self) -> String {
        let width = self
            .column_names
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max(5);
        let mut out = String::new();
        let _ = write!(out, "{:width$}", "");
        for (j, _) in self.column_names.iter().enumerate() {
            let _ = write!(out, " {:>5}", j + 1);
        }
        out.push('\n');
        for (i, name) in self.column_names.iter().enumerate() {
            let _ = write!(out, "{name:width$}");
            for j in 0..self.column_names.len() {
                let _ = write!(out, " {:>5.2}", self.values[[i, j]]);
            }
            out.push('\n');
        }
        out
    }
}

/// Pearson r between two equal-length columns. Returns 0 if either is constant.
pub fn pearson(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    let n = x.len() as f64;
    let mx = x.sum() / n;
    let my = y.sum() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y.iter()) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation for every pair of columns. The diagonal is 1 by
/// convention, including for constant columns.
pub fn correlation_matrix(ds: &Dataset) -> Result<CorrelationMatrix> {
    if ds.n_rows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: ds.n_rows(),
        });
    }
    let d = ds.n_cols();
    let mut values = Array2::<f64>::eye(d);
    for i in 0..d {
        for j in (i + 1)..d {
            let r = pearson(ds.features.column(i), ds.features.column(j));
            values[[i, j]] = r;
            values[[j, i]] = r;
        }
    }
    Ok(CorrelationMatrix {
        values,
        column_names: ds.column_names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DataForm;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    fn columns(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let x = Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i]);
        Dataset::new(
            x,
            (0..cols.len()).map(|j| format!("c{j}")).collect(),
            vec![0; n],
            vec!["A".into()],
            DataForm::Clean,
        )
        .unwrap()
    }

    #[test]
    fn describe_simple_column() {
        let s = &describe(&columns(&[&[1.0, 2.0, 3.0, 4.0]])).unwrap()[0];
        assert_eq!((s.mean, s.median, s.min, s.max), (2.5, 2.5, 1.0, 4.0));
        // Ranks 0.75 and 2.25 by interpolation.
        assert_eq!((s.q1, s.q3), (1.75, 3.25));
    }

    #[test]
    fn describe_constant_column() {
        let s = &describe(&columns(&[&[7.0, 7.0]])).unwrap()[0];
        assert_eq!((s.std, s.q1, s.median, s.q3), (0.0, 7.0, 7.0, 7.0));
    }

    #[test]
    fn describe_skewed_column() {
        // Sorted [0,0,0,0,100]: median at rank 2 → 0; q3 at rank 3 → 0.
        let s = &describe(&columns(&[&[0.0, 100.0, 0.0, 0.0, 0.0]])).unwrap()[0];
        assert_eq!((s.mean, s.median, s.q3, s.max), (20.0, 0.0, 0.0, 100.0));
        assert_eq!(s.std, 40.0);
    }

    #[test]
    fn correlation_identity_and_negation() {
        let x = [1.0, 3.0, 2.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = correlation_matrix(&columns(&[&x, &x, &neg])).unwrap();
        assert_abs_diff_eq!(c.values[[0, 1]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.values[[0, 2]], -1.0, epsilon = 1e-12);
        assert_eq!(c.get("c2", "c0"), Some(c.values[[2, 0]]));
    }

    #[test]
    fn constant_column_has_zero_correlation() {
        let c = correlation_matrix(&columns(&[&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]])).unwrap();
        assert_eq!(c.values[[0, 1]], 0.0);
        assert_eq!(c.values[[1, 1]], 1.0);
    }

    #[test]
    fn correlation_needs_two_rows() {
        assert!(correlation_matrix(&columns(&[&[1.0]])).is_err());
    }

    #[test]
    fn csv_grid_has_names_on_both_axes() {
        let c = correlation_matrix(&columns(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, ",c0,c1\nc0,1,-1\nc1,-1,1\n");
        assert!(c.render_text().contains("-1.00"));
    }
}
