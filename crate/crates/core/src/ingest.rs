//! CSV loading and writing for labelled MFCC tables.
//!
//! The loader keeps every column that is neither the label column nor listed
//! in `drop_columns`, parses it as `f64`, and encodes class strings by order
//! of first appearance. Empty cells are kept as NaN so they can be counted
//! with [`audit_missing`]; [`Dataset::validate`] rejects them afterwards.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataForm, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub label_column: String,
    pub drop_columns: Vec<String>,
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for SchemaConfig {
    fn default() -> Self {
        Self {
            label_column: "Species".into(),
            drop_columns: vec!["Family".into(), "Genus".into(), "RecordID".into()],
            delimiter: b',',
            has_header: true,
        }
    }
}

impl SchemaConfig {
    pub fn check(&self) -> Result<()> {
        let label = canonical_name(&self.label_column);
        if self.drop_columns.iter().any(|c| canonical_name(c) == label) {
            return Err(Error::InvalidSchema(format!(
                "label column `{}` is also listed in drop_columns",
                self.label_column
            )));
        }
        Ok(())
    }
}

/// Removes all whitespace from a header name, so `"MFCCs_ 1"` becomes `"MFCCs_1"`.
pub fn canonical_name(name: &str) -> String {
    name.chars().filter(|c| !c.is_whitespace()).collect()
}

/// A parsed CSV before label encoding.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let first = match records.next() {
        Some(r) => r?,
        None => {
            return Ok(Table {
                header: Vec::new(),
                rows: Vec::new(),
            })
        }
    };
    let first: Vec<String> = first.iter().map(str::to_owned).collect();
    let (header, mut rows) = if schema.has_header {
        (first.iter().map(|h| canonical_name(h)).collect(), Vec::new())
    } else {
        let header = (1..=first.len()).map(|i| format!("col{i}")).collect();
        (header, vec![first])
    };
    for rec in records {
        rows.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(Table { header, rows })
}

/// Loads a labelled CSV file into a `raw` dataset.
pub fn load_csv(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Dataset> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    read_csv(File::open(path)?, schema)
}

/// As [`load_csv`], from any reader.
pub fn read_csv<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Dataset> {
    schema.check()?;
    let table = read_table(reader, schema)?;
    let label_name = canonical_name(&schema.label_column);
    let label_idx = table
        .header
        .iter()
        .position(|h| *h == label_name)
        .ok_or_else(|| Error::MissingLabelColumn(schema.label_column.clone()))?;
    let dropped: Vec<String> = schema.drop_columns.iter().map(|c| canonical_name(c)).collect();
    let feature_idx: Vec<usize> = (0..table.header.len())
        .filter(|&i| i != label_idx && !dropped.contains(&table.header[i]))
        .collect();
    let column_names: Vec<String> = feature_idx.iter().map(|&i| table.header[i].clone()).collect();

    let width = table.header.len();
    let mut values = Vec::with_capacity(table.rows.len() * feature_idx.len());
    let mut labels = Vec::with_capacity(table.rows.len());
    let mut label_names: Vec<String> = Vec::new();
    let mut label_lookup: HashMap<String, usize> = HashMap::new();

    for (r, row) in table.rows.iter().enumerate() {
        let row_no = r + 1;
        if row.len() != width {
            return Err(Error::RaggedRow {
                row: row_no,
                found: row.len(),
                expected: width,
            });
        }
        for &c in &feature_idx {
            values.push(parse_cell(&row[c], row_no, &table.header[c])?);
        }
        let class = row[label_idx].trim();
        if class.is_empty() {
            return Err(Error::InvalidSchema(format!("empty label at row {row_no}")));
        }
        let next = label_names.len();
        let idx = *label_lookup.entry(class.to_owned()).or_insert_with(|| {
            label_names.push(class.to_owned());
            next
        });
        labels.push(idx);
    }

    let features = Array2::from_shape_vec((labels.len(), feature_idx.len()), values)
        .expect("row-major buffer matches shape");
    Dataset::new(features, column_names, labels, label_names, DataForm::Raw)
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<f64> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(f64::NAN);
    }
    cell.parse::<f64>().map_err(|_| Error::NonNumericCell {
        row,
        column: column.to_owned(),
        value: cell.to_owned(),
    })
}

/// Number of cells that were empty or non-finite at load time.
pub fn audit_missing(ds: &Dataset) -> usize {
    ds.features.iter().filter(|v| !v.is_finite()).count()
}

/// Feature rows read from a CSV whose columns are addressed by name, as used
/// when applying saved artifacts to new data.
#[derive(Debug, Clone)]
pub struct FeatureRows {
    pub features: Array2<f64>,
    /// Raw class strings, when the file carries the label column.
    pub classes: Option<Vec<String>>,
}

/// Reads the named columns (in the given order) from a CSV. The label column
/// is optional here.
pub fn load_columns(
    path: impl AsRef<Path>,
    schema: &SchemaConfig,
    columns: &[String],
) -> Result<FeatureRows> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let table = read_table(File::open(path)?, schema)?;
    let mut idx = Vec::with_capacity(columns.len());
    for name in columns {
        let canon = canonical_name(name);
        let i = table
            .header
            .iter()
            .position(|h| *h == canon)
            .ok_or_else(|| Error::InvalidSchema(format!("input lacks column `{name}`")))?;
        idx.push(i);
    }
    let label_name = canonical_name(&schema.label_column);
    let label_idx = table.header.iter().position(|h| *h == label_name);

    let width = table.header.len();
    let mut values = Vec::with_capacity(table.rows.len() * idx.len());
    let mut classes = label_idx.map(|_| Vec::with_capacity(table.rows.len()));
    for (r, row) in table.rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::RaggedRow {
                row: r + 1,
                found: row.len(),
                expected: width,
            });
        }
        for &c in &idx {
            let v = parse_cell(&row[c], r + 1, &table.header[c])?;
            if !v.is_finite() {
                return Err(Error::MissingValues(1));
            }
            values.push(v);
        }
        if let (Some(li), Some(cls)) = (label_idx, classes.as_mut()) {
            cls.push(row[li].trim().to_owned());
        }
    }
    let features = Array2::from_shape_vec((table.rows.len(), idx.len()), values)
        .expect("row-major buffer matches shape");
    Ok(FeatureRows { features, classes })
}

/// Writes a dataset as CSV: feature columns, then `label_header` holding the
/// class names. Numbers use the shortest text that parses back to the same `f64`.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W, label_header: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.column_names.iter().map(String::as_str).collect();
    header.push(label_header);
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(ds.n_cols() + 1);
    for (row, &label) in ds.features.rows().into_iter().zip(&ds.labels) {
        record.clear();
        record.extend(row.iter().map(|v| v.to_string()));
        record.push(ds.label_names[label].clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes an unlabelled matrix with the given header.
pub fn write_matrix_csv<W: Write>(
    features: &Array2<f64>,
    column_names: &[String],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(column_names)?;
    for row in features.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
