use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::path::Path;

/// Feature matrix read from CSV, with an optional held-out label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub values: DMatrix<f64>,
    pub column_names: Vec<String>,
    pub labels: Option<Vec<String>>,
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

/// Read `feature_columns` (all non-label columns when `None`) as numbers.
///
/// Rows in error messages are 1-based data rows, not counting the header.
pub fn ingest_csv(path: &Path, feature_columns: Option<&[String]>, label_column: Option<&str>) -> Result<Dataset> {
    let mut reader = open(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("column '{name}' not found in {}", path.display())))
    };
    let label_idx = label_column.map(find).transpose()?;
    let names: Vec<String> = match feature_columns {
        Some(cols) => cols.to_vec(),
        None => header
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != label_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    if names.is_empty() {
        return Err(Error::Data("no feature columns selected".into()));
    }
    let idx = names.iter().map(|n| find(n)).collect::<Result<Vec<usize>>>()?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", r + 1)))?;
        for (&j, name) in idx.iter().zip(&names) {
            let cell = record.get(j).unwrap_or("");
            if cell.is_empty() {
                return Err(Error::Data(format!("row {}, column '{name}': empty cell", r + 1)));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Data(format!("row {}, column '{name}': '{cell}' is not a number", r + 1)))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("row {}, column '{name}': non-finite value {cell}", r + 1)));
            }
            values.push(v);
        }
        if let Some(l) = label_idx {
            labels.push(record.get(l).unwrap_or("").to_string());
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    if n <= names.len() {
        eprintln!("warning: {n} rows for {} columns", names.len());
    }
    Ok(Dataset {
        values: DMatrix::from_row_slice(n, names.len(), &values),
        column_names: names,
        labels: label_idx.map(|_| labels),
    })
}

/// Header plus one row per observation; floats use the shortest
/// representation that parses back to the same value.
pub fn write_dataset_csv(path: &Path, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&dataset.column_names)?;
    for row in dataset.values.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One label column as strings: `column`, else `label`, else the first column.
pub fn read_labels(path: &Path, column: Option<&str>) -> Result<Vec<String>> {
    let mut reader = open(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let idx = match column {
        Some(c) => header
            .iter()
            .position(|h| h == c)
            .ok_or_else(|| Error::Data(format!("column '{c}' not found in {}", path.display())))?,
        None => header.iter().position(|h| h == "label").unwrap_or(0),
    };
    let mut out = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", r + 1)))?;
        match record.get(idx) {
            Some(v) if !v.is_empty() => out.push(v.to_string()),
            _ => return Err(Error::Data(format!("row {}: missing label in {}", r + 1, path.display()))),
        }
    }
    Ok(out)
}
