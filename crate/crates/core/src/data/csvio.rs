//! CSV ingestion and export.
//!
//! Files carry a header row.  Feature columns follow a [`FeatureSchema`];
//! the label column (`y` by default) holds label names; the group column
//! holds 0/1.  The group column is `z` when present, otherwise `sex` (the
//! synthetic benchmark writes its indicator there), and an explicit name
//! overrides both.  A group column not named `z` is also kept as an
//! ordinary feature.  Soft predictions travel in `p_0..p_{k-1}` columns,
//! all present or all absent.

use crate::dataset::{
    DataError, Dataset, FeatureKind, FeatureSchema, FeatureValue, LabelSpace, Sample,
};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

/// Probability columns may carry rounded text; they must sum to 1 within
/// this tolerance and are renormalized after the check.
pub const CSV_PREDICTION_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Malformed(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("no group column: expected `z` or `sex` in the header")]
    MissingGroupColumn,
    #[error("file has a header but no data rows")]
    NoRows,
    #[error("row {row}, column `{column}`: {message}")]
    Cell { row: usize, column: String, message: String },
    #[error("found {found} of {expected} prediction columns; need all or none")]
    PredictionColumns { expected: usize, found: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvFormat {
    pub label_column: String,
    /// `None` resolves to `z` when present, then `sex`.
    pub group_column: Option<String>,
}

impl Default for CsvFormat {
    fn default() -> Self {
        CsvFormat { label_column: "y".into(), group_column: None }
    }
}

impl CsvFormat {
    /// Name of the group column this format selects in the given header:
    /// the explicit choice, else `z`, else `sex`.
    pub fn resolve_group<'a>(&'a self, header: &[String]) -> Result<&'a str, CsvError> {
        match &self.group_column {
            Some(name) => {
                if header.iter().any(|h| h == name) {
                    Ok(name)
                } else {
                    Err(CsvError::MissingColumn(name.clone()))
                }
            }
            None => ["z", "sex"]
                .into_iter()
                .find(|c| header.iter().any(|h| h == c))
                .ok_or(CsvError::MissingGroupColumn),
        }
    }
}

/// Header row of a CSV file, in column order.
pub fn read_header(path: &Path) -> Result<Vec<String>, CsvError> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.headers()?.iter().map(|h| h.to_string()).collect())
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>), CsvError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header: Vec<String> =
        reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut seen = HashMap::new();
    for name in &header {
        if seen.insert(name.clone(), ()).is_some() {
            return Err(CsvError::DuplicateColumn(name.clone()));
        }
    }
    let rows = reader.records().collect::<Result<Vec<_>, _>>()?;
    if rows.is_empty() {
        return Err(CsvError::NoRows);
    }
    Ok((header, rows))
}

fn is_prediction_column(name: &str) -> bool {
    name.strip_prefix("p_").is_some_and(|rest| rest.parse::<usize>().is_ok())
}

/// Scans a file and infers its feature schema and label space.  A feature
/// column is numeric when every cell parses as a finite float, otherwise
/// categorical over its sorted distinct values.  Labels are sorted
/// numerically when possible so `"0" < "2" < "10"`.
pub fn infer_schema(
    path: &Path,
    format: &CsvFormat,
) -> Result<(FeatureSchema, LabelSpace), CsvError> {
    let (header, rows) = read_table(path)?;
    format.resolve_group(&header)?;
    if !header.iter().any(|h| h == &format.label_column) {
        return Err(CsvError::MissingColumn(format.label_column.clone()));
    }

    let mut fields = Vec::new();
    for (col, name) in header.iter().enumerate() {
        if *name == format.label_column || *name == "z" || is_prediction_column(name) {
            continue;
        }
        let cells: Vec<&str> = rows.iter().map(|r| &r[col]).collect();
        let kind = if cells.iter().all(|c| c.parse::<f64>().is_ok_and(f64::is_finite)) {
            FeatureKind::Numeric
        } else {
            let mut cats: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
            cats.sort();
            cats.dedup();
            FeatureKind::Categorical(cats)
        };
        fields.push((name.clone(), kind));
    }

    let label_col = header.iter().position(|h| h == &format.label_column).unwrap();
    let mut labels: Vec<String> = rows.iter().map(|r| r[label_col].to_string()).collect();
    labels.sort();
    labels.dedup();
    if labels.iter().all(|l| l.parse::<f64>().is_ok()) {
        labels.sort_by(|a, b| {
            a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap())
        });
    }
    Ok((FeatureSchema::new(fields)?, LabelSpace::new(labels)?))
}

/// Loads a typed dataset.  Every schema feature, the label column, and a
/// group column must be present; errors name the offending row (1-based,
/// header excluded) and column.
pub fn load_csv(
    path: &Path,
    schema: &FeatureSchema,
    labels: &LabelSpace,
    format: &CsvFormat,
) -> Result<Dataset, CsvError> {
    let (header, rows) = read_table(path)?;
    let position = |name: &str| header.iter().position(|h| h == name);

    let mut feature_cols = Vec::with_capacity(schema.len());
    for (name, _) in schema.iter() {
        feature_cols
            .push(position(name).ok_or_else(|| CsvError::MissingColumn(name.to_string()))?);
    }
    let label_col = position(&format.label_column)
        .ok_or_else(|| CsvError::MissingColumn(format.label_column.clone()))?;
    let group = format.resolve_group(&header)?;
    let group_col = position(group).expect("resolved against this header");

    let pred_cols: Vec<usize> =
        (0..labels.len()).filter_map(|k| position(&format!("p_{k}"))).collect();
    if !pred_cols.is_empty() && pred_cols.len() != labels.len() {
        return Err(CsvError::PredictionColumns {
            expected: labels.len(),
            found: pred_cols.len(),
        });
    }

    let mut samples = Vec::with_capacity(rows.len());
    for (i, record) in rows.iter().enumerate() {
        let row = i + 1;
        let cell = |col: usize| &record[col];
        let parse_f64 = |col: usize| -> Result<f64, CsvError> {
            cell(col).parse::<f64>().map_err(|_| CsvError::Cell {
                row,
                column: header[col].clone(),
                message: format!("expected a number, found `{}`", cell(col)),
            })
        };

        let mut features = Vec::with_capacity(schema.len());
        for (field, &col) in schema.iter().zip(&feature_cols) {
            let value = match field.1 {
                FeatureKind::Numeric => FeatureValue::Numeric(parse_f64(col)?),
                FeatureKind::Categorical(cats) => {
                    let text = cell(col);
                    let idx = cats.iter().position(|c| c == text).ok_or_else(|| {
                        CsvError::Cell {
                            row,
                            column: header[col].clone(),
                            message: format!("unknown category `{text}`"),
                        }
                    })?;
                    FeatureValue::Categorical(idx)
                }
            };
            features.push(value);
        }

        let y = labels.index_of(cell(label_col)).ok_or_else(|| CsvError::Cell {
            row,
            column: header[label_col].clone(),
            message: format!("unknown label `{}`", cell(label_col)),
        })?;

        let group_value = parse_f64(group_col)?;
        let z = if group_value == 0.0 {
            0
        } else if group_value == 1.0 {
            1
        } else {
            return Err(CsvError::Cell {
                row,
                column: header[group_col].clone(),
                message: format!("group must be 0 or 1, found `{}`", cell(group_col)),
            });
        };

        let p_hat = if pred_cols.is_empty() {
            None
        } else {
            let mut p = Vec::with_capacity(pred_cols.len());
            for &col in &pred_cols {
                p.push(parse_f64(col)?);
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > CSV_PREDICTION_SUM_TOL {
                return Err(CsvError::Cell {
                    row,
                    column: header[pred_cols[0]].clone(),
                    message: format!("probabilities sum to {sum}, expected 1"),
                });
            }
            // Undo text rounding so downstream validation sees exact rows.
            Some(p.iter().map(|v| v / sum).collect())
        };

        samples.push(Sample { features, y, z, p_hat });
    }
    Ok(Dataset::new(labels.clone(), schema.clone(), samples)?)
}

/// Writes features (schema order), an optional group column, the label,
/// and prediction columns when present.  Pass `group_column: None` when a
/// feature such as `sex` already carries the indicator.  Numbers use the
/// shortest round-trip representation, so load_csv(write_csv(d)) == d.
pub fn write_csv<W: Write>(
    d: &Dataset,
    out: W,
    group_column: Option<&str>,
) -> Result<(), CsvError> {
    if let Some(g) = group_column {
        if d.schema().index_of(g).is_some() {
            return Err(CsvError::DuplicateColumn(g.to_string()));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        d.schema().iter().map(|(name, _)| name.to_string()).collect();
    if let Some(g) = group_column {
        header.push(g.to_string());
    }
    header.push("y".into());
    if d.has_predictions() {
        for k in 0..d.label_space().len() {
            header.push(format!("p_{k}"));
        }
    }
    w.write_record(&header)?;

    let mut record = Vec::with_capacity(header.len());
    for s in d.samples() {
        record.clear();
        for (value, (_, kind)) in s.features.iter().zip(d.schema().iter()) {
            record.push(match (value, kind) {
                (FeatureValue::Numeric(v), _) => v.to_string(),
                (FeatureValue::Categorical(i), FeatureKind::Categorical(cats)) => {
                    cats[*i].clone()
                }
                (FeatureValue::Categorical(_), FeatureKind::Numeric) => {
                    unreachable!("dataset construction validates kinds")
                }
            });
        }
        if group_column.is_some() {
            record.push(s.z.to_string());
        }
        record.push(d.label_space().label(s.y).to_string());
        if let Some(p) = &s.p_hat {
            for v in p {
                record.push(v.to_string());
            }
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(d: &Dataset, path: &Path, group_column: Option<&str>) -> Result<(), CsvError> {
    let file = std::fs::File::create(path)?;
    write_csv(d, std::io::BufWriter::new(file), group_column)
}

/// Loads with schema inference; the common CLI entry point.
pub fn load_csv_inferred(path: &Path, format: &CsvFormat) -> Result<Dataset, CsvError> {
    let (schema, labels) = infer_schema(path, format)?;
    load_csv(path, &schema, &labels, format)
}
