//! Core data model: label spaces, feature schemas, samples, datasets.
//!
//! A [`Dataset`] couples a finite label space, a typed feature schema, and a
//! list of samples.  Each sample carries its features, an observed label `y`,
//! a binary group attribute `z`, and optionally a soft prediction vector
//! `p_hat` over the label space.  All invariants are checked at construction
//! so downstream code can index without re-validating.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Names that cannot be used for features because the happiness expression
/// language claims them.
pub const RESERVED_NAMES: [&str; 5] = ["yhat", "y", "z", "ind", "eq"];

/// Tolerance for a soft prediction vector to count as a distribution.
pub const PREDICTION_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("label space needs at least two labels, got {0}")]
    TooFewLabels(usize),
    #[error("duplicate label `{0}` in label space")]
    DuplicateLabel(String),
    #[error("feature name `{0}` is reserved")]
    ReservedFeatureName(String),
    #[error("duplicate feature `{0}` in schema")]
    DuplicateFeature(String),
    #[error("categorical feature `{0}` has no categories")]
    EmptyCategories(String),
    #[error("categorical feature `{feature}` repeats category `{category}`")]
    DuplicateCategory { feature: String, category: String },
    #[error("sample {row}: expected {expected} features, got {got}")]
    FeatureCountMismatch { row: usize, expected: usize, got: usize },
    #[error("sample {row}: feature `{feature}` has the wrong kind")]
    FeatureKindMismatch { row: usize, feature: String },
    #[error("sample {row}: feature `{feature}` is not finite")]
    NonFiniteFeature { row: usize, feature: String },
    #[error("sample {row}: categorical index {index} out of range for `{feature}`")]
    CategoryOutOfRange { row: usize, feature: String, index: usize },
    #[error("sample {row}: label index {label} outside label space of size {size}")]
    LabelOutOfRange { row: usize, label: usize, size: usize },
    #[error("sample {row}: group must be 0 or 1, got {group}")]
    GroupOutOfRange { row: usize, group: u8 },
    #[error("sample {row}: prediction vector has length {got}, expected {expected}")]
    PredictionLengthMismatch { row: usize, got: usize, expected: usize },
    #[error("sample {row}: prediction vector is not a distribution ({detail})")]
    InvalidPrediction { row: usize, detail: String },
    #[error("dataset has no samples in group {0}")]
    EmptyGroup(u8),
    #[error("dataset too small to split: {0} samples")]
    TooSmallToSplit(usize),
}

/// The finite set of class labels, indexed densely from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelSpace {
    labels: Vec<String>,
}

impl LabelSpace {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self, DataError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(DataError::TooFewLabels(labels.len()));
        }
        let mut seen = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            if seen.insert(l.clone(), i).is_some() {
                return Err(DataError::DuplicateLabel(l.clone()));
            }
        }
        Ok(LabelSpace { labels })
    }

    /// The common binary case with labels "0" and "1".
    pub fn binary() -> Self {
        LabelSpace { labels: vec!["0".into(), "1".into()] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// Categories are fixed at schema construction; values store an index
    /// into this list.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    fields: Vec<(String, FeatureKind)>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl FeatureSchema {
    pub fn new(fields: Vec<(String, FeatureKind)>) -> Result<Self, DataError> {
        let mut index = HashMap::new();
        for (i, (name, kind)) in fields.iter().enumerate() {
            if RESERVED_NAMES.contains(&name.as_str()) {
                return Err(DataError::ReservedFeatureName(name.clone()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(DataError::DuplicateFeature(name.clone()));
            }
            if let FeatureKind::Categorical(cats) = kind {
                if cats.is_empty() {
                    return Err(DataError::EmptyCategories(name.clone()));
                }
                let mut seen = HashMap::new();
                for c in cats {
                    if seen.insert(c, ()).is_some() {
                        return Err(DataError::DuplicateCategory {
                            feature: name.clone(),
                            category: c.clone(),
                        });
                    }
                }
            }
        }
        Ok(FeatureSchema { fields, index })
    }

    /// Rebuilds the name index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .fields
            .iter()
            .enumerate()
            .map(|(i, (name, _))| (name.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.fields[index].0
    }

    pub fn kind(&self, index: usize) -> &FeatureKind {
        &self.fields[index].1
    }

    pub fn kind_of(&self, name: &str) -> Option<&FeatureKind> {
        self.index_of(name).map(|i| self.kind(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &FeatureKind)> {
        self.fields.iter().map(|(n, k)| (n.as_str(), k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    /// Index into the categorical feature's category list.
    Categorical(usize),
}

impl FeatureValue {
    pub fn as_numeric(&self) -> Option<f64> {
        match self {
            FeatureValue::Numeric(v) => Some(*v),
            FeatureValue::Categorical(_) => None,
        }
    }

    pub fn as_category(&self) -> Option<usize> {
        match self {
            FeatureValue::Numeric(_) => None,
            FeatureValue::Categorical(i) => Some(*i),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<FeatureValue>,
    pub y: usize,
    pub z: u8,
    /// Soft prediction over the label space, if a classifier has been run.
    pub p_hat: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    label_space: LabelSpace,
    schema: FeatureSchema,
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(
        label_space: LabelSpace,
        schema: FeatureSchema,
        samples: Vec<Sample>,
    ) -> Result<Self, DataError> {
        for (row, s) in samples.iter().enumerate() {
            validate_sample(&label_space, &schema, s, row)?;
        }
        Ok(Dataset { label_space, schema, samples })
    }

    pub fn label_space(&self) -> &LabelSpace {
        &self.label_space
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn group_counts(&self) -> [usize; 2] {
        let mut counts = [0, 0];
        for s in &self.samples {
            counts[s.z as usize] += 1;
        }
        counts
    }

    /// Fraction of samples whose prediction vector is present.
    pub fn has_predictions(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.p_hat.is_some())
    }

    /// Returns a copy with `p_hat` replaced by the given per-row vectors.
    pub fn with_predictions(&self, predictions: Vec<Vec<f64>>) -> Result<Dataset, DataError> {
        assert_eq!(predictions.len(), self.samples.len(), "one prediction per sample");
        let samples = self
            .samples
            .iter()
            .zip(predictions)
            .map(|(s, p)| Sample { p_hat: Some(p), ..s.clone() })
            .collect();
        Dataset::new(self.label_space.clone(), self.schema.clone(), samples)
    }

    /// New dataset holding the selected rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        Dataset {
            label_space: self.label_space.clone(),
            schema: self.schema.clone(),
            samples,
        }
    }
}

fn validate_sample(
    label_space: &LabelSpace,
    schema: &FeatureSchema,
    s: &Sample,
    row: usize,
) -> Result<(), DataError> {
    if s.features.len() != schema.len() {
        return Err(DataError::FeatureCountMismatch {
            row,
            expected: schema.len(),
            got: s.features.len(),
        });
    }
    for (i, value) in s.features.iter().enumerate() {
        match (schema.kind(i), value) {
            (FeatureKind::Numeric, FeatureValue::Numeric(v)) => {
                if !v.is_finite() {
                    return Err(DataError::NonFiniteFeature {
                        row,
                        feature: schema.name(i).to_string(),
                    });
                }
            }
            (FeatureKind::Categorical(cats), FeatureValue::Categorical(c)) => {
                if *c >= cats.len() {
                    return Err(DataError::CategoryOutOfRange {
                        row,
                        feature: schema.name(i).to_string(),
                        index: *c,
                    });
                }
            }
            _ => {
                return Err(DataError::FeatureKindMismatch {
                    row,
                    feature: schema.name(i).to_string(),
                });
            }
        }
    }
    if s.y >= label_space.len() {
        return Err(DataError::LabelOutOfRange { row, label: s.y, size: label_space.len() });
    }
    if s.z > 1 {
        return Err(DataError::GroupOutOfRange { row, group: s.z });
    }
    if let Some(p) = &s.p_hat {
        if p.len() != label_space.len() {
            return Err(DataError::PredictionLengthMismatch {
                row,
                got: p.len(),
                expected: label_space.len(),
            });
        }
        let mut sum = 0.0;
        for &v in p {
            if !v.is_finite() || v < 0.0 {
                return Err(DataError::InvalidPrediction {
                    row,
                    detail: format!("entry {v} is negative or non-finite"),
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PREDICTION_SUM_TOL {
            return Err(DataError::InvalidPrediction {
                row,
                detail: format!("entries sum to {sum}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            ("income".into(), FeatureKind::Numeric),
            (
                "color".into(),
                FeatureKind::Categorical(vec!["red".into(), "blue".into()]),
            ),
        ])
        .unwrap()
    }

    fn sample(income: f64, color: usize, y: usize, z: u8) -> Sample {
        Sample {
            features: vec![FeatureValue::Numeric(income), FeatureValue::Categorical(color)],
            y,
            z,
            p_hat: None,
        }
    }

    #[test]
    fn label_space_rejects_degenerate_input() {
        assert_eq!(
            LabelSpace::new(vec!["only"]).unwrap_err(),
            DataError::TooFewLabels(1)
        );
        assert_eq!(
            LabelSpace::new(vec!["a", "a"]).unwrap_err(),
            DataError::DuplicateLabel("a".into())
        );
    }

    #[test]
    fn schema_rejects_reserved_and_duplicate_names() {
        let err = FeatureSchema::new(vec![("yhat".into(), FeatureKind::Numeric)]).unwrap_err();
        assert_eq!(err, DataError::ReservedFeatureName("yhat".into()));
        let err = FeatureSchema::new(vec![
            ("a".into(), FeatureKind::Numeric),
            ("a".into(), FeatureKind::Numeric),
        ])
        .unwrap_err();
        assert_eq!(err, DataError::DuplicateFeature("a".into()));
    }

    #[test]
    fn dataset_validates_rows() {
        let ls = LabelSpace::binary();
        let ok = Dataset::new(ls.clone(), schema(), vec![sample(1.0, 0, 0, 0)]);
        assert!(ok.is_ok());

        let err = Dataset::new(ls.clone(), schema(), vec![sample(1.0, 5, 0, 0)]).unwrap_err();
        assert!(matches!(err, DataError::CategoryOutOfRange { index: 5, .. }));

        let err = Dataset::new(ls.clone(), schema(), vec![sample(1.0, 0, 3, 0)]).unwrap_err();
        assert!(matches!(err, DataError::LabelOutOfRange { label: 3, .. }));

        let err = Dataset::new(ls, schema(), vec![sample(1.0, 0, 0, 2)]).unwrap_err();
        assert!(matches!(err, DataError::GroupOutOfRange { group: 2, .. }));
    }

    #[test]
    fn dataset_validates_predictions() {
        let ls = LabelSpace::binary();
        let mut s = sample(1.0, 0, 0, 0);
        s.p_hat = Some(vec![0.6, 0.6]);
        let err = Dataset::new(ls.clone(), schema(), vec![s]).unwrap_err();
        assert!(matches!(err, DataError::InvalidPrediction { .. }));

        let mut s = sample(1.0, 0, 0, 0);
        s.p_hat = Some(vec![0.25, 0.75]);
        assert!(Dataset::new(ls, schema(), vec![s]).is_ok());
    }

    #[test]
    fn subset_preserves_order() {
        let ls = LabelSpace::binary();
        let d = Dataset::new(
            ls,
            schema(),
            vec![sample(1.0, 0, 0, 0), sample(2.0, 1, 1, 1), sample(3.0, 0, 1, 0)],
        )
        .unwrap();
        let sub = d.subset(&[2, 0]);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.samples()[0].features[0], FeatureValue::Numeric(3.0));
        assert_eq!(sub.samples()[1].features[0], FeatureValue::Numeric(1.0));
    }

    #[test]
    fn group_counts_tally_by_z() {
        let ls = LabelSpace::binary();
        let d = Dataset::new(
            ls,
            schema(),
            vec![sample(1.0, 0, 0, 0), sample(2.0, 1, 1, 1), sample(3.0, 0, 1, 0)],
        )
        .unwrap();
        assert_eq!(d.group_counts(), [2, 1]);
    }
}
