//! Happiness functions recovering classical group-fairness criteria.
//!
//! Each constructor returns a [`HappinessSpec`] whose happiness gap equals
//! the defining quantity of the criterion, so bounding the gap by eps is
//! equivalent to the criterion's own eps-relaxation:
//!
//! * statistical parity: per-label prediction rates,
//! * overall accuracy: per-group probability of a correct prediction,
//! * equalized odds: per-(y, yt) conditional prediction rates, obtained by
//!   weighting indicators with 1/p(y|z).

use crate::dataset::{Dataset, LabelSpace};
use crate::happiness::{Component, HappinessSpec};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CriterionError {
    #[error("p(y={y} | z={z}) is zero; equalized odds needs every cell positive")]
    ZeroConditionalProbability { y: usize, z: usize },
    #[error("conditional label matrix has {got} rows, expected {expected}")]
    MatrixSizeMismatch { got: usize, expected: usize },
    #[error("unknown criterion `{0}`")]
    UnknownName(String),
    #[error("dataset has no samples in group {0}")]
    EmptyGroup(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    StatisticalParity,
    OverallAccuracy,
    EqualizedOdds,
    Custom,
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            CriterionKind::StatisticalParity => "statistical-parity",
            CriterionKind::OverallAccuracy => "overall-accuracy",
            CriterionKind::EqualizedOdds => "equalized-odds",
            CriterionKind::Custom => "custom",
        };
        f.write_str(name)
    }
}

impl FromStr for CriterionKind {
    type Err = CriterionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "statistical-parity" => Ok(CriterionKind::StatisticalParity),
            "overall-accuracy" => Ok(CriterionKind::OverallAccuracy),
            "equalized-odds" => Ok(CriterionKind::EqualizedOdds),
            "custom" => Ok(CriterionKind::Custom),
            other => Err(CriterionError::UnknownName(other.to_string())),
        }
    }
}

/// One indicator component per label: eta_yt' = 1{yt = yt'}.
pub fn statistical_parity_happiness(ls: &LabelSpace) -> HappinessSpec {
    let components = (0..ls.len()).map(|label| Component::LabelIndicator { label }).collect();
    HappinessSpec::new(components).expect("label space is non-empty")
}

/// Single component eta = 1{yt = y}.
pub fn overall_accuracy_happiness() -> HappinessSpec {
    HappinessSpec::new(vec![Component::Agreement]).expect("non-empty")
}

/// One component per (y', yt') pair: eta = 1{(y,yt) = (y',yt')} / p(y'|z).
/// `p_y_given_z[y]` holds (p(y|z=0), p(y|z=1)); every cell must be positive.
pub fn equalized_odds_happiness(
    ls: &LabelSpace,
    p_y_given_z: &[[f64; 2]],
) -> Result<HappinessSpec, CriterionError> {
    if p_y_given_z.len() != ls.len() {
        return Err(CriterionError::MatrixSizeMismatch {
            got: p_y_given_z.len(),
            expected: ls.len(),
        });
    }
    for (y, cell) in p_y_given_z.iter().enumerate() {
        for z in 0..2 {
            if !(cell[z] > 0.0) {
                return Err(CriterionError::ZeroConditionalProbability { y, z });
            }
        }
    }
    let mut components = Vec::with_capacity(ls.len() * ls.len());
    for y_ref in 0..ls.len() {
        let weight = [1.0 / p_y_given_z[y_ref][0], 1.0 / p_y_given_z[y_ref][1]];
        for yhat_ref in 0..ls.len() {
            components.push(Component::OddsIndicator { y_ref, yhat_ref, weight });
        }
    }
    Ok(HappinessSpec::new(components).expect("non-empty"))
}

/// Empirical conditional label rates p(y|z) of a dataset, indexed `[y]`
/// then `[z]`; the weight table [`equalized_odds_happiness`] expects.
pub fn label_group_rates(d: &Dataset) -> Result<Vec<[f64; 2]>, CriterionError> {
    let counts = d.group_counts();
    for (z, &count) in counts.iter().enumerate() {
        if count == 0 {
            return Err(CriterionError::EmptyGroup(z as u8));
        }
    }
    let mut rates = vec![[0.0; 2]; d.label_space().len()];
    for s in d.samples() {
        rates[s.y][s.z as usize] += 1.0;
    }
    for row in &mut rates {
        for (z, &count) in counts.iter().enumerate() {
            row[z] /= count as f64;
        }
    }
    Ok(rates)
}
