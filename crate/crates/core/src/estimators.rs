//! Empirical moments: every expectation the fairness LPs need, estimated
//! from a dataset with soft predictions, plus the Hoeffding-style sample
//! size bound for those estimates.
//!
//! For a dataset D with soft predictions p_Yhat and a happiness function eta,
//! the estimators are
//!
//! ```text
//! p_hat_YhatYZ(yhat,y,z) = (1/|D|)            sum_(x,y',z')  p_Yhat(yhat) * 1{z'=z} * 1{y'=y}
//! xi_hat(yt,yhat,z)      = (1/(p_hat_Z(z)|D|)) sum_(x,y',z')  1{z'=z} * p_Yhat(yhat) * eta(yt,x,y',z)
//! ```
//!
//! Samples contribute their predicted probability of each label (soft
//! counting), not an argmax vote.  Sums run in dataset order so results are
//! deterministic.

use crate::dataset::Dataset;
use crate::happiness::{HappinessError, HappinessSpec};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EstimateError {
    #[error("dataset has no samples in group {0}")]
    EmptyGroup(u8),
    #[error("sample {0} has no soft prediction; run a classifier first")]
    MissingPredictions(usize),
    #[error("happiness evaluation failed on sample {row}: {source}")]
    Happiness {
        row: usize,
        #[source]
        source: HappinessError,
    },
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("inconsistent moments: {0}")]
    InvalidMoments(String),
}

/// All empirical expectations used by the LP builders, for one dataset and
/// one happiness function of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    labels: usize,
    dim: usize,
    /// `[yhat][y][z]`, flattened.
    p_yyz: Vec<f64>,
    /// `[yt][yhat][z][k]`, flattened.
    xi: Vec<f64>,
    p_z: [f64; 2],
    /// `[y][z]`, flattened.
    p_y_given_z: Vec<f64>,
    group_counts: [usize; 2],
}

const MOMENT_SUM_TOL: f64 = 1e-9;

impl EmpiricalMoments {
    /// Builds a moments value from raw tensors, checking normalization.
    /// Useful for tests and for analytically known joint distributions.
    pub fn from_raw(
        labels: usize,
        dim: usize,
        p_yyz: Vec<f64>,
        xi: Vec<f64>,
        p_z: [f64; 2],
        p_y_given_z: Vec<f64>,
        group_counts: [usize; 2],
    ) -> Result<Self, EstimateError> {
        if labels < 2 {
            return Err(EstimateError::InvalidMoments(format!("{labels} labels")));
        }
        if dim == 0 {
            return Err(EstimateError::InvalidMoments("zero happiness dimension".into()));
        }
        if p_yyz.len() != labels * labels * 2 {
            return Err(EstimateError::InvalidMoments("p_yyz has the wrong length".into()));
        }
        if xi.len() != labels * labels * 2 * dim {
            return Err(EstimateError::InvalidMoments("xi has the wrong length".into()));
        }
        if p_y_given_z.len() != labels * 2 {
            return Err(EstimateError::InvalidMoments("p_y_given_z has the wrong length".into()));
        }
        if p_yyz.iter().any(|&v| !(v >= 0.0)) {
            return Err(EstimateError::InvalidMoments("p_yyz has a negative entry".into()));
        }
        let total: f64 = p_yyz.iter().sum();
        if (total - 1.0).abs() > MOMENT_SUM_TOL {
            return Err(EstimateError::InvalidMoments(format!("p_yyz sums to {total}")));
        }
        if !(p_z[0] > 0.0 && p_z[1] > 0.0) || (p_z[0] + p_z[1] - 1.0).abs() > MOMENT_SUM_TOL {
            return Err(EstimateError::InvalidMoments(format!(
                "p_z = ({}, {}) is not a positive distribution",
                p_z[0], p_z[1]
            )));
        }
        for z in 0..2 {
            let col: f64 = (0..labels).map(|y| p_y_given_z[y * 2 + z]).sum();
            if (col - 1.0).abs() > MOMENT_SUM_TOL {
                return Err(EstimateError::InvalidMoments(format!(
                    "p_y_given_z column z={z} sums to {col}"
                )));
            }
        }
        Ok(EmpiricalMoments { labels, dim, p_yyz, xi, p_z, p_y_given_z, group_counts })
    }

    pub fn label_count(&self) -> usize {
        self.labels
    }

    pub fn happiness_dim(&self) -> usize {
        self.dim
    }

    /// p_hat_YhatYZ(yhat, y, z)
    pub fn p_yyz(&self, yhat: usize, y: usize, z: usize) -> f64 {
        self.p_yyz[(yhat * self.labels + y) * 2 + z]
    }

    /// xi_hat(yt, yhat, z) as an n-vector.
    pub fn xi(&self, yt: usize, yhat: usize, z: usize) -> &[f64] {
        let base = ((yt * self.labels + yhat) * 2 + z) * self.dim;
        &self.xi[base..base + self.dim]
    }

    pub fn p_z(&self, z: usize) -> f64 {
        self.p_z[z]
    }

    /// p_hat_{Y|Z}(y | z)
    pub fn p_y_given_z(&self, y: usize, z: usize) -> f64 {
        self.p_y_given_z[y * 2 + z]
    }

    pub fn group_count(&self, z: usize) -> usize {
        self.group_counts[z]
    }
}

/// Estimates all moments in a single deterministic pass over the dataset.
pub fn estimate_moments(
    dataset: &Dataset,
    spec: &HappinessSpec,
) -> Result<EmpiricalMoments, EstimateError> {
    let labels = dataset.label_space().len();
    let dim = spec.dim();
    let counts = dataset.group_counts();
    for z in 0..2u8 {
        if counts[z as usize] == 0 {
            return Err(EstimateError::EmptyGroup(z));
        }
    }
    let total = dataset.len() as f64;
    let schema = dataset.schema();

    let mut p_yyz = vec![0.0; labels * labels * 2];
    let mut xi = vec![0.0; labels * labels * 2 * dim];
    let mut label_counts = vec![0usize; labels * 2];
    let mut eta = vec![0.0; dim];

    for (row, s) in dataset.samples().iter().enumerate() {
        let p = s.p_hat.as_ref().ok_or(EstimateError::MissingPredictions(row))?;
        let z = s.z as usize;
        label_counts[s.y * 2 + z] += 1;
        for yhat in 0..labels {
            p_yyz[(yhat * labels + s.y) * 2 + z] += p[yhat];
        }
        for yt in 0..labels {
            spec.evaluate_into(schema, &s.features, yt, s.y, s.z, &mut eta)
                .map_err(|source| EstimateError::Happiness { row, source })?;
            for yhat in 0..labels {
                let w = p[yhat];
                if w == 0.0 {
                    continue;
                }
                let base = ((yt * labels + yhat) * 2 + z) * dim;
                for (k, &e) in eta.iter().enumerate() {
                    xi[base + k] += w * e;
                }
            }
        }
    }

    for v in &mut p_yyz {
        *v /= total;
    }
    // 1/(p_hat_Z(z)*|D|) is exactly 1/count_z.
    for yt in 0..labels {
        for yhat in 0..labels {
            for z in 0..2 {
                let base = ((yt * labels + yhat) * 2 + z) * dim;
                for k in 0..dim {
                    xi[base + k] /= counts[z] as f64;
                }
            }
        }
    }
    let p_y_given_z = (0..labels * 2)
        .map(|i| label_counts[i] as f64 / counts[i % 2] as f64)
        .collect();

    Ok(EmpiricalMoments {
        labels,
        dim,
        p_yyz,
        xi,
        p_z: [counts[0] as f64 / total, counts[1] as f64 / total],
        p_y_given_z,
        group_counts: counts,
    })
}

/// Minimum per-group sample count for all moment estimates to be within
/// `delta` of their true values with probability at least `1 - gamma`,
/// when |eta| <= `c` componentwise and eta has `n` components:
///
/// ```text
/// D >= ceil( (c^2 / (2 delta^2)) * ln(4 (n+1) |Y|^2 / gamma) )
/// ```
pub fn sample_size_bound(
    gamma: f64,
    delta: f64,
    c: f64,
    n: usize,
    y_count: usize,
) -> Result<u64, EstimateError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EstimateError::ParamOutOfRange(format!("gamma = {gamma}")));
    }
    if !(delta > 0.0) {
        return Err(EstimateError::ParamOutOfRange(format!("delta = {delta}")));
    }
    if !(c >= 1.0) {
        return Err(EstimateError::ParamOutOfRange(format!("c = {c}")));
    }
    if n < 1 {
        return Err(EstimateError::ParamOutOfRange(format!("n = {n}")));
    }
    if y_count < 2 {
        return Err(EstimateError::ParamOutOfRange(format!("y_count = {y_count}")));
    }
    let log_arg = 4.0 * (n as f64 + 1.0) * (y_count as f64).powi(2) / gamma;
    let bound = c * c / (2.0 * delta * delta) * log_arg.ln();
    Ok(bound.ceil() as u64)
}
