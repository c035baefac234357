//! Synthetic loan-application benchmark.
//!
//! Each applicant has a yearly salary and requests a base loan amount, both
//! Gaussian.  The loan is granted exactly when it does not exceed ten times
//! the salary, so the label is independent of group membership.  Group 1
//! (a one-third minority) then has a fixed surcharge added to the requested
//! amount after the decision threshold, which is what a trained classifier
//! later picks up as a spurious group signal.  Nuisance features are drawn
//! uniformly from supports modeled on the Adult census schema.

use crate::dataset::{Dataset, FeatureKind, FeatureSchema, FeatureValue, LabelSpace, Sample};
use crate::rng::Rng;
use thiserror::Error;

pub const EDUCATION_LEVELS: [&str; 16] = [
    "Bachelors",
    "Some-college",
    "11th",
    "HS-grad",
    "Prof-school",
    "Assoc-acdm",
    "Assoc-voc",
    "9th",
    "7th-8th",
    "12th",
    "Masters",
    "1st-4th",
    "10th",
    "Doctorate",
    "5th-6th",
    "Preschool",
];

pub const WORKCLASSES: [&str; 8] = [
    "Private",
    "Self-emp-not-inc",
    "Self-emp-inc",
    "Federal-gov",
    "Local-gov",
    "State-gov",
    "Without-pay",
    "Never-worked",
];

pub const RACES: [&str; 5] =
    ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"];

#[derive(Debug, Error, PartialEq)]
pub enum SyntheticError {
    #[error("sample count must be at least 1")]
    EmptyCount,
    #[error("{name} must be positive, got {value}")]
    NonPositiveScale { name: &'static str, value: f64 },
    #[error("group0_fraction must lie strictly between 0 and 1, got {0}")]
    FractionOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub count: usize,
    pub seed: u64,
    pub income_mean: f64,
    pub income_sd: f64,
    pub base_loan_mean: f64,
    pub base_loan_sd: f64,
    /// Added to the requested amount for group-1 applicants, after the
    /// grant decision.  Negative values flip which group is favored.
    pub group1_surcharge: f64,
    pub group0_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            count: 48842,
            seed: 7,
            income_mean: 50_000.0,
            income_sd: 1_000.0,
            base_loan_mean: 500_000.0,
            base_loan_sd: 10_000.0,
            group1_surcharge: 50_000.0,
            group0_fraction: 2.0 / 3.0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.count == 0 {
            return Err(SyntheticError::EmptyCount);
        }
        for (name, value) in [
            ("income_mean", self.income_mean),
            ("income_sd", self.income_sd),
            ("base_loan_mean", self.base_loan_mean),
            ("base_loan_sd", self.base_loan_sd),
        ] {
            if !(value > 0.0) {
                return Err(SyntheticError::NonPositiveScale { name, value });
            }
        }
        if !(self.group0_fraction > 0.0 && self.group0_fraction < 1.0) {
            return Err(SyntheticError::FractionOutOfRange(self.group0_fraction));
        }
        Ok(())
    }
}

/// Schema of the generated dataset.  The `sex` column doubles as the group
/// indicator (1 = group 1), so a written CSV needs no separate `z` column.
pub fn synthetic_schema() -> FeatureSchema {
    FeatureSchema::new(vec![
        ("age".into(), FeatureKind::Numeric),
        ("hours_per_week".into(), FeatureKind::Numeric),
        (
            "education".into(),
            FeatureKind::Categorical(EDUCATION_LEVELS.iter().map(|s| s.to_string()).collect()),
        ),
        (
            "workclass".into(),
            FeatureKind::Categorical(WORKCLASSES.iter().map(|s| s.to_string()).collect()),
        ),
        ("race".into(), FeatureKind::Categorical(RACES.iter().map(|s| s.to_string()).collect())),
        ("sex".into(), FeatureKind::Numeric),
        ("yearly_salary".into(), FeatureKind::Numeric),
        ("loan_requested".into(), FeatureKind::Numeric),
    ])
    .expect("generator schema is valid by construction")
}

/// Generates the benchmark.  Bit-reproducible for a fixed config: every
/// draw comes from one counter-based stream in a fixed per-sample order.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset, SyntheticError> {
    cfg.validate()?;
    let schema = synthetic_schema();
    let mut rng = Rng::new(cfg.seed);
    let mut samples = Vec::with_capacity(cfg.count);
    for _ in 0..cfg.count {
        let z = u8::from(rng.next_f64() >= cfg.group0_fraction);
        let age = 17 + rng.next_index(74);
        let hours = 1 + rng.next_index(99);
        let education = rng.next_index(EDUCATION_LEVELS.len());
        let workclass = rng.next_index(WORKCLASSES.len());
        let race = rng.next_index(RACES.len());
        let salary = rng.next_normal(cfg.income_mean, cfg.income_sd);
        let base_loan = rng.next_normal(cfg.base_loan_mean, cfg.base_loan_sd);
        let y = usize::from(10.0 * salary >= base_loan);
        let loan = if z == 1 { base_loan + cfg.group1_surcharge } else { base_loan };
        samples.push(Sample {
            features: vec![
                FeatureValue::Numeric(age as f64),
                FeatureValue::Numeric(hours as f64),
                FeatureValue::Categorical(education),
                FeatureValue::Categorical(workclass),
                FeatureValue::Categorical(race),
                FeatureValue::Numeric(f64::from(z)),
                FeatureValue::Numeric(salary),
                FeatureValue::Numeric(loan),
            ],
            y,
            z,
            p_hat: None,
        });
    }
    Ok(Dataset::new(LabelSpace::binary(), schema, samples)
        .expect("generated samples satisfy the schema by construction"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_is_reproducible() {
        let cfg = SyntheticConfig { count: 500, ..SyntheticConfig::default() };
        assert_eq!(generate_synthetic(&cfg).unwrap(), generate_synthetic(&cfg).unwrap());
    }

    #[test]
    fn different_seeds_differ() {
        let a = SyntheticConfig { count: 200, seed: 1, ..SyntheticConfig::default() };
        let b = SyntheticConfig { count: 200, seed: 2, ..SyntheticConfig::default() };
        assert_ne!(generate_synthetic(&a).unwrap(), generate_synthetic(&b).unwrap());
    }

    #[test]
    fn grant_rate_is_near_one_half_at_full_size() {
        let d = generate_synthetic(&SyntheticConfig::default()).unwrap();
        assert_eq!(d.len(), 48842);
        let rate =
            d.samples().iter().filter(|s| s.y == 1).count() as f64 / d.len() as f64;
        assert!((0.49..=0.51).contains(&rate), "grant rate {rate}");
    }

    #[test]
    fn group_one_is_about_a_third() {
        let d = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let frac = d.group_counts()[1] as f64 / d.len() as f64;
        assert!((0.32..=0.35).contains(&frac), "group-1 fraction {frac}");
    }

    #[test]
    fn grant_rate_is_group_independent() {
        let d = generate_synthetic(&SyntheticConfig::default()).unwrap();
        let mut granted = [0usize; 2];
        let counts = d.group_counts();
        for s in d.samples() {
            granted[s.z as usize] += s.y;
        }
        let r0 = granted[0] as f64 / counts[0] as f64;
        let r1 = granted[1] as f64 / counts[1] as f64;
        assert!((r0 - r1).abs() < 0.02, "rates {r0} vs {r1}");
    }

    #[test]
    fn surcharge_shifts_group_one_loans_only() {
        let base = SyntheticConfig { count: 2000, ..SyntheticConfig::default() };
        let flat = SyntheticConfig { group1_surcharge: 0.0, ..base.clone() };
        let with = generate_synthetic(&base).unwrap();
        let without = generate_synthetic(&flat).unwrap();
        let loan_col = with.schema().index_of("loan_requested").unwrap();
        let mut diff_sum = 0.0;
        let mut group1 = 0usize;
        for (a, b) in with.samples().iter().zip(without.samples()) {
            let la = a.features[loan_col].as_numeric().unwrap();
            let lb = b.features[loan_col].as_numeric().unwrap();
            if a.z == 1 {
                diff_sum += la - lb;
                group1 += 1;
            } else {
                assert_eq!(la, lb, "group-0 loan must be untouched");
            }
        }
        let mean_diff = diff_sum / group1 as f64;
        assert!((mean_diff - 50_000.0).abs() < 1e-6, "mean shift {mean_diff}");
    }

    #[test]
    fn nuisance_features_respect_their_supports() {
        let cfg = SyntheticConfig { count: 3000, ..SyntheticConfig::default() };
        let d = generate_synthetic(&cfg).unwrap();
        let age_col = d.schema().index_of("age").unwrap();
        let hours_col = d.schema().index_of("hours_per_week").unwrap();
        let sex_col = d.schema().index_of("sex").unwrap();
        for s in d.samples() {
            let age = s.features[age_col].as_numeric().unwrap();
            let hours = s.features[hours_col].as_numeric().unwrap();
            assert!(age.fract() == 0.0 && (17.0..=90.0).contains(&age));
            assert!(hours.fract() == 0.0 && (1.0..=99.0).contains(&hours));
            assert_eq!(s.features[sex_col].as_numeric().unwrap(), f64::from(s.z));
        }
    }

    #[test]
    fn config_validation_rejects_bad_scales() {
        let cfg = SyntheticConfig { income_sd: 0.0, ..SyntheticConfig::default() };
        assert_eq!(
            generate_synthetic(&cfg).unwrap_err(),
            SyntheticError::NonPositiveScale { name: "income_sd", value: 0.0 }
        );
        let cfg = SyntheticConfig { group0_fraction: 1.0, ..SyntheticConfig::default() };
        assert_eq!(
            generate_synthetic(&cfg).unwrap_err(),
            SyntheticError::FractionOutOfRange(1.0)
        );
        let cfg = SyntheticConfig { count: 0, ..SyntheticConfig::default() };
        assert_eq!(generate_synthetic(&cfg).unwrap_err(), SyntheticError::EmptyCount);
    }
}
