//! The loan-approval utility measure: net financial benefit of approval.
//!
//! Happiness of an approved loan is the estimated return minus the total
//! interest cost,
//!
//! ```text
//! eta(yhat, x) = yhat * (loan_requested * R(x) - C(x))
//! C(x)    = loan_requested * rho(credit_score) * duration
//! ```
//!
//! where rho is a piecewise-constant interest rate over credit-score bands and
//! R sums domain-informed bonuses over loan purpose, education level,
//! employment status, and tenure.

use crate::dataset::{FeatureSchema, FeatureValue};
use crate::happiness::{category_name, numeric_feature, HappinessError};

/// Interest rate as a step function of credit score; lower bounds inclusive.
pub fn rho(credit_score: f64) -> f64 {
    if credit_score >= 750.0 {
        0.04
    } else if credit_score >= 700.0 {
        0.06
    } else if credit_score >= 650.0 {
        0.08
    } else if credit_score >= 600.0 {
        0.12
    } else {
        0.18
    }
}

fn purpose_bonus(purpose: &str) -> Result<f64, HappinessError> {
    match purpose {
        "Home" => Ok(0.08),
        "Auto" => Ok(0.02),
        "Education" => Ok(0.12),
        "Debt Consolidation" => Ok(0.04),
        "Other" => Ok(0.05),
        other => Err(HappinessError::UnknownLoanPurpose(other.to_string())),
    }
}

fn education_bonus(level: &str) -> f64 {
    match level {
        "Master" => 0.01,
        "Doctorate" => 0.02,
        _ => 0.0,
    }
}

fn employment_bonus(status: &str) -> f64 {
    match status {
        "Employed" | "Self-Employed" => 0.01,
        _ => 0.0,
    }
}

fn tenure_bonus(years: f64) -> f64 {
    if years > 5.0 {
        0.01
    } else {
        0.0
    }
}

/// Estimated return on investment R(x): the sum of the four bonus terms.
pub fn roi_bonus(schema: &FeatureSchema, features: &[FeatureValue]) -> Result<f64, HappinessError> {
    let purpose = category_name(schema, features, "loan_purpose")?;
    let education = category_name(schema, features, "education")?;
    let employment = category_name(schema, features, "employment")?;
    let tenure = numeric_feature(schema, features, "tenure")?;
    Ok(purpose_bonus(purpose)?
        + education_bonus(education)
        + employment_bonus(employment)
        + tenure_bonus(tenure))
}

/// Net benefit `yhat * (loan*R - C)`; zero whenever the loan is rejected.
pub fn net_benefit(
    yhat: f64,
    schema: &FeatureSchema,
    features: &[FeatureValue],
) -> Result<f64, HappinessError> {
    let loan = numeric_feature(schema, features, "loan_requested")?;
    let credit = numeric_feature(schema, features, "credit_score")?;
    let duration = numeric_feature(schema, features, "duration")?;
    let r = roi_bonus(schema, features)?;
    let interest_cost = loan * rho(credit) * duration;
    Ok(yhat * (loan * r - interest_cost))
}
