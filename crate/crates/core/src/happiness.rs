//! Happiness specifications: vector-valued functions eta(yt, x, y, z).
//!
//! A [`HappinessSpec`] is an ordered list of scalar components.  Components
//! are either user expressions (see [`crate::expr`]) or one of the builtin
//! forms used by the classical fairness criteria and the case studies.  The
//! argument order is standardized to (prediction, features, label, group)
//! everywhere in this crate.

use crate::data::finance;
use crate::dataset::{FeatureSchema, FeatureValue};
use crate::expr::{self, EvalError, EvalInput, HappinessExpr};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HappinessError {
    #[error("happiness specification needs at least one component")]
    Empty,
    #[error(transparent)]
    Expr(#[from] EvalError),
    #[error("feature `{0}` is required but missing from the schema")]
    MissingFeature(String),
    #[error("feature `{0}` does not have the required kind")]
    WrongKind(String),
    #[error("unknown loan purpose `{0}`")]
    UnknownLoanPurpose(String),
    #[error("hours_per_week must be an integer in [1, 99], got {0}")]
    HoursOutOfSupport(f64),
    #[error("component {component} references label {label}, outside the label space")]
    LabelOutOfRange { component: usize, label: usize },
}

/// One scalar happiness component.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    /// A parsed user expression over `yhat`, `y`, `z`, and numeric features.
    Expr(HappinessExpr),
    /// `1{yhat = label}`; building block of statistical parity.
    LabelIndicator { label: usize },
    /// `1{yhat = y}`; building block of equal overall accuracy.
    Agreement,
    /// `1{(y, yhat) = (y_ref, yhat_ref)} * weight[z]`, with `weight[z]`
    /// set to `1 / p(y_ref | z)`; building block of equalized odds.
    OddsIndicator { y_ref: usize, yhat_ref: usize, weight: [f64; 2] },
    /// Net financial benefit of an approved loan; see [`finance`].
    FinancialNetBenefit,
    /// `100*yhat - hours_per_week`, the work-hours tradeoff measure.
    HoursTradeoff,
}

/// A vector-valued happiness function; `dim()` is the number of components.
#[derive(Debug, Clone, PartialEq)]
pub struct HappinessSpec {
    components: Vec<Component>,
}

impl HappinessSpec {
    pub fn new(components: Vec<Component>) -> Result<Self, HappinessError> {
        if components.is_empty() {
            return Err(HappinessError::Empty);
        }
        Ok(HappinessSpec { components })
    }

    /// Parses each text as one expression component.
    pub fn parse(texts: &[&str], schema: &FeatureSchema) -> Result<Self, crate::expr::ExprError> {
        let components = texts
            .iter()
            .map(|t| expr::parse_happiness_expr(t, schema).map(Component::Expr))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(HappinessSpec { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    /// Evaluates eta(yhat, x, y, z) into `out`, which must have length `dim()`.
    pub fn evaluate_into(
        &self,
        schema: &FeatureSchema,
        features: &[FeatureValue],
        yhat: usize,
        y: usize,
        z: u8,
        out: &mut [f64],
    ) -> Result<(), HappinessError> {
        debug_assert_eq!(out.len(), self.dim());
        for (slot, component) in out.iter_mut().zip(&self.components) {
            *slot = evaluate_component(component, schema, features, yhat, y, z)?;
        }
        Ok(())
    }

    pub fn evaluate(
        &self,
        schema: &FeatureSchema,
        features: &[FeatureValue],
        yhat: usize,
        y: usize,
        z: u8,
    ) -> Result<Vec<f64>, HappinessError> {
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(schema, features, yhat, y, z, &mut out)?;
        Ok(out)
    }
}

fn evaluate_component(
    component: &Component,
    schema: &FeatureSchema,
    features: &[FeatureValue],
    yhat: usize,
    y: usize,
    z: u8,
) -> Result<f64, HappinessError> {
    match component {
        Component::Expr(e) => {
            let input = EvalInput {
                schema,
                features,
                yhat: yhat as f64,
                y: y as f64,
                z: z as f64,
            };
            Ok(expr::eval(e, &input)?)
        }
        Component::LabelIndicator { label } => Ok(if yhat == *label { 1.0 } else { 0.0 }),
        Component::Agreement => Ok(if yhat == y { 1.0 } else { 0.0 }),
        Component::OddsIndicator { y_ref, yhat_ref, weight } => {
            Ok(if y == *y_ref && yhat == *yhat_ref { weight[z as usize] } else { 0.0 })
        }
        Component::FinancialNetBenefit => finance::net_benefit(yhat as f64, schema, features),
        Component::HoursTradeoff => hours_tradeoff(yhat as f64, schema, features),
    }
}

/// The work-hours utility `100*yhat - hours_per_week`; the hours feature must be
/// an integer in `[1, 99]`.
pub fn hours_tradeoff(
    yhat: f64,
    schema: &FeatureSchema,
    features: &[FeatureValue],
) -> Result<f64, HappinessError> {
    let hours = numeric_feature(schema, features, "hours_per_week")?;
    if hours.fract() != 0.0 || !(1.0..=99.0).contains(&hours) {
        return Err(HappinessError::HoursOutOfSupport(hours));
    }
    Ok(100.0 * yhat - hours)
}

pub(crate) fn numeric_feature(
    schema: &FeatureSchema,
    features: &[FeatureValue],
    name: &str,
) -> Result<f64, HappinessError> {
    let idx = schema
        .index_of(name)
        .ok_or_else(|| HappinessError::MissingFeature(name.to_string()))?;
    features[idx]
        .as_numeric()
        .ok_or_else(|| HappinessError::WrongKind(name.to_string()))
}

pub(crate) fn category_name<'a>(
    schema: &'a FeatureSchema,
    features: &[FeatureValue],
    name: &str,
) -> Result<&'a str, HappinessError> {
    let idx = schema
        .index_of(name)
        .ok_or_else(|| HappinessError::MissingFeature(name.to_string()))?;
    let cats = match schema.kind(idx) {
        crate::dataset::FeatureKind::Categorical(cats) => cats,
        crate::dataset::FeatureKind::Numeric => {
            return Err(HappinessError::WrongKind(name.to_string()));
        }
    };
    let value = features[idx]
        .as_category()
        .ok_or_else(|| HappinessError::WrongKind(name.to_string()))?;
    Ok(&cats[value])
}
