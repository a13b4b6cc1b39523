//! Steps three to five of reference class forecasting: take the intuitive
//! (inside-view) estimate, assess how reliable such estimates have been, and
//! regress the estimate toward the class mean by that reliability. Also turns
//! a class uplift into a budget with its risk allowance.

use std::fmt;

use rust_decimal::prelude::{FromPrimitive, ToPrimitive};
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviationMetric, ModelError, Money};
use crate::refclass::{uplift, DistributionSummary, ReferenceClass, UpliftQuery};

pub const MIN_RELIABILITY_PAIRS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RcfError {
    #[error("need at least {MIN_RELIABILITY_PAIRS} prediction/outcome pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("{0} series has zero variance; correlation undefined")]
    DegenerateVariance(&'static str),
    #[error("class mean is over {class} but the intuitive estimate is over {intuitive}")]
    VariableMismatch {
        class: OutcomeVariable,
        intuitive: OutcomeVariable,
    },
    #[error("reliability must lie in [0, 1], got {0}")]
    InvalidReliability(f64),
    #[error("invalid estimate: {0}")]
    InvalidEstimate(String),
    #[error("uplifts need a cost_overrun class, this one measures {0}")]
    MetricMismatch(DeviationMetric),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The quantity an estimate is expressed in. Regression never mixes two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeVariable {
    TotalCost,
    DeviationFraction,
    DurationDays,
    Benefit,
}

impl fmt::Display for OutcomeVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeVariable::TotalCost => "total_cost",
            OutcomeVariable::DeviationFraction => "deviation_fraction",
            OutcomeVariable::DurationDays => "duration_days",
            OutcomeVariable::Benefit => "benefit",
        })
    }
}

impl std::str::FromStr for OutcomeVariable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "total_cost" => Ok(OutcomeVariable::TotalCost),
            "deviation_fraction" => Ok(OutcomeVariable::DeviationFraction),
            "duration_days" => Ok(OutcomeVariable::DurationDays),
            "benefit" => Ok(OutcomeVariable::Benefit),
            other => Err(format!("unknown outcome variable `{other}`")),
        }
    }
}

/// Inside-view prediction for the project at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntuitiveEstimate {
    value: f64,
    variable: OutcomeVariable,
}

impl IntuitiveEstimate {
    pub fn new(value: f64, variable: OutcomeVariable) -> Result<Self, RcfError> {
        if !value.is_finite() {
            return Err(RcfError::InvalidEstimate(format!("{value} is not finite")));
        }
        if matches!(
            variable,
            OutcomeVariable::TotalCost | OutcomeVariable::DurationDays
        ) && value <= 0.0
        {
            return Err(RcfError::InvalidEstimate(format!(
                "{variable} estimate must be positive, got {value}"
            )));
        }
        Ok(IntuitiveEstimate { value, variable })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn variable(&self) -> OutcomeVariable {
        self.variable
    }
}

/// Mean outcome of the reference class in a declared variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMean {
    pub value: f64,
    pub variable: OutcomeVariable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<String>,
}

impl ClassMean {
    pub fn new(value: f64, variable: OutcomeVariable) -> Self {
        ClassMean {
            value,
            variable,
            class_id: None,
        }
    }

    /// Mean deviation of a summarized class.
    pub fn from_summary(summary: &DistributionSummary) -> Self {
        ClassMean::new(summary.mean, OutcomeVariable::DeviationFraction)
    }

    /// Mean actual cost of the class members, for regressing total costs.
    pub fn actual_cost(class: &ReferenceClass) -> Result<Self, RcfError> {
        let unit = class.members()[0].forecast_cost();
        let mut sum = Decimal::ZERO;
        for m in class.members() {
            let cost = m.actual_cost().ok_or_else(|| {
                RcfError::InvalidEstimate(format!("{} has no actual cost", m.id()))
            })?;
            if !cost.same_unit(unit) {
                return Err(ModelError::BasisMismatch {
                    left: unit.unit_label(),
                    right: cost.unit_label(),
                }
                .into());
            }
            sum += cost.amount();
        }
        let mean = sum / Decimal::from(class.len());
        Ok(ClassMean {
            value: mean.to_f64().unwrap_or(f64::NAN),
            variable: OutcomeVariable::TotalCost,
            class_id: Some(class.label()),
        })
    }

    pub fn with_class_id(mut self, id: impl Into<String>) -> Self {
        self.class_id = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSource {
    Historical,
    Subjective,
}

impl fmt::Display for RhoSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RhoSource::Historical => "historical",
            RhoSource::Subjective => "subjective",
        })
    }
}

/// How well estimates like this one have predicted outcomes, in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityEstimate {
    pub rho: f64,
    pub source: RhoSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_pairs: Option<usize>,
    /// Pearson correlation before clamping into `[0, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_correlation: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ReliabilityEstimate {
    /// A judgment-based reliability, used when no track record exists.
    pub fn subjective(rho: f64) -> Result<Self, RcfError> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(RcfError::InvalidReliability(rho));
        }
        Ok(ReliabilityEstimate {
            rho,
            source: RhoSource::Subjective,
            n_pairs: None,
            raw_correlation: None,
            warnings: Vec::new(),
        })
    }
}

/// Pearson correlation of past predictions against outcomes, clamped to
/// `[0, 1]`.
pub fn estimate_reliability(pairs: &[(f64, f64)]) -> Result<ReliabilityEstimate, RcfError> {
    if pairs.len() < MIN_RELIABILITY_PAIRS {
        return Err(RcfError::InsufficientPairs(pairs.len()));
    }
    if pairs.iter().any(|(p, o)| !p.is_finite() || !o.is_finite()) {
        return Err(RcfError::InvalidEstimate("pairs must be finite".into()));
    }
    let n = pairs.len() as f64;
    let mean_p = pairs.iter().map(|(p, _)| p).sum::<f64>() / n;
    let mean_o = pairs.iter().map(|(_, o)| o).sum::<f64>() / n;
    let (mut spp, mut soo, mut spo) = (0.0, 0.0, 0.0);
    for (p, o) in pairs {
        let (dp, d_o) = (p - mean_p, o - mean_o);
        spp += dp * dp;
        soo += d_o * d_o;
        spo += dp * d_o;
    }
    if spp == 0.0 {
        return Err(RcfError::DegenerateVariance("prediction"));
    }
    if soo == 0.0 {
        return Err(RcfError::DegenerateVariance("outcome"));
    }
    let raw = (spo / (spp * soo).sqrt()).clamp(-1.0, 1.0);
    let mut warnings = Vec::new();
    let rho = if raw < 0.0 {
        warnings.push(format!(
            "negative correlation {raw:.4} between predictions and outcomes; reliability set to 0"
        ));
        0.0
    } else {
        raw
    };
    Ok(ReliabilityEstimate {
        rho,
        source: RhoSource::Historical,
        n_pairs: Some(pairs.len()),
        raw_correlation: Some(raw),
        warnings,
    })
}

/// Output of step 5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressedForecast {
    pub variable: OutcomeVariable,
    pub class_mean: f64,
    pub intuitive: f64,
    pub rho: f64,
    pub rho_source: RhoSource,
    pub corrected: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_id: Option<String>,
}

/// `corrected = mean + rho * (intuitive - mean)`.
pub fn regress(
    class_mean: &ClassMean,
    intuitive: &IntuitiveEstimate,
    reliability: &ReliabilityEstimate,
) -> Result<RegressedForecast, RcfError> {
    if class_mean.variable != intuitive.variable {
        return Err(RcfError::VariableMismatch {
            class: class_mean.variable,
            intuitive: intuitive.variable,
        });
    }
    let rho = reliability.rho;
    if !(0.0..=1.0).contains(&rho) {
        return Err(RcfError::InvalidReliability(rho));
    }
    if !class_mean.value.is_finite() {
        return Err(RcfError::InvalidEstimate("class mean is not finite".into()));
    }
    let (mu, i) = (class_mean.value, intuitive.value);
    let corrected = if rho == 1.0 {
        i
    } else if rho == 0.0 {
        mu
    } else {
        (mu + rho * (i - mu)).clamp(mu.min(i), mu.max(i))
    };
    Ok(RegressedForecast {
        variable: intuitive.variable,
        class_mean: mu,
        intuitive: i,
        rho,
        rho_source: reliability.source,
        corrected,
        class_id: class_mean.class_id.clone(),
    })
}

/// Reserve of half the uplift amount, spendable without re-approval.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskAllowance {
    uplift_amount: Money,
    allowance_amount: Money,
}

impl RiskAllowance {
    pub const SHARE: Decimal = Decimal::from_parts(5, 0, 0, false, 1);

    pub fn for_uplift(uplift_amount: Money) -> Result<Self, RcfError> {
        let allowance_amount = uplift_amount.scale(Self::SHARE)?;
        Ok(RiskAllowance {
            uplift_amount,
            allowance_amount,
        })
    }

    pub fn uplift_amount(&self) -> &Money {
        &self.uplift_amount
    }

    pub fn allowance_amount(&self) -> &Money {
        &self.allowance_amount
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpliftedBudget {
    pub base: Money,
    pub budget: Money,
    pub risk: f64,
    pub uplift_fraction: f64,
    pub allowance: RiskAllowance,
    pub warnings: Vec<String>,
}

/// Converts an `f64` fraction to the decimal with its shortest round-trip
/// representation (`0.4` stays `0.4`).
pub(crate) fn fraction_to_decimal(x: f64) -> Result<Decimal, RcfError> {
    format!("{x}")
        .parse::<Decimal>()
        .ok()
        .or_else(|| Decimal::from_f64(x))
        .ok_or_else(|| RcfError::InvalidEstimate(format!("{x} has no decimal representation")))
}

/// Budget = base x (1 + uplift); allowance = half the uplift amount.
pub fn forecast_with_uplift(
    base_estimate: &Money,
    class: &ReferenceClass,
    query: &UpliftQuery,
) -> Result<UpliftedBudget, RcfError> {
    if base_estimate.is_zero() {
        return Err(RcfError::InvalidEstimate(
            "base estimate must be positive".into(),
        ));
    }
    if class.metric() != DeviationMetric::CostOverrun {
        return Err(RcfError::MetricMismatch(class.metric()));
    }
    let up = uplift(class, query);
    let mut warnings = up.warnings.clone();
    warnings.extend(class.warnings().iter().cloned());
    let fraction = fraction_to_decimal(up.fraction)?;
    let budget_amount = base_estimate.amount() * (Decimal::ONE + fraction);
    let budget = base_estimate.with_amount(budget_amount)?;
    let uplift_amount = if fraction.is_sign_negative() {
        warnings.push("negative uplift: no risk allowance is set aside".into());
        Decimal::ZERO
    } else {
        budget_amount - base_estimate.amount()
    };
    let allowance = RiskAllowance::for_uplift(base_estimate.with_amount(uplift_amount)?)?;
    Ok(UpliftedBudget {
        base: base_estimate.clone(),
        budget,
        risk: query.risk(),
        uplift_fraction: up.fraction,
        allowance,
        warnings,
    })
}
