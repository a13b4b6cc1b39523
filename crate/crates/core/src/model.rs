//! Domain types shared by every stage of the pipeline: money with an explicit
//! price basis, historical project records, and the relative-deviation
//! arithmetic (cost overrun, benefit shortfall, schedule slip).
//!
//! Deviations are dimensionless fractions with one sign convention for all
//! three metrics: positive means unfavorable. A cost overrun of `0.45` means
//! the actual cost was `1.45` times the forecast.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("record {id}: field `{field}` is required for {metric}")]
    MissingField {
        id: String,
        field: &'static str,
        metric: DeviationMetric,
    },
    #[error("record {id}: forecast for {metric} is zero, deviation undefined")]
    ZeroForecast { id: String, metric: DeviationMetric },
    #[error("cannot combine {left} with {right}")]
    BasisMismatch { left: String, right: String },
    #[error("money amount must be non-negative, got {0}")]
    NegativeAmount(Decimal),
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// Price basis of a money amount. Constant prices carry their base year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PriceBasis {
    Constant { base_year: i32 },
    Nominal,
}

impl PriceBasis {
    pub fn tag(&self) -> &'static str {
        match self {
            PriceBasis::Constant { .. } => "constant",
            PriceBasis::Nominal => "nominal",
        }
    }

    pub fn base_year(&self) -> Option<i32> {
        match self {
            PriceBasis::Constant { base_year } => Some(*base_year),
            PriceBasis::Nominal => None,
        }
    }

    /// Builds a basis from the flat `price_basis` / `base_year` column pair.
    pub fn from_parts(tag: &str, base_year: Option<i32>) -> Result<Self, ModelError> {
        match (tag.trim().to_ascii_lowercase().as_str(), base_year) {
            ("constant", Some(base_year)) => Ok(PriceBasis::Constant { base_year }),
            ("constant", None) => Err(ModelError::Invalid(
                "constant prices require a base_year".into(),
            )),
            ("nominal", None) => Ok(PriceBasis::Nominal),
            ("nominal", Some(y)) => Err(ModelError::Invalid(format!(
                "nominal prices cannot carry base_year {y}"
            ))),
            (other, _) => Err(ModelError::Invalid(format!(
                "unknown price_basis `{other}` (expected constant or nominal)"
            ))),
        }
    }
}

impl fmt::Display for PriceBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriceBasis::Constant { base_year } => write!(f, "constant-{base_year}"),
            PriceBasis::Nominal => f.write_str("nominal"),
        }
    }
}

/// Upper-case ISO-style currency code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Currency(String);

impl Currency {
    pub fn new(code: &str) -> Result<Self, ModelError> {
        let code = code.trim();
        if code.is_empty() || !code.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(ModelError::Invalid(format!(
                "currency code `{code}` must be non-empty alphanumeric"
            )));
        }
        Ok(Currency(code.to_ascii_uppercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Currency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A non-negative amount in a declared currency and price basis.
///
/// Arithmetic between two `Money` values fails unless both the currency and
/// the price basis match; the toolkit never converts or deflates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Money {
    amount: Decimal,
    currency: Currency,
    basis: PriceBasis,
}

impl Money {
    pub fn new(amount: Decimal, currency: Currency, basis: PriceBasis) -> Result<Self, ModelError> {
        if amount.is_sign_negative() && !amount.is_zero() {
            return Err(ModelError::NegativeAmount(amount));
        }
        Ok(Money {
            amount,
            currency,
            basis,
        })
    }

    pub fn zero(currency: Currency, basis: PriceBasis) -> Self {
        Money {
            amount: Decimal::ZERO,
            currency,
            basis,
        }
    }

    pub fn amount(&self) -> Decimal {
        self.amount
    }

    pub fn currency(&self) -> &Currency {
        &self.currency
    }

    pub fn basis(&self) -> PriceBasis {
        self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.amount.is_zero()
    }

    /// Same currency and basis, different amount.
    pub fn with_amount(&self, amount: Decimal) -> Result<Self, ModelError> {
        Money::new(amount, self.currency.clone(), self.basis)
    }

    pub fn same_unit(&self, other: &Money) -> bool {
        self.currency == other.currency && self.basis == other.basis
    }

    fn check_unit(&self, other: &Money) -> Result<(), ModelError> {
        if self.same_unit(other) {
            Ok(())
        } else {
            Err(ModelError::BasisMismatch {
                left: self.unit_label(),
                right: other.unit_label(),
            })
        }
    }

    pub fn unit_label(&self) -> String {
        format!("{} [{}]", self.currency, self.basis)
    }

    pub fn checked_add(&self, other: &Money) -> Result<Money, ModelError> {
        self.check_unit(other)?;
        self.with_amount(self.amount + other.amount)
    }

    /// Fails with `NegativeAmount` when `other` exceeds `self`.
    pub fn checked_sub(&self, other: &Money) -> Result<Money, ModelError> {
        self.check_unit(other)?;
        self.with_amount(self.amount - other.amount)
    }

    pub fn min(&self, other: &Money) -> Result<Money, ModelError> {
        self.check_unit(other)?;
        Ok(if other.amount < self.amount {
            other.clone()
        } else {
            self.clone()
        })
    }

    pub fn cmp_amount(&self, other: &Money) -> Result<std::cmp::Ordering, ModelError> {
        self.check_unit(other)?;
        Ok(self.amount.cmp(&other.amount))
    }

    pub fn scale(&self, factor: Decimal) -> Result<Money, ModelError> {
        self.with_amount(self.amount * factor)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} [{}]", self.currency, self.amount, self.basis)
    }
}

/// Project lifecycle stage at which a forecast was made or recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    ProgrammeEntry,
    ConditionalApproval,
    FullApproval,
    Completed,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::ProgrammeEntry,
        Stage::ConditionalApproval,
        Stage::FullApproval,
        Stage::Completed,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::ProgrammeEntry => "programme-entry",
            Stage::ConditionalApproval => "conditional-approval",
            Stage::FullApproval => "full-approval",
            Stage::Completed => "completed",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Stage::ALL
            .into_iter()
            .find(|stage| stage.as_str() == norm)
            .ok_or_else(|| ModelError::Invalid(format!("unknown stage `{s}`")))
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which forecast/actual pair a deviation is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationMetric {
    CostOverrun,
    BenefitShortfall,
    ScheduleSlip,
}

impl DeviationMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeviationMetric::CostOverrun => "cost_overrun",
            DeviationMetric::BenefitShortfall => "benefit_shortfall",
            DeviationMetric::ScheduleSlip => "schedule_slip",
        }
    }
}

impl fmt::Display for DeviationMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DeviationMetric {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "cost_overrun" => Ok(DeviationMetric::CostOverrun),
            "benefit_shortfall" => Ok(DeviationMetric::BenefitShortfall),
            "schedule_slip" => Ok(DeviationMetric::ScheduleSlip),
            other => Err(ModelError::Invalid(format!("unknown metric `{other}`"))),
        }
    }
}

/// Relative deviation of `actual` from `forecast` under `metric`'s sign
/// convention. Positive is unfavorable for every metric.
pub fn relative_deviation(
    forecast: Decimal,
    actual: Decimal,
    metric: DeviationMetric,
) -> Option<f64> {
    if forecast.is_zero() {
        return None;
    }
    let gap = match metric {
        DeviationMetric::CostOverrun | DeviationMetric::ScheduleSlip => actual - forecast,
        DeviationMetric::BenefitShortfall => forecast - actual,
    };
    gap.checked_div(forecast)
        .and_then(|d| d.to_f64())
        .or_else(|| Some((gap.to_f64()?) / forecast.to_f64()?))
}

/// One historical (or candidate) project.
///
/// Construct through [`ProjectRecord::builder`]; the builder enforces every
/// record invariant so a `ProjectRecord` in hand is always valid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProjectRecord {
    id: String,
    project_type: String,
    stage: Stage,
    year: i32,
    forecast_cost: Money,
    actual_cost: Option<Money>,
    benefit_unit: Option<String>,
    forecast_benefit: Option<Decimal>,
    actual_benefit: Option<Decimal>,
    forecast_duration_days: Option<u32>,
    actual_duration_days: Option<u32>,
    regime_tags: BTreeSet<String>,
    attributes: BTreeMap<String, String>,
}

/// A single invariant violation found while building a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub field: String,
    pub message: String,
}

impl FieldIssue {
    fn new(field: &str, message: impl Into<String>) -> Self {
        FieldIssue {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl ProjectRecord {
    pub fn builder(id: &str, project_type: &str, forecast_cost: Money) -> ProjectRecordBuilder {
        ProjectRecordBuilder {
            id: id.to_string(),
            project_type: project_type.to_string(),
            stage: Stage::Completed,
            year: 0,
            forecast_cost,
            actual_cost: None,
            benefit_unit: None,
            forecast_benefit: None,
            actual_benefit: None,
            forecast_duration_days: None,
            actual_duration_days: None,
            regime_tags: BTreeSet::new(),
            attributes: BTreeMap::new(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn project_type(&self) -> &str {
        &self.project_type
    }
    pub fn stage(&self) -> Stage {
        self.stage
    }
    pub fn year(&self) -> i32 {
        self.year
    }
    pub fn forecast_cost(&self) -> &Money {
        &self.forecast_cost
    }
    pub fn actual_cost(&self) -> Option<&Money> {
        self.actual_cost.as_ref()
    }
    pub fn benefit_unit(&self) -> Option<&str> {
        self.benefit_unit.as_deref()
    }
    pub fn forecast_benefit(&self) -> Option<Decimal> {
        self.forecast_benefit
    }
    pub fn actual_benefit(&self) -> Option<Decimal> {
        self.actual_benefit
    }
    pub fn forecast_duration_days(&self) -> Option<u32> {
        self.forecast_duration_days
    }
    pub fn actual_duration_days(&self) -> Option<u32> {
        self.actual_duration_days
    }
    pub fn regime_tags(&self) -> &BTreeSet<String> {
        &self.regime_tags
    }
    /// Columns outside the fixed schema, kept verbatim.
    pub fn attributes(&self) -> &BTreeMap<String, String> {
        &self.attributes
    }

    /// Whether both halves of `metric`'s forecast/actual pair are present.
    pub fn has_metric(&self, metric: DeviationMetric) -> bool {
        match metric {
            DeviationMetric::CostOverrun => self.actual_cost.is_some(),
            DeviationMetric::BenefitShortfall => {
                self.forecast_benefit.is_some() && self.actual_benefit.is_some()
            }
            DeviationMetric::ScheduleSlip => {
                self.forecast_duration_days.is_some() && self.actual_duration_days.is_some()
            }
        }
    }
}

/// Relative deviation of a record under `metric`.
pub fn deviation(record: &ProjectRecord, metric: DeviationMetric) -> Result<f64, ModelError> {
    let missing = |field| ModelError::MissingField {
        id: record.id.clone(),
        field,
        metric,
    };
    let (forecast, actual) = match metric {
        DeviationMetric::CostOverrun => (
            record.forecast_cost.amount,
            record
                .actual_cost
                .as_ref()
                .ok_or_else(|| missing("actual_cost"))?
                .amount,
        ),
        DeviationMetric::BenefitShortfall => (
            record
                .forecast_benefit
                .ok_or_else(|| missing("forecast_benefit"))?,
            record
                .actual_benefit
                .ok_or_else(|| missing("actual_benefit"))?,
        ),
        DeviationMetric::ScheduleSlip => (
            Decimal::from(
                record
                    .forecast_duration_days
                    .ok_or_else(|| missing("forecast_duration_days"))?,
            ),
            Decimal::from(
                record
                    .actual_duration_days
                    .ok_or_else(|| missing("actual_duration_days"))?,
            ),
        ),
    };
    relative_deviation(forecast, actual, metric).ok_or(ModelError::ZeroForecast {
        id: record.id.clone(),
        metric,
    })
}

#[derive(Debug, Clone)]
pub struct ProjectRecordBuilder {
    id: String,
    project_type: String,
    stage: Stage,
    year: i32,
    forecast_cost: Money,
    actual_cost: Option<Money>,
    benefit_unit: Option<String>,
    forecast_benefit: Option<Decimal>,
    actual_benefit: Option<Decimal>,
    forecast_duration_days: Option<u32>,
    actual_duration_days: Option<u32>,
    regime_tags: BTreeSet<String>,
    attributes: BTreeMap<String, String>,
}

impl ProjectRecordBuilder {
    pub fn stage(mut self, stage: Stage) -> Self {
        self.stage = stage;
        self
    }
    pub fn year(mut self, year: i32) -> Self {
        self.year = year;
        self
    }
    pub fn actual_cost(mut self, cost: Option<Money>) -> Self {
        self.actual_cost = cost;
        self
    }
    pub fn benefit(
        mut self,
        unit: Option<String>,
        forecast: Option<Decimal>,
        actual: Option<Decimal>,
    ) -> Self {
        self.benefit_unit = unit;
        self.forecast_benefit = forecast;
        self.actual_benefit = actual;
        self
    }
    pub fn durations(mut self, forecast: Option<u32>, actual: Option<u32>) -> Self {
        self.forecast_duration_days = forecast;
        self.actual_duration_days = actual;
        self
    }
    pub fn regime_tag(mut self, tag: &str) -> Self {
        self.regime_tags.insert(tag.to_string());
        self
    }
    pub fn regime_tags<I, S>(mut self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.regime_tags.extend(tags.into_iter().map(Into::into));
        self
    }
    pub fn attribute(mut self, key: &str, value: &str) -> Self {
        self.attributes.insert(key.to_string(), value.to_string());
        self
    }

    /// Validates every record invariant, reporting all violations at once.
    pub fn build(self) -> Result<ProjectRecord, Vec<FieldIssue>> {
        let mut issues = Vec::new();
        if self.id.trim().is_empty() {
            issues.push(FieldIssue::new("id", "id must be non-empty"));
        } else if self.id.trim() != self.id {
            issues.push(FieldIssue::new("id", "id has surrounding whitespace"));
        }
        if let Some(unit) = &self.benefit_unit {
            if unit.trim() != unit {
                issues.push(FieldIssue::new(
                    "benefit_unit",
                    "benefit_unit has surrounding whitespace",
                ));
            }
        }
        let project_type = self.project_type.trim().to_ascii_lowercase();
        if project_type.is_empty() {
            issues.push(FieldIssue::new(
                "project_type",
                "project_type must be non-empty",
            ));
        }
        if self.forecast_cost.amount <= Decimal::ZERO {
            issues.push(FieldIssue::new(
                "forecast_cost",
                "forecast_cost must be positive (a zero forecast makes overrun undefined)",
            ));
        }
        if let Some(actual) = &self.actual_cost {
            if !actual.same_unit(&self.forecast_cost) {
                issues.push(FieldIssue::new(
                    "actual_cost",
                    format!(
                        "actual_cost in {} but forecast_cost in {}",
                        actual.unit_label(),
                        self.forecast_cost.unit_label()
                    ),
                ));
            }
        }
        for (field, value) in [
            ("forecast_benefit", self.forecast_benefit),
            ("actual_benefit", self.actual_benefit),
        ] {
            if let Some(v) = value {
                if v.is_sign_negative() && !v.is_zero() {
                    issues.push(FieldIssue::new(field, "benefit must be non-negative"));
                }
                if self
                    .benefit_unit
                    .as_deref()
                    .is_none_or(|u| u.trim().is_empty())
                {
                    issues.push(FieldIssue::new(
                        "benefit_unit",
                        format!("{field} given without a benefit_unit"),
                    ));
                }
            }
        }
        for (field, value) in [
            ("forecast_duration_days", self.forecast_duration_days),
            ("actual_duration_days", self.actual_duration_days),
        ] {
            if value == Some(0) {
                issues.push(FieldIssue::new(
                    field,
                    "duration must be a positive number of days",
                ));
            }
        }
        for tag in &self.regime_tags {
            if tag.trim().is_empty() || tag.contains(';') || tag.trim() != tag {
                issues.push(FieldIssue::new(
                    "regime_tags",
                    format!("invalid regime tag `{tag}`"),
                ));
            }
        }
        for (key, value) in &self.attributes {
            if key.trim().is_empty() || value.trim().is_empty() {
                issues.push(FieldIssue::new(
                    key,
                    "extra attributes need a non-empty name and value",
                ));
            } else if key.trim() != key || value.trim() != value {
                issues.push(FieldIssue::new(
                    key,
                    "attribute name or value has surrounding whitespace",
                ));
            }
        }
        if !issues.is_empty() {
            return Err(issues);
        }
        Ok(ProjectRecord {
            id: self.id,
            project_type,
            stage: self.stage,
            year: self.year,
            forecast_cost: self.forecast_cost,
            actual_cost: self.actual_cost,
            benefit_unit: self.benefit_unit.filter(|u| !u.trim().is_empty()),
            forecast_benefit: self.forecast_benefit,
            actual_benefit: self.actual_benefit,
            forecast_duration_days: self.forecast_duration_days,
            actual_duration_days: self.actual_duration_days,
            regime_tags: self.regime_tags,
            attributes: self.attributes,
        })
    }
}
