//! Reference classes: selecting comparable completed projects, testing that
//! two classes are comparable, summarizing the deviation distribution, and
//! reading optimism-bias uplifts off it.
//!
//! Uplifts use the nearest-rank (ceiling) quantile, never interpolation: for
//! an acceptable overrun risk `p`, the uplift is the smallest class deviation
//! whose ECDF reaches `1 - p`. At most a fraction `p` of the class exceeds it.

pub mod ks;
pub mod quantile;

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Dataset;
use crate::model::{deviation, DeviationMetric, ModelError, ProjectRecord, Stage};

pub use ks::{KsOutcome, PValueMethod};
pub use quantile::EcdfPoint;

/// Classes smaller than this are rejected.
pub const MIN_CLASS_SIZE: usize = 5;
/// Classes smaller than this are accepted with a warning.
pub const WARN_CLASS_SIZE: usize = 20;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassError {
    #[error("invalid class filter: {0}")]
    InvalidFilter(String),
    #[error("no record matches the class filter")]
    NoMatch,
    #[error("reference class has {n} member(s); at least {min} are required")]
    ClassTooSmall { n: usize, min: usize },
    #[error("classes measure different metrics ({left} vs {right})")]
    MetricMismatch {
        left: DeviationMetric,
        right: DeviationMetric,
    },
    #[error("acceptable overrun risk must lie strictly between 0 and 1, got {0}")]
    InvalidRisk(f64),
    #[error("significance level must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Selection criteria for a reference class. Every non-empty selector must
/// match; `all` selects everything with the metric's actuals present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassFilter {
    #[serde(default)]
    pub project_types: BTreeSet<String>,
    #[serde(default)]
    pub stages: BTreeSet<Stage>,
    #[serde(default)]
    pub regime_tags_required: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year_range: Option<[i32; 2]>,
    pub metric: DeviationMetric,
    #[serde(default)]
    pub all: bool,
}

impl ClassFilter {
    pub fn all(metric: DeviationMetric) -> Self {
        ClassFilter {
            project_types: BTreeSet::new(),
            stages: BTreeSet::new(),
            regime_tags_required: BTreeSet::new(),
            year_range: None,
            metric,
            all: true,
        }
    }

    pub fn for_types<I: IntoIterator<Item = S>, S: Into<String>>(
        types: I,
        metric: DeviationMetric,
    ) -> Self {
        ClassFilter {
            project_types: types
                .into_iter()
                .map(|t| t.into().to_ascii_lowercase())
                .collect(),
            stages: BTreeSet::new(),
            regime_tags_required: BTreeSet::new(),
            year_range: None,
            metric,
            all: false,
        }
    }

    pub fn with_stages<I: IntoIterator<Item = Stage>>(mut self, stages: I) -> Self {
        self.stages.extend(stages);
        self
    }

    pub fn with_regime_tag(mut self, tag: &str) -> Self {
        self.regime_tags_required.insert(tag.to_string());
        self
    }

    pub fn with_years(mut self, min: i32, max: i32) -> Self {
        self.year_range = Some([min, max]);
        self
    }

    pub fn validate(&self) -> Result<(), ClassError> {
        let has_selector = !self.project_types.is_empty()
            || !self.stages.is_empty()
            || !self.regime_tags_required.is_empty()
            || self.year_range.is_some();
        if !has_selector && !self.all {
            return Err(ClassError::InvalidFilter(
                "no selector given; set at least one selector or `all: true`".into(),
            ));
        }
        if let Some([lo, hi]) = self.year_range {
            if lo > hi {
                return Err(ClassError::InvalidFilter(format!(
                    "year_range [{lo}, {hi}] is empty"
                )));
            }
        }
        Ok(())
    }

    pub fn matches(&self, record: &ProjectRecord) -> bool {
        (self.project_types.is_empty()
            || self
                .project_types
                .iter()
                .any(|t| t.eq_ignore_ascii_case(record.project_type())))
            && (self.stages.is_empty() || self.stages.contains(&record.stage()))
            && self
                .regime_tags_required
                .iter()
                .all(|t| record.regime_tags().contains(t))
            && self
                .year_range
                .is_none_or(|[lo, hi]| (lo..=hi).contains(&record.year()))
    }

    pub fn from_json(text: &str) -> Result<Self, ClassError> {
        let filter: ClassFilter =
            serde_json::from_str(text).map_err(|e| ClassError::InvalidFilter(e.to_string()))?;
        filter.validate()?;
        Ok(filter)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("filter serializes")
    }
}

/// A screened set of comparable projects with their cached deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceClass {
    members: Vec<ProjectRecord>,
    filter: ClassFilter,
    deviations: Vec<f64>,
    sorted: Vec<f64>,
    warnings: Vec<String>,
}

/// Step 1: select the class from a dataset.
pub fn build_class(dataset: &Dataset, filter: &ClassFilter) -> Result<ReferenceClass, ClassError> {
    ReferenceClass::from_records(dataset.records(), filter)
}

impl ReferenceClass {
    /// Keeps the records that match `filter` and carry the metric's actuals.
    pub fn from_records(
        records: &[ProjectRecord],
        filter: &ClassFilter,
    ) -> Result<ReferenceClass, ClassError> {
        filter.validate()?;
        let mut warnings = Vec::new();
        let mut members = Vec::new();
        let mut deviations = Vec::new();
        for r in records.iter().filter(|r| filter.matches(r)) {
            if !r.has_metric(filter.metric) {
                continue;
            }
            match deviation(r, filter.metric) {
                Ok(d) => {
                    members.push(r.clone());
                    deviations.push(d);
                }
                Err(ModelError::ZeroForecast { id, .. }) => {
                    warnings.push(format!(
                        "{id}: skipped, zero forecast for {}",
                        filter.metric
                    ));
                }
                Err(e) => return Err(e.into()),
            }
        }
        let n = members.len();
        if n == 0 {
            return Err(ClassError::NoMatch);
        }
        if n < MIN_CLASS_SIZE {
            return Err(ClassError::ClassTooSmall {
                n,
                min: MIN_CLASS_SIZE,
            });
        }
        if n < WARN_CLASS_SIZE {
            warnings.push(format!(
                "small reference class: {n} members (fewer than {WARN_CLASS_SIZE})"
            ));
        }
        let sorted = quantile::sorted_copy(&deviations);
        Ok(ReferenceClass {
            members,
            filter: filter.clone(),
            deviations,
            sorted,
            warnings,
        })
    }

    pub fn members(&self) -> &[ProjectRecord] {
        &self.members
    }

    pub fn filter(&self) -> &ClassFilter {
        &self.filter
    }

    pub fn metric(&self) -> DeviationMetric {
        self.filter.metric
    }

    /// Deviations in member order.
    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    pub fn sorted_deviations(&self) -> &[f64] {
        &self.sorted
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Short human label built from the filter, used in reports.
    pub fn label(&self) -> String {
        let f = &self.filter;
        let mut parts = Vec::new();
        if !f.project_types.is_empty() {
            parts.push(
                f.project_types
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join("+"),
            );
        }
        if !f.stages.is_empty() {
            parts.push(
                f.stages
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join("+"),
            );
        }
        if !f.regime_tags_required.is_empty() {
            parts.push(
                f.regime_tags_required
                    .iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join("+"),
            );
        }
        if let Some([lo, hi]) = f.year_range {
            parts.push(format!("{lo}-{hi}"));
        }
        if parts.is_empty() {
            parts.push("all".into());
        }
        format!("{}/{} (n={})", parts.join("/"), f.metric, self.len())
    }
}

/// Outcome of a two-sample comparability check between classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparability {
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub comparable: bool,
    pub method: PValueMethod,
}

/// Two-sample KS test on the classes' deviations; comparable iff
/// `p_value >= alpha`.
pub fn comparability_test(
    class_a: &ReferenceClass,
    class_b: &ReferenceClass,
    alpha: f64,
) -> Result<Comparability, ClassError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ClassError::InvalidAlpha(alpha));
    }
    if class_a.metric() != class_b.metric() {
        return Err(ClassError::MetricMismatch {
            left: class_a.metric(),
            right: class_b.metric(),
        });
    }
    let out = ks::two_sample(class_a.deviations(), class_b.deviations());
    Ok(Comparability {
        statistic: out.statistic,
        p_value: out.p_value,
        alpha,
        comparable: out.p_value >= alpha,
        method: out.method,
    })
}

/// Distribution of a class's deviations (step 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub metric: DeviationMetric,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (n - 1 denominator); zero for one member.
    pub stdev: f64,
    pub ecdf_points: Vec<EcdfPoint>,
}

impl DistributionSummary {
    /// ECDF value at `x` from the stored knots.
    pub fn ecdf(&self, x: f64) -> f64 {
        let idx = self.ecdf_points.partition_point(|p| p.deviation <= x);
        if idx == 0 {
            0.0
        } else {
            self.ecdf_points[idx - 1].cumulative
        }
    }

    /// `deviation,cumulative_fraction` rows for plotting.
    pub fn ecdf_csv(&self) -> String {
        let mut out = String::from("deviation,cumulative_fraction\n");
        for p in &self.ecdf_points {
            let _ = writeln!(out, "{},{}", p.deviation, p.cumulative);
        }
        out
    }
}

pub fn summarize(class: &ReferenceClass) -> DistributionSummary {
    summarize_sorted(class.metric(), class.sorted_deviations())
}

pub(crate) fn summarize_sorted(metric: DeviationMetric, sorted: &[f64]) -> DistributionSummary {
    let n = sorted.len();
    assert!(n > 0, "summary of an empty class");
    let min = sorted[0];
    let max = sorted[n - 1];
    // Shifting by the minimum keeps a constant sample exactly constant.
    let shifted: f64 = sorted.iter().map(|d| d - min).sum();
    let mean = (min + shifted / n as f64).clamp(min, max);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        let (lo, hi) = (sorted[n / 2 - 1], sorted[n / 2]);
        (lo + (hi - lo) / 2.0).clamp(lo, hi)
    };
    let stdev = if n > 1 {
        let ss: f64 = sorted.iter().map(|d| (d - mean) * (d - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    DistributionSummary {
        metric,
        n,
        mean,
        median,
        min,
        max,
        stdev,
        ecdf_points: quantile::ecdf_points(sorted),
    }
}

/// Acceptable risk that the uplifted budget is still exceeded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpliftQuery {
    risk: f64,
    #[serde(default)]
    clamp_nonnegative: bool,
}

impl UpliftQuery {
    pub fn new(risk: f64) -> Result<Self, ClassError> {
        if !(risk > 0.0 && risk < 1.0) {
            return Err(ClassError::InvalidRisk(risk));
        }
        Ok(UpliftQuery {
            risk,
            clamp_nonnegative: false,
        })
    }

    /// Report negative uplifts as zero instead of as-is.
    pub fn clamp_nonnegative(mut self, clamp: bool) -> Self {
        self.clamp_nonnegative = clamp;
        self
    }

    pub fn risk(&self) -> f64 {
        self.risk
    }

    pub fn clamps(&self) -> bool {
        self.clamp_nonnegative
    }

    /// Confidence level of the budget, e.g. `0.8` for P80.
    pub fn level(&self) -> f64 {
        1.0 - self.risk
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uplift {
    pub risk: f64,
    /// Uplift to apply: `budget = base * (1 + fraction)`.
    pub fraction: f64,
    /// Quantile before any clamp.
    pub raw_fraction: f64,
    /// One-based rank of the quantile in the sorted class.
    pub rank: usize,
    pub n: usize,
    pub clamped: bool,
    pub warnings: Vec<String>,
}

/// Optimism-bias uplift for an acceptable overrun risk.
pub fn uplift(class: &ReferenceClass, query: &UpliftQuery) -> Uplift {
    let sorted = class.sorted_deviations();
    let rank = quantile::nearest_rank(sorted.len(), query.level());
    let raw = sorted[rank - 1];
    let mut warnings = Vec::new();
    let (fraction, clamped) = if raw < 0.0 {
        if query.clamp_nonnegative {
            warnings.push(format!("negative uplift {raw} clamped to zero"));
            (0.0, true)
        } else {
            warnings.push(format!(
                "negative uplift {raw}: the class median project came in under forecast"
            ));
            (raw, false)
        }
    } else {
        (raw, false)
    };
    Uplift {
        risk: query.risk,
        fraction,
        raw_fraction: raw,
        rank,
        n: sorted.len(),
        clamped,
        warnings,
    }
}
