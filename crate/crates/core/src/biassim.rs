//! Monte Carlo simulator of biased forecasting.
//!
//! Each synthetic project has a lognormal true cost `C`. The promoter's honest
//! estimate is `U = C * exp(e)` with `e ~ N(0, noise)`; an early low estimate
//! `A = d * C * exp(-|e0|)` acts as the anchor. The published forecast is
//!
//! ```text
//! F = (A + a * (d*U - A)) * (1 - s * competition)
//! ```
//!
//! or `d*U * (1 - s * competition)` with `anchor_passthrough`, where `d` is the
//! optimism multiplier (delusion), `a` the anchor adjustment and `s` the
//! strategic shave (deception). Lognormal costs and multiplicative noise are
//! a modeling choice, not an empirical finding.
//!
//! Each trial splits its projects into a reference half and an evaluation
//! half. Uplifts from the reference half are applied to the evaluation half
//! and the exceedance rate of the resulting budgets is measured.
//!
//! Results are bit-identical for a given config regardless of the rayon
//! thread count: every (trial, project) pair owns its own RNG stream and
//! trial outcomes are folded serially in trial order.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rcf::{
    estimate_reliability, regress, ClassMean, IntuitiveEstimate, OutcomeVariable,
    ReliabilityEstimate,
};
use crate::refclass::quantile::nearest_rank_quantile;

pub const RISK_LEVELS: [f64; 3] = [0.5, 0.2, 0.1];

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasParams {
    /// `d` in (0, 1]; 1 means no optimism.
    pub optimism_multiplier: f64,
    /// `a` in [0, 1); how far the forecast moves from the anchor.
    pub anchor_weight: f64,
    /// `s` in [0, 1).
    pub strategic_shave: f64,
    /// In [0, 1].
    pub competition_intensity: f64,
    /// Skip the anchor entirely: the `a -> 1` limit.
    #[serde(default)]
    pub anchor_passthrough: bool,
}

impl BiasParams {
    pub fn unbiased() -> Self {
        BiasParams {
            optimism_multiplier: 1.0,
            anchor_weight: 0.0,
            strategic_shave: 0.0,
            competition_intensity: 0.0,
            anchor_passthrough: true,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let checks = [
            (
                "optimism_multiplier",
                self.optimism_multiplier > 0.0 && self.optimism_multiplier <= 1.0,
                "(0, 1]",
            ),
            (
                "anchor_weight",
                (0.0..1.0).contains(&self.anchor_weight),
                "[0, 1)",
            ),
            (
                "strategic_shave",
                (0.0..1.0).contains(&self.strategic_shave),
                "[0, 1)",
            ),
            (
                "competition_intensity",
                (0.0..=1.0).contains(&self.competition_intensity),
                "[0, 1]",
            ),
        ];
        for (name, ok, range) in checks {
            if !ok {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must lie in {range}"
                )));
            }
        }
        Ok(())
    }
}

/// Parameters of the underlying normal for a lognormal true cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalParams {
    pub log_mean: f64,
    pub log_stdev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_projects: usize,
    pub trials: usize,
    pub seed: u64,
    pub true_cost: LogNormalParams,
    pub noise_stdev: f64,
    pub bias: BiasParams,
    /// Budget the evaluation half with reference-class uplifts; otherwise
    /// the raw forecast is the budget.
    #[serde(default = "default_true")]
    pub debias: bool,
}

fn default_true() -> bool {
    true
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_projects < 2 {
            return Err(SimError::InvalidConfig(
                "n_projects must be at least 2 to split into reference and evaluation halves"
                    .into(),
            ));
        }
        if self.trials < 1 {
            return Err(SimError::InvalidConfig("trials must be at least 1".into()));
        }
        if !self.true_cost.log_mean.is_finite()
            || !(self.true_cost.log_stdev.is_finite() && self.true_cost.log_stdev >= 0.0)
        {
            return Err(SimError::InvalidConfig(
                "true_cost needs a finite log_mean and a non-negative log_stdev".into(),
            ));
        }
        if !(self.noise_stdev.is_finite() && self.noise_stdev >= 0.0) {
            return Err(SimError::InvalidConfig(
                "noise_stdev must be non-negative".into(),
            ));
        }
        self.bias.validate()
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let config: SimConfig =
            serde_json::from_str(text).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn reference_size(&self) -> usize {
        self.n_projects / 2
    }

    pub fn evaluation_size(&self) -> usize {
        self.n_projects - self.reference_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimProject {
    pub true_cost: f64,
    pub forecast: f64,
}

impl SimProject {
    pub fn overrun(&self) -> f64 {
        (self.true_cost - self.forecast) / self.forecast
    }
}

fn project_rng(seed: u64, trial: usize, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(trial as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Draws one project. All three variates are drawn whatever the bias
/// settings, so configs differing only in bias see the same costs and noise.
pub fn draw_project(config: &SimConfig, trial: usize, index: usize) -> SimProject {
    let mut rng = project_rng(config.seed, trial, index);
    let z_cost: f64 = StandardNormal.sample(&mut rng);
    let z_anchor: f64 = StandardNormal.sample(&mut rng);
    let z_honest: f64 = StandardNormal.sample(&mut rng);

    let c = (config.true_cost.log_mean + config.true_cost.log_stdev * z_cost).exp();
    let b = &config.bias;
    let honest = c * (config.noise_stdev * z_honest).exp();
    let optimistic = b.optimism_multiplier * honest;
    let base = if b.anchor_passthrough {
        optimistic
    } else {
        let anchor = b.optimism_multiplier * c * (-(config.noise_stdev * z_anchor).abs()).exp();
        anchor + b.anchor_weight * (optimistic - anchor)
    };
    SimProject {
        true_cost: c,
        forecast: base * (1.0 - b.strategic_shave * b.competition_intensity),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub risk: f64,
    /// Mean over trials of the uplift applied (0 without debiasing).
    pub mean_uplift: f64,
    /// Share of evaluated projects whose true cost exceeded the budget.
    pub exceedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: usize,
    pub reference_size: usize,
    pub evaluation_size: usize,
    pub debiased: bool,
    /// Mean overrun over every simulated project.
    pub mean_overrun: f64,
    /// Share of simulated projects with a positive overrun.
    pub overrun_share: f64,
    /// Overruns of every project in the first trial.
    pub realized_overruns: Vec<f64>,
    pub uplift_calibration: Vec<CalibrationPoint>,
    /// Mean absolute error of regressed forecasts against true cost.
    pub regression_error: f64,
}

impl SimResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

struct TrialOutcome {
    overrun_sum: f64,
    positive: usize,
    uplift: [f64; 3],
    exceeded: [usize; 3],
    abs_error_sum: f64,
    overruns: Option<Vec<f64>>,
}

fn run_trial(config: &SimConfig, trial: usize) -> TrialOutcome {
    let projects: Vec<SimProject> = (0..config.n_projects)
        .map(|i| draw_project(config, trial, i))
        .collect();
    let overruns: Vec<f64> = projects.iter().map(SimProject::overrun).collect();
    // Disjoint halves by construction.
    let (ref_projects, eval_projects) = projects.split_at(config.reference_size());
    let (ref_overruns, eval_overruns) = overruns.split_at(config.reference_size());

    let mut sorted = ref_overruns.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut uplift = [0.0; 3];
    let mut exceeded = [0usize; 3];
    for (k, &p) in RISK_LEVELS.iter().enumerate() {
        if config.debias {
            uplift[k] = nearest_rank_quantile(&sorted, 1.0 - p);
        }
        exceeded[k] = eval_overruns.iter().filter(|&&o| o > uplift[k]).count();
    }

    let mean_cost =
        ref_projects.iter().map(|p| p.true_cost).sum::<f64>() / ref_projects.len() as f64;
    let class_mean = ClassMean::new(mean_cost, OutcomeVariable::TotalCost);
    let pairs: Vec<(f64, f64)> = ref_projects
        .iter()
        .map(|p| (p.forecast, p.true_cost))
        .collect();
    let reliability = estimate_reliability(&pairs)
        .unwrap_or_else(|_| ReliabilityEstimate::subjective(0.0).expect("0 is a valid rho"));
    let abs_error_sum = eval_projects
        .iter()
        .map(|p| {
            let intuitive = IntuitiveEstimate::new(p.forecast, OutcomeVariable::TotalCost)
                .expect("simulated forecasts are positive");
            let corrected = regress(&class_mean, &intuitive, &reliability)
                .expect("matching variables and rho in range")
                .corrected;
            (corrected - p.true_cost).abs()
        })
        .sum();

    TrialOutcome {
        overrun_sum: overruns.iter().sum(),
        positive: overruns.iter().filter(|&&o| o > 0.0).count(),
        uplift,
        exceeded,
        abs_error_sum,
        overruns: (trial == 0).then_some(overruns),
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect();

    let mut overrun_sum = 0.0;
    let mut positive = 0usize;
    let mut uplift_sum = [0.0; 3];
    let mut exceeded = [0usize; 3];
    let mut abs_error_sum = 0.0;
    let mut realized = Vec::new();
    for o in outcomes {
        overrun_sum += o.overrun_sum;
        positive += o.positive;
        abs_error_sum += o.abs_error_sum;
        for k in 0..3 {
            uplift_sum[k] += o.uplift[k];
            exceeded[k] += o.exceeded[k];
        }
        if let Some(v) = o.overruns {
            realized = v;
        }
    }
    let all = (config.trials * config.n_projects) as f64;
    let evaluated = (config.trials * config.evaluation_size()) as f64;
    Ok(SimResult {
        trials: config.trials,
        reference_size: config.reference_size(),
        evaluation_size: config.evaluation_size(),
        debiased: config.debias,
        mean_overrun: overrun_sum / all,
        overrun_share: positive as f64 / all,
        realized_overruns: realized,
        uplift_calibration: RISK_LEVELS
            .iter()
            .enumerate()
            .map(|(k, &risk)| CalibrationPoint {
                risk,
                mean_uplift: uplift_sum[k] / config.trials as f64,
                exceedance: exceeded[k] as f64 / evaluated,
            })
            .collect(),
        regression_error: abs_error_sum / evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub risk: f64,
    pub target: f64,
    pub empirical: f64,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

/// Three-sigma binomial tolerance with one draw per trial.
pub fn calibration_tolerance(risk: f64, trials: usize) -> f64 {
    3.0 * (risk * (1.0 - risk) / trials as f64).sqrt()
}

pub fn calibration_report(result: &SimResult) -> Vec<CalibrationRow> {
    result
        .uplift_calibration
        .iter()
        .map(|c| {
            let tolerance = calibration_tolerance(c.risk, result.trials);
            CalibrationRow {
                risk: c.risk,
                target: c.risk,
                empirical: c.exceedance,
                tolerance,
                within_tolerance: (c.exceedance - c.risk).abs() <= tolerance,
            }
        })
        .collect()
}

pub fn calibration_csv(rows: &[CalibrationRow]) -> String {
    let mut out = String::from("risk,target,empirical,tolerance,within_tolerance\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.risk, r.target, r.empirical, r.tolerance, r.within_tolerance
        );
    }
    out
}
