//! Report values printed by each subcommand.
//!
//! Every report serializes to the `--json` output and renders the human
//! text from the same value, so the human form can be rebuilt from JSON.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use refcast_core::biassim::CalibrationRow;
use refcast_core::governance::diagnostic::Thresholds;
use refcast_core::governance::{findings_table, Finding, FindingStatus, Quadrant};
use refcast_core::model::Money;
use refcast_core::rcf::ReliabilityEstimate;
use refcast_core::refclass::{ClassFilter, DistributionSummary, PValueMethod, Uplift};
use serde::{Deserialize, Serialize};
use serde_json::Number;

/// Terminal styling; plain unless writing to a terminal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Style {
    pub color: bool,
}

impl Style {
    pub fn plain() -> Self {
        Style { color: false }
    }

    fn paint(self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn heading(self, text: &str) -> String {
        self.paint("1", text)
    }

    fn status(self, status: FindingStatus) -> String {
        let text = status.to_string();
        match status {
            FindingStatus::Pass => self.paint("32", &text),
            FindingStatus::Fail => self.paint("31", &text),
            FindingStatus::Info => text,
        }
    }
}

pub trait Render {
    fn render(&self, style: Style) -> String;
}

/// Money with its unit spelled out: `GBP 357.0 [constant-2004]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoneyView {
    pub amount: Number,
    pub currency: String,
    pub price_basis: String,
}

impl From<&Money> for MoneyView {
    fn from(m: &Money) -> Self {
        MoneyView {
            amount: Number::from_str(&m.amount().to_string()).expect("decimal is a JSON number"),
            currency: m.currency().to_string(),
            price_basis: m.basis().to_string(),
        }
    }
}

impl fmt::Display for MoneyView {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} [{}]",
            self.currency, self.amount, self.price_basis
        )
    }
}

/// Shortest round-trip form with at least two decimals: `0.40`, `0.569`.
pub fn fraction(x: f64) -> String {
    let s = format!("{x}");
    match s.find('.') {
        None if x.is_finite() => format!("{s}.00"),
        Some(dot) if s.len() - dot - 1 == 1 => format!("{s}0"),
        _ => s,
    }
}

/// `P80` for an acceptable risk of 0.2.
pub fn level_label(risk: f64) -> String {
    format!("P{}", ((1.0 - risk) * 100.0).round())
}

fn warnings(out: &mut String, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}

fn written(out: &mut String, path: &Option<String>) {
    if let Some(p) = path {
        let _ = writeln!(out, "wrote {p}");
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source: String,
    pub records: usize,
    pub schema_version: u32,
    pub warnings: Vec<String>,
    pub written: Option<String>,
}

impl Render for IngestReport {
    fn render(&self, _: Style) -> String {
        let mut out = format!(
            "accepted {} record(s) from {} (schema version {})\n",
            self.records, self.source, self.schema_version
        );
        warnings(&mut out, &self.warnings);
        written(&mut out, &self.written);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: String,
    pub metric: String,
    pub n: usize,
    pub members: Vec<String>,
    pub warnings: Vec<String>,
    pub written: Option<String>,
}

impl Render for ClassReport {
    fn render(&self, _: Style) -> String {
        let mut out = format!(
            "class: {}\nmetric: {}\nids: {}\n",
            self.class,
            self.metric,
            self.members.join(", ")
        );
        warnings(&mut out, &self.warnings);
        written(&mut out, &self.written);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTestReport {
    pub first: String,
    pub n_first: usize,
    pub second: String,
    pub n_second: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub method: PValueMethod,
    pub alpha: f64,
    pub comparable: bool,
}

impl Render for ClassTestReport {
    fn render(&self, _: Style) -> String {
        let method = match self.method {
            PValueMethod::Exact => "exact",
            PValueMethod::Asymptotic => "asymptotic",
        };
        format!(
            "first: {}\nsecond: {}\nKS statistic: {}\np-value: {} ({method})\nalpha: {}\ncomparable: {}\n",
            self.first,
            self.second,
            self.statistic,
            self.p_value,
            self.alpha,
            if self.comparable { "yes" } else { "no" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub class: String,
    pub summary: DistributionSummary,
    pub written: Option<String>,
}

impl Render for SummaryReport {
    fn render(&self, _: Style) -> String {
        let s = &self.summary;
        let mut out = format!(
            "class: {}\nmetric: {}\nn: {}\nmean: {}\nmedian: {}\nmin: {}\nmax: {}\nstdev: {}\necdf points: {}\n",
            self.class,
            s.metric,
            s.n,
            s.mean,
            s.median,
            s.min,
            s.max,
            s.stdev,
            s.ecdf_points.len()
        );
        written(&mut out, &self.written);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpliftReport {
    pub class: String,
    pub uplift: Uplift,
}

impl Render for UpliftReport {
    fn render(&self, _: Style) -> String {
        let u = &self.uplift;
        let mut out = format!(
            "class: {}\nrisk: {} ({} budget)\nuplift {} (rank {} of {})\n",
            self.class,
            u.risk,
            level_label(u.risk),
            fraction(u.fraction),
            u.rank,
            u.n
        );
        warnings(&mut out, &u.warnings);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub class: String,
    pub n: usize,
    pub risk: f64,
    pub uplift: f64,
    pub base: MoneyView,
    pub budget: MoneyView,
    pub uplift_amount: MoneyView,
    pub allowance: MoneyView,
    pub warnings: Vec<String>,
}

impl Render for BudgetReport {
    fn render(&self, _: Style) -> String {
        let mut out = format!(
            "class: {}\nbase estimate: {}\nrisk: {} ({})\nuplift: {}\nbudget: {}\nuplift amount: {}\nrisk allowance: {}\n",
            self.class,
            self.base,
            self.risk,
            level_label(self.risk),
            fraction(self.uplift),
            self.budget,
            self.uplift_amount,
            self.allowance
        );
        warnings(&mut out, &self.warnings);
        out
    }
}

/// The allowance view of a [`BudgetReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllowanceReport(pub BudgetReport);

impl Render for AllowanceReport {
    fn render(&self, _: Style) -> String {
        let b = &self.0;
        let mut out = format!(
            "budget: {} ({} at uplift {})\nuplift amount: {}\nrisk allowance: {} (half the uplift amount)\n\
             increases within the allowance: shared 50/50 with the funder, no new approval\n\
             increases beyond it: funded locally, new approval required\n",
            b.budget,
            level_label(b.risk),
            fraction(b.uplift),
            b.uplift_amount,
            b.allowance
        );
        warnings(&mut out, &b.warnings);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressReport {
    pub variable: String,
    pub class_mean: f64,
    pub intuitive: f64,
    pub reliability: ReliabilityEstimate,
    pub corrected: f64,
}

fn reliability_line(r: &ReliabilityEstimate) -> String {
    match (r.n_pairs, r.raw_correlation) {
        (Some(n), Some(raw)) => format!("{} ({}, {n} pairs, correlation {raw})", r.rho, r.source),
        _ => format!("{} ({})", r.rho, r.source),
    }
}

impl Render for RegressReport {
    fn render(&self, _: Style) -> String {
        let mut out = format!(
            "variable: {}\nclass mean: {}\nintuitive estimate: {}\nreliability: {}\ncorrected estimate: {}\n",
            self.variable,
            self.class_mean,
            self.intuitive,
            reliability_line(&self.reliability),
            self.corrected
        );
        warnings(&mut out, &self.reliability.warnings);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub name: String,
    pub learning_score: f64,
    pub alignment_score: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub thresholds: Thresholds,
    pub profiles: Vec<Diagnosis>,
}

impl Render for DiagnoseReport {
    fn render(&self, style: Style) -> String {
        let width = self
            .profiles
            .iter()
            .map(|p| p.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let mut out = format!(
            "thresholds: learning {}, alignment {}\n{}\n",
            self.thresholds.learning,
            self.thresholds.alignment,
            style.heading(&format!(
                "{:<width$}  {:<20}  {:<20}  QUADRANT",
                "NAME", "LEARNING", "ALIGNMENT"
            ))
        );
        for p in &self.profiles {
            let _ = writeln!(
                out,
                "{:<width$}  {:<20}  {:<20}  {}",
                p.name, p.learning_score, p.alignment_score, p.quadrant
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsReport {
    pub subject: String,
    pub findings: Vec<Finding>,
    pub all_pass: bool,
}

impl Render for FindingsReport {
    fn render(&self, style: Style) -> String {
        let table = findings_table(&self.findings);
        let mut out = format!("{}\n", style.heading(&self.subject));
        for (i, line) in table.lines().enumerate() {
            if i == 0 || !style.color {
                out.push_str(line);
            } else {
                // Recolour the status column in place.
                let f = &self.findings[i - 1];
                let plain = f.status.to_string();
                out.push_str(&line.replacen(&plain, &style.status(f.status), 1));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "result: {}",
            if self.all_pass { "pass" } else { "fail" }
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApportionReport {
    pub amount: MoneyView,
    pub prior_increases: MoneyView,
    pub risk_allowance: MoneyView,
    pub within_allowance: MoneyView,
    pub excess: MoneyView,
    pub local_share: MoneyView,
    pub funder_share: MoneyView,
    pub requires_new_approval: bool,
}

impl Render for ApportionReport {
    fn render(&self, _: Style) -> String {
        format!(
            "cost increase: {}\nprior increases: {}\nrisk allowance: {}\nwithin allowance: {}\nexcess: {}\nlocal share: {}\nfunder share: {}\nnew approval required: {}\n",
            self.amount,
            self.prior_increases,
            self.risk_allowance,
            self.within_allowance,
            self.excess,
            self.local_share,
            self.funder_share,
            if self.requires_new_approval { "yes" } else { "no" }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppraiseReport {
    pub periods: usize,
    pub rate: Option<f64>,
    pub npv: Option<f64>,
    pub irr: f64,
    pub roots: Vec<f64>,
    pub multiple_roots: bool,
    pub residual: f64,
}

impl Render for AppraiseReport {
    fn render(&self, _: Style) -> String {
        let mut out = format!("cashflows: {}\n", self.periods);
        if let (Some(rate), Some(npv)) = (self.rate, self.npv) {
            let _ = writeln!(out, "NPV at {rate}: {npv}");
        }
        let _ = writeln!(out, "IRR: {}", self.irr);
        if self.multiple_roots {
            let roots: Vec<String> = self.roots.iter().map(|r| r.to_string()).collect();
            let _ = writeln!(
                out,
                "warning: NPV has several roots ({}); reporting the one nearest zero",
                roots.join(", ")
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub n_projects: usize,
    pub trials: usize,
    pub seed: u64,
    pub debiased: bool,
    pub mean_overrun: f64,
    pub overrun_share: f64,
    pub regression_error: f64,
    pub mean_uplift: Vec<f64>,
    pub calibration: Vec<CalibrationRow>,
    pub written: Option<String>,
}

impl Render for SimulateReport {
    fn render(&self, style: Style) -> String {
        let mut out = format!(
            "projects per trial: {}\ntrials: {}\nseed: {}\nbudgets: {}\nmean overrun: {}\nshare with an overrun: {}\nregression error: {}\n{}\n",
            self.n_projects,
            self.trials,
            self.seed,
            if self.debiased { "reference-class uplift" } else { "raw forecast" },
            self.mean_overrun,
            self.overrun_share,
            self.regression_error,
            style.heading(&format!(
                "{:<6}  {:<22}  {:<22}  {:<22}  OK",
                "RISK", "MEAN UPLIFT", "EXCEEDANCE", "TOLERANCE"
            ))
        );
        for (row, uplift) in self.calibration.iter().zip(&self.mean_uplift) {
            let status = if row.within_tolerance {
                FindingStatus::Pass
            } else {
                FindingStatus::Fail
            };
            let _ = writeln!(
                out,
                "{:<6}  {:<22}  {:<22}  {:<22}  {}",
                row.risk,
                uplift,
                row.empirical,
                row.tolerance,
                style.status(status)
            );
        }
        written(&mut out, &self.written);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLine {
    pub risk: f64,
    pub uplift: f64,
    pub budget: MoneyView,
    pub allowance: MoneyView,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeReport {
    pub class: String,
    pub filter: ClassFilter,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub stdev: f64,
    pub base: MoneyView,
    pub intuitive: f64,
    pub reliability: ReliabilityEstimate,
    pub corrected_overrun: f64,
    pub corrected_forecast: MoneyView,
    pub budgets: Vec<BudgetLine>,
    pub warnings: Vec<String>,
    pub written: Option<String>,
}

impl NarrativeReport {
    /// The narrative without the trailing `wrote` line, as saved by `--out`.
    pub fn document(&self, style: Style) -> String {
        let h = |s: &str| style.heading(s);
        let filter = serde_json::to_string(&self.filter).expect("filter serializes");
        let mut out = String::new();
        let _ = writeln!(out, "{}\n", h("Reference class forecast"));
        let _ = writeln!(
            out,
            "{}\n  class: {}\n  filter: {filter}\n",
            h("1. Reference class"),
            self.class
        );
        let _ = writeln!(
            out,
            "{}\n  mean: {}\n  median: {}\n  min: {}\n  max: {}\n  stdev: {}\n",
            h("2. Distribution of outcomes"),
            self.mean,
            self.median,
            self.min,
            self.max,
            self.stdev
        );
        let _ = writeln!(
            out,
            "{}\n  base estimate: {}\n  intuitive overrun: {}\n",
            h("3. Intuitive prediction"),
            self.base,
            self.intuitive
        );
        let _ = writeln!(
            out,
            "{}\n  reliability: {}\n",
            h("4. Reliability of the prediction"),
            reliability_line(&self.reliability)
        );
        let _ = writeln!(
            out,
            "{}\n  corrected overrun: {} + {} x ({} - {}) = {}\n  corrected forecast: {}\n",
            h("5. Corrected estimate"),
            self.mean,
            self.reliability.rho,
            self.intuitive,
            self.mean,
            self.corrected_overrun,
            self.corrected_forecast
        );
        let _ = writeln!(out, "{}", h("Budgets"));
        for b in &self.budgets {
            let _ = writeln!(
                out,
                "  {} (risk {}): uplift {}, budget {}, risk allowance {}",
                level_label(b.risk),
                b.risk,
                fraction(b.uplift),
                b.budget,
                b.allowance
            );
        }
        warnings(&mut out, &self.warnings);
        out
    }
}

impl Render for NarrativeReport {
    fn render(&self, style: Style) -> String {
        let mut out = self.document(style);
        written(&mut out, &self.written);
        out
    }
}
