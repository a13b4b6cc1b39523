//! Policy checks for project funding and delivery, the delusion/deception
//! diagnostic, and ex-post appraisal (NPV / IRR).
//!
//! Checks report [`Finding`]s rather than failing: every rule is evaluated and
//! reported on each call.

pub mod appraisal;
pub mod diagnostic;
pub mod funding;
pub mod register;

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

pub use appraisal::{irr, npv, AppraisalError, Cashflow, IrrResult};
pub use diagnostic::{classify, DiagnosticProfile, Quadrant, Thresholds};
pub use funding::{
    apportion_cost_increase, check_funding, Apportionment, CostIncreaseEvent, FundingStructure,
};
pub use register::{validate_risk_register, RiskCategory, RiskRegisterEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingStatus {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for FindingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FindingStatus::Pass => "PASS",
            FindingStatus::Fail => "FAIL",
            FindingStatus::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub rule: String,
    pub status: FindingStatus,
    pub detail: String,
}

impl Finding {
    pub(crate) fn new(rule: &str, status: FindingStatus, detail: impl Into<String>) -> Self {
        Finding {
            rule: rule.to_string(),
            status,
            detail: detail.into(),
        }
    }

    pub(crate) fn check(rule: &str, ok: bool, detail: impl Into<String>) -> Self {
        let status = if ok {
            FindingStatus::Pass
        } else {
            FindingStatus::Fail
        };
        Finding::new(rule, status, detail)
    }
}

/// True when no finding failed.
pub fn all_pass(findings: &[Finding]) -> bool {
    findings.iter().all(|f| f.status != FindingStatus::Fail)
}

/// Fixed-width text table, one row per finding.
pub fn findings_table(findings: &[Finding]) -> String {
    let width = findings
        .iter()
        .map(|f| f.rule.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = format!("{:<width$}  STATUS  DETAIL\n", "RULE");
    for f in findings {
        let _ = writeln!(out, "{:<width$}  {:<6}  {}", f.rule, f.status, f.detail);
    }
    out
}
