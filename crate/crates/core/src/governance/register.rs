//! Risk register: who owns which construction, operational and climate risk.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Finding;
use crate::model::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Construction,
    Operational,
    Climate,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 3] = [
        RiskCategory::Construction,
        RiskCategory::Operational,
        RiskCategory::Climate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskCategory::Construction => "construction",
            RiskCategory::Operational => "operational",
            RiskCategory::Climate => "climate",
        }
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskCategory {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        RiskCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| ModelError::Invalid(format!("unknown risk category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawEntry")]
pub struct RiskRegisterEntry {
    description: String,
    category: RiskCategory,
    owner: String,
    transferable: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    description: String,
    category: RiskCategory,
    owner: String,
    #[serde(default)]
    transferable: bool,
}

impl TryFrom<RawEntry> for RiskRegisterEntry {
    type Error = ModelError;
    fn try_from(raw: RawEntry) -> Result<Self, ModelError> {
        RiskRegisterEntry::new(raw.description, raw.category, raw.owner, raw.transferable)
    }
}

impl RiskRegisterEntry {
    /// Fails when the owner is blank: every risk must be owned.
    pub fn new(
        description: impl Into<String>,
        category: RiskCategory,
        owner: impl Into<String>,
        transferable: bool,
    ) -> Result<Self, ModelError> {
        let description = description.into();
        let owner = owner.into();
        if owner.trim().is_empty() {
            return Err(ModelError::Invalid(format!(
                "risk {description:?} has no owner"
            )));
        }
        Ok(RiskRegisterEntry {
            description,
            category,
            owner,
            transferable,
        })
    }

    pub fn description(&self) -> &str {
        &self.description
    }
    pub fn category(&self) -> RiskCategory {
        self.category
    }
    pub fn owner(&self) -> &str {
        &self.owner
    }
    pub fn transferable(&self) -> bool {
        self.transferable
    }
}

pub fn register_from_json(text: &str) -> Result<Vec<RiskRegisterEntry>, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))
}

/// One finding per required category plus one on ownership.
pub fn validate_risk_register(entries: &[RiskRegisterEntry]) -> Vec<Finding> {
    let mut findings: Vec<Finding> = RiskCategory::ALL
        .iter()
        .map(|&cat| {
            let n = entries.iter().filter(|e| e.category == cat).count();
            Finding::check(
                &format!("RR-{cat}"),
                n > 0,
                if n > 0 {
                    format!("{n} {cat} risk(s) registered")
                } else {
                    format!("missing category: no {cat} risk registered")
                },
            )
        })
        .collect();
    let unowned = entries.iter().filter(|e| e.owner.trim().is_empty()).count();
    findings.push(Finding::check(
        "RR-ownership",
        unowned == 0,
        format!(
            "{} of {} risk(s) have an owner",
            entries.len() - unowned,
            entries.len()
        ),
    ));
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::governance::{all_pass, FindingStatus};

    fn entry(cat: RiskCategory) -> RiskRegisterEntry {
        RiskRegisterEntry::new("risk", cat, "promoter", false).unwrap()
    }

    #[test]
    fn complete_register_passes() {
        let entries: Vec<_> = RiskCategory::ALL.into_iter().map(entry).collect();
        assert!(all_pass(&validate_risk_register(&entries)));
    }

    #[test]
    fn missing_climate_fails() {
        let entries = [
            entry(RiskCategory::Construction),
            entry(RiskCategory::Operational),
        ];
        let findings = validate_risk_register(&entries);
        let climate = findings.iter().find(|f| f.rule == "RR-climate").unwrap();
        assert_eq!(climate.status, FindingStatus::Fail);
        assert!(climate.detail.contains("missing category"));
    }

    #[test]
    fn empty_owner_rejected() {
        assert!(RiskRegisterEntry::new("flood", RiskCategory::Climate, "  ", true).is_err());
        let text = r#"[{"description":"flood","category":"climate","owner":""}]"#;
        assert!(register_from_json(text).is_err());
    }
}
