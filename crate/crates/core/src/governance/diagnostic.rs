//! Learning-environment x incentive-alignment diagnostic.
//!
//! The [0,1] sub-score scale is a construction of this crate: the source
//! framework draws the two axes without a numeric scale. Composites are plain
//! means of their sub-scores.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningScores {
    pub problem_frequency: f64,
    pub feedback_speed: f64,
    pub feedback_clarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentScores {
    pub interest_congruence: f64,
    pub information_symmetry: f64,
    pub risk_preference_match: f64,
    pub horizon_match: f64,
    pub accountability_clarity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawProfile")]
pub struct DiagnosticProfile {
    learning: LearningScores,
    alignment: AlignmentScores,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    learning: LearningScores,
    alignment: AlignmentScores,
}

impl TryFrom<RawProfile> for DiagnosticProfile {
    type Error = ModelError;
    fn try_from(raw: RawProfile) -> Result<Self, ModelError> {
        DiagnosticProfile::new(raw.learning, raw.alignment)
    }
}

impl LearningScores {
    pub fn uniform(v: f64) -> Self {
        LearningScores {
            problem_frequency: v,
            feedback_speed: v,
            feedback_clarity: v,
        }
    }
    fn named(&self) -> [(&'static str, f64); 3] {
        [
            ("problem_frequency", self.problem_frequency),
            ("feedback_speed", self.feedback_speed),
            ("feedback_clarity", self.feedback_clarity),
        ]
    }
}

impl AlignmentScores {
    pub fn uniform(v: f64) -> Self {
        AlignmentScores {
            interest_congruence: v,
            information_symmetry: v,
            risk_preference_match: v,
            horizon_match: v,
            accountability_clarity: v,
        }
    }
    fn named(&self) -> [(&'static str, f64); 5] {
        [
            ("interest_congruence", self.interest_congruence),
            ("information_symmetry", self.information_symmetry),
            ("risk_preference_match", self.risk_preference_match),
            ("horizon_match", self.horizon_match),
            ("accountability_clarity", self.accountability_clarity),
        ]
    }
}

fn mean(values: &[(&str, f64)]) -> f64 {
    values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64
}

impl DiagnosticProfile {
    pub fn new(learning: LearningScores, alignment: AlignmentScores) -> Result<Self, ModelError> {
        let bad: Vec<String> = learning
            .named()
            .iter()
            .chain(alignment.named().iter())
            .filter(|(_, v)| !(0.0..=1.0).contains(v))
            .map(|(name, v)| format!("{name}={v}"))
            .collect();
        if !bad.is_empty() {
            return Err(ModelError::Invalid(format!(
                "sub-scores must lie in [0,1]: {}",
                bad.join(", ")
            )));
        }
        Ok(DiagnosticProfile {
            learning,
            alignment,
        })
    }

    pub fn uniform(learning: f64, alignment: f64) -> Result<Self, ModelError> {
        DiagnosticProfile::new(
            LearningScores::uniform(learning),
            AlignmentScores::uniform(alignment),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))
    }

    pub fn learning(&self) -> &LearningScores {
        &self.learning
    }
    pub fn alignment(&self) -> &AlignmentScores {
        &self.alignment
    }
    pub fn learning_score(&self) -> f64 {
        mean(&self.learning.named())
    }
    pub fn alignment_score(&self) -> f64 {
        mean(&self.alignment.named())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrant {
    Unbiased,
    DelusionDominant,
    DeceptionDominant,
    Both,
}

impl Quadrant {
    pub fn as_str(self) -> &'static str {
        match self {
            Quadrant::Unbiased => "unbiased",
            Quadrant::DelusionDominant => "delusion_dominant",
            Quadrant::DeceptionDominant => "deception_dominant",
            Quadrant::Both => "both",
        }
    }

    /// 2 = unbiased, 1 = one bias dominates, 0 = both.
    pub fn rank(self) -> u8 {
        match self {
            Quadrant::Unbiased => 2,
            Quadrant::DelusionDominant | Quadrant::DeceptionDominant => 1,
            Quadrant::Both => 0,
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quadrant {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        [
            Quadrant::Unbiased,
            Quadrant::DelusionDominant,
            Quadrant::DeceptionDominant,
            Quadrant::Both,
        ]
        .into_iter()
        .find(|q| q.as_str() == s)
        .ok_or_else(|| ModelError::Invalid(format!("unknown quadrant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub learning: f64,
    pub alignment: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            learning: 0.5,
            alignment: 0.5,
        }
    }
}

/// A composite exactly at its threshold counts as good.
pub fn classify(profile: &DiagnosticProfile, thresholds: Thresholds) -> Quadrant {
    let learns = profile.learning_score() >= thresholds.learning;
    let aligned = profile.alignment_score() >= thresholds.alignment;
    match (learns, aligned) {
        (true, true) => Quadrant::Unbiased,
        (false, true) => Quadrant::DelusionDominant,
        (true, false) => Quadrant::DeceptionDominant,
        (false, false) => Quadrant::Both,
    }
}

/// A named example profile, e.g. from the bundled archetype file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub name: String,
    #[serde(default)]
    pub note: String,
    pub profile: DiagnosticProfile,
}

pub fn archetypes_from_json(text: &str) -> Result<Vec<Archetype>, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(l: f64, a: f64) -> Quadrant {
        classify(
            &DiagnosticProfile::uniform(l, a).unwrap(),
            Thresholds::default(),
        )
    }

    #[test]
    fn archetype_corners() {
        assert_eq!(q(1.0, 1.0), Quadrant::Unbiased);
        assert_eq!(q(0.1, 1.0), Quadrant::DelusionDominant);
        assert_eq!(q(0.9, 0.1), Quadrant::DeceptionDominant);
        assert_eq!(q(0.1, 0.1), Quadrant::Both);
    }

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(q(0.5, 0.5), Quadrant::Unbiased);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(DiagnosticProfile::uniform(1.1, 0.5).is_err());
        let text = r#"{"learning":{"problem_frequency":0.2,"feedback_speed":0.2,"feedback_clarity":-0.1},
            "alignment":{"interest_congruence":1,"information_symmetry":1,"risk_preference_match":1,
            "horizon_match":1,"accountability_clarity":1}}"#;
        let err = DiagnosticProfile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("feedback_clarity"), "{err}");
    }

    #[test]
    fn composites_are_means() {
        let p = DiagnosticProfile::new(
            LearningScores {
                problem_frequency: 0.0,
                feedback_speed: 0.5,
                feedback_clarity: 1.0,
            },
            AlignmentScores {
                interest_congruence: 1.0,
                information_symmetry: 0.0,
                risk_preference_match: 0.0,
                horizon_match: 0.0,
                accountability_clarity: 0.0,
            },
        )
        .unwrap();
        assert_eq!(p.learning_score(), 0.5);
        assert_eq!(p.alignment_score(), 0.2);
    }

    fn scores() -> impl Strategy<Value = [f64; 8]> {
        prop::array::uniform8(0.0f64..=1.0)
    }

    fn build(s: &[f64; 8]) -> DiagnosticProfile {
        DiagnosticProfile::new(
            LearningScores {
                problem_frequency: s[0],
                feedback_speed: s[1],
                feedback_clarity: s[2],
            },
            AlignmentScores {
                interest_congruence: s[3],
                information_symmetry: s[4],
                risk_preference_match: s[5],
                horizon_match: s[6],
                accountability_clarity: s[7],
            },
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn raising_a_score_never_worsens(s in scores(), idx in 0usize..8, bump in 0.0f64..=1.0, tl in 0.0f64..=1.0, ta in 0.0f64..=1.0) {
            let t = Thresholds { learning: tl, alignment: ta };
            let before = classify(&build(&s), t);
            let mut raised = s;
            raised[idx] = (raised[idx] + bump).min(1.0);
            let after = classify(&build(&raised), t);
            prop_assert!(after.rank() >= before.rank(), "{before} -> {after}");
        }
    }
}
