//! The three activity-comparison operators: name synonymy, intent affinity
//! and completeness ordering.
//!
//! Both similarity operators score with the Jaccard index over normalized
//! term sets and decide by comparing that score against a configured
//! threshold (inclusive).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Activity;
use crate::lexicon::{normalize, Lexicon, TermSet};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMode {
    #[default]
    SeedStar,
    Components,
}

impl std::fmt::Display for ClusteringMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ClusteringMode::SeedStar => "seed_star",
            ClusteringMode::Components => "components",
        })
    }
}

/// Thresholds and tie rules. Every value here is echoed into run metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// Minimum name score for two activities to count as synonyms.
    pub tau_syn: f64,
    /// Minimum intent score for two activities to count as affine.
    pub tau_aff: f64,
    /// Frames scoring within this distance of the best frame also receive
    /// the activity.
    pub epsilon_straddle: f64,
    /// Minimum intent score (on top of affinity) for one activity to supply
    /// steps to another. At 1.0 only identical intents qualify.
    pub tau_supply: f64,
    pub clustering_mode: ClusteringMode,
    /// Activities with more steps than this are reported as split candidates.
    pub split_flag_steps: usize,
    /// Number of intent terms joined into a generated stage name.
    pub stage_name_terms: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            tau_syn: 0.5,
            tau_aff: 0.4,
            epsilon_straddle: 0.1,
            tau_supply: 1.0,
            clustering_mode: ClusteringMode::SeedStar,
            split_flag_steps: 12,
            stage_name_terms: 2,
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("tau_syn", self.tau_syn),
            ("tau_aff", self.tau_aff),
            ("epsilon_straddle", self.epsilon_straddle),
            ("tau_supply", self.tau_supply),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.stage_name_terms == 0 {
            return Err(ConfigError("stage_name_terms must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a similarity operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub decision: bool,
    pub score: f64,
}

/// Jaccard index; two empty sets score 0.
pub fn jaccard(a: &TermSet, b: &TermSet) -> f64 {
    let union = a.union_len(b);
    if union == 0 {
        0.0
    } else {
        a.intersection_len(b) as f64 / union as f64
    }
}

pub fn synonym(name_a: &str, name_b: &str, lexicon: &Lexicon, cfg: &OperatorConfig) -> Judgement {
    let a = normalize(name_a, lexicon);
    let b = normalize(name_b, lexicon);
    let score = if a.is_empty() && b.is_empty() {
        if name_a.to_lowercase() == name_b.to_lowercase() {
            1.0
        } else {
            0.0
        }
    } else {
        jaccard(&a, &b)
    };
    Judgement { decision: score >= cfg.tau_syn, score }
}

/// Synonymy over already-normalized names.
pub fn synonym_terms(a: &TermSet, b: &TermSet, raw_equal: bool, cfg: &OperatorConfig) -> Judgement {
    let score = if a.is_empty() && b.is_empty() {
        if raw_equal {
            1.0
        } else {
            0.0
        }
    } else {
        jaccard(a, b)
    };
    Judgement { decision: score >= cfg.tau_syn, score }
}

pub fn semantic_affinity(intent_a: &TermSet, intent_b: &TermSet, cfg: &OperatorConfig) -> Judgement {
    if intent_a.is_empty() && intent_b.is_empty() {
        return Judgement { decision: false, score: 0.0 };
    }
    let score = jaccard(intent_a, intent_b);
    Judgement { decision: score >= cfg.tau_aff, score }
}

/// Whether two intents are close enough for one activity to complete the
/// other: affine, and at least `tau_supply` similar.
pub fn supply_affinity(intent_a: &TermSet, intent_b: &TermSet, cfg: &OperatorConfig) -> Judgement {
    let aff = semantic_affinity(intent_a, intent_b, cfg);
    Judgement {
        decision: aff.decision && aff.score >= cfg.tau_supply,
        score: aff.score,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Completeness {
    FirstMore,
    SecondMore,
    Equal,
}

impl Completeness {
    pub fn flip(self) -> Self {
        match self {
            Completeness::FirstMore => Completeness::SecondMore,
            Completeness::SecondMore => Completeness::FirstMore,
            Completeness::Equal => Completeness::Equal,
        }
    }
}

/// Anything that can be compared for completeness.
pub trait Detailed {
    fn step_count(&self) -> usize;
    fn artifact_count(&self) -> usize;
}

impl Detailed for Activity {
    fn step_count(&self) -> usize {
        self.steps.len()
    }
    fn artifact_count(&self) -> usize {
        Activity::artifact_count(self)
    }
}

/// Steps first, artifacts as the tiebreak.
pub fn more_complete<A: Detailed + ?Sized, B: Detailed + ?Sized>(a: &A, b: &B) -> Completeness {
    let key_a = (a.step_count(), a.artifact_count());
    let key_b = (b.step_count(), b.artifact_count());
    match key_a.cmp(&key_b) {
        std::cmp::Ordering::Greater => Completeness::FirstMore,
        std::cmp::Ordering::Less => Completeness::SecondMore,
        std::cmp::Ordering::Equal => Completeness::Equal,
    }
}
