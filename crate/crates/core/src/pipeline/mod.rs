//! Frame selection, decomposition, unify/supply/split refinement, stage
//! packaging and task concretization.
//!
//! [`mine`] runs the whole sequence; the individual steps are public so
//! they can be exercised and audited on their own.

pub mod decompose;
pub mod enrich;
pub mod frames;
pub mod refine;
mod run;
pub mod stages;
pub mod tasks;

use std::fmt;
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::ConfigError;

pub use decompose::{decompose, Assignment, Evidence, Signal};
pub use enrich::{load_enrichment, Enrichment, EnrichmentEntry, Level};
pub use frames::{determine_phase_frames, FrameMode, PhaseFrame};
pub use refine::{
    apply_splits, load_split_rules, shipped_split_rules, supply, unify, MergeEvent, MergeKind, SplitCandidate, SplitChild, SplitRule,
    WorkingActivity,
};
pub use run::{mine, MineOptions, MineOutput, DEVIATIONS};
pub use stages::{name_stage, package_stages, StageCluster};
pub use tasks::{concretize_tasks, TaskContext};

/// Identifies one source element: a methodology id plus an activity id
/// (or, for phase patterns built from baseline methodologies, a phase id).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActivityRef {
    pub sdm_id: String,
    pub activity_id: String,
}

impl ActivityRef {
    pub fn new(sdm_id: impl Into<String>, activity_id: impl Into<String>) -> Self {
        Self { sdm_id: sdm_id.into(), activity_id: activity_id.into() }
    }
}

impl fmt::Display for ActivityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.sdm_id, self.activity_id)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("split rule {rule:?} cannot be applied to {activity}: {message}")]
    RuleApplication { rule: String, activity: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed document {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid library produced: {0}")]
    Library(String),
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Parse {
        path: path.to_path_buf(),
        source,
    })
}
