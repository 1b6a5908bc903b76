//! Hand-authored pattern content (context, problem, techniques, ...) merged
//! into mined patterns whose names match.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, PipelineError};
use crate::lexicon::Lexicon;
use crate::operators::{synonym, OperatorConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Phase,
    Stage,
    #[default]
    Task,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrichmentEntry {
    #[serde(default)]
    pub level: Level,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub techniques: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub roles: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub artifacts: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consequences: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enrichment {
    pub entries: Vec<EnrichmentEntry>,
}

impl Enrichment {
    /// Indices of entries at `level` whose name is a synonym of `name`.
    pub fn matching(&self, level: Level, name: &str, lexicon: &Lexicon, cfg: &OperatorConfig) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.level == level && synonym(&e.name, name, lexicon, cfg).decision)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn load_enrichment(path: &Path) -> Result<Enrichment, PipelineError> {
    read_json(path)
}
