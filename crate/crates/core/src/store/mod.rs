//! Pattern records, the library document and its validation.

mod report;
mod trace;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Step;
use crate::diag::Diagnostic;
use crate::operators::OperatorConfig;
use crate::pipeline::{ActivityRef, MergeEvent, SplitCandidate};

pub use report::render_report;
pub use trace::{dangling_refs, trace_matrix, TraceMatrix, ABSENT};

/// Placeholder for pattern content nobody has authored yet.
pub const TO_BE_EXPLORED: &str = "to be explored";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed library {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid library: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Granularity {
    Phase,
    Stage,
    Task,
}

impl Granularity {
    fn prefix(self) -> &'static str {
        match self {
            Granularity::Phase => "phase",
            Granularity::Stage => "stage",
            Granularity::Task => "task",
        }
    }

    fn child(self) -> Option<Granularity> {
        match self {
            Granularity::Phase => Some(Granularity::Stage),
            Granularity::Stage => Some(Granularity::Task),
            Granularity::Task => None,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Phase => "PHASE",
            Granularity::Stage => "STAGE",
            Granularity::Task => "TASK",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternBody {
    /// Child pattern ids of a phase or stage.
    Children(Vec<String>),
    Task {
        steps: Vec<Step>,
        #[serde(default)]
        techniques: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub id: String,
    pub granularity: Granularity,
    pub name: String,
    pub context: String,
    pub problem: String,
    pub body: PatternBody,
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub artifacts: BTreeSet<String>,
    #[serde(default)]
    pub related_patterns: BTreeSet<String>,
    pub consequences: String,
    #[serde(default)]
    pub provenance: BTreeSet<ActivityRef>,
    /// Names of the source activities folded into this pattern.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub aliases: BTreeSet<String>,
}

impl PatternRecord {
    pub fn children(&self) -> &[String] {
        match &self.body {
            PatternBody::Children(c) => c,
            PatternBody::Task { .. } => &[],
        }
    }
}

/// Content hash over granularity, name and sorted provenance.
pub fn pattern_id(granularity: Granularity, name: &str, provenance: &BTreeSet<ActivityRef>) -> String {
    let mut h = Sha256::new();
    h.update(granularity.prefix().as_bytes());
    h.update([0]);
    h.update(name.as_bytes());
    for r in provenance {
        h.update([0]);
        h.update(r.sdm_id.as_bytes());
        h.update([1]);
        h.update(r.activity_id.as_bytes());
    }
    let hex: String = h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("{}-{hex}", granularity.prefix())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Straddler {
    pub activity: ActivityRef,
    pub frames: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnassignedEntry {
    pub activity: ActivityRef,
    pub name: String,
    pub best_frame: Option<String>,
    pub synonym: f64,
    pub affinity: f64,
}

/// What happened during mining, kept with the library so the report can be
/// regenerated later.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunAudit {
    pub straddlers: Vec<Straddler>,
    pub unassigned: Vec<UnassignedEntry>,
    pub split_candidates: Vec<SplitCandidate>,
    pub merge_log: Vec<MergeEvent>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub config: OperatorConfig,
    pub frames_mode: String,
    /// Command-line flags as given.
    #[serde(default)]
    pub invocation: BTreeMap<String, String>,
    pub lexicon_digest: String,
    #[serde(default)]
    pub deviations: Vec<String>,
    #[serde(default)]
    pub audit: RunAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternLibrary {
    pub domain_name: String,
    /// Phases in frame order, then stages, then tasks.
    pub records: Vec<PatternRecord>,
    pub run_metadata: RunMetadata,
}

impl PatternLibrary {
    pub fn get(&self, id: &str) -> Option<&PatternRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn of(&self, granularity: Granularity) -> impl Iterator<Item = &PatternRecord> {
        self.records.iter().filter(move |r| r.granularity == granularity)
    }

    /// Every invariant violation, each naming the offending id or edge.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut by_id: HashMap<&str, &PatternRecord> = HashMap::new();
        for r in &self.records {
            if by_id.insert(&r.id, r).is_some() {
                out.push(format!("duplicate pattern id {}", r.id));
            }
        }
        let mut parents: HashMap<&str, Vec<&str>> = HashMap::new();
        for r in &self.records {
            match (&r.body, r.granularity) {
                (PatternBody::Task { .. }, Granularity::Task) | (PatternBody::Children(_), Granularity::Phase | Granularity::Stage) => {}
                _ => out.push(format!("{} {} has a body of the wrong kind", r.granularity, r.id)),
            }
            if r.related_patterns.contains(&r.id) {
                out.push(format!("{} lists itself as related", r.id));
            }
            for rel in &r.related_patterns {
                if !by_id.contains_key(rel.as_str()) {
                    out.push(format!("{} is related to unknown pattern {rel}", r.id));
                }
            }
            for child in r.children() {
                let Some(c) = by_id.get(child.as_str()) else {
                    out.push(format!("{} contains unknown pattern {child}", r.id));
                    continue;
                };
                if r.granularity.child() != Some(c.granularity) {
                    out.push(format!(
                        "containment edge {} ({}) -> {} ({}) is not allowed",
                        r.id, r.granularity, c.id, c.granularity
                    ));
                }
                parents.entry(child).or_default().push(&r.id);
            }
        }
        for r in self.records.iter().filter(|r| r.granularity != Granularity::Phase) {
            match parents.get(r.id.as_str()).map_or(0, Vec::len) {
                1 => {}
                0 => out.push(format!("{} {} has no parent", r.granularity, r.id)),
                n => out.push(format!("{} {} has {n} parents", r.granularity, r.id)),
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(StoreError::Invalid(problems))
        }
    }

    /// The canonical serialized form; identical libraries give identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("library serializes");
        s.push('\n');
        s
    }
}

pub fn save_library(lib: &PatternLibrary, path: &Path) -> Result<(), StoreError> {
    lib.validate()?;
    std::fs::write(path, lib.to_json()).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads and re-validates a library. Unknown fields are tolerated and
/// returned as warnings.
pub fn load_library(path: &Path) -> Result<(PatternLibrary, Vec<Diagnostic>), StoreError> {
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (lib, warnings) = parse_library(&text).map_err(|source| StoreError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    lib.validate()?;
    Ok((lib, warnings))
}

pub fn parse_library(text: &str) -> Result<(PatternLibrary, Vec<Diagnostic>), serde_json::Error> {
    let mut unknown = Vec::new();
    let de = &mut serde_json::Deserializer::from_str(text);
    let lib: PatternLibrary = serde_ignored::deserialize(de, |p| unknown.push(p.to_string()))?;
    let warnings = unknown
        .into_iter()
        .map(|p| Diagnostic::warning(format!("ignoring unknown field {p}")))
        .collect();
    Ok((lib, warnings))
}
