//! Structured methodology descriptions and their on-disk corpus format.
//!
//! A corpus directory holds one JSON document per methodology, each shaped
//! as `{ "sdm": { id, name, overview, phases: [...], activities: [...] } }`,
//! plus an optional `manifest.json` carrying `domain_name` and
//! `baseline_sdm_ids`. Documents are read in file-name order, so the
//! resulting corpus never depends on directory enumeration order.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diag::Diagnostic;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("corpus validation failed:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
}

fn render(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub domain_name: String,
    pub sdms: Vec<Sdm>,
    #[serde(default)]
    pub baseline_sdm_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sdm {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub overview: String,
    #[serde(default)]
    pub phases: Vec<SdmPhase>,
    #[serde(default)]
    pub activities: Vec<Activity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SdmPhase {
    pub id: String,
    pub name: String,
    #[serde(default)]
    pub intent_terms: BTreeSet<String>,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activity {
    pub id: String,
    pub name: String,
    pub phase_id: String,
    #[serde(default)]
    pub intent_terms: BTreeSet<String>,
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub input_artifacts: BTreeSet<String>,
    #[serde(default)]
    pub output_artifacts: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub index: u32,
    pub description: String,
}

impl Activity {
    pub fn artifact_count(&self) -> usize {
        self.input_artifacts.len() + self.output_artifacts.len()
    }
}

impl Sdm {
    pub fn phase(&self, id: &str) -> Option<&SdmPhase> {
        self.phases.iter().find(|p| p.id == id)
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        self.activities.iter().find(|a| a.id == id)
    }
}

impl Corpus {
    pub fn sdm(&self, id: &str) -> Option<&Sdm> {
        self.sdms.iter().find(|s| s.id == id)
    }

    pub fn activity_count(&self) -> usize {
        self.sdms.iter().map(|s| s.activities.len()).sum()
    }
}

#[derive(Serialize, Deserialize)]
struct SdmDocument {
    sdm: Sdm,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Manifest {
    #[serde(default)]
    domain_name: Option<String>,
    #[serde(default)]
    baseline_sdm_ids: BTreeSet<String>,
}

/// Reads a corpus directory without validating it.
pub fn read_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let is_manifest = path.file_name().is_some_and(|n| n == MANIFEST_FILE);
        if path.is_file() && is_json && !is_manifest {
            files.push(path);
        }
    }
    files.sort();

    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        serde_json::from_str(&text).map_err(|source| CorpusError::Parse {
            path: manifest_path.clone(),
            source,
        })?
    } else {
        Manifest::default()
    };

    let mut sdms = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let doc: SdmDocument = serde_json::from_str(&text).map_err(|source| CorpusError::Parse {
            path: path.clone(),
            source,
        })?;
        sdms.push(doc.sdm);
    }

    let domain_name = manifest.domain_name.unwrap_or_else(|| {
        dir.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(Corpus {
        domain_name,
        sdms,
        baseline_sdm_ids: manifest.baseline_sdm_ids,
    })
}

/// Reads and validates a corpus directory. Any error-severity diagnostic
/// turns into [`CorpusError::Invalid`].
pub fn ingest_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let corpus = read_corpus(dir)?;
    let errors: Vec<_> = validate_corpus(&corpus)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if errors.is_empty() {
        Ok(corpus)
    } else {
        Err(CorpusError::Invalid(errors))
    }
}

/// Writes a corpus in the directory format [`read_corpus`] understands.
/// File names carry a zero-padded position so order survives a re-read.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    let io_err = |path: PathBuf| move |source| CorpusError::Io { path, source };
    fs::create_dir_all(dir).map_err(io_err(dir.to_path_buf()))?;
    for (i, sdm) in corpus.sdms.iter().enumerate() {
        let path = dir.join(format!("{:03}-{}.json", i + 1, file_stem(&sdm.id)));
        let doc = SdmDocument { sdm: sdm.clone() };
        let text = serde_json::to_string_pretty(&doc).expect("corpus documents serialize");
        fs::write(&path, text + "\n").map_err(io_err(path.clone()))?;
    }
    let manifest = Manifest {
        domain_name: Some(corpus.domain_name.clone()),
        baseline_sdm_ids: corpus.baseline_sdm_ids.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(io_err(path.clone()))
}

fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn validate_corpus(corpus: &Corpus) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if corpus.sdms.is_empty() {
        out.push(Diagnostic::error("corpus contains no methodology documents"));
    }

    let mut sdm_ids = HashSet::new();
    for sdm in &corpus.sdms {
        if !sdm_ids.insert(sdm.id.as_str()) {
            out.push(Diagnostic::error(format!("duplicate methodology id {:?}", sdm.id)).in_sdm(&sdm.id));
        }
        validate_sdm(sdm, &mut out);
    }

    for id in &corpus.baseline_sdm_ids {
        if !sdm_ids.contains(id.as_str()) {
            out.push(Diagnostic::error(format!("baseline id {id:?} names no methodology in the corpus")));
        }
    }
    out
}

fn validate_sdm(sdm: &Sdm, out: &mut Vec<Diagnostic>) {
    let at = |msg: String| Diagnostic::error(msg).in_sdm(&sdm.id);

    let mut phase_ids = HashSet::new();
    let mut last_order: Option<u32> = None;
    for phase in &sdm.phases {
        if !phase_ids.insert(phase.id.as_str()) {
            out.push(at(format!("duplicate phase id {:?}", phase.id)));
        }
        if phase.name.trim().is_empty() {
            out.push(at(format!("phase {:?} has an empty name", phase.id)));
        }
        if last_order.is_some_and(|prev| phase.order <= prev) {
            out.push(at(format!(
                "phase {:?} has order {} which does not increase on the previous phase",
                phase.id, phase.order
            )));
        }
        last_order = Some(phase.order);
    }

    let mut activity_ids = HashSet::new();
    for act in &sdm.activities {
        let at_act = |msg: String| at(msg).in_activity(&act.id);
        if !activity_ids.insert(act.id.as_str()) {
            out.push(at_act(format!("duplicate activity id {:?}", act.id)));
        }
        if act.name.trim().is_empty() {
            out.push(at_act(format!("activity {:?} has an empty name", act.id)));
        }
        if !phase_ids.contains(act.phase_id.as_str()) {
            out.push(at_act(format!(
                "activity {:?} references undeclared phase {:?}",
                act.id, act.phase_id
            )));
        }
        if act.intent_terms.iter().all(|t| t.trim().is_empty()) {
            out.push(at_act(format!("activity {:?} declares no intent terms", act.id)));
        }
        for (pos, step) in act.steps.iter().enumerate() {
            let expected = pos as u32 + 1;
            if step.index != expected {
                out.push(at_act(format!(
                    "activity {:?} step indices must run 1..{} contiguously; found {} at position {}",
                    act.id,
                    act.steps.len(),
                    step.index,
                    expected
                )));
                break;
            }
        }
        for step in &act.steps {
            if step.description.trim().is_empty() {
                out.push(at_act(format!("activity {:?} step {} has an empty description", act.id, step.index)));
            }
        }
    }
}
