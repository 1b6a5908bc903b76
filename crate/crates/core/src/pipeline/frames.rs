use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, ActivityRef, PipelineError};
use crate::corpus::Corpus;
use crate::lexicon::{normalize, normalize_terms, Lexicon, TermSet};
use crate::operators::{synonym_terms, ConfigError, OperatorConfig};

/// A phase pattern acting as a bucket for activities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseFrame {
    pub id: String,
    pub name: String,
    pub intent_terms: TermSet,
    pub order: u32,
    /// Baseline phases merged into this frame (derived mode only).
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub sources: BTreeSet<ActivityRef>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameMode {
    #[default]
    Sdlc,
    Derived,
    File,
}

impl fmt::Display for FrameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameMode::Sdlc => "sdlc",
            FrameMode::Derived => "derived",
            FrameMode::File => "file",
        })
    }
}

impl std::str::FromStr for FrameMode {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sdlc" => Ok(FrameMode::Sdlc),
            "derived" => Ok(FrameMode::Derived),
            "file" => Ok(FrameMode::File),
            other => Err(ConfigError(format!("unknown frames mode {other:?}"))),
        }
    }
}

/// The generic life-cycle phases with their built-in intent vocabulary.
const SDLC: [(&str, &str, &[&str]); 6] = [
    ("initiate", "Initiate", &["initiate", "plan", "feasibility", "existing assets", "assessment"]),
    ("analysis-and-design", "Analysis and Design", &["requirement", "analysis", "design", "architecture", "model"]),
    ("construction", "Construction", &["construction", "implementation", "coding", "integration"]),
    ("test", "Test", &["testing", "quality", "defect"]),
    ("deployment", "Deployment", &["deployment", "release", "installation", "transition"]),
    ("maintain", "Maintain", &["maintenance", "operation", "monitoring", "support", "evolution"]),
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FramesDocument {
    frames: Vec<FrameEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameEntry {
    #[serde(default)]
    id: Option<String>,
    name: String,
    #[serde(default)]
    intent_terms: Vec<String>,
    #[serde(default)]
    order: Option<u32>,
}

pub fn determine_phase_frames(
    corpus: &Corpus,
    mode: FrameMode,
    frames_file: Option<&Path>,
    lexicon: &Lexicon,
    cfg: &OperatorConfig,
) -> Result<Vec<PhaseFrame>, PipelineError> {
    let frames = match mode {
        FrameMode::Sdlc => SDLC
            .iter()
            .enumerate()
            .map(|(i, (id, name, terms))| PhaseFrame {
                id: (*id).to_owned(),
                name: (*name).to_owned(),
                intent_terms: terms.iter().flat_map(|t| normalize(t, lexicon).into_inner()).collect(),
                order: i as u32,
                sources: BTreeSet::new(),
            })
            .collect(),
        FrameMode::Derived => derived_frames(corpus, lexicon, cfg)?,
        FrameMode::File => {
            let path = frames_file
                .ok_or_else(|| ConfigError("frames mode 'file' requires a frames file".into()))?;
            file_frames(path, lexicon)?
        }
    };
    check_frames(&frames)?;
    Ok(frames)
}

fn derived_frames(corpus: &Corpus, lexicon: &Lexicon, cfg: &OperatorConfig) -> Result<Vec<PhaseFrame>, PipelineError> {
    if corpus.baseline_sdm_ids.is_empty() {
        return Err(ConfigError("frames mode 'derived' requires baseline methodologies in the corpus manifest".into()).into());
    }
    // (position within its methodology, baseline index, phase)
    let mut candidates = Vec::new();
    for (b, sdm) in corpus.sdms.iter().filter(|s| corpus.baseline_sdm_ids.contains(&s.id)).enumerate() {
        for (pos, phase) in sdm.phases.iter().enumerate() {
            candidates.push((pos, b, sdm, phase));
        }
    }
    candidates.sort_by_key(|(pos, b, _, _)| (*pos, *b));

    struct Draft {
        name: String,
        name_terms: TermSet,
        intent: TermSet,
        sources: BTreeSet<ActivityRef>,
    }
    let mut drafts: Vec<Draft> = Vec::new();
    for (_, _, sdm, phase) in candidates {
        let terms = normalize(&phase.name, lexicon);
        let intent = normalize_terms(&phase.intent_terms, lexicon);
        let src = ActivityRef::new(&sdm.id, &phase.id);
        let hit = drafts.iter_mut().find(|d| {
            let raw_eq = d.name.to_lowercase() == phase.name.to_lowercase();
            synonym_terms(&d.name_terms, &terms, raw_eq, cfg).decision
        });
        match hit {
            Some(d) => {
                d.intent.extend(&intent);
                d.sources.insert(src);
            }
            None => drafts.push(Draft {
                name: phase.name.clone(),
                name_terms: terms,
                intent,
                sources: [src].into(),
            }),
        }
    }
    if drafts.is_empty() {
        return Err(ConfigError("baseline methodologies declare no phases".into()).into());
    }

    let mut used = HashSet::new();
    let mut frames = Vec::with_capacity(drafts.len());
    for (i, d) in drafts.into_iter().enumerate() {
        let intent = if d.intent.is_empty() { d.name_terms } else { d.intent };
        frames.push(PhaseFrame {
            id: unique_slug(&d.name, &mut used),
            name: d.name,
            intent_terms: intent,
            order: i as u32,
            sources: d.sources,
        });
    }
    Ok(frames)
}

fn file_frames(path: &Path, lexicon: &Lexicon) -> Result<Vec<PhaseFrame>, PipelineError> {
    let doc: FramesDocument = read_json(path)?;
    if doc.frames.is_empty() {
        return Err(ConfigError(format!("frames file {} lists no frames", path.display())).into());
    }
    let mut entries: Vec<(u32, FrameEntry)> = doc
        .frames
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e.order.unwrap_or(i as u32), e))
        .collect();
    entries.sort_by_key(|(order, _)| *order);

    let mut used = HashSet::new();
    let mut frames = Vec::with_capacity(entries.len());
    for (order, e) in entries {
        let mut intent = normalize_terms(&e.intent_terms, lexicon);
        if intent.is_empty() {
            intent = normalize(&e.name, lexicon);
        }
        let id = match e.id {
            Some(id) => {
                if !used.insert(id.clone()) {
                    return Err(ConfigError(format!("frames file repeats frame id {id:?}")).into());
                }
                id
            }
            None => unique_slug(&e.name, &mut used),
        };
        frames.push(PhaseFrame { id, name: e.name, intent_terms: intent, order, sources: BTreeSet::new() });
    }
    Ok(frames)
}

fn check_frames(frames: &[PhaseFrame]) -> Result<(), ConfigError> {
    let mut names = HashSet::new();
    for f in frames {
        if f.name.trim().is_empty() {
            return Err(ConfigError(format!("frame {:?} has an empty name", f.id)));
        }
        if !names.insert(f.name.to_lowercase()) {
            return Err(ConfigError(format!("frame name {:?} is not unique", f.name)));
        }
        if f.intent_terms.is_empty() {
            return Err(ConfigError(format!("frame {:?} has no intent terms", f.name)));
        }
    }
    Ok(())
}

fn unique_slug(name: &str, used: &mut HashSet<String>) -> String {
    let mut slug = String::new();
    for c in name.to_lowercase().chars() {
        if c.is_alphanumeric() {
            slug.push(c);
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    let base = slug.trim_end_matches('-').to_owned();
    let base = if base.is_empty() { "frame".to_owned() } else { base };
    let mut candidate = base.clone();
    let mut n = 2;
    while !used.insert(candidate.clone()) {
        candidate = format!("{base}-{n}");
        n += 1;
    }
    candidate
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sdm, SdmPhase};

    fn phase(id: &str, name: &str, order: u32, intent: &[&str]) -> SdmPhase {
        SdmPhase {
            id: id.into(),
            name: name.into(),
            intent_terms: intent.iter().map(|s| s.to_string()).collect(),
            order,
        }
    }

    fn sdm(id: &str, phases: Vec<SdmPhase>) -> Sdm {
        Sdm { id: id.into(), name: id.into(), overview: String::new(), phases, activities: vec![] }
    }

    fn corpus(sdms: Vec<Sdm>, baselines: &[&str]) -> Corpus {
        Corpus {
            domain_name: "t".into(),
            sdms,
            baseline_sdm_ids: baselines.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn sdlc_has_six_frames_in_order() {
        let c = corpus(vec![sdm("m", vec![])], &[]);
        let frames =
            determine_phase_frames(&c, FrameMode::Sdlc, None, &Lexicon::starter(), &OperatorConfig::default()).unwrap();
        let names: Vec<_> = frames.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["Initiate", "Analysis and Design", "Construction", "Test", "Deployment", "Maintain"]);
        assert!(frames.iter().all(|f| !f.intent_terms.is_empty()));
    }

    #[test]
    fn derived_requires_baselines() {
        let c = corpus(vec![sdm("m", vec![])], &[]);
        let err = determine_phase_frames(&c, FrameMode::Derived, None, &Lexicon::starter(), &OperatorConfig::default())
            .unwrap_err();
        assert!(matches!(err, PipelineError::Config(_)));
    }

    #[test]
    fn derived_unifies_synonymous_phases_keeping_earlier_name() {
        let a = sdm(
            "a",
            vec![
                phase("a1", "Planning", 1, &["plan"]),
                phase("a2", "Specification", 2, &["service specification"]),
                phase("a3", "Implementation", 3, &[]),
            ],
        );
        let b = sdm(
            "b",
            vec![
                phase("b1", "Plan", 10, &["scope"]),
                phase("b2", "Specify", 20, &["interface"]),
                phase("b3", "Deploy", 30, &["release"]),
            ],
        );
        let ignored = sdm("c", vec![phase("c1", "Sprint", 0, &["iteration"])]);
        let c = corpus(vec![a, ignored, b], &["a", "b"]);
        let frames =
            determine_phase_frames(&c, FrameMode::Derived, None, &Lexicon::starter(), &OperatorConfig::default())
                .unwrap();
        let names: Vec<_> = frames.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["Planning", "Specification", "Implementation", "Deploy"]);
        assert_eq!(frames[0].intent_terms, ["plan", "scope"].into_iter().collect());
        assert_eq!(frames[1].intent_terms, ["interface", "service", "specification"].into_iter().collect());
        // no declared intent: falls back to the name's terms
        assert_eq!(frames[2].intent_terms, ["construct"].into_iter().collect());
        assert_eq!(frames[0].sources.len(), 2);
    }

    #[test]
    fn file_mode_single_frame_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.json");
        std::fs::write(&path, r#"{"frames": [{"name": "Discovery", "intent_terms": ["feasibility"]}]}"#).unwrap();
        let c = corpus(vec![sdm("m", vec![])], &[]);
        let lex = Lexicon::starter();
        let cfg = OperatorConfig::default();
        let frames = determine_phase_frames(&c, FrameMode::File, Some(&path), &lex, &cfg).unwrap();
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].name, "Discovery");
        assert_eq!(frames[0].id, "discovery");

        std::fs::write(&path, r#"{"frames": []}"#).unwrap();
        assert!(matches!(
            determine_phase_frames(&c, FrameMode::File, Some(&path), &lex, &cfg),
            Err(PipelineError::Config(_))
        ));
        assert!(matches!(
            determine_phase_frames(&c, FrameMode::File, None, &lex, &cfg),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn slugs_are_unique() {
        let mut used = HashSet::new();
        assert_eq!(unique_slug("Analysis and Design", &mut used), "analysis-and-design");
        assert_eq!(unique_slug("Analysis & Design", &mut used), "analysis-design");
        assert_eq!(unique_slug("analysis-and-design", &mut used), "analysis-and-design-2");
    }
}
