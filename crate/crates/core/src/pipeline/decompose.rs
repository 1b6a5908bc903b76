use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::frames::PhaseFrame;
use super::ActivityRef;
use crate::corpus::Corpus;
use crate::lexicon::{normalize, normalize_terms, Lexicon};
use crate::operators::{semantic_affinity, synonym_terms, OperatorConfig};

/// Which operator carried the decision for the best frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Synonym,
    Affinity,
    Both,
    None,
}

/// Scores of an activity against its best-scoring frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub frame_id: String,
    pub synonym: f64,
    pub affinity: f64,
    pub signal: Signal,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    /// Frame ids per placed activity, best frame first.
    pub placements: BTreeMap<ActivityRef, Vec<String>>,
    pub unassigned: Vec<ActivityRef>,
    pub straddlers: Vec<ActivityRef>,
    pub evidence: BTreeMap<ActivityRef, Evidence>,
}

impl Assignment {
    /// The frame that receives the activity for unify/supply/split.
    pub fn home_frame(&self, activity: &ActivityRef) -> Option<&str> {
        self.placements.get(activity).and_then(|f| f.first()).map(String::as_str)
    }
}

struct FrameScore {
    frame: usize,
    score: f64,
    synonym: f64,
    affinity: f64,
    eligible: bool,
}

/// Highest score wins; the earlier frame wins ties.
fn best<'a>(scores: impl Iterator<Item = &'a FrameScore>) -> Option<&'a FrameScore> {
    scores.fold(None, |acc: Option<&FrameScore>, s| match acc {
        Some(a) if a.score >= s.score => Some(a),
        _ => Some(s),
    })
}

/// Places every corpus activity into the frames its evidence supports.
///
/// A frame's score is the larger of the phase-name synonym score and the
/// intent affinity score. Only frames passing at least one threshold are
/// eligible; the activity goes to every eligible frame within
/// `epsilon_straddle` of the best eligible score.
pub fn decompose(corpus: &Corpus, frames: &[PhaseFrame], lexicon: &Lexicon, cfg: &OperatorConfig) -> Assignment {
    let frame_names: Vec<_> = frames.iter().map(|f| normalize(&f.name, lexicon)).collect();
    let mut out = Assignment::default();

    for sdm in &corpus.sdms {
        for act in &sdm.activities {
            let r = ActivityRef::new(&sdm.id, &act.id);
            let phase_name = sdm.phase(&act.phase_id).map_or("", |p| p.name.as_str());
            let phase_terms = normalize(phase_name, lexicon);
            let intent = normalize_terms(&act.intent_terms, lexicon);

            let scored: Vec<FrameScore> = frames
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let raw_eq = phase_name.to_lowercase() == f.name.to_lowercase();
                    let syn = synonym_terms(&phase_terms, &frame_names[i], raw_eq, cfg);
                    let aff = semantic_affinity(&intent, &f.intent_terms, cfg);
                    FrameScore {
                        frame: i,
                        score: syn.score.max(aff.score),
                        synonym: syn.score,
                        affinity: aff.score,
                        eligible: syn.decision || aff.decision,
                    }
                })
                .collect();

            let Some(top) = best(scored.iter().filter(|s| s.eligible)) else {
                if let Some(s) = best(scored.iter()) {
                    out.evidence.insert(
                        r.clone(),
                        Evidence {
                            frame_id: frames[s.frame].id.clone(),
                            synonym: s.synonym,
                            affinity: s.affinity,
                            signal: Signal::None,
                        },
                    );
                }
                out.unassigned.push(r);
                continue;
            };

            let floor = top.score - cfg.epsilon_straddle - 1e-12;
            let mut chosen: Vec<&FrameScore> = scored.iter().filter(|s| s.eligible && s.score >= floor).collect();
            chosen.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.frame.cmp(&b.frame)));

            let signal = match (top.synonym >= cfg.tau_syn, top.affinity >= cfg.tau_aff) {
                (true, true) => Signal::Both,
                (true, false) => Signal::Synonym,
                (false, true) => Signal::Affinity,
                (false, false) => Signal::None,
            };
            out.evidence.insert(
                r.clone(),
                Evidence {
                    frame_id: frames[top.frame].id.clone(),
                    synonym: top.synonym,
                    affinity: top.affinity,
                    signal,
                },
            );
            if chosen.len() > 1 {
                out.straddlers.push(r.clone());
            }
            out.placements.insert(r, chosen.iter().map(|c| frames[c.frame].id.clone()).collect());
        }
    }
    out
}
