use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use super::decompose::{decompose, Assignment};
use super::enrich::{Enrichment, Level};
use super::frames::{determine_phase_frames, FrameMode, PhaseFrame};
use super::refine::{apply_splits, supply, unify, SplitRule, WorkingActivity};
use super::stages::{package_stages, StageCluster};
use super::tasks::{concretize_tasks, enrich_record, TaskContext};
use super::PipelineError;
use crate::corpus::Corpus;
use crate::diag::Diagnostic;
use crate::lexicon::Lexicon;
use crate::operators::OperatorConfig;
use crate::store::{
    pattern_id, Granularity, PatternBody, PatternLibrary, PatternRecord, RunAudit, RunMetadata, Straddler,
    UnassignedEntry, TO_BE_EXPLORED,
};

/// Where this implementation departs from a literal reading of the
/// extraction procedure. Recorded in every library.
pub const DEVIATIONS: &[&str] = &[
    "frame assignment takes the better of phase-name synonymy and intent affinity instead of requiring both",
    "unify collapses connected components of name synonymy onto their most complete member instead of accumulating duplicates",
    "supply merges only activities whose intent similarity reaches tau_supply, also merges equally complete activities, and appends novel steps after the more complete activity's steps",
    "split is driven by explicit rules; long activities are only flagged",
    "stages are packaged across all frames and owned by the frame holding most member placements (earliest frame on ties); other placements become related-pattern links",
    "seed-star clustering picks seeds in ascending activity id order",
];

#[derive(Debug, Clone)]
pub struct MineOptions {
    pub frames_mode: FrameMode,
    pub frames_file: Option<PathBuf>,
    pub rules: Vec<SplitRule>,
    pub enrichment: Option<Enrichment>,
    pub cfg: OperatorConfig,
    /// Flags echoed into run metadata.
    pub invocation: BTreeMap<String, String>,
}

impl Default for MineOptions {
    fn default() -> Self {
        Self {
            frames_mode: FrameMode::Sdlc,
            frames_file: None,
            rules: Vec::new(),
            enrichment: None,
            cfg: OperatorConfig::default(),
            invocation: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MineOutput {
    pub library: PatternLibrary,
    pub frames: Vec<PhaseFrame>,
    pub assignment: Assignment,
    /// Refined activities, ascending id.
    pub activities: Vec<WorkingActivity>,
    pub stages: Vec<StageCluster>,
}

fn owning_frame(members: &[&WorkingActivity], frames: &[PhaseFrame]) -> String {
    let mut votes = vec![0usize; frames.len()];
    for m in members {
        for f in &m.frames {
            if let Some(i) = frames.iter().position(|fr| &fr.id == f) {
                votes[i] += 1;
            }
        }
    }
    let best = (0..frames.len()).fold(0, |b, i| if votes[i] > votes[b] { i } else { b });
    frames[best].id.clone()
}

/// Runs the whole extraction on a validated corpus: frames, decomposition,
/// unify/supply/split per frame, stage packaging and task concretization.
pub fn mine(corpus: &Corpus, lexicon: &Lexicon, opts: &MineOptions) -> Result<MineOutput, PipelineError> {
    let cfg = &opts.cfg;
    cfg.validate()?;
    let frames = determine_phase_frames(corpus, opts.frames_mode, opts.frames_file.as_deref(), lexicon, cfg)?;
    let assignment = decompose(corpus, &frames, lexicon, cfg);

    let mut audit = RunAudit::default();
    let mut refined = Vec::new();
    for frame in &frames {
        let mut bucket = Vec::new();
        for sdm in &corpus.sdms {
            for act in &sdm.activities {
                let r = super::ActivityRef::new(&sdm.id, &act.id);
                if assignment.home_frame(&r) == Some(frame.id.as_str()) {
                    bucket.push(WorkingActivity::from_source(&sdm.id, act, lexicon, assignment.placements[&r].clone()));
                }
            }
        }
        let (bucket, log) = unify(&bucket, lexicon, cfg);
        audit.merge_log.extend(log);
        let (bucket, log) = supply(&bucket, cfg);
        audit.merge_log.extend(log);
        let (bucket, log, candidates) = apply_splits(&bucket, &opts.rules, lexicon, cfg)?;
        audit.merge_log.extend(log);
        audit.split_candidates.extend(candidates);
        refined.extend(bucket);
    }
    refined.sort_by(|a, b| a.id.cmp(&b.id));

    let stages = package_stages(&refined, cfg);
    let by_id: BTreeMap<&str, &WorkingActivity> = refined.iter().map(|w| (w.id.as_str(), w)).collect();
    let phase_ids: BTreeMap<String, String> = frames
        .iter()
        .map(|f| (f.id.clone(), pattern_id(Granularity::Phase, &f.name, &f.sources)))
        .collect();
    let ctx = TaskContext { lexicon, cfg, enrichment: opts.enrichment.as_ref(), phase_ids: &phase_ids };

    let mut used = BTreeSet::new();
    let mut stage_records = Vec::new();
    let mut task_records = Vec::new();
    let mut phase_children: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for cluster in &stages {
        let members: Vec<&WorkingActivity> = cluster.members.iter().map(|id| by_id[id.as_str()]).collect();
        let owner = owning_frame(&members, &frames);
        let (tasks, stage) = concretize_tasks(cluster, &members, &owner, &ctx, &mut used);
        phase_children.entry(owner).or_default().push(stage.id.clone());
        stage_records.push(stage);
        task_records.extend(tasks);
    }

    let mut phase_records = Vec::new();
    for frame in &frames {
        let id = phase_ids[&frame.id].clone();
        let related = task_records.iter().filter(|t| t.related_patterns.contains(&id)).map(|t| t.id.clone()).collect();
        let mut rec = PatternRecord {
            id,
            granularity: Granularity::Phase,
            name: frame.name.clone(),
            context: TO_BE_EXPLORED.into(),
            problem: TO_BE_EXPLORED.into(),
            body: PatternBody::Children(phase_children.remove(&frame.id).unwrap_or_default()),
            roles: BTreeSet::new(),
            artifacts: BTreeSet::new(),
            related_patterns: related,
            consequences: TO_BE_EXPLORED.into(),
            provenance: frame.sources.clone(),
            aliases: BTreeSet::new(),
        };
        enrich_record(&mut rec, Level::Phase, &ctx, &mut used);
        phase_records.push(rec);
    }

    if let Some(e) = &opts.enrichment {
        for (i, entry) in e.entries.iter().enumerate() {
            if !used.contains(&i) {
                audit.diagnostics.push(Diagnostic::warning(format!(
                    "enrichment entry {:?} ({:?}) matches no pattern",
                    entry.name, entry.level
                )));
            }
        }
    }
    for r in &assignment.straddlers {
        audit.straddlers.push(Straddler { activity: r.clone(), frames: assignment.placements[r].clone() });
    }
    for r in &assignment.unassigned {
        let ev = assignment.evidence.get(r);
        audit.unassigned.push(UnassignedEntry {
            activity: r.clone(),
            name: corpus
                .sdm(&r.sdm_id)
                .and_then(|s| s.activity(&r.activity_id))
                .map_or_else(String::new, |a| a.name.clone()),
            best_frame: ev.map(|e| e.frame_id.clone()),
            synonym: ev.map_or(0.0, |e| e.synonym),
            affinity: ev.map_or(0.0, |e| e.affinity),
        });
    }

    audit.straddlers.sort_by(|a, b| a.activity.cmp(&b.activity));
    audit.unassigned.sort_by(|a, b| a.activity.cmp(&b.activity));
    audit.split_candidates.sort_by(|a, b| a.id.cmp(&b.id));

    let mut records = phase_records;
    records.extend(stage_records);
    records.extend(task_records);
    let library = PatternLibrary {
        domain_name: corpus.domain_name.clone(),
        records,
        run_metadata: RunMetadata {
            config: cfg.clone(),
            frames_mode: opts.frames_mode.to_string(),
            invocation: opts.invocation.clone(),
            lexicon_digest: lexicon.digest(),
            deviations: DEVIATIONS.iter().map(|s| s.to_string()).collect(),
            audit,
        },
    };
    let problems = library.problems();
    if !problems.is_empty() {
        return Err(PipelineError::Library(problems.join("; ")));
    }
    Ok(MineOutput { library, frames, assignment, activities: refined, stages })
}
