//! Turning a packaged stage into task and stage pattern records.

use std::collections::{BTreeMap, BTreeSet};

use super::enrich::{Enrichment, Level};
use super::refine::WorkingActivity;
use super::stages::StageCluster;
use crate::lexicon::Lexicon;
use crate::operators::OperatorConfig;
use crate::store::{pattern_id, Granularity, PatternBody, PatternRecord, TO_BE_EXPLORED};

/// Shared inputs for turning stages into records.
pub struct TaskContext<'a> {
    pub lexicon: &'a Lexicon,
    pub cfg: &'a OperatorConfig,
    pub enrichment: Option<&'a Enrichment>,
    /// Frame id to the id of its phase record.
    pub phase_ids: &'a BTreeMap<String, String>,
}

/// Adds items not already present under any capitalization.
fn add_missing(into: &mut BTreeSet<String>, items: &BTreeSet<String>) {
    for it in items {
        let lower = it.to_lowercase();
        if !into.iter().any(|x| x.to_lowercase() == lower) {
            into.insert(it.clone());
        }
    }
}

/// Applies every enrichment entry at `level` whose name matches the
/// record's, remembering which entries were used.
pub(crate) fn enrich_record(rec: &mut PatternRecord, level: Level, ctx: &TaskContext<'_>, used: &mut BTreeSet<usize>) {
    let Some(enrichment) = ctx.enrichment else { return };
    for i in enrichment.matching(level, &rec.name, ctx.lexicon, ctx.cfg) {
        used.insert(i);
        let e = &enrichment.entries[i];
        if let Some(c) = &e.context {
            rec.context = c.clone();
        }
        if let Some(p) = &e.problem {
            rec.problem = p.clone();
        }
        if let Some(c) = &e.consequences {
            rec.consequences = c.clone();
        }
        add_missing(&mut rec.roles, &e.roles);
        add_missing(&mut rec.artifacts, &e.artifacts);
        if let PatternBody::Task { techniques, .. } = &mut rec.body {
            for t in &e.techniques {
                if !techniques.contains(t) {
                    techniques.push(t.clone());
                }
            }
        }
    }
}

/// One task record per member plus the stage record listing them.
///
/// Task roles are the union over every merged source, artifacts the union
/// of produced artifacts. Siblings are related to each other; a member also
/// placed in frames other than `owner_frame` is related to those phases.
pub fn concretize_tasks(
    cluster: &StageCluster,
    members: &[&WorkingActivity],
    owner_frame: &str,
    ctx: &TaskContext<'_>,
    used: &mut BTreeSet<usize>,
) -> (Vec<PatternRecord>, PatternRecord) {
    let mut tasks: Vec<PatternRecord> = members
        .iter()
        .map(|wa| {
            let mut rec = PatternRecord {
                id: pattern_id(Granularity::Task, &wa.name, &wa.provenance),
                granularity: Granularity::Task,
                name: wa.name.clone(),
                context: TO_BE_EXPLORED.into(),
                problem: TO_BE_EXPLORED.into(),
                body: PatternBody::Task { steps: wa.steps.clone(), techniques: Vec::new() },
                roles: wa.roles.clone(),
                artifacts: wa.output_artifacts.clone(),
                related_patterns: wa
                    .frames
                    .iter()
                    .filter(|f| f.as_str() != owner_frame)
                    .filter_map(|f| ctx.phase_ids.get(f).cloned())
                    .collect(),
                consequences: TO_BE_EXPLORED.into(),
                provenance: wa.provenance.clone(),
                aliases: wa.aliases.clone(),
            };
            enrich_record(&mut rec, Level::Task, ctx, used);
            rec
        })
        .collect();

    let ids: Vec<String> = tasks.iter().map(|t| t.id.clone()).collect();
    for t in &mut tasks {
        let own = t.id.clone();
        t.related_patterns.extend(ids.iter().filter(|id| **id != own).cloned());
    }

    let provenance: BTreeSet<_> = tasks.iter().flat_map(|t| t.provenance.iter().cloned()).collect();
    let mut stage = PatternRecord {
        id: pattern_id(Granularity::Stage, &cluster.name, &provenance),
        granularity: Granularity::Stage,
        name: cluster.name.clone(),
        context: TO_BE_EXPLORED.into(),
        problem: TO_BE_EXPLORED.into(),
        body: PatternBody::Children(ids),
        roles: BTreeSet::new(),
        artifacts: BTreeSet::new(),
        related_patterns: BTreeSet::new(),
        consequences: TO_BE_EXPLORED.into(),
        provenance,
        aliases: BTreeSet::new(),
    };
    for t in &tasks {
        add_missing(&mut stage.roles, &t.roles);
        add_missing(&mut stage.artifacts, &t.artifacts);
    }
    enrich_record(&mut stage, Level::Stage, ctx, used);
    (tasks, stage)
}
