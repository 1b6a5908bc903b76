//! Redundancy removal inside a phase bucket: unify synonymous activities,
//! let affine partial activities supply each other, and split coarse ones.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, ActivityRef, PipelineError};
use crate::corpus::{Activity, Step};
use crate::lexicon::{normalize, normalize_terms, Lexicon, TermSet};
use crate::operators::{
    more_complete, supply_affinity, synonym, synonym_terms, Completeness, ConfigError, Detailed, OperatorConfig,
};
use crate::unionfind::UnionFind;

const SHIPPED_RULES: &str = include_str!("../../data/rules/architecture.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MergeKind {
    Unify,
    Supply,
    Split,
}

impl fmt::Display for MergeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeKind::Unify => "UNIFY",
            MergeKind::Supply => "SUPPLY",
            MergeKind::Split => "SPLIT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub kind: MergeKind,
    /// Working-activity ids consumed or transformed.
    pub inputs: Vec<String>,
    /// Working-activity ids produced.
    pub outputs: Vec<String>,
    pub rule_or_score: String,
}

/// An activity moving through the pipeline, with everything it absorbed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkingActivity {
    /// `sdm:activity` of the originating source; split children append `#n`.
    pub id: String,
    pub name: String,
    pub intent: TermSet,
    pub steps: Vec<Step>,
    pub roles: BTreeSet<String>,
    pub input_artifacts: BTreeSet<String>,
    pub output_artifacts: BTreeSet<String>,
    pub provenance: BTreeSet<ActivityRef>,
    /// Names of merged activities other than `name`.
    pub aliases: BTreeSet<String>,
    /// Frame ids; the first is the home frame.
    pub frames: Vec<String>,
    pub merge_history: Vec<MergeEvent>,
}

impl WorkingActivity {
    pub fn from_source(sdm_id: &str, act: &Activity, lexicon: &Lexicon, frames: Vec<String>) -> Self {
        let r = ActivityRef::new(sdm_id, &act.id);
        Self {
            id: r.to_string(),
            name: act.name.clone(),
            intent: normalize_terms(&act.intent_terms, lexicon),
            steps: act.steps.clone(),
            roles: act.roles.clone(),
            input_artifacts: act.input_artifacts.clone(),
            output_artifacts: act.output_artifacts.clone(),
            provenance: [r].into(),
            aliases: BTreeSet::new(),
            frames,
            merge_history: Vec::new(),
        }
    }

    fn absorb_identity(&mut self, other: &WorkingActivity) {
        self.provenance.extend(other.provenance.iter().cloned());
        self.roles.extend(other.roles.iter().cloned());
        self.aliases.extend(other.aliases.iter().cloned());
        self.aliases.insert(other.name.clone());
        self.aliases.remove(&self.name);
        for f in &other.frames {
            if !self.frames.contains(f) {
                self.frames.push(f.clone());
            }
        }
        self.merge_history.extend(other.merge_history.iter().cloned());
    }

    /// Appends the other activity's steps that are not already present and
    /// unions artifacts. Returns the number of appended steps.
    fn absorb_content(&mut self, other: &WorkingActivity) -> usize {
        let known: HashSet<String> = self.steps.iter().map(|s| step_key(&s.description)).collect();
        let mut appended = 0;
        for step in &other.steps {
            if !known.contains(&step_key(&step.description)) {
                self.steps.push(Step {
                    index: self.steps.len() as u32 + 1,
                    description: step.description.clone(),
                });
                appended += 1;
            }
        }
        self.input_artifacts.extend(other.input_artifacts.iter().cloned());
        self.output_artifacts.extend(other.output_artifacts.iter().cloned());
        appended
    }
}

fn step_key(description: &str) -> String {
    description.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl Detailed for WorkingActivity {
    fn step_count(&self) -> usize {
        self.steps.len()
    }
    fn artifact_count(&self) -> usize {
        self.input_artifacts.len() + self.output_artifacts.len()
    }
}

fn sorted(bucket: &[WorkingActivity]) -> Vec<WorkingActivity> {
    let mut items = bucket.to_vec();
    items.sort_by(|a, b| a.id.cmp(&b.id));
    items
}

/// Collapses each connected component of the name-synonymy graph into its
/// most complete member (smallest id on ties).
pub fn unify(bucket: &[WorkingActivity], lexicon: &Lexicon, cfg: &OperatorConfig) -> (Vec<WorkingActivity>, Vec<MergeEvent>) {
    let items = sorted(bucket);
    let names: Vec<TermSet> = items.iter().map(|w| normalize(&w.name, lexicon)).collect();
    let mut uf = UnionFind::new(items.len());
    let mut edges = Vec::new();
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            let raw_eq = items[i].name.to_lowercase() == items[j].name.to_lowercase();
            let j_syn = synonym_terms(&names[i], &names[j], raw_eq, cfg);
            if j_syn.decision {
                uf.union(i, j);
                edges.push((i, j, j_syn.score));
            }
        }
    }

    let mut out = Vec::new();
    let mut log = Vec::new();
    for group in uf.groups() {
        if group.len() == 1 {
            out.push(items[group[0]].clone());
            continue;
        }
        let rep = group[1..].iter().fold(group[0], |best, &k| {
            if more_complete(&items[k], &items[best]) == Completeness::FirstMore {
                k
            } else {
                best
            }
        });
        let mut merged = items[rep].clone();
        for &k in group.iter().filter(|&&k| k != rep) {
            merged.absorb_identity(&items[k]);
        }
        let edge_text: Vec<String> = edges
            .iter()
            .filter(|(i, _, _)| group.contains(i))
            .map(|(i, j, s)| format!("{}~{}={:.3}", items[*i].id, items[*j].id, s))
            .collect();
        let event = MergeEvent {
            kind: MergeKind::Unify,
            inputs: group.iter().map(|&k| items[k].id.clone()).collect(),
            outputs: vec![merged.id.clone()],
            rule_or_score: format!(
                "name synonymy >= {}: {}; representative {} ({} steps, {} artifacts)",
                cfg.tau_syn,
                edge_text.join(", "),
                merged.id,
                merged.step_count(),
                merged.artifact_count()
            ),
        };
        merged.merge_history.push(event.clone());
        log.push(event);
        out.push(merged);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    (out, log)
}

/// Merges activities whose intents are close enough that one completes the
/// other. The more complete activity (smaller id when equal) keeps its
/// steps first; novel steps of the other follow in their original order.
pub fn supply(bucket: &[WorkingActivity], cfg: &OperatorConfig) -> (Vec<WorkingActivity>, Vec<MergeEvent>) {
    let mut items = sorted(bucket);
    let mut log = Vec::new();
    'restart: loop {
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let closeness = supply_affinity(&items[i].intent, &items[j].intent, cfg);
                if !closeness.decision {
                    continue;
                }
                let verdict = more_complete(&items[i], &items[j]);
                let (keep, drop) = if verdict == Completeness::SecondMore { (j, i) } else { (i, j) };
                let other = items[drop].clone();
                let base = &mut items[keep];
                let appended = base.absorb_content(&other);
                base.absorb_identity(&other);
                let event = MergeEvent {
                    kind: MergeKind::Supply,
                    inputs: vec![base.id.clone(), other.id.clone()],
                    outputs: vec![base.id.clone()],
                    rule_or_score: format!(
                        "intent affinity {:.3}; {} more complete ({:?}); {} step(s) appended",
                        closeness.score, base.id, verdict, appended
                    ),
                };
                base.merge_history.push(event.clone());
                log.push(event);
                items.remove(drop);
                continue 'restart;
            }
        }
        break;
    }
    (items, log)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitChild {
    pub name: String,
    #[serde(default)]
    pub intent_terms: Vec<String>,
    /// Inclusive 1-based step ranges taken from the parent.
    pub steps: Vec<(u32, u32)>,
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub input_artifacts: BTreeSet<String>,
    #[serde(default)]
    pub output_artifacts: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub match_name: String,
    pub children: Vec<SplitChild>,
}

impl SplitRule {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.match_name)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError(format!("split rule {:?}: {msg}", self.label())));
        if self.children.len() < 2 {
            return err("needs at least two children".into());
        }
        let mut names = HashSet::new();
        let mut covered = BTreeSet::new();
        for child in &self.children {
            if child.name.trim().is_empty() {
                return err("child with empty name".into());
            }
            if !names.insert(child.name.to_lowercase()) {
                return err(format!("child name {:?} repeats", child.name));
            }
            for &(start, end) in &child.steps {
                if start == 0 || end < start {
                    return err(format!("invalid step range [{start}, {end}] in child {:?}", child.name));
                }
                for s in start..=end {
                    if !covered.insert(s) {
                        return err(format!("step {s} is claimed by more than one child"));
                    }
                }
            }
        }
        Ok(())
    }

    fn max_step(&self) -> u32 {
        self.children.iter().flat_map(|c| c.steps.iter().map(|r| r.1)).max().unwrap_or(0)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesDocument {
    rules: Vec<SplitRule>,
}

fn parse_rules(doc: RulesDocument) -> Result<Vec<SplitRule>, PipelineError> {
    for r in &doc.rules {
        r.check()?;
    }
    Ok(doc.rules)
}

pub fn load_split_rules(path: &Path) -> Result<Vec<SplitRule>, PipelineError> {
    parse_rules(read_json(path)?)
}

/// The split rules bundled with the crate.
pub fn shipped_split_rules() -> Vec<SplitRule> {
    let doc: RulesDocument = serde_json::from_str(SHIPPED_RULES).expect("bundled split rules parse");
    parse_rules(doc).expect("bundled split rules are valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub id: String,
    pub name: String,
    pub steps: usize,
}

/// Refined bucket, split events and flagged long activities.
pub type SplitOutcome = (Vec<WorkingActivity>, Vec<MergeEvent>, Vec<SplitCandidate>);

/// Replaces every activity matching a rule by the rule's children and flags
/// unsplit activities with more than `split_flag_steps` steps.
pub fn apply_splits(
    bucket: &[WorkingActivity],
    rules: &[SplitRule],
    lexicon: &Lexicon,
    cfg: &OperatorConfig,
) -> Result<SplitOutcome, PipelineError> {
    let mut out = Vec::new();
    let mut log = Vec::new();
    let mut candidates = Vec::new();
    for wa in sorted(bucket) {
        let Some(rule) = rules.iter().find(|r| synonym(&r.match_name, &wa.name, lexicon, cfg).decision) else {
            if wa.steps.len() > cfg.split_flag_steps {
                candidates.push(SplitCandidate { id: wa.id.clone(), name: wa.name.clone(), steps: wa.steps.len() });
            }
            out.push(wa);
            continue;
        };
        rule.check()?;
        if rule.max_step() as usize > wa.steps.len() {
            return Err(PipelineError::RuleApplication {
                rule: rule.label().to_owned(),
                activity: wa.id.clone(),
                message: format!("rule needs {} steps, activity has {}", rule.max_step(), wa.steps.len()),
            });
        }

        let mut children = Vec::with_capacity(rule.children.len());
        for (k, child) in rule.children.iter().enumerate() {
            let steps: Vec<Step> = child
                .steps
                .iter()
                .flat_map(|&(s, e)| s..=e)
                .enumerate()
                .map(|(pos, src)| Step {
                    index: pos as u32 + 1,
                    description: wa.steps[src as usize - 1].description.clone(),
                })
                .collect();
            let text = steps.iter().map(|s| s.description.to_lowercase()).collect::<Vec<_>>().join("\n");
            let referenced = |items: &BTreeSet<String>, extra: &BTreeSet<String>| -> BTreeSet<String> {
                items
                    .iter()
                    .filter(|it| text.contains(&it.to_lowercase()))
                    .chain(extra.iter())
                    .cloned()
                    .collect()
            };
            let mut intent = normalize_terms(&child.intent_terms, lexicon);
            if intent.is_empty() {
                intent = normalize(&child.name, lexicon);
            }
            children.push(WorkingActivity {
                id: format!("{}#{}", wa.id, k + 1),
                name: child.name.clone(),
                intent,
                roles: referenced(&wa.roles, &child.roles),
                input_artifacts: referenced(&wa.input_artifacts, &child.input_artifacts),
                output_artifacts: referenced(&wa.output_artifacts, &child.output_artifacts),
                steps,
                provenance: wa.provenance.clone(),
                aliases: BTreeSet::new(),
                frames: wa.frames.clone(),
                merge_history: wa.merge_history.clone(),
            });
        }
        let event = MergeEvent {
            kind: MergeKind::Split,
            inputs: vec![wa.id.clone()],
            outputs: children.iter().map(|c| c.id.clone()).collect(),
            rule_or_score: format!("rule {:?}", rule.label()),
        };
        for c in &mut children {
            c.merge_history.push(event.clone());
        }
        log.push(event);
        out.extend(children);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok((out, log, candidates))
}
