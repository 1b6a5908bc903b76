#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use procpat::corpus::{Activity, Corpus, Sdm, SdmPhase, Step};

pub fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub const WORDS: &[&str] = &[
    "requirements", "elicitation", "design", "architecture", "service", "test", "testing", "deploy", "model",
    "plan", "legacy", "systems", "code", "build", "review", "quality", "operate", "existing", "assets", "analysis",
];

const PHASES: &[&str] = &["Inception", "Analysis", "Design", "Construction", "Testing", "Deployment", "Sprint"];
const STEPS: &[&str] = &[
    "Interview stakeholders", "Write specification", "Review model", "Build prototype", "Run tests",
    "Install release", "Map components", "Assess risks",
];
const ROLES: &[&str] = &["analyst", "architect", "tester", "developer"];
const ARTIFACTS: &[&str] = &["model", "report", "code", "plan", "test results"];

fn pick(pool: &'static [&'static str], max: usize) -> impl Strategy<Value = BTreeSet<String>> {
    proptest::sample::subsequence(pool, 0..=max).prop_map(|v| v.into_iter().map(String::from).collect())
}

fn words(min: usize, max: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(proptest::sample::select(WORDS), min..=max)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

#[derive(Debug, Clone)]
struct ActivitySeed {
    name: Vec<String>,
    intent: Vec<String>,
    steps: Vec<String>,
    roles: BTreeSet<String>,
    inputs: BTreeSet<String>,
    outputs: BTreeSet<String>,
    phase: usize,
}

fn activity_seed() -> impl Strategy<Value = ActivitySeed> {
    (
        words(1, 3),
        words(1, 4),
        proptest::collection::vec(proptest::sample::select(STEPS), 0..=4),
        pick(ROLES, 2),
        pick(ARTIFACTS, 2),
        pick(ARTIFACTS, 2),
        0usize..3,
    )
        .prop_map(|(name, intent, steps, roles, inputs, outputs, phase)| ActivitySeed {
            name,
            intent,
            steps: steps.into_iter().map(String::from).collect(),
            roles,
            inputs,
            outputs,
            phase,
        })
}

fn sdm(i: usize) -> impl Strategy<Value = Sdm> {
    (
        proptest::sample::subsequence(PHASES, 1..=3),
        proptest::collection::vec(activity_seed(), 0..=5),
    )
        .prop_map(move |(phase_names, acts)| {
            let phases: Vec<SdmPhase> = phase_names
                .iter()
                .enumerate()
                .map(|(k, n)| SdmPhase {
                    id: format!("p{k}"),
                    name: n.to_string(),
                    intent_terms: BTreeSet::new(),
                    order: k as u32 + 1,
                })
                .collect();
            let activities = acts
                .into_iter()
                .enumerate()
                .map(|(k, a)| Activity {
                    id: format!("a{k}"),
                    name: a.name.join(" "),
                    phase_id: phases[a.phase % phases.len()].id.clone(),
                    intent_terms: a.intent.into_iter().collect(),
                    steps: a
                        .steps
                        .into_iter()
                        .enumerate()
                        .map(|(n, d)| Step { index: n as u32 + 1, description: d })
                        .collect(),
                    roles: a.roles,
                    input_artifacts: a.inputs,
                    output_artifacts: a.outputs,
                })
                .collect();
            Sdm { id: format!("m{i}"), name: format!("M{i}"), overview: String::new(), phases, activities }
        })
}

/// Valid corpora of one to four methodologies.
pub fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (1usize..=4)
        .prop_flat_map(|n| (0..n).map(sdm).collect::<Vec<_>>())
        .prop_map(|sdms| Corpus { domain_name: "random".into(), sdms, baseline_sdm_ids: BTreeSet::new() })
}
