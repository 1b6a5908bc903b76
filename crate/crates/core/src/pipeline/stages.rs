//! Grouping refined activities into stages by intent affinity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::refine::WorkingActivity;
use crate::operators::{semantic_affinity, ClusteringMode, OperatorConfig};
use crate::unionfind::UnionFind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCluster {
    /// `S001`, `S002`, ... in order of the seed id.
    pub id: String,
    pub seed: String,
    /// Working-activity ids, ascending.
    pub members: Vec<String>,
    pub name: String,
}

/// Clusters activities by intent affinity.
///
/// `SeedStar`: in ascending id order, the first unstaged activity seeds a
/// cluster and every unstaged activity affine to the seed joins it.
/// `Components`: connected components of the affinity graph. Either way an
/// activity affine to nothing ends up alone in its own stage.
pub fn package_stages(activities: &[WorkingActivity], cfg: &OperatorConfig) -> Vec<StageCluster> {
    let mut items: Vec<&WorkingActivity> = activities.iter().collect();
    items.sort_by(|a, b| a.id.cmp(&b.id));
    let affine = |i: usize, j: usize| semantic_affinity(&items[i].intent, &items[j].intent, cfg).decision;

    let groups: Vec<Vec<usize>> = match cfg.clustering_mode {
        ClusteringMode::SeedStar => {
            let mut staged = vec![false; items.len()];
            let mut groups = Vec::new();
            for seed in 0..items.len() {
                if staged[seed] {
                    continue;
                }
                staged[seed] = true;
                let mut group = vec![seed];
                for (j, done) in staged.iter_mut().enumerate().skip(seed + 1) {
                    if !*done && affine(seed, j) {
                        *done = true;
                        group.push(j);
                    }
                }
                groups.push(group);
            }
            groups
        }
        ClusteringMode::Components => {
            let mut uf = UnionFind::new(items.len());
            for i in 0..items.len() {
                for j in i + 1..items.len() {
                    if affine(i, j) {
                        uf.union(i, j);
                    }
                }
            }
            uf.groups()
        }
    };

    groups
        .into_iter()
        .enumerate()
        .map(|(n, group)| {
            let members: Vec<&WorkingActivity> = group.iter().map(|&k| items[k]).collect();
            StageCluster {
                id: format!("S{:03}", n + 1),
                seed: members[0].id.clone(),
                name: name_stage(&members, cfg.stage_name_terms),
                members: members.iter().map(|m| m.id.clone()).collect(),
            }
        })
        .collect()
}

/// A single member lends its own name. Otherwise the `k` intent terms
/// shared by most members, most frequent first and alphabetical on ties,
/// title-cased.
pub fn name_stage(members: &[&WorkingActivity], k: usize) -> String {
    if let [only] = members {
        return only.name.clone();
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for m in members {
        for t in m.intent.iter() {
            *freq.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.iter().take(k.max(1)).map(|(t, _)| title_case(t)).collect::<Vec<_>>().join(" ")
}

fn title_case(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
