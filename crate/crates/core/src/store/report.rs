use std::fmt::Write;

use super::{trace_matrix, Granularity, PatternBody, PatternLibrary, PatternRecord};
use crate::corpus::Corpus;

fn esc(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

fn list(items: impl IntoIterator<Item = String>) -> String {
    let v: Vec<String> = items.into_iter().collect();
    if v.is_empty() {
        "none".to_owned()
    } else {
        v.join(", ")
    }
}

fn name_of(lib: &PatternLibrary, id: &str) -> String {
    lib.get(id).map_or_else(|| id.to_owned(), |r| format!("{} ({id})", r.name))
}

fn card(out: &mut String, lib: &PatternLibrary, r: &PatternRecord) {
    let _ = writeln!(out, "### {} pattern: {}\n", r.granularity, r.name);
    out.push_str("| Field | Value |\n|---|---|\n");
    let mut row = |k: &str, v: String| {
        let _ = writeln!(out, "| {k} | {} |", esc(&v));
    };
    row("Id", r.id.clone());
    row("Context", r.context.clone());
    row("Problem", r.problem.clone());
    match &r.body {
        PatternBody::Children(children) => {
            row("Process pattern", list(children.iter().map(|c| name_of(lib, c))));
        }
        PatternBody::Task { steps, techniques } => {
            row("Process pattern", list(steps.iter().map(|s| format!("{}. {}", s.index, s.description))));
            if !techniques.is_empty() {
                row("Techniques", list(techniques.iter().cloned()));
            }
        }
    }
    row("Roles", list(r.roles.iter().cloned()));
    row("Artifacts", list(r.artifacts.iter().cloned()));
    row("Related patterns", list(r.related_patterns.iter().map(|id| name_of(lib, id))));
    row("Consequence", r.consequences.clone());
    row("Provenance", list(r.provenance.iter().map(|p| p.to_string())));
    if !r.aliases.is_empty() {
        row("Also known as", list(r.aliases.iter().cloned()));
    }
    out.push('\n');
}

/// Markdown report: summary, configuration, pattern cards, trace matrix and
/// the mining audit. Depends only on the library and the corpus.
pub fn render_report(lib: &PatternLibrary, corpus: &Corpus) -> String {
    let meta = &lib.run_metadata;
    let audit = &meta.audit;
    let count = |g| lib.of(g).count();
    let mut out = String::new();

    let _ = writeln!(out, "# Process pattern library: {}\n", lib.domain_name);
    out.push_str("## Summary\n\n");
    let _ = writeln!(out, "- Phase patterns: {}", count(Granularity::Phase));
    let _ = writeln!(out, "- Stage patterns: {}", count(Granularity::Stage));
    let _ = writeln!(out, "- Task patterns: {}", count(Granularity::Task));
    let _ = writeln!(out, "- Source activities: {}", corpus.activity_count());
    let _ = writeln!(out, "- Unassigned activities: {}", audit.unassigned.len());
    let _ = writeln!(out, "- Straddling activities: {}", audit.straddlers.len());
    let _ = writeln!(out, "- Merge events: {}\n", audit.merge_log.len());

    out.push_str("## Effective configuration\n\n| Setting | Value |\n|---|---|\n");
    let cfg = &meta.config;
    for (k, v) in [
        ("frames_mode", meta.frames_mode.clone()),
        ("tau_syn", cfg.tau_syn.to_string()),
        ("tau_aff", cfg.tau_aff.to_string()),
        ("epsilon_straddle", cfg.epsilon_straddle.to_string()),
        ("tau_supply", cfg.tau_supply.to_string()),
        ("clustering_mode", cfg.clustering_mode.to_string()),
        ("split_flag_steps", cfg.split_flag_steps.to_string()),
        ("stage_name_terms", cfg.stage_name_terms.to_string()),
        ("lexicon_digest", meta.lexicon_digest.clone()),
    ] {
        let _ = writeln!(out, "| {k} | {} |", esc(&v));
    }
    for (k, v) in &meta.invocation {
        let _ = writeln!(out, "| --{k} | {} |", esc(v));
    }
    out.push('\n');

    if !meta.deviations.is_empty() {
        out.push_str("## Deviations from the literal procedure\n\n");
        for d in &meta.deviations {
            let _ = writeln!(out, "- {d}");
        }
        out.push('\n');
    }

    out.push_str("## Patterns\n\n");
    if count(Granularity::Task) == 0 {
        out.push_str("Zero task patterns were mined.\n\n");
    }
    for r in &lib.records {
        card(&mut out, lib, r);
    }

    out.push_str("## Trace matrix\n\n");
    let m = trace_matrix(lib, corpus);
    if m.columns.is_empty() {
        out.push_str("No task patterns to trace.\n\n");
    } else {
        out.push_str("| SDM |");
        for (_, name) in &m.columns {
            let _ = write!(out, " {} |", esc(name));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(m.columns.len()));
        out.push('\n');
        for (r, sdm) in corpus.sdms.iter().enumerate() {
            let _ = write!(out, "| {} |", esc(&sdm.name));
            for c in 0..m.columns.len() {
                let _ = write!(out, " {} |", esc(&m.cell(r, c)));
            }
            out.push('\n');
        }
        out.push('\n');
    }

    out.push_str("## Straddlers\n\n");
    if audit.straddlers.is_empty() {
        out.push_str("None.\n");
    }
    for s in &audit.straddlers {
        let _ = writeln!(out, "- {}: {}", s.activity, s.frames.join(", "));
    }

    out.push_str("\n## Unassigned activities\n\n");
    if audit.unassigned.is_empty() {
        out.push_str("None.\n");
    }
    for u in &audit.unassigned {
        let _ = writeln!(
            out,
            "- {} \"{}\": best frame {}, synonym {:.3}, affinity {:.3}",
            u.activity,
            u.name,
            u.best_frame.as_deref().unwrap_or("none"),
            u.synonym,
            u.affinity
        );
    }

    out.push_str("\n## Split candidates\n\n");
    if audit.split_candidates.is_empty() {
        out.push_str("None.\n");
    }
    for c in &audit.split_candidates {
        let _ = writeln!(out, "- {} \"{}\": {} steps", c.id, c.name, c.steps);
    }

    out.push_str("\n## Merge log\n\n");
    if audit.merge_log.is_empty() {
        out.push_str("Zero merges.\n");
    } else {
        out.push_str("| Kind | Inputs | Outputs | Evidence |\n|---|---|---|---|\n");
        for e in &audit.merge_log {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                e.kind,
                esc(&e.inputs.join(", ")),
                esc(&e.outputs.join(", ")),
                esc(&e.rule_or_score)
            );
        }
    }

    out.push_str("\n## Diagnostics\n\n");
    if audit.diagnostics.is_empty() {
        out.push_str("None.\n");
    }
    for d in &audit.diagnostics {
        let _ = writeln!(out, "- {d}");
    }
    out
}
