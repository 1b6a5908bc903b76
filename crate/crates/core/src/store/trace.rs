use std::io;

use super::{Granularity, PatternLibrary};
use crate::corpus::Corpus;

/// Printed for a methodology with no activity behind a task.
pub const ABSENT: &str = "n.a";

/// Which source activities back each task pattern, per methodology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceMatrix {
    /// Methodology ids in corpus order.
    pub rows: Vec<String>,
    /// `(pattern id, pattern name)` sorted by id.
    pub columns: Vec<(String, String)>,
    /// `cells[row][col]`: names of the row's activities in the column's
    /// provenance; empty when absent.
    pub cells: Vec<Vec<Vec<String>>>,
}

impl TraceMatrix {
    pub fn cell(&self, row: usize, col: usize) -> String {
        let names = &self.cells[row][col];
        if names.is_empty() {
            ABSENT.to_owned()
        } else {
            names.join("; ")
        }
    }

    /// Number of (methodology activity, task) pairs in the matrix.
    pub fn filled_pairs(&self) -> usize {
        self.cells.iter().flatten().map(Vec::len).sum()
    }

    pub fn column_of(&self, pattern_id: &str) -> Option<usize> {
        self.columns.iter().position(|(id, _)| id == pattern_id)
    }

    /// Header row of pattern names, one row per methodology.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["sdm".to_owned()];
        header.extend(self.columns.iter().map(|(_, name)| name.clone()));
        w.write_record(&header)?;
        for (r, sdm) in self.rows.iter().enumerate() {
            let mut row = vec![sdm.clone()];
            row.extend((0..self.columns.len()).map(|c| self.cell(r, c)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn trace_matrix(lib: &PatternLibrary, corpus: &Corpus) -> TraceMatrix {
    let mut tasks: Vec<_> = lib.of(Granularity::Task).collect();
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    let rows: Vec<String> = corpus.sdms.iter().map(|s| s.id.clone()).collect();
    let cells = corpus
        .sdms
        .iter()
        .map(|sdm| {
            tasks
                .iter()
                .map(|t| {
                    t.provenance
                        .iter()
                        .filter(|r| r.sdm_id == sdm.id)
                        .map(|r| sdm.activity(&r.activity_id).map_or_else(|| r.activity_id.clone(), |a| a.name.clone()))
                        .collect()
                })
                .collect()
        })
        .collect();
    TraceMatrix {
        rows,
        columns: tasks.iter().map(|t| (t.id.clone(), t.name.clone())).collect(),
        cells,
    }
}

/// Provenance references the corpus cannot resolve. Phase records point at
/// methodology phases, the others at activities.
pub fn dangling_refs(lib: &PatternLibrary, corpus: &Corpus) -> Vec<String> {
    let mut out = Vec::new();
    for rec in &lib.records {
        for r in &rec.provenance {
            let found = corpus.sdm(&r.sdm_id).is_some_and(|s| match rec.granularity {
                Granularity::Phase => s.phase(&r.activity_id).is_some(),
                _ => s.activity(&r.activity_id).is_some(),
            });
            if !found && !out.contains(&r.to_string()) {
                out.push(r.to_string());
            }
        }
    }
    out
}
