//! Mining phase, stage and task process patterns from structured
//! descriptions of software development methodologies.
//!
//! The flow is: [`corpus`] ingestion and validation, term normalization
//! through a [`lexicon`], the comparison [`operators`], the extraction
//! [`pipeline`], and persistence and reporting in [`store`]. [`cli`] wires
//! them to the `procpat` command.

pub mod cli;
pub mod corpus;
pub mod diag;
pub mod lexicon;
pub mod operators;
pub mod pipeline;
pub mod store;
mod unionfind;
