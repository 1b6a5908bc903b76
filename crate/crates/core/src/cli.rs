//! The `procpat` command: `validate`, `mine` and `report`.
//!
//! Exit status 0 means success, 1 a domain or validation error, 2 an I/O or
//! environment error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::corpus::{ingest_corpus, read_corpus, validate_corpus, Corpus, CorpusError};
use crate::lexicon::{load_lexicon, Lexicon, LexiconError};
use crate::operators::{ClusteringMode, OperatorConfig};
use crate::pipeline::{load_enrichment, load_split_rules, mine, FrameMode, MineOptions, PipelineError};
use crate::store::{dangling_refs, load_library, render_report, trace_matrix, PatternLibrary, StoreError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_ENV: i32 = 2;

pub const LIBRARY_FILE: &str = "library.json";
pub const REPORT_FILE: &str = "report.md";
pub const MATRIX_FILE: &str = "trace.csv";

#[derive(Debug, Parser)]
#[command(name = "procpat", version, about = "Mine process patterns from software development methodology descriptions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus and print one diagnostic per line.
    Validate {
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Run the extraction and write the library, report and trace matrix.
    Mine(MineArgs),
    /// Regenerate the report (and optionally the matrix) from a saved library.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FramesArg {
    Sdlc,
    Derived,
    File,
}

impl From<FramesArg> for FrameMode {
    fn from(f: FramesArg) -> Self {
        match f {
            FramesArg::Sdlc => FrameMode::Sdlc,
            FramesArg::Derived => FrameMode::Derived,
            FramesArg::File => FrameMode::File,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    SeedStar,
    Components,
}

impl From<ModeArg> for ClusteringMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SeedStar => ClusteringMode::SeedStar,
            ModeArg::Components => ClusteringMode::Components,
        }
    }
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Lexicon document; the bundled starter lexicon when omitted.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Run configuration document. Flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub frames: Option<FramesArg>,
    #[arg(long)]
    pub frames_file: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub enrichment: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub library: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for the report; defaults to the library's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the trace matrix as comma-separated values.
    #[arg(long)]
    pub matrix: bool,
}

/// Settings read from `--config`. Relative paths are resolved against the
/// directory holding the config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub frames: Option<FrameMode>,
    pub frames_file: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub enrichment: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub operators: OperatorConfig,
}

impl RunConfig {
    fn rebase(mut self, base: &Path) -> Self {
        for p in [
            &mut self.corpus,
            &mut self.lexicon,
            &mut self.frames_file,
            &mut self.rules,
            &mut self.enrichment,
            &mut self.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self
    }
}

/// A failure carrying its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn domain(message: impl fmt::Display) -> Self {
        Self { code: EXIT_DOMAIN, message: message.to_string() }
    }
    fn env(message: impl fmt::Display) -> Self {
        Self { code: EXIT_ENV, message: message.to_string() }
    }
}

impl From<CorpusError> for Failure {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => Failure::env(e),
            _ => Failure::domain(e),
        }
    }
}

impl From<LexiconError> for Failure {
    fn from(e: LexiconError) -> Self {
        match e {
            LexiconError::Io { .. } => Failure::env(e),
            _ => Failure::domain(e),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Io { .. } => Failure::env(e),
            _ => Failure::domain(e),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => Failure::env(e),
            _ => Failure::domain(e),
        }
    }
}

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ENV } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Validate { corpus } => cmd_validate(&corpus),
        Command::Mine(args) => cmd_mine(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn cmd_validate(corpus: &Path) -> Result<(), Failure> {
    let c = read_corpus(corpus)?;
    let diags = validate_corpus(&c);
    for d in &diags {
        println!("{d}");
    }
    let errors = diags.iter().filter(|d| d.is_error()).count();
    if errors > 0 {
        return Err(Failure::domain(format!("{errors} error(s) in corpus")));
    }
    Ok(())
}

fn load_corpus_checked(path: &Path) -> Result<Corpus, Failure> {
    match ingest_corpus(path) {
        Ok(c) => Ok(c),
        Err(CorpusError::Invalid(diags)) => {
            for d in &diags {
                println!("{d}");
            }
            Err(Failure::domain("corpus failed validation; nothing was mined"))
        }
        Err(e) => Err(e.into()),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::env(format!("cannot write {}: {e}", path.display())))
}

fn matrix_csv(lib: &PatternLibrary, corpus: &Corpus) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    trace_matrix(lib, corpus)
        .write_csv(&mut buf)
        .map_err(|e| Failure::env(format!("cannot render trace matrix: {e}")))?;
    Ok(buf)
}

pub fn cmd_mine(args: &MineArgs) -> Result<(), Failure> {
    let mut invocation = BTreeMap::new();
    let mut echo = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            invocation.insert(k.to_owned(), v);
        }
    };
    let show = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
    echo("corpus", show(&args.corpus));
    echo("lexicon", show(&args.lexicon));
    echo("config", show(&args.config));
    echo("frames", args.frames.map(|f| FrameMode::from(f).to_string()));
    echo("frames-file", show(&args.frames_file));
    echo("rules", show(&args.rules));
    echo("enrichment", show(&args.enrichment));
    echo("mode", args.mode.map(|m| ClusteringMode::from(m).to_string()));
    echo("out", show(&args.out));

    let rc = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::env(format!("cannot read config {}: {e}", path.display())))?;
            let rc: RunConfig = serde_json::from_str(&text)
                .map_err(|e| Failure::domain(format!("malformed config {}: {e}", path.display())))?;
            rc.rebase(path.parent().unwrap_or(Path::new(".")))
        }
        None => RunConfig::default(),
    };

    let corpus_path = args
        .corpus
        .clone()
        .or(rc.corpus)
        .ok_or_else(|| Failure::domain("no corpus given (use --corpus or the config file)"))?;
    let out = args.out.clone().or(rc.out).unwrap_or_else(|| PathBuf::from("."));
    let mut cfg = rc.operators;
    if let Some(m) = args.mode {
        cfg.clustering_mode = m.into();
    }

    let corpus = load_corpus_checked(&corpus_path)?;
    let lexicon = match args.lexicon.clone().or(rc.lexicon) {
        Some(p) => load_lexicon(&p)?,
        None => Lexicon::starter(),
    };
    let rules = match args.rules.clone().or(rc.rules) {
        Some(p) => load_split_rules(&p)?,
        None => Vec::new(),
    };
    let enrichment = match args.enrichment.clone().or(rc.enrichment) {
        Some(p) => Some(load_enrichment(&p)?),
        None => None,
    };
    let opts = MineOptions {
        frames_mode: args.frames.map(FrameMode::from).or(rc.frames).unwrap_or_default(),
        frames_file: args.frames_file.clone().or(rc.frames_file),
        rules,
        enrichment,
        cfg,
        invocation,
    };

    let output = mine(&corpus, &lexicon, &opts)?;
    let lib = &output.library;
    for d in &lib.run_metadata.audit.diagnostics {
        eprintln!("{d}");
    }
    // Everything is rendered before anything is written.
    let library_json = lib.to_json();
    let report = render_report(lib, &corpus);
    let csv = matrix_csv(lib, &corpus)?;
    std::fs::create_dir_all(&out).map_err(|e| Failure::env(format!("cannot create {}: {e}", out.display())))?;
    write_file(&out.join(LIBRARY_FILE), library_json.as_bytes())?;
    write_file(&out.join(REPORT_FILE), report.as_bytes())?;
    write_file(&out.join(MATRIX_FILE), &csv)?;
    Ok(())
}

pub fn cmd_report(args: &ReportArgs) -> Result<(), Failure> {
    let (lib, warnings) = load_library(&args.library)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    let corpus = load_corpus_checked(&args.corpus)?;
    let dangling = dangling_refs(&lib, &corpus);
    if !dangling.is_empty() {
        for d in &dangling {
            println!("dangling provenance reference {d}");
        }
        return Err(Failure::domain(format!(
            "library does not match corpus: {} unknown reference(s)",
            dangling.len()
        )));
    }
    let out = match &args.out {
        Some(o) => o.clone(),
        None => args.library.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
    };
    let report = render_report(&lib, &corpus);
    let csv = if args.matrix { Some(matrix_csv(&lib, &corpus)?) } else { None };
    std::fs::create_dir_all(&out).map_err(|e| Failure::env(format!("cannot create {}: {e}", out.display())))?;
    write_file(&out.join(REPORT_FILE), report.as_bytes())?;
    if let Some(csv) = csv {
        write_file(&out.join(MATRIX_FILE), &csv)?;
    }
    Ok(())
}
