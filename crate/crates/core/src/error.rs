//! Error types shared across the toolkit.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown language code: {0:?}")]
    UnknownLanguage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid UTF-8 at byte offset {offset} (line {line}) in {path}")]
    Encoding {
        path: PathBuf,
        offset: usize,
        line: usize,
    },

    #[error("bilingual corpora are misaligned: {src_count} source lines vs {tgt_count} target lines")]
    Alignment { src_count: usize, tgt_count: usize },

    #[error("no transliteration map for language {0}")]
    MissingMap(String),

    #[error("malformed map file {path}: {reason}")]
    MalformedMap { path: PathBuf, reason: String },

    #[error("malformed rule file: {0}")]
    MalformedRules(String),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("vocabulary hash mismatch: corpus was binarized against a different dictionary")]
    VocabMismatch,

    #[error("malformed binarized corpus: {0}")]
    MalformedBinary(String),

    #[error("degenerate BLEU input: no n-gram totals accumulated")]
    DegenerateInput,

    #[error("translator adapter failed{}: {reason}", hop.map(|h| format!(" at hop {h}")).unwrap_or_default())]
    Adapter { hop: Option<u8>, reason: String },

    #[error("invalid pipeline configuration: {0}")]
    Config(String),

    #[error("pipeline stage {stage} failed for pair {pair}: {source}")]
    Stage {
        stage: &'static str,
        pair: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn adapter(reason: impl Into<String>) -> Self {
        Error::Adapter { hop: None, reason: reason.into() }
    }

    pub fn adapter_at(hop: u8, reason: impl Into<String>) -> Self {
        Error::Adapter { hop: Some(hop), reason: reason.into() }
    }
}
