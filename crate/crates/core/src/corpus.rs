//! Line-oriented corpus I/O.
//!
//! Corpus files are newline-delimited UTF-8, one sentence per line, LF
//! terminated. CRLF is accepted on read (CR stripped) and never written; a
//! leading BOM is stripped.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lang::LanguageTag;

/// Ordered stream of UTF-8 sentence lines for one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineCorpus {
    pub lines: Vec<String>,
    pub lang: LanguageTag,
}

impl LineCorpus {
    pub fn new(lines: Vec<String>, lang: LanguageTag) -> LineCorpus {
        LineCorpus { lines, lang }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    /// Applies a per-line transform, preserving line count and order.
    pub fn map_lines<F>(&self, f: F) -> LineCorpus
    where
        F: Fn(&str) -> String + Sync,
    {
        use rayon::prelude::*;
        let lines = self.lines.par_iter().map(|l| f(l)).collect();
        LineCorpus { lines, lang: self.lang }
    }
}

/// Positionally aligned bilingual corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BilingualPair {
    pub src: LineCorpus,
    pub tgt: LineCorpus,
}

impl BilingualPair {
    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Reads a corpus file. A trailing newline does not create an empty final
/// line; a UTF-8 BOM at the start of the file is stripped.
pub fn read_line_corpus(path: impl AsRef<Path>, lang: LanguageTag) -> Result<LineCorpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let text = decode_utf8(&bytes, path)?;
    Ok(LineCorpus { lines: split_lines(text), lang })
}

fn decode_utf8<'a>(bytes: &'a [u8], path: &Path) -> Result<&'a str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let offset = e.valid_up_to();
        let line = bytes[..offset].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::Encoding { path: path.into(), offset, line }
    })
}

/// Splits text into lines: LF delimited, CR stripped, leading BOM removed,
/// no phantom empty line after a final newline.
pub fn split_lines(text: &str) -> Vec<String> {
    let text = text.strip_prefix('\u{FEFF}').unwrap_or(text);
    let text = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Vec::new();
    }
    text.split('\n').map(|l| l.strip_suffix('\r').unwrap_or(l).to_string()).collect()
}

/// Writes a corpus with LF line terminators and a single trailing newline.
pub fn write_line_corpus(path: impl AsRef<Path>, corpus: &LineCorpus) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(corpus.lines.iter().map(|l| l.len() + 1).sum());
    for line in &corpus.lines {
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    f.write_all(&out).map_err(|source| Error::Io { path: path.into(), source })
}

/// Pairs two corpora positionally; fails on any line-count mismatch.
pub fn pair_corpora(src: LineCorpus, tgt: LineCorpus) -> Result<BilingualPair> {
    if src.len() != tgt.len() {
        return Err(Error::Alignment { src_count: src.len(), tgt_count: tgt.len() });
    }
    Ok(BilingualPair { src, tgt })
}
