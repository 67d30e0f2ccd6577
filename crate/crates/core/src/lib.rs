//! Corpus preparation and evaluation toolkit for multilingual NMT on Indic
//! languages: tokenization, normalization, modified-ITRANS transliteration
//! with English-letter masking, BPE subword encoding, dictionary building,
//! binarization, CTTR and BLEU metrics, and direct/pivot evaluation
//! orchestration with the translation model behind an external adapter.

pub mod corpus;
pub mod error;
pub mod lang;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod subword;
pub mod translit;

pub use corpus::{pair_corpora, read_line_corpus, write_line_corpus, BilingualPair, LineCorpus};
pub use error::{Error, Result};
pub use lang::{group_members, parse_language_tag, Group, LangCode, LanguageTag, Script};
