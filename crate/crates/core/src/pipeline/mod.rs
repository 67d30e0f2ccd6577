//! End-to-end corpus preparation and evaluation orchestration.
//!
//! `prepare` runs the full preprocessing pipeline (tokenize, lowercase the
//! English sides, normalize, minimize whitespace, optionally transliterate,
//! learn and apply BPE, build the dictionary, binarize) and records every
//! stage hash in a manifest under a run directory named by the config hash.
//! `evaluate` replays the recorded stages on a test pair and scores an
//! adapter's hypotheses; `build_pivot`/`pivot_evaluate` mirror the two-model
//! pivot setup with English as the bridge.

mod adapter;

pub use adapter::{
    DirectoryAdapter, IdentityAdapter, LookupAdapter, SubprocessAdapter, Translator,
    DEFAULT_ADAPTER_TIMEOUT,
};

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::corpus::{BilingualPair, LineCorpus};
use crate::error::{Error, Result};
use crate::lang::{Group, LangCode, LanguageTag};
use crate::metrics;
use crate::normalize::{lowercase_english, minimize_whitespace, normalize_line, tokenize, NormalizationRuleSet};
use crate::subword::{
    binarize, bpe_apply_corpus, bpe_decode, bpe_learn, BpeModel, Vocabulary,
};
use crate::translit::{transliterate_line_reporting, MapRegistry, UnmappedReport};

pub use crate::lang::group_members;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_BPE_OPERATIONS: usize = 48000;

/// Model direction relative to the common language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Common language to the language set (order bit 0).
    FromCommon = 0,
    /// Language set to the common language (order bit 1).
    ToCommon = 1,
}

impl Order {
    pub fn bit(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub common_lang: LanguageTag,
    pub lang_set: Vec<LanguageTag>,
    pub order: Order,
    pub is_translit: bool,
    pub bpe_operations: usize,
    pub group_filter: Option<Group>,
}

impl PipelineConfig {
    pub fn new(common_lang: LanguageTag, lang_set: Vec<LanguageTag>, order: Order) -> PipelineConfig {
        PipelineConfig {
            common_lang,
            lang_set,
            order,
            is_translit: false,
            bpe_operations: DEFAULT_BPE_OPERATIONS,
            group_filter: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lang_set.is_empty() {
            return Err(Error::Config("language set is empty".to_string()));
        }
        // TH exists only as the masking target script
        if std::iter::once(&self.common_lang)
            .chain(&self.lang_set)
            .any(|l| l.code == LangCode::Th)
        {
            return Err(Error::Config("TH is a mask target, not a translation language".to_string()));
        }
        if self.lang_set.iter().any(|l| l.code == self.common_lang.code) {
            return Err(Error::Config(format!(
                "common language {} must not be in the language set",
                self.common_lang
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &self.lang_set {
            if !seen.insert(l.code) {
                return Err(Error::Config(format!("duplicate language {l} in set")));
            }
        }
        if let Some(group) = self.group_filter {
            for l in &self.lang_set {
                if !group.members().contains(&l.code) {
                    return Err(Error::Config(format!("{l} is not a member of group {group}")));
                }
            }
        }
        Ok(())
    }

    /// Language pairs in model direction, per the configured order.
    pub fn lang_pairs(&self) -> Vec<(LanguageTag, LanguageTag)> {
        self.lang_set
            .iter()
            .map(|&lang| match self.order {
                Order::FromCommon => (self.common_lang, lang),
                Order::ToCommon => (lang, self.common_lang),
            })
            .collect()
    }

    fn canonical_text(&self) -> String {
        let langs: Vec<&str> = self.lang_set.iter().map(|l| l.code.as_str()).collect();
        format!(
            "common={}\nset={}\norder={}\ntranslit={}\nops={}\ngroup={}\n",
            self.common_lang,
            langs.join(","),
            self.order.bit(),
            self.is_translit as u8,
            self.bpe_operations,
            self.group_filter.map(|g| g.as_str()).unwrap_or("-"),
        )
    }

    /// Short content hash naming the run directory.
    pub fn hash(&self) -> String {
        hex16(self.canonical_text().as_bytes())
    }
}

fn hex16(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn corpus_hash(c: &LineCorpus) -> String {
    let mut hasher = Sha256::new();
    for line in &c.lines {
        hasher.update(line.as_bytes());
        hasher.update(b"\n");
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(16);
    for b in &digest[..8] {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Ordered key=value manifest.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Manifest {
        let entries = text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
            .collect();
        Manifest { entries }
    }
}

/// Everything `prepare` produced: artifacts on disk plus in-memory handles.
#[derive(Debug)]
pub struct PreparedSet {
    pub run_dir: PathBuf,
    pub config: PipelineConfig,
    pub model: BpeModel,
    pub vocab: Vocabulary,
    pub lang_pairs: Vec<(LanguageTag, LanguageTag)>,
    pub manifest: Manifest,
}

impl PreparedSet {
    /// Reconstructs a prepared set from a run directory written by
    /// [`prepare`].
    pub fn load(run_dir: &Path) -> Result<PreparedSet> {
        let read = |name: &str| -> Result<String> {
            let path = run_dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| Error::Io { path, source })
        };
        let manifest = Manifest::parse(&read("manifest.txt")?);
        let field = |key: &str| -> Result<&str> {
            manifest
                .get(key)
                .ok_or_else(|| Error::Config(format!("manifest missing {key}")))
        };
        let common_lang = crate::lang::parse_language_tag(field("common_lang")?)?;
        let mut lang_set = Vec::new();
        for code in field("lang_set")?.split(',') {
            lang_set.push(crate::lang::parse_language_tag(code)?);
        }
        let order = match field("order")? {
            "0" => Order::FromCommon,
            "1" => Order::ToCommon,
            other => return Err(Error::Config(format!("bad order {other} in manifest"))),
        };
        let config = PipelineConfig {
            common_lang,
            lang_set,
            order,
            is_translit: field("is_translit")? == "1",
            bpe_operations: field("bpe_operations")?
                .parse()
                .map_err(|_| Error::Config("bad bpe_operations in manifest".to_string()))?,
            group_filter: manifest.get("group_filter").map(Group::parse).transpose()?,
        };
        let model = BpeModel::parse(&read("merges.bpe")?)?;
        let vocab = Vocabulary::parse(&read("dict.txt")?)?;
        let lang_pairs = config.lang_pairs();
        Ok(PreparedSet { run_dir: run_dir.to_path_buf(), config, model, vocab, lang_pairs, manifest })
    }
}

fn pair_name(src: LanguageTag, tgt: LanguageTag) -> String {
    format!("{}-{}", src.code, tgt.code)
}

fn stage_err<'a>(stage: &'static str, pair: &'a str) -> impl FnOnce(Error) -> Error + 'a {
    move |source| Error::Stage { stage, pair: pair.to_string(), source: Box::new(source) }
}

/// The non-BPE preprocessing stages applied to one corpus, in pipeline
/// order. Returns the corpus after each stage for manifest hashing.
fn preprocess_stages(
    corpus: &LineCorpus,
    is_translit: bool,
    registry: &MapRegistry,
    report: &mut UnmappedReport,
) -> Result<Vec<(&'static str, LineCorpus)>> {
    let mut stages = Vec::new();
    let lang = corpus.lang;

    let tokenized = corpus.map_lines(|l| tokenize(l, lang));
    stages.push(("tokenize", tokenized));

    let lowered = if lang.code == LangCode::En {
        stages.last().unwrap().1.map_lines(lowercase_english)
    } else {
        stages.last().unwrap().1.clone()
    };
    stages.push(("lowercase", lowered));

    let rules = NormalizationRuleSet::for_language(lang);
    let normalized = stages.last().unwrap().1.map_lines(|l| normalize_line(l, &rules));
    stages.push(("normalize", normalized));

    let minimized = stages.last().unwrap().1.map_lines(minimize_whitespace);
    stages.push(("whitespace", minimized));

    if is_translit {
        let map = registry.get(lang)?;
        let cur = &stages.last().unwrap().1;
        let mut lines = Vec::with_capacity(cur.lines.len());
        for l in &cur.lines {
            lines.push(transliterate_line_reporting(l, &map, report));
        }
        stages.push(("transliterate", LineCorpus::new(lines, lang)));
    }
    Ok(stages)
}

/// Preprocesses one corpus to its final pre-BPE form.
pub fn preprocess_corpus(
    corpus: &LineCorpus,
    is_translit: bool,
    registry: &MapRegistry,
) -> Result<LineCorpus> {
    let mut report = UnmappedReport::default();
    let stages = preprocess_stages(corpus, is_translit, registry, &mut report)?;
    Ok(stages.into_iter().next_back().expect("at least one stage").1)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|source| Error::Io { path: parent.into(), source })?;
    }
    std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.into(), source })
}

fn try_resume(
    config: &PipelineConfig,
    run_dir: &Path,
    lang_pairs: &[(LanguageTag, LanguageTag)],
) -> Option<PreparedSet> {
    let manifest_text = std::fs::read_to_string(run_dir.join("manifest.txt")).ok()?;
    let manifest = Manifest::parse(&manifest_text);
    let merges_bytes = std::fs::read(run_dir.join("merges.bpe")).ok()?;
    let dict_bytes = std::fs::read(run_dir.join("dict.txt")).ok()?;
    if manifest.get("merges_hash")? != hex16(&merges_bytes)
        || manifest.get("dict_hash")? != hex16(&dict_bytes)
    {
        return None;
    }
    for (s, t) in lang_pairs {
        let name = pair_name(*s, *t);
        for side in ["src", "tgt"] {
            let path = run_dir.join("bin").join(format!("{name}.{side}.bin"));
            let bytes = std::fs::read(&path).ok()?;
            if manifest.get(&format!("bin.{name}.{side}"))? != hex16(&bytes) {
                return None;
            }
        }
    }
    let model = BpeModel::parse(std::str::from_utf8(&merges_bytes).ok()?).ok()?;
    let vocab = Vocabulary::parse(std::str::from_utf8(&dict_bytes).ok()?).ok()?;
    Some(PreparedSet {
        run_dir: run_dir.to_path_buf(),
        config: config.clone(),
        model,
        vocab,
        lang_pairs: lang_pairs.to_vec(),
        manifest,
    })
}

/// Runs the preparation pipeline over one bilingual pair per language in the
/// set; each pair's source side must be the common language. Artifacts land
/// in `<base_dir>/<config-hash>/`; a rerun with matching artifacts resumes
/// without recomputation.
pub fn prepare(
    config: &PipelineConfig,
    corpora: &[BilingualPair],
    base_dir: &Path,
    registry: &MapRegistry,
) -> Result<PreparedSet> {
    config.validate()?;
    // one pair per language, keyed and ordered by lang_set
    let mut ordered: Vec<&BilingualPair> = Vec::with_capacity(config.lang_set.len());
    for lang in &config.lang_set {
        let found = corpora
            .iter()
            .find(|p| p.src.lang.code == config.common_lang.code && p.tgt.lang.code == lang.code)
            .ok_or_else(|| {
                Error::Config(format!(
                    "missing bilingual pair {}-{} (source side must be the common language)",
                    config.common_lang, lang
                ))
            })?;
        if found.src.len() != found.tgt.len() {
            return Err(Error::Alignment {
                src_count: found.src.len(),
                tgt_count: found.tgt.len(),
            });
        }
        ordered.push(found);
    }
    if corpora.len() != config.lang_set.len() {
        return Err(Error::Config(format!(
            "expected {} bilingual pairs, got {}",
            config.lang_set.len(),
            corpora.len()
        )));
    }

    let lang_pairs = config.lang_pairs();
    let run_dir = base_dir.join(config.hash());
    if let Some(prep) = try_resume(config, &run_dir, &lang_pairs) {
        return Ok(prep);
    }

    let mut manifest = Manifest::default();
    manifest.push("tool_version", TOOL_VERSION);
    manifest.push("config_hash", config.hash());
    manifest.push("common_lang", config.common_lang.to_string());
    manifest.push(
        "lang_set",
        config.lang_set.iter().map(|l| l.code.as_str()).collect::<Vec<_>>().join(","),
    );
    manifest.push("order", config.order.bit().to_string());
    manifest.push("is_translit", (config.is_translit as u8).to_string());
    manifest.push("bpe_operations", config.bpe_operations.to_string());
    if let Some(g) = config.group_filter {
        manifest.push("group_filter", g.as_str());
    }
    manifest.push("lowercase", "EN sides only");
    manifest.push(
        "stages",
        if config.is_translit {
            "tokenize,lowercase,normalize,whitespace,transliterate,bpe,dictionary,binarize"
        } else {
            "tokenize,lowercase,normalize,whitespace,bpe,dictionary,binarize"
        },
    );
    if config.is_translit {
        // evaluation happens in ITRANS space; hypotheses and references are
        // both transliterated with the maps hashed below
        manifest.push("bleu_space", "itrans");
        for lang in std::iter::once(&config.common_lang).chain(&config.lang_set) {
            let map = registry.get(*lang)?;
            manifest.push(format!("map_hash.{}", lang.code), map.content_hash);
        }
    }

    // stages 1-5 per pair side, recording output hashes
    let mut report = UnmappedReport::default();
    let mut prepared_pairs: Vec<BilingualPair> = Vec::with_capacity(ordered.len());
    for pair in &ordered {
        let name = pair_name(pair.src.lang, pair.tgt.lang);
        manifest.push(format!("input.{name}.src"), corpus_hash(&pair.src));
        manifest.push(format!("input.{name}.tgt"), corpus_hash(&pair.tgt));
        // transliteration is the only fallible stage of the per-line pass
        let src_stages = preprocess_stages(&pair.src, config.is_translit, registry, &mut report)
            .map_err(stage_err("transliterate", &name))?;
        let tgt_stages = preprocess_stages(&pair.tgt, config.is_translit, registry, &mut report)
            .map_err(stage_err("transliterate", &name))?;
        for (stage, c) in &src_stages {
            manifest.push(format!("stage.{stage}.{name}.src"), corpus_hash(c));
        }
        for (stage, c) in &tgt_stages {
            manifest.push(format!("stage.{stage}.{name}.tgt"), corpus_hash(c));
        }
        prepared_pairs.push(BilingualPair {
            src: src_stages.into_iter().next_back().unwrap().1,
            tgt: tgt_stages.into_iter().next_back().unwrap().1,
        });
    }

    // concatenate every side of every pair and learn a joint BPE
    let mut full_lines = Vec::new();
    for p in &prepared_pairs {
        full_lines.extend(p.src.lines.iter().cloned());
        full_lines.extend(p.tgt.lines.iter().cloned());
    }
    let full = LineCorpus::new(full_lines, config.common_lang);
    manifest.push("stage.concatenate", corpus_hash(&full));
    let model = bpe_learn(&full, config.bpe_operations)?;

    let full_bpe = bpe_apply_corpus(&full, &model);
    manifest.push("stage.bpe_full", corpus_hash(&full_bpe));
    let bpe_pairs: Vec<BilingualPair> = prepared_pairs
        .iter()
        .map(|p| BilingualPair {
            src: bpe_apply_corpus(&p.src, &model),
            tgt: bpe_apply_corpus(&p.tgt, &model),
        })
        .collect();
    for p in &bpe_pairs {
        let name = pair_name(p.src.lang, p.tgt.lang);
        manifest.push(format!("stage.bpe.{name}.src"), corpus_hash(&p.src));
        manifest.push(format!("stage.bpe.{name}.tgt"), corpus_hash(&p.tgt));
    }

    let vocab = crate::subword::build_dictionary(&full_bpe);

    // write artifacts; binarized sides follow the model direction
    let merges_text = model.to_text();
    let dict_text = vocab.to_text();
    write_file(&run_dir.join("merges.bpe"), merges_text.as_bytes())?;
    write_file(&run_dir.join("dict.txt"), dict_text.as_bytes())?;
    manifest.push("merges_hash", hex16(merges_text.as_bytes()));
    manifest.push("dict_hash", hex16(dict_text.as_bytes()));

    for (p, (model_src, model_tgt)) in bpe_pairs.iter().zip(&lang_pairs) {
        let name = pair_name(*model_src, *model_tgt);
        let directed = match config.order {
            Order::FromCommon => BilingualPair { src: p.src.clone(), tgt: p.tgt.clone() },
            Order::ToCommon => BilingualPair { src: p.tgt.clone(), tgt: p.src.clone() },
        };
        let (src_bin, tgt_bin) = binarize(&directed, &vocab);
        let src_bytes = src_bin.to_bytes();
        let tgt_bytes = tgt_bin.to_bytes();
        write_file(&run_dir.join("bin").join(format!("{name}.src.bin")), &src_bytes)?;
        write_file(&run_dir.join("bin").join(format!("{name}.tgt.bin")), &tgt_bytes)?;
        manifest.push(format!("bin.{name}.src"), hex16(&src_bytes));
        manifest.push(format!("bin.{name}.tgt"), hex16(&tgt_bytes));
    }
    manifest.push(
        "lang_pairs",
        lang_pairs.iter().map(|(s, t)| pair_name(*s, *t)).collect::<Vec<_>>().join(","),
    );

    if !report.is_empty() {
        write_file(&run_dir.join("unmapped.txt"), report.to_text().as_bytes())?;
    }
    write_file(&run_dir.join("manifest.txt"), manifest.to_text().as_bytes())?;

    Ok(PreparedSet { run_dir, config: config.clone(), model, vocab, lang_pairs, manifest })
}

/// Fails when the registry's map for a pair language differs from the map
/// the prepared set was built with (hash recorded in the manifest).
fn check_map_hashes(prep: &PreparedSet, pair: &BilingualPair, registry: &MapRegistry) -> Result<()> {
    if !prep.config.is_translit {
        return Ok(());
    }
    for lang in [pair.src.lang, pair.tgt.lang] {
        if let Some(recorded) = prep.manifest.get(&format!("map_hash.{}", lang.code)) {
            let current = registry.get(lang)?.content_hash;
            if current != recorded {
                return Err(Error::Config(format!(
                    "transliteration map for {} (hash {current}) differs from the one the run \
                     was prepared with ({recorded})",
                    lang.code
                )));
            }
        }
    }
    Ok(())
}

/// Replays the recorded preprocessing on a test pair, translates the source
/// side through the adapter, BPE-decodes the hypotheses and scores them
/// against the preprocessed references. Hypotheses and the score are
/// persisted under the run directory.
pub fn evaluate(
    adapter: &dyn Translator,
    pair: &BilingualPair,
    prep: &PreparedSet,
    registry: &MapRegistry,
) -> Result<f64> {
    check_map_hashes(prep, pair, registry)?;
    let src_pre = preprocess_corpus(&pair.src, prep.config.is_translit, registry)?;
    let tgt_pre = preprocess_corpus(&pair.tgt, prep.config.is_translit, registry)?;
    let src_bpe = bpe_apply_corpus(&src_pre, &prep.model);

    let raw = adapter.translate(&src_bpe.lines, pair.src.lang, pair.tgt.lang)?;
    if raw.len() != src_bpe.lines.len() {
        return Err(Error::adapter(format!(
            "line count mismatch: sent {}, received {}",
            src_bpe.lines.len(),
            raw.len()
        )));
    }
    let hyps: Vec<String> = raw.iter().map(|l| bpe_decode(l)).collect();

    let name = pair_name(pair.src.lang, pair.tgt.lang);
    write_file(
        &prep.run_dir.join("hyp").join(format!("{name}.txt")),
        (hyps.join("\n") + "\n").as_bytes(),
    )?;

    let score = metrics::corpus_bleu(&hyps, &tgt_pre.lines)?;
    append_score(&prep.run_dir, &name, score)?;
    Ok(score)
}

fn append_score(run_dir: &Path, pair: &str, score: f64) -> Result<()> {
    use std::io::Write as _;
    let path = run_dir.join("scores.txt");
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|source| Error::Io { path: path.clone(), source })?;
    writeln!(f, "{pair}\t{score:.2}").map_err(|source| Error::Io { path, source })
}

/// Prepares the two sides of a pivot system: source set toward the common
/// language, target set away from it, exactly mirroring the two training
/// calls of the pivot construction.
#[allow(clippy::too_many_arguments)]
pub fn build_pivot(
    common: LanguageTag,
    src_set: Vec<LanguageTag>,
    tgt_set: Vec<LanguageTag>,
    src_corpora: &[BilingualPair],
    tgt_corpora: &[BilingualPair],
    is_translit: bool,
    bpe_operations: usize,
    base_dir: &Path,
    registry: &MapRegistry,
) -> Result<(PreparedSet, PreparedSet)> {
    if src_set.is_empty() || tgt_set.is_empty() {
        return Err(Error::Config("pivot source and target sets must be non-empty".to_string()));
    }
    let mut src_config = PipelineConfig::new(common, src_set, Order::ToCommon);
    src_config.is_translit = is_translit;
    src_config.bpe_operations = bpe_operations;
    src_config.validate()?;
    let mut tgt_config = PipelineConfig::new(common, tgt_set, Order::FromCommon);
    tgt_config.is_translit = is_translit;
    tgt_config.bpe_operations = bpe_operations;
    tgt_config.validate()?;

    let src_prep = prepare(&src_config, src_corpora, base_dir, registry)?;
    let tgt_prep = prepare(&tgt_config, tgt_corpora, base_dir, registry)?;
    Ok((src_prep, tgt_prep))
}

/// Result of a two-hop pivot evaluation.
#[derive(Debug)]
pub struct PivotOutcome {
    pub score: f64,
    pub pivot_text: Vec<String>,
    pub hypotheses: Vec<String>,
}

/// Two-hop translation source -> pivot -> target, scored against the pair's
/// target side. With prepared sets, each hop replays that side's recorded
/// preprocessing and BPE; the intermediate pivot text is persisted under the
/// target run directory for inspection.
pub fn pivot_evaluate(
    src_adapter: &dyn Translator,
    tgt_adapter: &dyn Translator,
    pair: &BilingualPair,
    pivot_lang: LanguageTag,
    preps: Option<(&PreparedSet, &PreparedSet)>,
    registry: &MapRegistry,
) -> Result<PivotOutcome> {
    let hop = |h: u8| move |e: Error| match e {
        Error::Adapter { reason, .. } => Error::Adapter { hop: Some(h), reason },
        other => other,
    };

    if let Some((src_prep, tgt_prep)) = preps {
        check_map_hashes(src_prep, pair, registry)?;
        check_map_hashes(tgt_prep, pair, registry)?;
    }

    // hop 1: source -> pivot
    let hop1_input: Vec<String> = match preps {
        Some((src_prep, _)) => {
            let pre = preprocess_corpus(&pair.src, src_prep.config.is_translit, registry)?;
            bpe_apply_corpus(&pre, &src_prep.model).lines
        }
        None => pair.src.lines.clone(),
    };
    let raw1 = src_adapter
        .translate(&hop1_input, pair.src.lang, pivot_lang)
        .map_err(hop(1))?;
    if raw1.len() != hop1_input.len() {
        return Err(Error::adapter_at(1, format!(
            "line count mismatch: sent {}, received {}",
            hop1_input.len(),
            raw1.len()
        )));
    }
    let pivot_text: Vec<String> = raw1.iter().map(|l| bpe_decode(l)).collect();

    if let Some((_, tgt_prep)) = preps {
        let name = format!(
            "{}-{}-{}",
            pair.src.lang.code, pivot_lang.code, pair.tgt.lang.code
        );
        write_file(
            &tgt_prep.run_dir.join("pivot").join(format!("{name}.pvt.txt")),
            (pivot_text.join("\n") + "\n").as_bytes(),
        )?;
    }

    // hop 2: pivot -> target
    let hop2_input: Vec<String> = match preps {
        Some((_, tgt_prep)) => {
            let pivot_corpus = LineCorpus::new(pivot_text.clone(), pivot_lang);
            let pre = preprocess_corpus(&pivot_corpus, tgt_prep.config.is_translit, registry)?;
            bpe_apply_corpus(&pre, &tgt_prep.model).lines
        }
        None => pivot_text.clone(),
    };
    let raw2 = tgt_adapter
        .translate(&hop2_input, pivot_lang, pair.tgt.lang)
        .map_err(hop(2))?;
    if raw2.len() != hop2_input.len() {
        return Err(Error::adapter_at(2, format!(
            "line count mismatch: sent {}, received {}",
            hop2_input.len(),
            raw2.len()
        )));
    }
    let hypotheses: Vec<String> = raw2.iter().map(|l| bpe_decode(l)).collect();

    let refs: Vec<String> = match preps {
        Some((_, tgt_prep)) => {
            preprocess_corpus(&pair.tgt, tgt_prep.config.is_translit, registry)?.lines
        }
        None => pair.tgt.lines.clone(),
    };
    let score = metrics::corpus_bleu(&hypotheses, &refs)?;
    if let Some((_, tgt_prep)) = preps {
        let name = format!(
            "{}-{}-{}",
            pair.src.lang.code, pivot_lang.code, pair.tgt.lang.code
        );
        write_file(
            &tgt_prep.run_dir.join("hyp").join(format!("{name}.txt")),
            (hypotheses.join("\n") + "\n").as_bytes(),
        )?;
        append_score(&tgt_prep.run_dir, &name, score)?;
    }
    Ok(PivotOutcome { score, pivot_text, hypotheses })
}
