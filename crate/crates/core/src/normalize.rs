//! Tokenization, normalization and whitespace minimization.
//!
//! The tokenizer splits punctuation from words but keeps halant and nukta
//! diacritics attached to their consonant cluster instead of isolating them
//! as standalone tokens. Normalization applies the per-language rule set
//! (quotes/dashes, ellipsis, format characters, purna virama, colon/visarga,
//! two-part vowels, nukta decomposition, letter forms, chillu recomposition);
//! the codepoint mappings live in `data/normalization.rules` and can be
//! overridden at load time.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lang::{LangCode, LanguageTag, Script};

/// One row of Table-style normalization behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormRule {
    /// Non-standard quotation marks, hyphens and dashes to ASCII forms.
    Quotes,
    /// Ellipsis to three dots.
    Ellipsis,
    /// Format characters removed (BOM, word joiner, soft hyphen, ZWJ, ZWNJ).
    Format,
    /// Pipe and non-standard purna virama forms to the standard purna virama.
    Danda,
    /// Colon to visarga when it follows a character of the script.
    ColonVisarga,
    /// Two-part dependent vowels composed.
    CombineVowels,
    /// Precomposed nukta consonants decomposed to base + nukta.
    DecomposeNukta,
    /// Non-standard letter forms standardized.
    LetterForms,
    /// Old chillu encodings to atomic chillu codepoints.
    ChilluEncodings,
}

impl NormRule {
    /// All rules in listed (table) order.
    pub const ALL: [NormRule; 9] = [
        NormRule::Quotes,
        NormRule::Ellipsis,
        NormRule::Format,
        NormRule::Danda,
        NormRule::ColonVisarga,
        NormRule::CombineVowels,
        NormRule::DecomposeNukta,
        NormRule::LetterForms,
        NormRule::ChilluEncodings,
    ];

    /// Rule applicability per language.
    pub fn applies_to(self, lang: LangCode) -> bool {
        use LangCode::*;
        if lang == Th {
            return false;
        }
        match self {
            NormRule::Quotes | NormRule::Ellipsis | NormRule::Format => true,
            NormRule::Danda => lang != En,
            NormRule::ColonVisarga => lang != En && lang != Pa,
            NormRule::CombineVowels => matches!(lang, As | Bn | Kn | Or | Pa | Ta | Te),
            NormRule::DecomposeNukta => matches!(lang, As | Bn | Hi | Mr | Or),
            NormRule::LetterForms => matches!(lang, Hi | Mr | Or),
            NormRule::ChilluEncodings => lang == Ml,
        }
    }

    fn id(self) -> &'static str {
        match self {
            NormRule::Quotes => "QUOTES",
            NormRule::Ellipsis => "ELLIPSIS",
            NormRule::Format => "FORMAT",
            NormRule::Danda => "DANDA",
            NormRule::ColonVisarga => "VISARGA",
            NormRule::CombineVowels => "COMBINE",
            NormRule::DecomposeNukta => "NUKTA",
            NormRule::LetterForms => "LETTER",
            NormRule::ChilluEncodings => "CHILLU",
        }
    }

    fn from_id(id: &str) -> Option<NormRule> {
        NormRule::ALL.iter().copied().find(|r| r.id() == id)
    }
}

/// The rules applicable to one language, in table order, with the codepoint
/// tables compiled once so per-line application stays allocation-light.
#[derive(Debug, Clone)]
pub struct NormalizationRuleSet {
    pub rules: Vec<NormRule>,
    pub lang: LanguageTag,
    compiled: Vec<CompiledRule>,
}

#[derive(Debug, Clone)]
enum CompiledRule {
    Map { single: HashMap<char, String>, multi: Vec<(String, String)> },
    Visarga,
}

impl NormalizationRuleSet {
    pub fn for_language(lang: LanguageTag) -> NormalizationRuleSet {
        NormalizationRuleSet::with_data(lang, RuleData::builtin())
    }

    pub fn with_data(lang: LanguageTag, data: &RuleData) -> NormalizationRuleSet {
        let rules: Vec<NormRule> =
            NormRule::ALL.iter().copied().filter(|r| r.applies_to(lang.code)).collect();
        let compiled = EXECUTION_ORDER
            .iter()
            .filter(|r| rules.contains(r))
            .map(|&rule| match rule {
                NormRule::ColonVisarga => CompiledRule::Visarga,
                _ => {
                    let mut single = HashMap::new();
                    let mut multi = Vec::new();
                    for e in data.entries_for(rule, lang.code) {
                        if e.src.chars().count() == 1 {
                            single.insert(e.src.chars().next().unwrap(), e.dst.clone());
                        } else {
                            multi.push((e.src.clone(), e.dst.clone()));
                        }
                    }
                    CompiledRule::Map { single, multi }
                }
            })
            .collect();
        NormalizationRuleSet { rules, lang, compiled }
    }

    pub fn contains(&self, rule: NormRule) -> bool {
        self.rules.contains(&rule)
    }
}

/// Table order with one exception: chillu recomposition runs before
/// format-character removal because its source pattern contains the ZWJ
/// that the format rule deletes.
const EXECUTION_ORDER: [NormRule; 9] = [
    NormRule::Quotes,
    NormRule::Ellipsis,
    NormRule::ChilluEncodings,
    NormRule::Format,
    NormRule::Danda,
    NormRule::ColonVisarga,
    NormRule::CombineVowels,
    NormRule::DecomposeNukta,
    NormRule::LetterForms,
];

#[derive(Debug, Clone)]
struct RuleEntry {
    src: String,
    dst: String,
    langs: Vec<LangCode>,
}

/// Parsed contents of a normalization rule data file.
#[derive(Debug, Default)]
pub struct RuleData {
    entries: HashMap<&'static str, Vec<RuleEntry>>,
}

impl RuleData {
    /// The rule file shipped with the toolkit.
    pub fn builtin() -> &'static RuleData {
        static DATA: OnceLock<RuleData> = OnceLock::new();
        DATA.get_or_init(|| {
            RuleData::parse(include_str!("../data/normalization.rules"))
                .expect("builtin rule file is well-formed")
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<RuleData> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|source| Error::Io { path: path.as_ref().into(), source })?;
        RuleData::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RuleData> {
        let mut data = RuleData::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::MalformedRules(format!("line {}: expected 4 fields", no + 1)));
            }
            let src = parse_codepoint_seq(fields[0])
                .ok_or_else(|| Error::MalformedRules(format!("line {}: bad SRC_HEX", no + 1)))?;
            let rule = NormRule::from_id(fields[2])
                .ok_or_else(|| Error::MalformedRules(format!("line {}: unknown rule id {}", no + 1, fields[2])))?;
            let mut langs = Vec::new();
            for code in fields[3].split(',') {
                let tag = crate::lang::parse_language_tag(code.trim())
                    .map_err(|_| Error::MalformedRules(format!("line {}: bad language {code}", no + 1)))?;
                langs.push(tag.code);
            }
            data.entries.entry(rule.id()).or_default().push(RuleEntry {
                src,
                dst: fields[1].to_string(),
                langs,
            });
        }
        Ok(data)
    }

    fn entries_for(&self, rule: NormRule, lang: LangCode) -> impl Iterator<Item = &RuleEntry> {
        self.entries
            .get(rule.id())
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .filter(move |e| e.langs.contains(&lang))
    }
}

fn parse_codepoint_seq(s: &str) -> Option<String> {
    let mut out = String::new();
    for part in s.split('+') {
        let cp = u32::from_str_radix(part, 16).ok()?;
        out.push(char::from_u32(cp)?);
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

fn visarga_for(script: Script) -> Option<char> {
    let cp = match script {
        Script::Devanagari => 0x0903,
        Script::Bengali => 0x0983,
        Script::Gurmukhi => 0x0A03,
        Script::Gujarati => 0x0A83,
        Script::Odia => 0x0B03,
        Script::Tamil => 0x0B83,
        Script::Telugu => 0x0C03,
        Script::Kannada => 0x0C83,
        Script::Malayalam => 0x0D03,
        Script::Roman | Script::Thai => return None,
    };
    char::from_u32(cp)
}

/// Applies the rule set to one line.
pub fn normalize_line(line: &str, rules: &NormalizationRuleSet) -> String {
    let mut text = line.to_string();
    for compiled in &rules.compiled {
        text = match compiled {
            CompiledRule::Visarga => apply_visarga(&text, rules.lang.script),
            CompiledRule::Map { single, multi } => apply_mappings(&text, single, multi),
        };
    }
    text
}

fn apply_mappings(text: &str, single: &HashMap<char, String>, multi: &[(String, String)]) -> String {
    let mut out = String::with_capacity(text.len());
    if single.is_empty() {
        out.push_str(text);
    } else {
        for c in text.chars() {
            match single.get(&c) {
                Some(dst) => out.push_str(dst),
                None => out.push(c),
            }
        }
    }
    if multi.is_empty() {
        return out;
    }
    // sequence sources shrink on replacement, so iterating to a fixed point
    // terminates and makes the pass idempotent
    loop {
        let mut changed = false;
        for (src, dst) in multi {
            if out.contains(src.as_str()) {
                out = out.replace(src.as_str(), dst);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

fn apply_visarga(text: &str, script: Script) -> String {
    let Some(visarga) = visarga_for(script) else {
        return text.to_string();
    };
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == ':' && out.chars().next_back().is_some_and(|p| script.contains(p)) {
            out.push(visarga);
        } else {
            out.push(c);
        }
    }
    out
}

/// ASCII A-Z mapped to a-z; everything else untouched.
pub fn lowercase_english(line: &str) -> String {
    line.chars().map(|c| if c.is_ascii_uppercase() { c.to_ascii_lowercase() } else { c }).collect()
}

/// Collapses all whitespace runs to a single space and trims the ends.
pub fn minimize_whitespace(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

const HALANTS: [char; 9] = [
    '\u{094D}', '\u{09CD}', '\u{0A4D}', '\u{0ACD}', '\u{0B4D}', '\u{0BCD}', '\u{0C4D}',
    '\u{0CCD}', '\u{0D4D}',
];
const NUKTAS: [char; 7] =
    ['\u{093C}', '\u{09BC}', '\u{0A3C}', '\u{0ABC}', '\u{0B3C}', '\u{0CBC}', '\u{0D3C}'];
const JOINERS: [char; 5] = ['\u{200C}', '\u{200D}', '\u{FEFF}', '\u{2060}', '\u{00AD}'];

/// Halant or nukta: a diacritic that must stay attached to its cluster.
pub fn is_attached_mark(c: char) -> bool {
    HALANTS.contains(&c) || NUKTAS.contains(&c) || JOINERS.contains(&c)
}

pub fn is_halant(c: char) -> bool {
    HALANTS.contains(&c)
}

pub fn is_nukta(c: char) -> bool {
    NUKTAS.contains(&c)
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_attached_mark(c)
}

/// Splits punctuation from words, one space between tokens.
///
/// A period is kept word-internal when flanked by word characters on both
/// sides ("3.14"); sentence-final periods always split. Halant and nukta are
/// word characters, and a token starting with one is re-joined to the token
/// before it unless the input had whitespace between them. Token boundaries
/// are script-driven; the tag is accepted for interface stability.
pub fn tokenize(line: &str, _lang: LanguageTag) -> String {
    let chars: Vec<char> = line.chars().collect();
    // (token, preceded by input whitespace)
    let mut tokens: Vec<(String, bool)> = Vec::new();
    let mut cur = String::new();
    let mut cur_ws = true;
    let mut ws_pending = true;

    let flush = |tokens: &mut Vec<(String, bool)>, cur: &mut String, cur_ws: &mut bool| {
        if !cur.is_empty() {
            tokens.push((std::mem::take(cur), *cur_ws));
        }
        *cur_ws = false;
    };

    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut tokens, &mut cur, &mut cur_ws);
            ws_pending = true;
            continue;
        }
        let word = if c == '.' {
            let prev_word = i > 0 && is_word_char(chars[i - 1]);
            let next_word = chars.get(i + 1).is_some_and(|&n| is_word_char(n));
            prev_word && next_word
        } else {
            is_word_char(c)
        };
        if word {
            if cur.is_empty() {
                cur_ws = ws_pending;
            }
            cur.push(c);
            ws_pending = false;
        } else {
            flush(&mut tokens, &mut cur, &mut cur_ws);
            tokens.push((c.to_string(), ws_pending));
            ws_pending = false;
        }
    }
    flush(&mut tokens, &mut cur, &mut cur_ws);

    // re-join diacritic-initial tokens with the cluster before them
    let mut repaired: Vec<String> = Vec::with_capacity(tokens.len());
    for (tok, ws) in tokens {
        let starts_with_mark = tok.chars().next().is_some_and(is_attached_mark);
        if starts_with_mark && !ws {
            if let Some(prev) = repaired.last_mut() {
                prev.push_str(&tok);
                continue;
            }
        }
        repaired.push(tok);
    }
    repaired.join(" ")
}
