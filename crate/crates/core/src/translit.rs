//! English-letter masking and per-codepoint transliteration to modified ITRANS.
//!
//! Masking shifts every ASCII letter by 0x0DC0 into the Thai block so that
//! embedded English survives transliteration recognizably. Transliteration is
//! a single left-to-right pass over codepoints driven by per-language map
//! files; consonants carry an inherent "a" that a following matra or halant
//! suppresses, which takes one codepoint of lookahead (implemented as a
//! pending-vowel state).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use sha2::{Digest, Sha256};

use crate::corpus::BilingualPair;
use crate::error::{Error, Result};
use crate::lang::{LangCode, LanguageTag};
use crate::normalize::is_nukta;

/// Codepoint delta applied to ASCII letters to mask them as Thai-block text.
pub const MASK_OFFSET: u32 = 0x0DC0;

/// Replaces every ASCII letter with the codepoint 0x0DC0 above it.
pub fn mask_english(line: &str) -> String {
    line.chars()
        .map(|c| {
            if c.is_ascii_alphabetic() {
                char::from_u32(c as u32 + MASK_OFFSET).expect("letters + 0x0DC0 stay in range")
            } else {
                c
            }
        })
        .collect()
}

/// Inverse of [`mask_english`]: shifts masked letters back down.
pub fn unmask_english(line: &str) -> String {
    line.chars()
        .map(|c| {
            match (c as u32)
                .checked_sub(MASK_OFFSET)
                .and_then(char::from_u32)
                .filter(|d| d.is_ascii_alphabetic())
            {
                Some(d) => d,
                None => c,
            }
        })
        .collect()
}

/// Entry class in a transliteration map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryClass {
    IndVowel,
    Matra,
    Consonant,
    Halant,
    Digit,
    Sign,
}

impl EntryClass {
    fn parse(s: &str) -> Option<EntryClass> {
        match s {
            "IND_VOWEL" => Some(EntryClass::IndVowel),
            "MATRA" => Some(EntryClass::Matra),
            "CONSONANT" => Some(EntryClass::Consonant),
            "HALANT" => Some(EntryClass::Halant),
            "DIGIT" => Some(EntryClass::Digit),
            "SIGN" => Some(EntryClass::Sign),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapEntry {
    pub itrans: String,
    pub class: EntryClass,
}

/// Per-language codepoint-to-ITRANS map.
#[derive(Debug, Clone)]
pub struct TransliterationMap {
    pub lang: LanguageTag,
    pub entries: HashMap<char, MapEntry>,
    pub version: String,
    /// SHA-256 of the map file bytes, for manifest recording.
    pub content_hash: String,
    /// Identity maps (the EN side) mask letters and pass everything else
    /// through without reporting.
    pub identity: bool,
}

impl TransliterationMap {
    /// Mask-only map for a language whose text is kept as-is.
    pub fn identity(lang: LanguageTag) -> TransliterationMap {
        TransliterationMap {
            lang,
            entries: HashMap::new(),
            version: "identity".to_string(),
            content_hash: hex_digest(b"identity"),
            identity: true,
        }
    }

    pub fn parse(text: &str, expect_lang: Option<LangCode>, origin: &Path) -> Result<TransliterationMap> {
        let malformed = |reason: &str| Error::MalformedMap { path: origin.into(), reason: reason.to_string() };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| malformed("empty file"))?;
        let rest = header.strip_prefix("#itrans-map ").ok_or_else(|| malformed("missing #itrans-map header"))?;
        let mut version = String::new();
        let mut lang = None;
        for field in rest.split_whitespace() {
            if let Some(l) = field.strip_prefix("lang=") {
                lang = Some(crate::lang::parse_language_tag(l)?);
            } else {
                version = field.to_string();
            }
        }
        let lang = lang.ok_or_else(|| malformed("header missing lang="))?;
        if let Some(expect) = expect_lang {
            if lang.code != expect {
                return Err(malformed(&format!("header lang {} does not match {}", lang.code, expect)));
            }
        }
        let mut entries = HashMap::new();
        for (no, raw) in lines.enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(malformed(&format!("line {}: expected 3 fields", no + 2)));
            }
            let cp = u32::from_str_radix(fields[0], 16)
                .ok()
                .and_then(char::from_u32)
                .ok_or_else(|| malformed(&format!("line {}: bad codepoint", no + 2)))?;
            if !fields[1].is_ascii() || fields[1].len() > 4 {
                return Err(malformed(&format!("line {}: ITRANS value must be ASCII, at most 4 chars", no + 2)));
            }
            let class = EntryClass::parse(fields[2])
                .ok_or_else(|| malformed(&format!("line {}: unknown class {}", no + 2, fields[2])))?;
            entries.insert(cp, MapEntry { itrans: fields[1].to_string(), class });
        }
        Ok(TransliterationMap {
            lang,
            entries,
            version,
            content_hash: hex_digest(text.as_bytes()),
            identity: false,
        })
    }

    pub fn from_path(path: impl AsRef<Path>, expect_lang: Option<LangCode>) -> Result<TransliterationMap> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        TransliterationMap::parse(&text, expect_lang, path)
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(64);
    for b in Sha256::digest(bytes) {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Aggregated counts of codepoints a map did not cover.
///
/// ASCII is the ITRANS target repertoire and always passes through, so
/// only non-ASCII uncovered codepoints are counted.
#[derive(Debug, Default, Clone)]
pub struct UnmappedReport {
    counts: HashMap<u32, u64>,
}

impl UnmappedReport {
    pub fn record(&mut self, c: char) {
        *self.counts.entry(c as u32).or_insert(0) += 1;
    }

    /// Associative merge so sharded runs aggregate independently of order.
    pub fn merge(&mut self, other: &UnmappedReport) {
        for (&cp, &n) in &other.counts {
            *self.counts.entry(cp).or_insert(0) += n;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn contains(&self, c: char) -> bool {
        self.counts.contains_key(&(c as u32))
    }

    /// `CODEPOINT_HEX<TAB>COUNT` lines, descending by count, then codepoint.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(u32, u64)> = self.counts.iter().map(|(&c, &n)| (c, n)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut out = String::new();
        for (cp, n) in rows {
            let _ = writeln!(out, "{cp:04X}\t{n}");
        }
        out
    }
}

/// Transliterates one line, recording uncovered codepoints in `report`.
pub fn transliterate_line_reporting(
    line: &str,
    map: &TransliterationMap,
    report: &mut UnmappedReport,
) -> String {
    let mut out = String::with_capacity(line.len());
    // true after a consonant whose inherent vowel is still undecided
    let mut pending = false;
    let resolve = |out: &mut String, pending: &mut bool| {
        if *pending {
            out.push('a');
            *pending = false;
        }
    };
    for c in line.chars() {
        if c.is_ascii_alphabetic() {
            resolve(&mut out, &mut pending);
            out.push(char::from_u32(c as u32 + MASK_OFFSET).expect("in range"));
            continue;
        }
        match map.entries.get(&c) {
            Some(e) => match e.class {
                EntryClass::Consonant => {
                    resolve(&mut out, &mut pending);
                    out.push_str(&e.itrans);
                    pending = true;
                }
                EntryClass::Matra => {
                    out.push_str(&e.itrans);
                    pending = false;
                }
                EntryClass::Halant => {
                    pending = false;
                }
                EntryClass::Sign if is_nukta(c) => {
                    // nukta attaches to the pending consonant; the inherent
                    // vowel decision passes through it
                    out.push_str(&e.itrans);
                }
                EntryClass::IndVowel | EntryClass::Digit | EntryClass::Sign => {
                    resolve(&mut out, &mut pending);
                    out.push_str(&e.itrans);
                }
            },
            None => {
                resolve(&mut out, &mut pending);
                out.push(c);
                if !map.identity && !c.is_ascii() {
                    report.record(c);
                }
            }
        }
    }
    resolve(&mut out, &mut pending);
    out
}

/// Transliterates one line, discarding the unmapped report.
pub fn transliterate_line(line: &str, map: &TransliterationMap) -> String {
    let mut report = UnmappedReport::default();
    transliterate_line_reporting(line, map, &mut report)
}

/// Loaded transliteration maps, one per language.
#[derive(Debug, Default, Clone)]
pub struct MapRegistry {
    maps: HashMap<LangCode, TransliterationMap>,
}

const BUILTIN_MAPS: [(&str, &str); 11] = [
    ("AS", include_str!("../data/maps/AS.map")),
    ("BN", include_str!("../data/maps/BN.map")),
    ("GU", include_str!("../data/maps/GU.map")),
    ("HI", include_str!("../data/maps/HI.map")),
    ("KN", include_str!("../data/maps/KN.map")),
    ("ML", include_str!("../data/maps/ML.map")),
    ("MR", include_str!("../data/maps/MR.map")),
    ("OR", include_str!("../data/maps/OR.map")),
    ("PA", include_str!("../data/maps/PA.map")),
    ("TA", include_str!("../data/maps/TA.map")),
    ("TE", include_str!("../data/maps/TE.map")),
];

impl MapRegistry {
    /// Maps shipped with the toolkit.
    pub fn builtin() -> &'static MapRegistry {
        static REG: OnceLock<MapRegistry> = OnceLock::new();
        REG.get_or_init(|| {
            let mut maps = HashMap::new();
            for (code, text) in BUILTIN_MAPS {
                let lang = crate::lang::parse_language_tag(code).expect("builtin code");
                let map = TransliterationMap::parse(text, Some(lang.code), Path::new(code))
                    .expect("builtin map is well-formed");
                maps.insert(lang.code, map);
            }
            MapRegistry { maps }
        })
    }

    /// Loads `XX.map` files from a directory; languages without a file fall
    /// back to nothing (a later `get` fails with MissingMap).
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<MapRegistry> {
        let dir = dir.as_ref();
        let mut maps = HashMap::new();
        for code in LangCode::ALL {
            let path = dir.join(format!("{}.map", code.as_str()));
            if path.exists() {
                maps.insert(code, TransliterationMap::from_path(&path, Some(code))?);
            }
        }
        Ok(MapRegistry { maps })
    }

    /// The map for a language. EN is mask-only (identity plus masking).
    pub fn get(&self, lang: LanguageTag) -> Result<TransliterationMap> {
        if lang.code == LangCode::En {
            return Ok(TransliterationMap::identity(lang));
        }
        self.maps
            .get(&lang.code)
            .cloned()
            .ok_or_else(|| Error::MissingMap(lang.code.as_str().to_string()))
    }
}

/// Transliterates every line of every pair, preserving structure.
pub fn transliterate_pair_set(
    pairs: &[BilingualPair],
    registry: &MapRegistry,
) -> Result<(Vec<BilingualPair>, UnmappedReport)> {
    use rayon::prelude::*;
    // resolve all maps first so a missing one fails before any work
    let mut resolved = Vec::with_capacity(pairs.len());
    for pair in pairs {
        resolved.push((registry.get(pair.src.lang)?, registry.get(pair.tgt.lang)?));
    }
    let mut report = UnmappedReport::default();
    let mut out = Vec::with_capacity(pairs.len());
    for (pair, (src_map, tgt_map)) in pairs.iter().zip(&resolved) {
        let side = |lines: &[String], map: &TransliterationMap| -> (Vec<String>, UnmappedReport) {
            lines
                .par_iter()
                .map(|l| {
                    let mut r = UnmappedReport::default();
                    let t = transliterate_line_reporting(l, map, &mut r);
                    (t, r)
                })
                .fold(
                    || (Vec::new(), UnmappedReport::default()),
                    |(mut acc, mut rep), (t, r)| {
                        acc.push(t);
                        rep.merge(&r);
                        (acc, rep)
                    },
                )
                .reduce(
                    || (Vec::new(), UnmappedReport::default()),
                    |(mut a, mut ra), (b, rb)| {
                        a.extend(b);
                        ra.merge(&rb);
                        (a, ra)
                    },
                )
        };
        let (src_lines, r1) = side(&pair.src.lines, src_map);
        let (tgt_lines, r2) = side(&pair.tgt.lines, tgt_map);
        report.merge(&r1);
        report.merge(&r2);
        out.push(BilingualPair {
            src: crate::corpus::LineCorpus::new(src_lines, pair.src.lang),
            tgt: crate::corpus::LineCorpus::new(tgt_lines, pair.tgt.lang),
        });
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_language_tag;

    fn map(code: &str) -> TransliterationMap {
        MapRegistry::builtin().get(parse_language_tag(code).unwrap()).unwrap()
    }

    #[test]
    fn mask_basic() {
        assert_eq!(mask_english("a"), "\u{0E21}");
        assert_eq!(mask_english("A"), "\u{0E01}");
        assert_eq!(mask_english("५, 5, ?"), "५, 5, ?");
    }

    #[test]
    fn unmask_basic() {
        assert_eq!(unmask_english("\u{0E21}"), "a");
        assert_eq!(unmask_english("क"), "क");
        let s = "The fox 123 …";
        assert_eq!(unmask_english(&mask_english(s)), s);
    }

    #[test]
    fn mask_round_trip_all_letters() {
        for c in ('A'..='Z').chain('a'..='z') {
            let s = c.to_string();
            let masked = mask_english(&s);
            assert_ne!(masked, s);
            assert_eq!(unmask_english(&masked), s);
        }
    }

    #[test]
    fn hindi_vowels() {
        let m = map("HI");
        assert_eq!(transliterate_line("अ", &m), "a");
        assert_eq!(transliterate_line("आ", &m), "A");
    }

    #[test]
    fn ascii_inside_indic_text_is_masked() {
        let m = map("HI");
        assert_eq!(transliterate_line("अx", &m), format!("a{}", char::from_u32(0x78 + 0x0DC0).unwrap()));
    }

    #[test]
    fn inherent_vowel_and_halant() {
        let m = map("HI");
        assert_eq!(transliterate_line("क", &m), "ka");
        assert_eq!(transliterate_line("क\u{094D}", &m), "k");
        assert_eq!(transliterate_line("कि", &m), "ki");
        assert_eq!(transliterate_line("क\u{094D}या", &m), "kyA");
        assert_eq!(transliterate_line("कं", &m), "kaM");
    }

    #[test]
    fn unmapped_codepoints_pass_through_and_get_reported() {
        let m = map("HI");
        let mut report = UnmappedReport::default();
        let out = transliterate_line_reporting("क\u{0945}", &m, &mut report);
        assert_eq!(out, "ka\u{0945}");
        assert!(report.contains('\u{0945}'));
        assert_eq!(report.to_text(), "0945\t1\n");
    }

    #[test]
    fn en_identity_map_masks_only() {
        let m = map("EN");
        assert!(m.identity);
        let mut report = UnmappedReport::default();
        let out = transliterate_line_reporting("ab ?!", &m, &mut report);
        assert_eq!(out, format!("{} ?!", mask_english("ab")));
        assert!(report.is_empty());
    }

    #[test]
    fn missing_map_for_thai() {
        let th = parse_language_tag("TH").unwrap();
        assert!(matches!(MapRegistry::builtin().get(th), Err(Error::MissingMap(_))));
    }

    #[test]
    fn matra_matches_independent_vowel() {
        for code in ["HI", "BN", "TA", "TE", "KN", "ML", "GU", "OR", "PA"] {
            let m = map(code);
            let base = match code {
                "HI" => 0x0900u32,
                "BN" => 0x0980,
                "PA" => 0x0A00,
                "GU" => 0x0A80,
                "OR" => 0x0B00,
                "TA" => 0x0B80,
                "TE" => 0x0C00,
                "KN" => 0x0C80,
                "ML" => 0x0D00,
                _ => unreachable!(),
            };
            for (ind, matra) in [
                (0x06u32, 0x3Eu32),
                (0x07, 0x3F),
                (0x08, 0x40),
                (0x09, 0x41),
                (0x0A, 0x42),
                (0x0E, 0x46),
                (0x0F, 0x47),
                (0x10, 0x48),
                (0x12, 0x4A),
                (0x13, 0x4B),
                (0x14, 0x4C),
            ] {
                let i = char::from_u32(base + ind).unwrap();
                let ma = char::from_u32(base + matra).unwrap();
                if let (Some(ei), Some(em)) = (m.entries.get(&i), m.entries.get(&ma)) {
                    assert_eq!(ei.itrans, em.itrans, "{code} {ind:02X} vs {matra:02X}");
                }
            }
        }
    }

    #[test]
    fn map_values_are_short_ascii() {
        for code in ["AS", "BN", "GU", "HI", "KN", "ML", "MR", "OR", "PA", "TA", "TE"] {
            let m = map(code);
            for (c, e) in &m.entries {
                assert!(e.itrans.is_ascii(), "{code} {:04X}", *c as u32);
                assert!(e.itrans.len() <= 4, "{code} {:04X}", *c as u32);
                let silent = e.class == EntryClass::Halant || is_nukta(*c) || *c == '\u{0A71}';
                assert!(!e.itrans.is_empty() || silent, "{code} {:04X} empty", *c as u32);
            }
        }
    }

    #[test]
    fn pair_set_preserves_structure() {
        use crate::corpus::LineCorpus;
        let hi = parse_language_tag("HI").unwrap();
        let en = parse_language_tag("EN").unwrap();
        let pair = BilingualPair {
            src: LineCorpus::new(vec!["अ".into(), "आ".into()], hi),
            tgt: LineCorpus::new(vec!["a".into(), "aa".into()], en),
        };
        let (out, _) = transliterate_pair_set(std::slice::from_ref(&pair), MapRegistry::builtin()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].src.lines, ["a", "A"]);
        assert_eq!(out[0].src.lang, hi);
        assert_eq!(out[0].tgt.len(), 2);

        let empty: Vec<BilingualPair> = vec![];
        let (out, report) = transliterate_pair_set(&empty, MapRegistry::builtin()).unwrap();
        assert!(out.is_empty());
        assert!(report.is_empty());
    }

    #[test]
    fn pair_set_missing_map_fails_before_work() {
        use crate::corpus::LineCorpus;
        let th = parse_language_tag("TH").unwrap();
        let en = parse_language_tag("EN").unwrap();
        let pair = BilingualPair {
            src: LineCorpus::new(vec!["x".into()], th),
            tgt: LineCorpus::new(vec!["y".into()], en),
        };
        assert!(matches!(
            transliterate_pair_set(&[pair], MapRegistry::builtin()),
            Err(Error::MissingMap(_))
        ));
    }
}
