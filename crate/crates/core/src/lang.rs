//! Language metadata: ISO 639-2 codes, scripts, and relatedness groups.

use std::fmt;

use crate::error::{Error, Result};

/// Two-letter language code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LangCode {
    As,
    Bn,
    En,
    Gu,
    Hi,
    Kn,
    Ml,
    Mr,
    Or,
    Pa,
    Ta,
    Te,
    Th,
}

impl LangCode {
    pub const ALL: [LangCode; 13] = [
        LangCode::As,
        LangCode::Bn,
        LangCode::En,
        LangCode::Gu,
        LangCode::Hi,
        LangCode::Kn,
        LangCode::Ml,
        LangCode::Mr,
        LangCode::Or,
        LangCode::Pa,
        LangCode::Ta,
        LangCode::Te,
        LangCode::Th,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LangCode::As => "AS",
            LangCode::Bn => "BN",
            LangCode::En => "EN",
            LangCode::Gu => "GU",
            LangCode::Hi => "HI",
            LangCode::Kn => "KN",
            LangCode::Ml => "ML",
            LangCode::Mr => "MR",
            LangCode::Or => "OR",
            LangCode::Pa => "PA",
            LangCode::Ta => "TA",
            LangCode::Te => "TE",
            LangCode::Th => "TH",
        }
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Writing script of a language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Script {
    Bengali,
    Roman,
    Gujarati,
    Devanagari,
    Kannada,
    Malayalam,
    Odia,
    Gurmukhi,
    Tamil,
    Telugu,
    Thai,
}

impl Script {
    /// Unicode block of the script, inclusive.
    pub fn block(self) -> (u32, u32) {
        match self {
            Script::Devanagari => (0x0900, 0x097F),
            Script::Bengali => (0x0980, 0x09FF),
            Script::Gurmukhi => (0x0A00, 0x0A7F),
            Script::Gujarati => (0x0A80, 0x0AFF),
            Script::Odia => (0x0B00, 0x0B7F),
            Script::Tamil => (0x0B80, 0x0BFF),
            Script::Telugu => (0x0C00, 0x0C7F),
            Script::Kannada => (0x0C80, 0x0CFF),
            Script::Malayalam => (0x0D00, 0x0D7F),
            Script::Thai => (0x0E00, 0x0E7F),
            Script::Roman => (0x0041, 0x007A),
        }
    }

    /// Whether a codepoint belongs to this script's block. Roman is restricted
    /// to ASCII letters.
    pub fn contains(self, c: char) -> bool {
        let cp = c as u32;
        match self {
            Script::Roman => c.is_ascii_alphabetic(),
            _ => {
                let (lo, hi) = self.block();
                (lo..=hi).contains(&cp)
            }
        }
    }
}

/// Language relatedness group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    /// East Indo-Aryan: AS, BN, OR.
    Ei,
    /// Dravidian: KN, ML, TA, TE.
    Dr,
    /// West Indo-Aryan: GU, HI, MR, PA.
    Wi,
    /// English.
    En,
    /// No group (TH).
    None,
}

impl Group {
    /// Group members in the canonical listing order.
    pub fn members(self) -> &'static [LangCode] {
        match self {
            Group::Ei => &[LangCode::As, LangCode::Bn, LangCode::Or],
            Group::Dr => &[LangCode::Kn, LangCode::Ml, LangCode::Ta, LangCode::Te],
            Group::Wi => &[LangCode::Gu, LangCode::Hi, LangCode::Mr, LangCode::Pa],
            Group::En => &[LangCode::En],
            Group::None => &[],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Ei => "EI",
            Group::Dr => "DR",
            Group::Wi => "WI",
            Group::En => "EN",
            Group::None => "NONE",
        }
    }

    pub fn parse(s: &str) -> Result<Group> {
        match s.to_ascii_uppercase().as_str() {
            "EI" => Ok(Group::Ei),
            "DR" => Ok(Group::Dr),
            "WI" => Ok(Group::Wi),
            "EN" => Ok(Group::En),
            other => Err(Error::UnknownLanguage(format!("group {other}"))),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A language with its script and relatedness group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LanguageTag {
    pub code: LangCode,
    pub script: Script,
    pub group: Group,
}

impl LanguageTag {
    pub fn new(code: LangCode) -> LanguageTag {
        let script = match code {
            LangCode::As | LangCode::Bn => Script::Bengali,
            LangCode::En => Script::Roman,
            LangCode::Gu => Script::Gujarati,
            LangCode::Hi | LangCode::Mr => Script::Devanagari,
            LangCode::Kn => Script::Kannada,
            LangCode::Ml => Script::Malayalam,
            LangCode::Or => Script::Odia,
            LangCode::Pa => Script::Gurmukhi,
            LangCode::Ta => Script::Tamil,
            LangCode::Te => Script::Telugu,
            LangCode::Th => Script::Thai,
        };
        let group = match code {
            LangCode::As | LangCode::Bn | LangCode::Or => Group::Ei,
            LangCode::Kn | LangCode::Ml | LangCode::Ta | LangCode::Te => Group::Dr,
            LangCode::Gu | LangCode::Hi | LangCode::Mr | LangCode::Pa => Group::Wi,
            LangCode::En => Group::En,
            LangCode::Th => Group::None,
        };
        LanguageTag { code, script, group }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code.as_str())
    }
}

/// Looks up the fully populated tag for a two-letter code, case-insensitively.
pub fn parse_language_tag(code: &str) -> Result<LanguageTag> {
    let c = match code.to_ascii_uppercase().as_str() {
        "AS" => LangCode::As,
        "BN" => LangCode::Bn,
        "EN" => LangCode::En,
        "GU" => LangCode::Gu,
        "HI" => LangCode::Hi,
        "KN" => LangCode::Kn,
        "ML" => LangCode::Ml,
        "MR" => LangCode::Mr,
        "OR" => LangCode::Or,
        "PA" => LangCode::Pa,
        "TA" => LangCode::Ta,
        "TE" => LangCode::Te,
        "TH" => LangCode::Th,
        _ => return Err(Error::UnknownLanguage(code.to_string())),
    };
    Ok(LanguageTag::new(c))
}

/// Lists the members of a relatedness group.
pub fn group_members(group: Group) -> Vec<LanguageTag> {
    group.members().iter().map(|&c| LanguageTag::new(c)).collect()
}
