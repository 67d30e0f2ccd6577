//! Shared test support: independent oracles and seeded corpus generators.
//!
//! The oracles here deliberately take a different route from the library
//! (recounting from scratch, naive splitting plus repair, string-keyed
//! n-gram tables) so agreement is evidence, not tautology.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// BLEU oracle: direct corpus-level implementation of the scoring equations
// ---------------------------------------------------------------------------

/// Brute-force corpus BLEU with clipped modified precision and the
/// piecewise brevity penalty. Returns None when no n-gram totals exist.
pub fn bleu_oracle(hyps: &[String], refs: &[String], n_max: usize) -> Option<f64> {
    let mut numer = vec![0u64; n_max];
    let mut denom = vec![0u64; n_max];
    let mut c = 0u64;
    let mut r = 0u64;
    for (h, rf) in hyps.iter().zip(refs) {
        let ht: Vec<&str> = h.split_whitespace().collect();
        let rt: Vec<&str> = rf.split_whitespace().collect();
        c += ht.len() as u64;
        r += rt.len() as u64;
        for n in 1..=n_max {
            if ht.len() < n {
                continue;
            }
            let mut rcounts: HashMap<String, u64> = HashMap::new();
            if rt.len() >= n {
                for i in 0..=rt.len() - n {
                    *rcounts.entry(rt[i..i + n].join("\u{1}")).or_default() += 1;
                }
            }
            let mut hcounts: HashMap<String, u64> = HashMap::new();
            for i in 0..=ht.len() - n {
                *hcounts.entry(ht[i..i + n].join("\u{1}")).or_default() += 1;
            }
            for (g, hc) in &hcounts {
                numer[n - 1] += (*hc).min(rcounts.get(g).copied().unwrap_or(0));
            }
            denom[n - 1] += (ht.len() - n + 1) as u64;
        }
    }
    if denom.iter().all(|&d| d == 0) {
        return None;
    }
    let bp = if c > r {
        1.0
    } else if c == 0 {
        if r == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    let w = 1.0 / n_max as f64;
    let mut log_sum = 0.0;
    for n in 0..n_max {
        let p = if denom[n] == 0 { 0.0 } else { numer[n] as f64 / denom[n] as f64 };
        if p == 0.0 {
            return Some(0.0);
        }
        log_sum += w * p.ln();
    }
    Some(100.0 * bp * log_sum.exp())
}

// ---------------------------------------------------------------------------
// BPE oracle: recount every pair from scratch each iteration over a flat
// word list, then replay merges in order for application
// ---------------------------------------------------------------------------

const ORACLE_WORD_END: &str = "</w>";
const ORACLE_MARKER: &str = "@@";

fn oracle_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut syms: Vec<String> = chars.iter().map(|c| c.to_string()).collect();
    if let Some(last) = syms.last_mut() {
        last.push_str(ORACLE_WORD_END);
    }
    syms
}

fn oracle_merge_pass(syms: &[String], pair: &(String, String)) -> Vec<String> {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
            out.push(format!("{}{}", pair.0, pair.1));
            i += 2;
        } else {
            out.push(syms[i].clone());
            i += 1;
        }
    }
    out
}

/// Learns merges by recounting all pairs from scratch each iteration.
/// Every word occurrence is kept separately (no frequency table).
pub fn bpe_learn_oracle(lines: &[String], ops: usize) -> Vec<(String, String)> {
    let mut words: Vec<Vec<String>> = lines
        .iter()
        .flat_map(|l| l.split_whitespace())
        .map(oracle_symbols)
        .collect();
    let mut merges = Vec::new();
    for _ in 0..ops {
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for w in &words {
            for pair in w.windows(2) {
                *counts.entry((pair[0].clone(), pair[1].clone())).or_default() += 1;
            }
        }
        // ascending key iteration plus strict > keeps the lexicographically
        // smallest pair among equal counts
        let mut best: Option<((String, String), u64)> = None;
        for (p, &n) in &counts {
            if best.as_ref().is_none_or(|(_, bn)| n > *bn) {
                best = Some((p.clone(), n));
            }
        }
        match best {
            Some((pair, n)) if n >= 2 => {
                for w in &mut words {
                    *w = oracle_merge_pass(w, &pair);
                }
                merges.push(pair);
            }
            _ => break,
        }
    }
    merges
}

/// Segments by literally replaying the merges in model order.
pub fn bpe_apply_replay(line: &str, merges: &[(String, String)]) -> String {
    line.split_whitespace()
        .map(|word| {
            let mut syms = oracle_symbols(word);
            for pair in merges {
                syms = oracle_merge_pass(&syms, pair);
            }
            syms.iter()
                .map(|s| match s.strip_suffix(ORACLE_WORD_END) {
                    Some(stripped) => stripped.to_string(),
                    None => format!("{s}{ORACLE_MARKER}"),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Tokenizer oracle: naive per-codepoint splitter that isolates every
// halant/nukta (the broken behavior), followed by a repair pass that
// re-joins the isolated diacritics with their surrounding words
// ---------------------------------------------------------------------------

fn oracle_is_mark(c: char) -> bool {
    matches!(
        c,
        '\u{094D}'
            | '\u{09CD}'
            | '\u{0A4D}'
            | '\u{0ACD}'
            | '\u{0B4D}'
            | '\u{0BCD}'
            | '\u{0C4D}'
            | '\u{0CCD}'
            | '\u{0D4D}'
            | '\u{093C}'
            | '\u{09BC}'
            | '\u{0A3C}'
            | '\u{0ABC}'
            | '\u{0B3C}'
            | '\u{0CBC}'
            | '\u{0D3C}'
            | '\u{200C}'
            | '\u{200D}'
            | '\u{FEFF}'
            | '\u{2060}'
            | '\u{00AD}'
    )
}

fn oracle_is_wordish(c: char) -> bool {
    c.is_alphanumeric() || oracle_is_mark(c)
}

#[derive(Debug, Clone)]
struct Span {
    text: String,
    start: usize,
    end: usize, // exclusive, char index
}

pub fn tokenize_oracle(line: &str) -> String {
    let chars: Vec<char> = line.chars().collect();
    let word_dot = |i: usize| -> bool {
        chars[i] == '.'
            && i > 0
            && oracle_is_wordish(chars[i - 1])
            && chars.get(i + 1).is_some_and(|&n| oracle_is_wordish(n))
    };
    let mut tokens: Vec<Span> = Vec::new();
    let mut cur: Option<Span> = None;
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            if let Some(t) = cur.take() {
                tokens.push(t);
            }
        } else if oracle_is_mark(c) {
            // broken-Moses isolation: every diacritic becomes its own token
            if let Some(t) = cur.take() {
                tokens.push(t);
            }
            tokens.push(Span { text: c.to_string(), start: i, end: i + 1 });
        } else if c.is_alphanumeric() || word_dot(i) {
            match &mut cur {
                Some(t) => {
                    t.text.push(c);
                    t.end = i + 1;
                }
                None => cur = Some(Span { text: c.to_string(), start: i, end: i + 1 }),
            }
        } else {
            if let Some(t) = cur.take() {
                tokens.push(t);
            }
            tokens.push(Span { text: c.to_string(), start: i, end: i + 1 });
        }
    }
    if let Some(t) = cur.take() {
        tokens.push(t);
    }

    // repair: re-join isolated diacritics with the words around them,
    // but never across whitespace that was in the input
    loop {
        let mut changed = false;
        let mut i = 0;
        while i < tokens.len() {
            let starts_mark = tokens[i].text.chars().next().is_some_and(oracle_is_mark);
            let attached_left =
                tokens[i].start > 0 && !chars[tokens[i].start - 1].is_whitespace();
            if starts_mark && attached_left && i > 0 {
                let t = tokens.remove(i);
                tokens[i - 1].text.push_str(&t.text);
                tokens[i - 1].end = t.end;
                changed = true;
                continue;
            }
            let ends_mark = tokens[i].text.chars().next_back().is_some_and(oracle_is_mark);
            let attached_right = tokens[i].end < chars.len()
                && !chars[tokens[i].end].is_whitespace()
                && i + 1 < tokens.len()
                && tokens[i + 1].text.chars().next().is_some_and(oracle_is_wordish);
            if ends_mark && attached_right {
                let t = tokens.remove(i + 1);
                tokens[i].text.push_str(&t.text);
                tokens[i].end = t.end;
                changed = true;
                continue;
            }
            i += 1;
        }
        if !changed {
            break;
        }
    }
    tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

// ---------------------------------------------------------------------------
// Seeded generators
// ---------------------------------------------------------------------------

/// Random small corpora for metric oracles: up to `max_sents` sentences of
/// 1..=`max_toks` tokens over a tiny vocabulary (to force n-gram overlap).
pub fn random_token_corpus(
    rng: &mut ChaCha8Rng,
    max_sents: usize,
    max_toks: usize,
) -> (Vec<String>, Vec<String>) {
    let vocab = ["the", "cat", "sat", "mat", "on", "dog", "ran", "far"];
    let gen_side = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let n = rng.gen_range(1..=max_sents);
        (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=max_toks);
                (0..k).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
            })
            .collect()
    };
    let hyps = gen_side(rng);
    let refs: Vec<String> = hyps
        .iter()
        .map(|h| {
            // perturb the hypothesis so scores span (0, 100]
            if rng.gen_bool(0.3) {
                h.clone()
            } else {
                let k = rng.gen_range(1..=max_toks);
                (0..k).map(|_| vocab[rng.gen_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
            }
        })
        .collect();
    (hyps, refs)
}

const DEVANAGARI_CONSONANTS: [char; 8] = ['क', 'ख', 'ग', 'च', 'ज', 'त', 'न', 'म'];
const DEVANAGARI_MATRAS: [char; 4] = ['\u{093E}', '\u{093F}', '\u{0941}', '\u{0947}'];
const TAMIL_CONSONANTS: [char; 6] = ['க', 'ச', 'ட', 'த', 'ப', 'ம'];
const TAMIL_MATRAS: [char; 3] = ['\u{0BBE}', '\u{0BBF}', '\u{0BC6}'];
const PUNCT: [char; 8] = [',', '.', '?', '!', '।', '"', '…', '|'];

fn syllable(rng: &mut ChaCha8Rng, out: &mut String) {
    let tamil = rng.gen_bool(0.4);
    if tamil {
        out.push(TAMIL_CONSONANTS[rng.gen_range(0..TAMIL_CONSONANTS.len())]);
        match rng.gen_range(0..4) {
            0 => out.push(TAMIL_MATRAS[rng.gen_range(0..TAMIL_MATRAS.len())]),
            1 => out.push('\u{0BCD}'),
            _ => {}
        }
    } else {
        out.push(DEVANAGARI_CONSONANTS[rng.gen_range(0..DEVANAGARI_CONSONANTS.len())]);
        if rng.gen_bool(0.15) {
            out.push('\u{093C}');
        }
        match rng.gen_range(0..4) {
            0 => out.push(DEVANAGARI_MATRAS[rng.gen_range(0..DEVANAGARI_MATRAS.len())]),
            1 => out.push('\u{094D}'),
            _ => {}
        }
    }
}

/// One mixed-script fuzz line: Indic syllable words, ASCII words, digits and
/// punctuation, the shapes real corpora contain.
pub fn fuzz_line(rng: &mut ChaCha8Rng) -> String {
    let words = rng.gen_range(1..=12);
    let mut out = String::new();
    for w in 0..words {
        if w > 0 {
            out.push(' ');
        }
        match rng.gen_range(0..10) {
            0..=4 => {
                for _ in 0..rng.gen_range(1..=4) {
                    syllable(rng, &mut out);
                }
            }
            5..=7 => {
                for _ in 0..rng.gen_range(1..=8) {
                    out.push((b'a' + rng.gen_range(0..26)) as char);
                }
            }
            8 => {
                for _ in 0..rng.gen_range(1..=4) {
                    out.push((b'0' + rng.gen_range(0..10)) as char);
                }
            }
            _ => out.push(PUNCT[rng.gen_range(0..PUNCT.len())]),
        }
        if rng.gen_bool(0.2) {
            out.push(PUNCT[rng.gen_range(0..PUNCT.len())]);
        }
    }
    out
}

pub fn fuzz_corpus(seed: u64, lines: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..lines).map(|_| fuzz_line(&mut rng)).collect()
}

/// Whitespace-minimized ASCII lines for BPE round-trip checks.
pub fn random_minimized_line(rng: &mut ChaCha8Rng) -> String {
    let words = rng.gen_range(1..=8);
    (0..words)
        .map(|_| {
            let len = rng.gen_range(1..=6);
            (0..len).map(|_| (b'a' + rng.gen_range(0..6)) as char).collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}
