//! BPE subword learning/application, dictionary building and binarization.
//!
//! Learning splits words into characters with a `</w>` sentinel on the final
//! character and repeatedly merges the most frequent adjacent symbol pair.
//! Application segments words with the learned merges; non-final pieces carry
//! the `@@` continuation marker.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::corpus::{BilingualPair, LineCorpus};
use crate::error::{Error, Result};

pub const CONTINUATION_MARKER: &str = "@@";
pub const WORD_END: &str = "</w>";

/// Ordered merge list learned from a corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    /// Merges in learning order (frequency-descending at learn time).
    pub merges: Vec<(String, String)>,
    /// The operation budget the model was learned with.
    pub num_operations: usize,
}

impl BpeModel {
    /// Serializes to the merges file format: `#bpe v1 ops=<N>` then one
    /// `LEFT<SP>RIGHT` per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("#bpe v1 ops={}\n", self.num_operations);
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l} {r}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<BpeModel> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let ops = header
            .strip_prefix("#bpe v1 ops=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::MalformedBinary("missing #bpe v1 header".to_string()))?;
        let mut merges = Vec::new();
        for line in lines {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (l, r) = line
                .split_once(' ')
                .ok_or_else(|| Error::MalformedBinary(format!("bad merge line: {line:?}")))?;
            merges.push((l.to_string(), r.to_string()));
        }
        Ok(BpeModel { merges, num_operations: ops })
    }
}

fn word_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let last = chars.len() - 1;
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i == last {
                format!("{c}{WORD_END}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

struct LearnState {
    words: Vec<(Vec<String>, u64)>,
    stats: HashMap<(String, String), u64>,
    index: HashMap<(String, String), HashSet<usize>>,
}

impl LearnState {
    fn new(freqs: Vec<(Vec<String>, u64)>) -> LearnState {
        let mut state =
            LearnState { words: freqs, stats: HashMap::new(), index: HashMap::new() };
        for wid in 0..state.words.len() {
            state.add_word_pairs(wid);
        }
        state
    }

    fn add_word_pairs(&mut self, wid: usize) {
        let (syms, freq) = &self.words[wid];
        let freq = *freq;
        for w in syms.windows(2) {
            let pair = (w[0].clone(), w[1].clone());
            *self.stats.entry(pair.clone()).or_insert(0) += freq;
            self.index.entry(pair).or_default().insert(wid);
        }
    }

    fn remove_word_pairs(&mut self, wid: usize) {
        let (syms, freq) = &self.words[wid];
        let freq = *freq;
        let pairs: Vec<(String, String)> =
            syms.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect();
        for pair in pairs {
            if let Some(n) = self.stats.get_mut(&pair) {
                *n = n.saturating_sub(freq);
                if *n == 0 {
                    self.stats.remove(&pair);
                }
            }
            if let Some(set) = self.index.get_mut(&pair) {
                set.remove(&wid);
                if set.is_empty() {
                    self.index.remove(&pair);
                }
            }
        }
    }

    /// Most frequent pair; ties broken by lexicographically smallest (left, right).
    fn best_pair(&self) -> Option<((String, String), u64)> {
        let mut best: Option<(&(String, String), u64)> = None;
        for (pair, &count) in &self.stats {
            best = match best {
                None => Some((pair, count)),
                Some((bp, bc)) => {
                    if count > bc || (count == bc && pair < bp) {
                        Some((pair, count))
                    } else {
                        Some((bp, bc))
                    }
                }
            };
        }
        best.map(|(p, c)| (p.clone(), c))
    }

    fn apply_merge(&mut self, pair: &(String, String)) {
        let affected: Vec<usize> = match self.index.get(pair) {
            Some(set) => set.iter().copied().collect(),
            None => return,
        };
        for wid in affected {
            self.remove_word_pairs(wid);
            merge_in_place(&mut self.words[wid].0, pair);
            self.add_word_pairs(wid);
        }
    }
}

/// Greedy left-to-right merge of one pair inside a symbol sequence.
fn merge_in_place(syms: &mut Vec<String>, pair: &(String, String)) {
    let mut out = Vec::with_capacity(syms.len());
    let mut i = 0;
    while i < syms.len() {
        if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
            out.push(format!("{}{}", pair.0, pair.1));
            i += 2;
        } else {
            out.push(std::mem::take(&mut syms[i]));
            i += 1;
        }
    }
    *syms = out;
}

/// Learns a BPE model over a (concatenated, preprocessed) corpus.
///
/// Merging repeats `num_operations` times or until the best pair occurs
/// fewer than 2 times. Deterministic: full-order tie-breaking means the
/// result does not depend on map iteration or worker count.
pub fn bpe_learn(corpus: &LineCorpus, num_operations: usize) -> Result<BpeModel> {
    use rayon::prelude::*;
    let freqs: HashMap<String, u64> = corpus
        .lines
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, line| {
            for w in line.split_whitespace() {
                *acc.entry(w.to_string()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (w, n) in b {
                *a.entry(w).or_insert(0) += n;
            }
            a
        });
    if freqs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let words: Vec<(Vec<String>, u64)> =
        freqs.into_iter().map(|(w, n)| (word_symbols(&w), n)).collect();
    let mut state = LearnState::new(words);
    let mut merges = Vec::new();
    for _ in 0..num_operations {
        let Some((pair, count)) = state.best_pair() else { break };
        if count < 2 {
            break;
        }
        state.apply_merge(&pair);
        merges.push(pair);
    }
    Ok(BpeModel { merges, num_operations })
}

/// Segments one word by merge rank: repeatedly merge the pair with the
/// lowest rank present. For any model whose merges were learned in order
/// this is exactly the replay of merges in model order.
fn segment_word(word: &str, ranks: &HashMap<(String, String), usize>) -> Vec<String> {
    let mut syms = word_symbols(word);
    loop {
        let mut best: Option<(usize, (String, String))> = None;
        for w in syms.windows(2) {
            let pair = (w[0].clone(), w[1].clone());
            if let Some(&rank) = ranks.get(&pair) {
                if best.as_ref().is_none_or(|(r, _)| rank < *r) {
                    best = Some((rank, pair));
                }
            }
        }
        let Some((_, pair)) = best else { break };
        merge_in_place(&mut syms, &pair);
    }
    syms
}

fn render(syms: &[String]) -> String {
    let mut pieces = Vec::with_capacity(syms.len());
    for s in syms {
        match s.strip_suffix(WORD_END) {
            Some(stripped) => pieces.push(stripped.to_string()),
            None => pieces.push(format!("{s}{CONTINUATION_MARKER}")),
        }
    }
    pieces.join(" ")
}

fn rank_index(model: &BpeModel) -> HashMap<(String, String), usize> {
    model.merges.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect()
}

/// Applies a model to one whitespace-minimized line.
pub fn bpe_apply(line: &str, model: &BpeModel) -> String {
    let ranks = rank_index(model);
    apply_with_ranks(line, &ranks, &mut HashMap::new())
}

fn apply_with_ranks(
    line: &str,
    ranks: &HashMap<(String, String), usize>,
    cache: &mut HashMap<String, String>,
) -> String {
    line.split_whitespace()
        .map(|w| {
            cache
                .entry(w.to_string())
                .or_insert_with(|| render(&segment_word(w, ranks)))
                .clone()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Applies a model to a whole corpus, caching per-word segmentations.
pub fn bpe_apply_corpus(corpus: &LineCorpus, model: &BpeModel) -> LineCorpus {
    use rayon::prelude::*;
    let ranks = rank_index(model);
    let lines: Vec<String> = corpus
        .lines
        .par_iter()
        .map_init(HashMap::new, |cache, line| apply_with_ranks(line, &ranks, cache))
        .collect();
    LineCorpus::new(lines, corpus.lang)
}

/// Removes `@@ ` joins, inverting [`bpe_apply`] on lines whose original
/// words did not themselves contain the continuation marker.
pub fn bpe_decode(line: &str) -> String {
    let joined = line.replace(concat!("@@", " "), "");
    joined.strip_suffix(CONTINUATION_MARKER).unwrap_or(&joined).to_string()
}

const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];
pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const BOS_ID: u32 = 2;
pub const EOS_ID: u32 = 3;

/// Subword vocabulary: four fixed specials then corpus tokens ordered by
/// count descending, ties by token.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<(String, u64)>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_entries(entries: Vec<(String, u64)>) -> Vocabulary {
        let ids = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32 + SPECIALS.len() as u32))
            .collect();
        Vocabulary { entries, ids }
    }

    pub fn entries(&self) -> &[(String, u64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len() + SPECIALS.len()
    }

    pub fn is_empty(&self) -> bool {
        false // specials are always present
    }

    /// Token id; unknown tokens get [`UNK_ID`].
    pub fn id(&self, token: &str) -> u32 {
        if let Some(i) = SPECIALS.iter().position(|s| *s == token) {
            return i as u32;
        }
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        let id = id as usize;
        if id < SPECIALS.len() {
            return Some(SPECIALS[id]);
        }
        self.entries.get(id - SPECIALS.len()).map(|(t, _)| t.as_str())
    }

    /// Dictionary file: `TOKEN<SP>COUNT` per line, specials implied.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, n) in &self.entries {
            let _ = writeln!(out, "{t} {n}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Vocabulary> {
        let mut entries = Vec::new();
        for line in text.lines() {
            if line.is_empty() {
                continue;
            }
            let (t, n) = line
                .rsplit_once(' ')
                .ok_or_else(|| Error::MalformedBinary(format!("bad dictionary line: {line:?}")))?;
            let n: u64 = n
                .parse()
                .map_err(|_| Error::MalformedBinary(format!("bad count in: {line:?}")))?;
            entries.push((t.to_string(), n));
        }
        Ok(Vocabulary::from_entries(entries))
    }

    /// SHA-256 over the dictionary file bytes.
    pub fn hash(&self) -> [u8; 32] {
        Sha256::digest(self.to_text().as_bytes()).into()
    }
}

/// Frequency table over whitespace-separated subword tokens.
pub fn build_dictionary(corpus: &LineCorpus) -> Vocabulary {
    use rayon::prelude::*;
    let counts: HashMap<String, u64> = corpus
        .lines
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<String, u64>, line| {
            for t in line.split_whitespace() {
                *acc.entry(t.to_string()).or_insert(0) += 1;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            for (t, n) in b {
                *a.entry(t).or_insert(0) += n;
            }
            a
        });
    let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_entries(entries)
}

pub const BIN_MAGIC: &[u8; 8] = b"MNMTBIN1";

/// Token-id encoding of a corpus against a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarizedCorpus {
    pub vocab_hash: [u8; 32],
    pub lines: Vec<Vec<u32>>,
}

impl BinarizedCorpus {
    /// Bit-exact layout: magic, 32-byte vocabulary hash, u32-le line count,
    /// then per line a u32-le token count followed by u32-le token ids.
    pub fn to_bytes(&self) -> Vec<u8> {
        let payload: usize = self.lines.iter().map(|l| 4 + 4 * l.len()).sum();
        let mut out = Vec::with_capacity(8 + 32 + 4 + payload);
        out.extend_from_slice(BIN_MAGIC);
        out.extend_from_slice(&self.vocab_hash);
        out.extend_from_slice(&(self.lines.len() as u32).to_le_bytes());
        for line in &self.lines {
            out.extend_from_slice(&(line.len() as u32).to_le_bytes());
            for id in line {
                out.extend_from_slice(&id.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<BinarizedCorpus> {
        let err = |m: &str| Error::MalformedBinary(m.to_string());
        if bytes.len() < 44 || &bytes[..8] != BIN_MAGIC {
            return Err(err("missing MNMTBIN1 magic"));
        }
        let mut vocab_hash = [0u8; 32];
        vocab_hash.copy_from_slice(&bytes[8..40]);
        let mut pos = 40;
        let mut read_u32 = |bytes: &[u8]| -> Result<u32> {
            let end = pos + 4;
            if end > bytes.len() {
                return Err(err("truncated"));
            }
            let v = u32::from_le_bytes(bytes[pos..end].try_into().unwrap());
            pos = end;
            Ok(v)
        };
        let n_lines = read_u32(bytes)? as usize;
        let mut lines = Vec::with_capacity(n_lines);
        for _ in 0..n_lines {
            let n = read_u32(bytes)? as usize;
            let mut ids = Vec::with_capacity(n);
            for _ in 0..n {
                ids.push(read_u32(bytes)?);
            }
            lines.push(ids);
        }
        if pos != bytes.len() {
            return Err(err("trailing bytes"));
        }
        Ok(BinarizedCorpus { vocab_hash, lines })
    }
}

/// Encodes each token as its vocabulary index; OOV tokens get [`UNK_ID`].
pub fn binarize_corpus(corpus: &LineCorpus, vocab: &Vocabulary) -> BinarizedCorpus {
    let lines = corpus
        .lines
        .iter()
        .map(|l| l.split_whitespace().map(|t| vocab.id(t)).collect())
        .collect();
    BinarizedCorpus { vocab_hash: vocab.hash(), lines }
}

/// Binarizes both sides of a pair.
pub fn binarize(pair: &BilingualPair, vocab: &Vocabulary) -> (BinarizedCorpus, BinarizedCorpus) {
    (binarize_corpus(&pair.src, vocab), binarize_corpus(&pair.tgt, vocab))
}

/// Decodes a binarized corpus back to subword-tokenized lines, checking the
/// vocabulary hash recorded in the header.
pub fn debinarize(bin: &BinarizedCorpus, vocab: &Vocabulary) -> Result<Vec<String>> {
    if bin.vocab_hash != vocab.hash() {
        return Err(Error::VocabMismatch);
    }
    bin.lines
        .iter()
        .map(|ids| {
            ids.iter()
                .map(|&id| {
                    vocab
                        .token(id)
                        .map(str::to_string)
                        .ok_or_else(|| Error::MalformedBinary(format!("token id {id} out of range")))
                })
                .collect::<Result<Vec<String>>>()
                .map(|toks| toks.join(" "))
        })
        .collect()
}
