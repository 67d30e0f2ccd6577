//! CTTR lexical-diversity scoring and corpus BLEU with brevity penalty.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{BilingualPair, LineCorpus};
use crate::error::{Error, Result};

/// Corrected type/token ratio over a sampled subset of a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CttrReport {
    /// Unique token count over the sample.
    pub tau: u64,
    /// Total token count over the sample.
    pub rho: u64,
    pub cttr: f64,
    pub sample_size: usize,
    pub seed: u64,
}

impl CttrReport {
    pub fn to_text(&self) -> String {
        format!(
            "tau={}\nrho={}\ncttr={:.6}\nsample={}\nseed={}\n",
            self.tau, self.rho, self.cttr, self.sample_size, self.seed
        )
    }
}

fn cttr_of(tau: u64, rho: u64) -> f64 {
    if rho == 0 {
        return 0.0;
    }
    tau as f64 / (2.0 * rho as f64).sqrt()
}

/// Draws `sample_lines` lines uniformly with replacement (ChaCha8, seeded)
/// and computes tau / sqrt(2 rho) over whitespace-split tokens.
pub fn cttr(corpus: &LineCorpus, sample_lines: usize, seed: u64) -> Result<CttrReport> {
    if corpus.is_empty() || sample_lines == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniq: HashSet<&str> = HashSet::new();
    let mut rho: u64 = 0;
    for _ in 0..sample_lines {
        let line = &corpus.lines[rng.gen_range(0..corpus.lines.len())];
        for tok in line.split_whitespace() {
            uniq.insert(tok);
            rho += 1;
        }
    }
    let tau = uniq.len() as u64;
    Ok(CttrReport { tau, rho, cttr: cttr_of(tau, rho), sample_size: sample_lines, seed })
}

/// CTTR over every line exactly once (no sampling).
pub fn cttr_exhaustive(corpus: &LineCorpus) -> Result<CttrReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut uniq: HashSet<&str> = HashSet::new();
    let mut rho: u64 = 0;
    for line in &corpus.lines {
        for tok in line.split_whitespace() {
            uniq.insert(tok);
            rho += 1;
        }
    }
    let tau = uniq.len() as u64;
    Ok(CttrReport { tau, rho, cttr: cttr_of(tau, rho), sample_size: corpus.len(), seed: 0 })
}

pub const DEFAULT_BLEU_ORDER: usize = 4;

/// Corpus-level BLEU sufficient statistics, additive across sentence pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    /// Clipped n-gram matches per order (1-indexed order n at `[n-1]`).
    pub clipped: Vec<u64>,
    /// Total hypothesis n-grams per order.
    pub totals: Vec<u64>,
    /// Candidate length: hypothesis unigrams over all sentences.
    pub c: u64,
    /// Reference length.
    pub r: u64,
}

impl BleuStats {
    pub fn new(order: usize) -> BleuStats {
        BleuStats { clipped: vec![0; order], totals: vec![0; order], c: 0, r: 0 }
    }

    pub fn order(&self) -> usize {
        self.clipped.len()
    }

    /// Commutative, associative accumulation; sharded runs merge to the same
    /// totals as a sequential pass.
    pub fn merge(&mut self, other: &BleuStats) {
        debug_assert_eq!(self.order(), other.order());
        for n in 0..self.order() {
            self.clipped[n] += other.clipped[n];
            self.totals[n] += other.totals[n];
        }
        self.c += other.c;
        self.r += other.r;
    }

    /// key=value report block: per-order precisions and counts, BP, c, r.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for n in 0..self.order() {
            let p = if self.totals[n] == 0 { 0.0 } else { self.clipped[n] as f64 / self.totals[n] as f64 };
            let _ = writeln!(out, "p{}={:.6}", n + 1, p);
            let _ = writeln!(out, "p{}_matches={}", n + 1, self.clipped[n]);
            let _ = writeln!(out, "p{}_totals={}", n + 1, self.totals[n]);
        }
        let _ = writeln!(out, "bp={:.6}", brevity_penalty(self.c, self.r));
        let _ = writeln!(out, "c={}", self.c);
        let _ = writeln!(out, "r={}", self.r);
        out
    }
}

/// Counts hypothesis n-grams clipped by their maximum reference occurrence,
/// for each order up to `order`. Tokens are whitespace-split.
pub fn accumulate_bleu_stats(hyp_line: &str, ref_line: &str, order: usize) -> BleuStats {
    let hyp: Vec<&str> = hyp_line.split_whitespace().collect();
    let refr: Vec<&str> = ref_line.split_whitespace().collect();
    let mut stats = BleuStats::new(order);
    stats.c += hyp.len() as u64;
    stats.r += refr.len() as u64;
    for n in 1..=order {
        if hyp.len() < n {
            continue;
        }
        let mut ref_counts: HashMap<&[&str], u64> = HashMap::new();
        if refr.len() >= n {
            for g in refr.windows(n) {
                *ref_counts.entry(g).or_insert(0) += 1;
            }
        }
        let mut hyp_counts: HashMap<&[&str], u64> = HashMap::new();
        for g in hyp.windows(n) {
            *hyp_counts.entry(g).or_insert(0) += 1;
        }
        let total = (hyp.len() - n + 1) as u64;
        let clipped: u64 = hyp_counts
            .iter()
            .map(|(g, &count)| count.min(ref_counts.get(g).copied().unwrap_or(0)))
            .sum();
        stats.clipped[n - 1] += clipped;
        stats.totals[n - 1] += total;
    }
    stats
}

/// Accumulates stats over a whole pair of hypothesis/reference corpora.
pub fn corpus_bleu_stats(hyps: &[String], refs: &[String], order: usize) -> BleuStats {
    let mut stats = BleuStats::new(order);
    for (h, r) in hyps.iter().zip(refs) {
        stats.merge(&accumulate_bleu_stats(h, r, order));
    }
    stats
}

/// Brevity penalty: 1 when c > r, exp(1 - r/c) when c <= r; an empty
/// hypothesis corpus against a non-empty reference scores 0.
pub fn brevity_penalty(c: u64, r: u64) -> f64 {
    if c > r {
        1.0
    } else if c == 0 {
        if r == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// Geometric-mean BLEU in [0, 100] with uniform weights.
///
/// Any zero precision makes the score 0 unless `smoothing_epsilon` is set,
/// which floors each precision at the given value.
pub fn bleu_score_with(stats: &BleuStats, smoothing_epsilon: Option<f64>) -> Result<f64> {
    if stats.totals.iter().all(|&t| t == 0) {
        return Err(Error::DegenerateInput);
    }
    let order = stats.order();
    let w = 1.0 / order as f64;
    let mut log_sum = 0.0;
    for n in 0..order {
        let p = if stats.totals[n] == 0 { 0.0 } else { stats.clipped[n] as f64 / stats.totals[n] as f64 };
        let p = match smoothing_epsilon {
            Some(eps) => p.max(eps),
            None => p,
        };
        if p == 0.0 {
            return Ok(0.0);
        }
        log_sum += w * p.ln();
    }
    Ok(100.0 * brevity_penalty(stats.c, stats.r) * log_sum.exp())
}

/// BLEU with the default order-4 uniform weighting and no smoothing.
pub fn bleu_score(stats: &BleuStats) -> Result<f64> {
    bleu_score_with(stats, None)
}

/// Corpus BLEU of hypothesis lines against reference lines.
pub fn corpus_bleu(hyps: &[String], refs: &[String]) -> Result<f64> {
    bleu_score(&corpus_bleu_stats(hyps, refs, DEFAULT_BLEU_ORDER))
}

/// Translates the source side of `pair` and scores the hypotheses against
/// the target side. Hypotheses can be persisted alongside the score.
pub fn evaluate_model(
    translator: &dyn crate::pipeline::Translator,
    pair: &BilingualPair,
    persist_hyps: Option<&std::path::Path>,
) -> Result<f64> {
    let hyps = translator.translate(&pair.src.lines, pair.src.lang, pair.tgt.lang)?;
    if hyps.len() != pair.src.lines.len() {
        return Err(Error::adapter(format!(
            "line count mismatch: sent {}, received {}",
            pair.src.lines.len(),
            hyps.len()
        )));
    }
    if let Some(path) = persist_hyps {
        crate::corpus::write_line_corpus(path, &LineCorpus::new(hyps.clone(), pair.tgt.lang))?;
    }
    corpus_bleu(&hyps, &pair.tgt.lines)
}
