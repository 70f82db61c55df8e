//! Model-free measurements of a tokenization: vocabulary coverage, symbol
//! complexity, encoded-length growth and sequence similarity.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::bite::{self, BiteMode, BiteSymbol};
use crate::morph::MorphLexicon;
use crate::subword::SubwordModel;
use crate::tagger::TaggedToken;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("the corpus is empty")]
    EmptyCorpus,
    #[error("the type list is empty")]
    EmptyTypes,
    #[error("n must be at least 1")]
    ZeroN,
    #[error("lambda must be at least 1, got {0}")]
    LambdaBelowOne(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub value: f64,
    pub units: String,
}

impl MetricReport {
    pub fn new(metric: &str, value: f64, units: &str) -> Self {
        MetricReport {
            metric: metric.to_string(),
            parameters: BTreeMap::new(),
            value,
            units: units.to_string(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopN {
    /// Most frequent first; equal counts in lexicographic order.
    pub types: Vec<String>,
    /// Set when fewer than `n` types exist.
    pub truncated: bool,
}

impl TopN {
    pub fn contains(&self, t: &str) -> bool {
        self.types.iter().any(|x| x == t)
    }
}

/// Token counts of a corpus.
pub fn type_counts<I, S, T>(corpus: I) -> HashMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut counts: HashMap<String, u64> = HashMap::new();
    for sentence in corpus {
        for tok in sentence {
            let tok = tok.as_ref();
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_string(), 1);
                }
            }
        }
    }
    counts
}

pub fn top_n_vocab<I, S, T>(corpus: I, n: usize) -> Result<TopN, MetricsError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    top_n_from_counts(&type_counts(corpus), n)
}

pub fn top_n_from_counts(counts: &HashMap<String, u64>, n: usize) -> Result<TopN, MetricsError> {
    if n == 0 {
        return Err(MetricsError::ZeroN);
    }
    let mut ranked: Vec<(&String, u64)> = counts.iter().map(|(t, &c)| (t, c)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let truncated = ranked.len() < n;
    if truncated {
        log::warn!("asked for {n} types but the corpus has {}", ranked.len());
    }
    Ok(TopN {
        types: ranked.into_iter().take(n).map(|(t, _)| t.clone()).collect(),
        truncated,
    })
}

/// Share of corpus tokens whose type is in `vocab`.
pub fn coverage<I, S, T>(vocab: &TopN, corpus: I) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let set: std::collections::HashSet<&str> = vocab.types.iter().map(String::as_str).collect();
    let (mut hit, mut total) = (0u64, 0u64);
    for sentence in corpus {
        for tok in sentence {
            total += 1;
            hit += set.contains(tok.as_ref()) as u64;
        }
    }
    if total == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    Ok(hit as f64 / total as f64)
}

/// `sum (|S| - u) + lambda * u` over encodings given as
/// `(symbol count, unknown count)` pairs.
pub fn complexity_of<I>(encodings: I, lambda: f64) -> Result<f64, MetricsError>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if !(lambda >= 1.0) {
        return Err(MetricsError::LambdaBelowOne(lambda));
    }
    let mut total = 0.0;
    let mut any = false;
    for (len, unk) in encodings {
        any = true;
        total += (len - unk) as f64 + lambda * unk as f64;
    }
    if !any {
        return Err(MetricsError::EmptyTypes);
    }
    Ok(total)
}

/// Symbol complexity of a word-type list under `model`.
pub fn symbol_complexity<S: AsRef<str>>(model: &SubwordModel, types: &[S], lambda: f64) -> Result<f64, MetricsError> {
    let unk = model.unk_id();
    complexity_of(
        types.iter().map(|t| {
            let ids = model.encode_word(t.as_ref());
            (ids.len(), ids.iter().filter(|&&i| i == unk).count())
        }),
        lambda,
    )
}

/// Longest common block of `a[alo..ahi]` and `b[blo..bhi]` as
/// `(i, j, size)`; among equally long blocks the one starting first in
/// `a`, then in `b`.
fn longest_match<T: PartialEq>(a: &[T], b: &[T], alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
    let (mut bi, mut bj, mut best) = (alo, blo, 0);
    let width = bhi - blo;
    let mut prev = vec![0usize; width + 1];
    let mut cur = vec![0usize; width + 1];
    for i in alo..ahi {
        for j in blo..bhi {
            let k = j - blo + 1;
            cur[k] = if a[i] == b[j] { prev[k - 1] + 1 } else { 0 };
            if cur[k] > best {
                best = cur[k];
                bi = i + 1 - best;
                bj = j + 1 - best;
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    (bi, bj, best)
}

/// Matched blocks `(i, j, size)` in order, found by recursively taking the
/// longest common block and matching what lies on either side of it.
pub fn matching_blocks<T: PartialEq>(a: &[T], b: &[T]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        if alo >= ahi || blo >= bhi {
            continue;
        }
        let (i, j, k) = longest_match(a, b, alo, ahi, blo, bhi);
        if k == 0 {
            continue;
        }
        out.push((i, j, k));
        stack.push((alo, i, blo, j));
        stack.push((i + k, ahi, j + k, bhi));
    }
    out.sort_unstable();
    out
}

/// Ratcliff/Obershelp similarity `2M / (|a| + |b|)`; two empty sequences
/// are identical.
pub fn similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let m: usize = matching_blocks(a, b).iter().map(|&(_, _, k)| k).sum();
    2.0 * m as f64 / (a.len() + b.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthDelta {
    pub mean_with: f64,
    pub mean_without: f64,
    /// `100 * (mean_with - mean_without) / mean_without`.
    pub delta_percent: f64,
    /// Inflected content words as a percentage of all tokens.
    pub inflected_percent: f64,
}

/// Encoded-length growth from putting BITE in front of a subword model.
/// `with` encodes the output of `mode`; `without` encodes raw tokens.
pub fn seq_len_delta(
    corpus: &[Vec<TaggedToken>],
    lexicon: &MorphLexicon,
    mode: BiteMode,
    with: &SubwordModel,
    without: &SubwordModel,
) -> Result<LengthDelta, MetricsError> {
    let (mut len_with, mut len_without, mut tokens, mut inflected) = (0usize, 0usize, 0usize, 0usize);
    for sentence in corpus {
        let surfaces: Vec<&str> = sentence.iter().map(|t| t.surface.as_str()).collect();
        len_without += without.encode(&surfaces).len();
        let symbols = bite::encode(sentence, lexicon, BiteMode::Standard);
        inflected += symbols.iter().filter(|s| matches!(s, BiteSymbol::Inflection(_))).count();
        tokens += sentence.len();
        let encoded: Vec<String> = match mode {
            BiteMode::Off => surfaces.iter().map(|s| s.to_string()).collect(),
            _ => bite::encode_to_strings(sentence, lexicon, mode),
        };
        len_with += with.encode(&encoded).len();
    }
    if corpus.is_empty() || tokens == 0 {
        return Err(MetricsError::EmptyCorpus);
    }
    let n = corpus.len() as f64;
    let (mean_with, mean_without) = (len_with as f64 / n, len_without as f64 / n);
    Ok(LengthDelta {
        mean_with,
        mean_without,
        delta_percent: 100.0 * (mean_with - mean_without) / mean_without,
        inflected_percent: 100.0 * inflected as f64 / tokens as f64,
    })
}
