//! Byte-pair encoding over characters, with an end-of-word symbol appended
//! to every word so that word-final pieces are distinct (`s</w>`).
//!
//! Training merges the most frequent adjacent pair; equal counts go to the
//! lexicographically smallest `(left, right)`. Pair counts are kept
//! incrementally with a lazily invalidated max-heap.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use super::model::{ModelType, SubwordModel, END_OF_WORD};
use super::{check_floor, SubwordError};

type Pair = (u32, u32);

struct Symbols {
    names: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Symbols {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(s.to_string());
        self.ids.insert(s.to_string(), id);
        id
    }
}

fn pairs(word: &[u32]) -> impl Iterator<Item = Pair> + '_ {
    word.windows(2).map(|w| (w[0], w[1]))
}

/// Replaces every non-overlapping occurrence of `pair`, left to right.
fn apply_merge(word: &mut Vec<u32>, pair: Pair, merged: u32) -> bool {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    let mut changed = false;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(merged);
            i += 2;
            changed = true;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    if changed {
        *word = out;
    }
    changed
}

/// Trains and also returns the pair count behind every merge.
pub(super) fn train_counted(
    counts: &BTreeMap<String, u64>,
    vocab_size: usize,
    specials: Vec<String>,
) -> Result<(SubwordModel, Vec<u64>), SubwordError> {
    let alphabet: BTreeSet<String> = counts
        .keys()
        .flat_map(|w| w.chars().map(String::from))
        .chain(std::iter::once(END_OF_WORD.to_string()))
        .filter(|s| !specials.contains(s))
        .collect();
    check_floor(vocab_size, alphabet.len(), specials.len())?;

    let mut sym = Symbols {
        names: Vec::new(),
        ids: HashMap::new(),
    };
    let mut vocab: Vec<String> = specials.clone();
    let mut in_vocab: std::collections::HashSet<String> = specials.iter().cloned().collect();
    for a in &alphabet {
        sym.intern(a);
        vocab.push(a.clone());
        in_vocab.insert(a.clone());
    }
    let end = sym.intern(END_OF_WORD);

    let mut words: Vec<(Vec<u32>, i64)> = Vec::with_capacity(counts.len());
    let mut pair_counts: HashMap<Pair, i64> = HashMap::new();
    let mut where_: HashMap<Pair, Vec<usize>> = HashMap::new();
    for (w, &c) in counts {
        let mut ids: Vec<u32> = w.chars().map(|ch| sym.intern(&ch.to_string())).collect();
        ids.push(end);
        let idx = words.len();
        for p in pairs(&ids) {
            *pair_counts.entry(p).or_default() += c as i64;
            where_.entry(p).or_default().push(idx);
        }
        words.push((ids, c as i64));
    }

    let key = |sym: &Symbols, p: Pair, c: i64| (c, Reverse((sym.names[p.0 as usize].clone(), sym.names[p.1 as usize].clone())), p);
    let mut heap: BinaryHeap<(i64, Reverse<(String, String)>, Pair)> = pair_counts
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(&p, &c)| key(&sym, p, c))
        .collect();

    let mut merges: Vec<(String, String)> = Vec::new();
    let mut merge_counts: Vec<u64> = Vec::new();
    while vocab.len() < vocab_size {
        let Some((count, _, pair)) = heap.pop() else {
            break;
        };
        if pair_counts.get(&pair).copied().unwrap_or(0) != count || count <= 0 {
            continue;
        }
        let (a, b) = (sym.names[pair.0 as usize].clone(), sym.names[pair.1 as usize].clone());
        let merged_name = format!("{a}{b}");
        let merged = sym.intern(&merged_name);
        if in_vocab.insert(merged_name.clone()) {
            vocab.push(merged_name);
        }
        merges.push((a, b));
        merge_counts.push(count as u64);

        let mut affected = where_.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        let mut touched: BTreeSet<Pair> = BTreeSet::new();
        let mut still: Vec<usize> = Vec::new();
        for idx in affected {
            let (word, freq) = &mut words[idx];
            let freq = *freq;
            if !pairs(word).any(|p| p == pair) {
                continue;
            }
            for p in pairs(word) {
                *pair_counts.get_mut(&p).expect("counted pair") -= freq;
                touched.insert(p);
            }
            apply_merge(word, pair, merged);
            for p in pairs(word) {
                *pair_counts.entry(p).or_default() += freq;
                touched.insert(p);
                if p == pair {
                    still.push(idx);
                } else {
                    where_.entry(p).or_default().push(idx);
                }
            }
        }
        if !still.is_empty() {
            where_.insert(pair, still);
        }
        for p in touched {
            let c = pair_counts[&p];
            if c > 0 {
                heap.push(key(&sym, p, c));
            } else {
                pair_counts.remove(&p);
            }
        }
    }

    let model = SubwordModel::from_parts(ModelType::Bpe, vocab, specials, merges, Vec::new())?;
    Ok((model, merge_counts))
}

pub(super) fn train(
    counts: &BTreeMap<String, u64>,
    vocab_size: usize,
    specials: Vec<String>,
) -> Result<SubwordModel, SubwordError> {
    train_counted(counts, vocab_size, specials).map(|(m, _)| m)
}

/// Replays the merges in training order. At each step the lowest-ranked
/// merge later than the previous one is applied, which is equivalent to
/// walking the full merge list.
pub(super) fn segment(model: &SubwordModel, word: &str) -> Option<Vec<u32>> {
    let mut ids: Vec<u32> = Vec::with_capacity(word.len() + 1);
    let mut buf = [0u8; 4];
    for ch in word.chars() {
        ids.push(model.id_of(ch.encode_utf8(&mut buf))?);
    }
    ids.push(model.id_of(END_OF_WORD)?);
    let mut last: Option<u32> = None;
    loop {
        let mut best: Option<(u32, Pair, u32)> = None;
        for p in pairs(&ids) {
            let Some(ranks) = model.merge_table.get(&p) else {
                continue;
            };
            let next = match last {
                None => ranks.first(),
                Some(l) => ranks.get(ranks.partition_point(|&(r, _)| r <= l)),
            };
            if let Some(&(rank, merged)) = next {
                if best.map_or(true, |(r, _, _)| rank < r) {
                    best = Some((rank, p, merged));
                }
            }
        }
        let Some((rank, pair, merged)) = best else {
            break;
        };
        apply_merge(&mut ids, pair, merged);
        last = Some(rank);
    }
    Some(ids)
}
