//! WordPiece: pair merges scored by `count(ab) / (count(a) * count(b))`,
//! non-initial pieces carrying the `##` prefix. Encoding is greedy
//! longest-match-first over the vocabulary.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};
use std::rc::Rc;

use super::model::{ModelType, SubwordModel, CONTINUATION_PREFIX};
use super::{check_floor, SubwordError};

/// Words longer than this (in characters) encode as `<unk>`.
pub const MAX_WORD_CHARS: usize = 100;

type Pair = (u32, u32);

/// `num / den` compared exactly by cross-multiplication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Score {
    num: u64,
    den: u128,
}

impl Ord for Score {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den).cmp(&(other.num as u128 * self.den))
    }
}

impl PartialOrd for Score {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

type Entry = (Score, Reverse<(Rc<str>, Rc<str>)>, Pair);

fn pairs(word: &[u32]) -> impl Iterator<Item = Pair> + '_ {
    word.windows(2).map(|w| (w[0], w[1]))
}

fn apply_merge(word: &mut Vec<u32>, pair: Pair, merged: u32) {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(merged);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    *word = out;
}

fn initial_pieces(word: &str) -> impl Iterator<Item = String> + '_ {
    word.chars()
        .enumerate()
        .map(|(i, c)| if i == 0 { c.to_string() } else { format!("{CONTINUATION_PREFIX}{c}") })
}

struct State {
    names: Vec<Rc<str>>,
    ids: HashMap<Rc<str>, u32>,
    sym_counts: Vec<u64>,
    pair_counts: HashMap<Pair, u64>,
    by_sym: HashMap<u32, HashSet<Pair>>,
}

impl State {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        let rc: Rc<str> = Rc::from(s);
        self.names.push(rc.clone());
        self.ids.insert(rc, id);
        self.sym_counts.push(0);
        id
    }

    fn entry(&self, p: Pair) -> Option<Entry> {
        let num = *self.pair_counts.get(&p)?;
        if num == 0 {
            return None;
        }
        let den = self.sym_counts[p.0 as usize] as u128 * self.sym_counts[p.1 as usize] as u128;
        Some((
            Score { num, den },
            Reverse((self.names[p.0 as usize].clone(), self.names[p.1 as usize].clone())),
            p,
        ))
    }

    fn is_current(&self, e: &Entry) -> bool {
        self.entry(e.2).is_some_and(|cur| cur.0 == e.0)
    }

    fn add_word(&mut self, word: &[u32], freq: u64) {
        for &s in word {
            self.sym_counts[s as usize] += freq;
        }
        for p in pairs(word) {
            *self.pair_counts.entry(p).or_default() += freq;
            self.by_sym.entry(p.0).or_default().insert(p);
            self.by_sym.entry(p.1).or_default().insert(p);
        }
    }

    fn remove_word(&mut self, word: &[u32], freq: u64) {
        for &s in word {
            self.sym_counts[s as usize] -= freq;
        }
        for p in pairs(word) {
            let c = self.pair_counts.get_mut(&p).expect("counted pair");
            *c -= freq;
            if *c == 0 {
                self.pair_counts.remove(&p);
            }
        }
    }
}

pub(super) fn train(
    counts: &BTreeMap<String, u64>,
    vocab_size: usize,
    specials: Vec<String>,
) -> Result<SubwordModel, SubwordError> {
    let alphabet: BTreeSet<String> = counts
        .keys()
        .flat_map(|w| initial_pieces(w).collect::<Vec<_>>())
        .filter(|s| !specials.contains(s))
        .collect();
    check_floor(vocab_size, alphabet.len(), specials.len())?;

    let mut st = State {
        names: Vec::new(),
        ids: HashMap::new(),
        sym_counts: Vec::new(),
        pair_counts: HashMap::new(),
        by_sym: HashMap::new(),
    };
    let mut vocab: Vec<String> = specials.clone();
    let mut in_vocab: HashSet<String> = specials.iter().cloned().collect();
    for a in &alphabet {
        st.intern(a);
        vocab.push(a.clone());
        in_vocab.insert(a.clone());
    }

    let mut words: Vec<(Vec<u32>, u64)> = Vec::with_capacity(counts.len());
    let mut where_: HashMap<Pair, Vec<usize>> = HashMap::new();
    for (w, &c) in counts {
        let ids: Vec<u32> = initial_pieces(w).map(|p| st.intern(&p)).collect();
        st.add_word(&ids, c);
        for p in pairs(&ids) {
            where_.entry(p).or_default().push(words.len());
        }
        words.push((ids, c));
    }

    let mut heap: BinaryHeap<Entry> = st.pair_counts.keys().filter_map(|&p| st.entry(p)).collect();
    let mut merges: Vec<(String, String)> = Vec::new();
    while vocab.len() < vocab_size {
        let Some(top) = heap.pop() else {
            break;
        };
        if !st.is_current(&top) {
            continue;
        }
        let pair = top.2;
        let a = st.names[pair.0 as usize].to_string();
        let b = st.names[pair.1 as usize].to_string();
        let merged_name = format!("{a}{}", b.strip_prefix(CONTINUATION_PREFIX).unwrap_or(&b));
        let merged = st.intern(&merged_name);
        if in_vocab.insert(merged_name.clone()) {
            vocab.push(merged_name);
        }
        merges.push((a, b));

        let mut affected = where_.remove(&pair).unwrap_or_default();
        affected.sort_unstable();
        affected.dedup();
        let mut touched: HashSet<Pair> = HashSet::new();
        for idx in affected {
            let (word, freq) = &mut words[idx];
            let freq = *freq;
            if !pairs(word).any(|p| p == pair) {
                continue;
            }
            let mut w = std::mem::take(word);
            st.remove_word(&w, freq);
            touched.extend(pairs(&w));
            apply_merge(&mut w, pair, merged);
            st.add_word(&w, freq);
            for p in pairs(&w) {
                touched.insert(p);
                where_.entry(p).or_default().push(idx);
            }
            words[idx].0 = w;
        }
        // Every pair next to a symbol whose count moved has a new score.
        for s in [pair.0, pair.1, merged] {
            if let Some(ps) = st.by_sym.get_mut(&s) {
                ps.retain(|p| st.pair_counts.contains_key(p));
                touched.extend(ps.iter().copied());
            }
        }
        let mut fresh: Vec<Pair> = touched.into_iter().collect();
        fresh.sort_unstable();
        for p in fresh {
            if let Some(e) = st.entry(p) {
                heap.push(e);
            }
        }
    }

    SubwordModel::from_parts(ModelType::WordPiece, vocab, specials, merges, Vec::new())
}

pub(super) fn segment(model: &SubwordModel, word: &str) -> Option<Vec<u32>> {
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    if n > MAX_WORD_CHARS {
        return None;
    }
    let n_special = model.specials.len() as u32;
    let mut out = Vec::new();
    let mut start = 0;
    let mut piece = String::new();
    while start < n {
        let mut found = None;
        let mut end = n.min(start + model.max_piece_chars);
        while end > start {
            piece.clear();
            if start > 0 {
                piece.push_str(CONTINUATION_PREFIX);
            }
            piece.push_str(&word[bounds[start]..bounds[end]]);
            if let Some(id) = model.id_of(&piece).filter(|&id| id >= n_special) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        out.push(found?);
        start = end;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_compare_exactly() {
        let a = Score { num: 1, den: 3 };
        let b = Score { num: 2, den: 6 };
        let c = Score { num: 2, den: 5 };
        assert_eq!(a.cmp(&b), Ordering::Equal);
        assert!(c > a);
    }

    #[test]
    fn prefers_rare_pairings() {
        // "x" and "##q" always co-occur, so their score is maximal even
        // though "##a" pairs are more frequent.
        let counts: BTreeMap<String, u64> = [("xq", 2), ("ba", 10), ("ca", 10)]
            .into_iter()
            .map(|(w, c)| (w.to_string(), c))
            .collect();
        let m = train(&counts, 1 + 5 + 1, vec!["<unk>".into()]).unwrap();
        assert_eq!(m.merges(), [("x".to_string(), "##q".to_string())]);
    }

    #[test]
    fn greedy_longest_match() {
        let vocab: Vec<String> = ["<unk>", "c", "cl", "climb", "##i", "##m", "##s", "##imb", "##b"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let m = SubwordModel::from_parts(ModelType::WordPiece, vocab, vec!["<unk>".into()], Vec::new(), Vec::new())
            .unwrap();
        let pieces = |w: &str| -> Option<Vec<String>> {
            segment(&m, w).map(|ids| ids.iter().map(|&i| m.symbol_of(i).unwrap().to_string()).collect())
        };
        assert_eq!(pieces("climbs").unwrap(), ["climb", "##s"]);
        assert_eq!(pieces("clims").unwrap(), ["cl", "##i", "##m", "##s"]);
        assert_eq!(pieces("clx"), None);
        assert!(segment(&m, &"c".repeat(MAX_WORD_CHARS + 1)).is_none());
        assert_eq!(m.decode(&m.encode(&["climbs"]).ids).unwrap(), ["climbs"]);
    }
}
