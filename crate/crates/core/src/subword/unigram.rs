//! Unigram language-model segmentation.
//!
//! Training seeds an oversized vocabulary with frequent substrings, then
//! alternates EM (forward-backward expected counts) with pruning of the
//! pieces whose removal costs the least likelihood. Single characters are
//! never pruned. Words are prefixed with `▁` so pieces know a word start.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::model::{ModelType, SubwordModel, WORD_START};
use super::{check_floor, SubwordError};

#[derive(Debug, Clone, PartialEq)]
pub struct UnigramOptions {
    /// Most frequent multi-character substrings kept in the seed vocabulary.
    pub seed_size: usize,
    /// Fraction of prunable pieces kept after each round.
    pub shrink_factor: f64,
    pub em_iterations: usize,
    pub max_piece_chars: usize,
}

impl Default for UnigramOptions {
    fn default() -> Self {
        UnigramOptions {
            seed_size: 1_000_000,
            shrink_factor: 0.8,
            em_iterations: 2,
            max_piece_chars: 16,
        }
    }
}

/// Corpus log-likelihood before each EM step, grouped by pruning round.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnigramTrace {
    pub rounds: Vec<Vec<f64>>,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Candidate pieces of one word: `(start, end, piece)` in character units,
/// sorted by end then start.
struct Lattice {
    len: usize,
    edges: Vec<(u32, u32, u32)>,
    freq: f64,
}

struct Pieces {
    names: Vec<String>,
    logp: Vec<f64>,
    is_char: Vec<bool>,
}

fn char_bounds(s: &str) -> Vec<usize> {
    s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len())).collect()
}

fn piece_index(pieces: &Pieces) -> HashMap<&str, u32> {
    pieces
        .names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect()
}

fn lattice(word: &str, freq: u64, index: &HashMap<&str, u32>, max_len: usize) -> Lattice {
    let b = char_bounds(word);
    let n = b.len() - 1;
    let mut edges = Vec::new();
    for end in 1..=n {
        for start in end.saturating_sub(max_len)..end {
            if let Some(&id) = index.get(&word[b[start]..b[end]]) {
                edges.push((start as u32, end as u32, id));
            }
        }
    }
    Lattice {
        len: n,
        edges,
        freq: freq as f64,
    }
}

fn build_lattices(words: &[(String, u64)], pieces: &Pieces, max_len: usize) -> Vec<Lattice> {
    let index = piece_index(pieces);
    words.iter().map(|(w, f)| lattice(w, *f, &index, max_len)).collect()
}

/// One EM iteration. Returns the log-likelihood under the incoming scores.
fn em_step(lattices: &[Lattice], pieces: &mut Pieces) -> f64 {
    let mut expected = vec![0.0f64; pieces.names.len()];
    let mut ll = 0.0;
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for lat in lattices {
        alpha.clear();
        alpha.resize(lat.len + 1, f64::NEG_INFINITY);
        beta.clear();
        beta.resize(lat.len + 1, f64::NEG_INFINITY);
        alpha[0] = 0.0;
        for &(s, e, id) in &lat.edges {
            alpha[e as usize] = log_add(alpha[e as usize], alpha[s as usize] + pieces.logp[id as usize]);
        }
        beta[lat.len] = 0.0;
        for &(s, e, id) in lat.edges.iter().rev() {
            beta[s as usize] = log_add(beta[s as usize], beta[e as usize] + pieces.logp[id as usize]);
        }
        let z = alpha[lat.len];
        ll += lat.freq * z;
        for &(s, e, id) in &lat.edges {
            let post = (alpha[s as usize] + pieces.logp[id as usize] + beta[e as usize] - z).exp();
            expected[id as usize] += lat.freq * post;
        }
    }
    let total: f64 = expected.iter().sum();
    for (lp, &x) in pieces.logp.iter_mut().zip(&expected) {
        // Underflow only; every piece occurs in some word.
        *lp = (x.max(f64::MIN_POSITIVE) / total).ln();
    }
    ll
}

fn viterbi(lat: &Lattice, logp: &[f64], skip: Option<u32>) -> Option<Vec<u32>> {
    let mut best = vec![f64::NEG_INFINITY; lat.len + 1];
    let mut back: Vec<Option<(u32, u32)>> = vec![None; lat.len + 1];
    best[0] = 0.0;
    for &(s, e, id) in &lat.edges {
        if Some(id) == skip || best[s as usize] == f64::NEG_INFINITY {
            continue;
        }
        let cand = best[s as usize] + logp[id as usize];
        if cand > best[e as usize] {
            best[e as usize] = cand;
            back[e as usize] = Some((s, id));
        }
    }
    let mut out = Vec::new();
    let mut pos = lat.len;
    while pos > 0 {
        let (s, id) = back[pos]?;
        out.push(id);
        pos = s as usize;
    }
    out.reverse();
    Some(out)
}

/// Keeps the `keep` prunable pieces with the largest likelihood loss.
fn prune(lattices: &[Lattice], pieces: &Pieces, keep: usize, max_len: usize) -> Pieces {
    let mut vfreq = vec![0.0f64; pieces.names.len()];
    for lat in lattices {
        for id in viterbi(lat, &pieces.logp, None).unwrap_or_default() {
            vfreq[id as usize] += lat.freq;
        }
    }
    let index = piece_index(pieces);
    let mut losses: Vec<(f64, &str, usize)> = Vec::new();
    for (i, name) in pieces.names.iter().enumerate() {
        if pieces.is_char[i] {
            continue;
        }
        let loss = if vfreq[i] == 0.0 {
            0.0
        } else {
            let own = lattice(name, 1, &index, max_len);
            match viterbi(&own, &pieces.logp, Some(i as u32)) {
                Some(alt) => vfreq[i] * (pieces.logp[i] - alt.iter().map(|&a| pieces.logp[a as usize]).sum::<f64>()),
                None => f64::INFINITY,
            }
        };
        losses.push((loss, name, i));
    }
    losses.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let kept: BTreeSet<usize> = losses.iter().take(keep).map(|x| x.2).collect();
    let mut out = Pieces {
        names: Vec::new(),
        logp: Vec::new(),
        is_char: Vec::new(),
    };
    for i in 0..pieces.names.len() {
        if pieces.is_char[i] || kept.contains(&i) {
            out.names.push(pieces.names[i].clone());
            out.logp.push(pieces.logp[i]);
            out.is_char.push(pieces.is_char[i]);
        }
    }
    out
}

pub(super) fn train(
    counts: &BTreeMap<String, u64>,
    vocab_size: usize,
    specials: Vec<String>,
    opts: &UnigramOptions,
) -> Result<(SubwordModel, UnigramTrace), SubwordError> {
    let words: Vec<(String, u64)> = counts
        .iter()
        .map(|(w, &c)| (format!("{WORD_START}{w}"), c))
        .collect();
    let chars: BTreeSet<String> = words
        .iter()
        .flat_map(|(w, _)| w.chars().map(String::from).collect::<Vec<_>>())
        .filter(|c| !specials.contains(c))
        .collect();
    check_floor(vocab_size, chars.len(), specials.len())?;
    let max_len = opts.max_piece_chars.max(1);

    let mut sub_counts: HashMap<String, u64> = HashMap::new();
    for (w, c) in &words {
        let b = char_bounds(w);
        let n = b.len() - 1;
        for start in 0..n {
            for end in start + 2..=n.min(start + max_len) {
                *sub_counts.entry(w[b[start]..b[end]].to_string()).or_default() += c;
            }
        }
    }
    let mut char_counts: BTreeMap<String, u64> = chars.iter().map(|c| (c.clone(), 0)).collect();
    for (w, c) in &words {
        for ch in w.chars() {
            if let Some(x) = char_counts.get_mut(ch.to_string().as_str()) {
                *x += c;
            }
        }
    }
    let mut seed: Vec<(String, u64)> = sub_counts
        .into_iter()
        .filter(|(s, _)| !specials.contains(s))
        .collect();
    seed.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    seed.truncate(opts.seed_size);

    let mut pieces = Pieces {
        names: Vec::new(),
        logp: Vec::new(),
        is_char: Vec::new(),
    };
    let seeded = char_counts
        .into_iter()
        .map(|(s, c)| (s, c, true))
        .chain(seed.into_iter().map(|(s, c)| (s, c, false)));
    for (s, c, is_char) in seeded {
        pieces.names.push(s);
        pieces.is_char.push(is_char);
        pieces.logp.push(c.max(1) as f64);
    }
    let total: f64 = pieces.logp.iter().sum();
    for lp in &mut pieces.logp {
        *lp = (*lp / total).ln();
    }

    let target = vocab_size - specials.len() - chars.len();
    let mut trace = UnigramTrace::default();
    loop {
        let lattices = build_lattices(&words, &pieces, max_len);
        let mut round = Vec::with_capacity(opts.em_iterations);
        for _ in 0..opts.em_iterations.max(1) {
            round.push(em_step(&lattices, &mut pieces));
        }
        trace.rounds.push(round);
        let prunable = pieces.is_char.iter().filter(|c| !**c).count();
        log::debug!("unigram round {}: {} pieces", trace.rounds.len(), pieces.names.len());
        if prunable <= target {
            break;
        }
        let keep = target.max((prunable as f64 * opts.shrink_factor) as usize);
        pieces = prune(&lattices, &pieces, keep, max_len);
    }

    let mut order: Vec<usize> = (0..pieces.names.len()).collect();
    order.sort_by(|&a, &b| {
        pieces.logp[b]
            .total_cmp(&pieces.logp[a])
            .then_with(|| pieces.names[a].cmp(&pieces.names[b]))
    });
    let mut vocab = specials.clone();
    let mut scores = vec![0.0; specials.len()];
    for i in order {
        vocab.push(pieces.names[i].clone());
        scores.push(pieces.logp[i]);
    }
    let model = SubwordModel::from_parts(ModelType::Unigram, vocab, specials, Vec::new(), scores)?;
    Ok((model, trace))
}

pub(super) fn segment(model: &SubwordModel, word: &str) -> Option<Vec<u32>> {
    let w = format!("{WORD_START}{word}");
    let b = char_bounds(&w);
    let n = b.len() - 1;
    let n_special = model.specials.len() as u32;
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    let mut back: Vec<(usize, u32)> = vec![(0, 0); n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        for start in end.saturating_sub(model.max_piece_chars)..end {
            if best[start] == f64::NEG_INFINITY {
                continue;
            }
            let Some(id) = model.id_of(&w[b[start]..b[end]]).filter(|&id| id >= n_special) else {
                continue;
            };
            let cand = best[start] + model.scores[id as usize];
            if cand > best[end] {
                best[end] = cand;
                back[end] = (start, id);
            }
        }
    }
    if best[n] == f64::NEG_INFINITY {
        return None;
    }
    let mut out = Vec::new();
    let mut pos = n;
    while pos > 0 {
        let (s, id) = back[pos];
        out.push(id);
        pos = s;
    }
    out.reverse();
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> BTreeMap<String, u64> {
        [("walk", 9), ("walked", 7), ("walking", 5), ("talked", 4), ("talking", 3), ("king", 2), ("ring", 2)]
            .into_iter()
            .map(|(w, c)| (w.to_string(), c))
            .collect()
    }

    #[test]
    fn log_add_is_stable() {
        assert!((log_add(0.0, 0.0) - 2f64.ln()).abs() < 1e-12);
        assert_eq!(log_add(f64::NEG_INFINITY, -3.0), -3.0);
        assert!((log_add(-1000.0, -1000.0) - (-1000.0 + 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn em_never_lowers_likelihood() {
        let opts = UnigramOptions {
            em_iterations: 6,
            ..UnigramOptions::default()
        };
        let (_, trace) = train(&corpus(), 35, vec!["<unk>".into()], &opts).unwrap();
        assert!(trace.rounds.len() > 1);
        for round in &trace.rounds {
            for w in round.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "{round:?}");
            }
        }
    }

    #[test]
    fn keeps_every_character() {
        let (m, _) = train(&corpus(), 30, vec!["<unk>".into()], &UnigramOptions::default()).unwrap();
        for c in "walkedtingr\u{2581}".chars() {
            assert!(m.id_of(&c.to_string()).is_some(), "{c}");
        }
        assert!(m.scores().iter().all(|s| s.is_finite()));
        assert!(m.vocab_size() <= 30);
        let ids = segment(&m, "walking").unwrap();
        let joined: String = ids.iter().map(|&i| m.symbol_of(i).unwrap()).collect();
        assert_eq!(joined, "\u{2581}walking");
        assert!(segment(&m, "wxlk").is_none());
    }
}
