//! Shared fixtures and reference implementations for the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use bite::pipeline::{self, Pipeline};
use bite::subword::{self, ModelType, SubwordModel, END_OF_WORD};
use bite::tagger::{read_tagged_corpus, PerceptronModel, TaggedToken};
use bite::BiteMode;

pub const TAGGER_EPOCHS: usize = 5;
pub const TAGGER_SEED: u64 = 1;
/// Every `SILVER_EVERY`-th corpus line has a silver-tagged counterpart.
pub const SILVER_EVERY: usize = 4;

pub fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

pub fn read_lines(path: &Path) -> Vec<String> {
    pipeline::open_text(path).unwrap().lines().map(Result::unwrap).collect()
}

/// The desk corpus, one sentence per line.
pub fn corpus() -> &'static [String] {
    static C: OnceLock<Vec<String>> = OnceLock::new();
    C.get_or_init(|| read_lines(&data("corpus/sotu.txt.gz")))
}

pub fn silver() -> &'static [Vec<TaggedToken>] {
    static S: OnceLock<Vec<Vec<TaggedToken>>> = OnceLock::new();
    S.get_or_init(|| read_tagged_corpus(pipeline::open_text(&data("corpus/sotu-silver.tsv.gz")).unwrap()).unwrap())
}

/// First 90% of the silver sentences for training, the rest held out.
pub fn silver_split() -> (&'static [Vec<TaggedToken>], &'static [Vec<TaggedToken>]) {
    let s = silver();
    s.split_at(s.len() * 9 / 10)
}

pub fn tagger() -> &'static PerceptronModel {
    static T: OnceLock<PerceptronModel> = OnceLock::new();
    T.get_or_init(|| PerceptronModel::train(silver_split().0, TAGGER_EPOCHS, TAGGER_SEED).unwrap())
}

pub fn pipeline(mode: BiteMode) -> Pipeline {
    Pipeline::new(tagger().clone(), None, mode)
}

pub fn raw_tokens() -> &'static [Vec<String>] {
    static R: OnceLock<Vec<Vec<String>>> = OnceLock::new();
    R.get_or_init(|| pipeline::par_map(corpus(), |l| bite::pretok::pretokenize_surfaces(l)))
}

pub fn tagged_corpus() -> &'static [Vec<TaggedToken>] {
    static T: OnceLock<Vec<Vec<TaggedToken>>> = OnceLock::new();
    T.get_or_init(|| {
        let t = tagger();
        pipeline::par_map(raw_tokens(), |ws| {
            ws.iter().zip(t.tag_words(ws)).map(|(w, tag)| TaggedToken::new(w.clone(), tag)).collect()
        })
    })
}

pub fn bite_tokens() -> &'static [Vec<String>] {
    static B: OnceLock<Vec<Vec<String>>> = OnceLock::new();
    B.get_or_init(|| {
        let lex = bite::MorphLexicon::bundled();
        pipeline::par_map(tagged_corpus(), |s| bite::bite::encode_to_strings(s, lex, BiteMode::Standard))
    })
}

fn counts(bite: bool) -> &'static BTreeMap<String, u64> {
    static RAW: OnceLock<BTreeMap<String, u64>> = OnceLock::new();
    static BITE: OnceLock<BTreeMap<String, u64>> = OnceLock::new();
    if bite {
        BITE.get_or_init(|| subword::count_words(bite_tokens(), &bite::bite::special_symbols()))
    } else {
        RAW.get_or_init(|| subword::count_words(raw_tokens(), &[]))
    }
}

/// A subword model trained on the whole desk corpus, raw or after the
/// transform. Each distinct model is trained once per test binary.
pub fn model(model_type: ModelType, vocab_size: usize, bite: bool) -> &'static SubwordModel {
    type Slot = OnceLock<SubwordModel>;
    static MODELS: OnceLock<Mutex<HashMap<(ModelType, usize, bool), &'static Slot>>> = OnceLock::new();
    let slot: &'static Slot = {
        let mut m = MODELS.get_or_init(Default::default).lock().unwrap();
        m.entry((model_type, vocab_size, bite))
            .or_insert_with(|| Box::leak(Box::new(OnceLock::new())))
    };
    slot.get_or_init(|| {
        let mode = if bite { BiteMode::Standard } else { BiteMode::Off };
        subword::train(&pipeline::trainer_config(model_type, vocab_size, mode), counts(bite)).unwrap()
    })
}

/// Reference BPE trainer: recounts every adjacent pair from scratch before
/// each merge.
pub fn bpe_oracle(counts: &BTreeMap<String, u64>, vocab_size: usize, specials: &[String]) -> Vec<(String, String)> {
    let mut words: Vec<(Vec<String>, u64)> = counts
        .iter()
        .map(|(w, &c)| {
            let mut syms: Vec<String> = w.chars().map(String::from).collect();
            syms.push(END_OF_WORD.to_string());
            (syms, c)
        })
        .collect();
    let alphabet: BTreeSet<String> = words
        .iter()
        .flat_map(|(s, _)| s.iter().cloned())
        .filter(|s| !specials.contains(s))
        .collect();
    let mut vocab: HashSet<String> = specials.iter().cloned().chain(alphabet.iter().cloned()).collect();
    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let mut pair_counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for (syms, c) in &words {
            for w in syms.windows(2) {
                *pair_counts.entry((w[0].clone(), w[1].clone())).or_default() += c;
            }
        }
        let mut best: Option<(&(String, String), u64)> = None;
        for (p, &c) in &pair_counts {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((p, c));
            }
        }
        let Some(((a, b), _)) = best else { break };
        let (a, b) = (a.clone(), b.clone());
        for (syms, _) in &mut words {
            let mut out = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == a && syms[i + 1] == b {
                    out.push(format!("{a}{b}"));
                    i += 2;
                } else {
                    out.push(syms[i].clone());
                    i += 1;
                }
            }
            *syms = out;
        }
        vocab.insert(format!("{a}{b}"));
        merges.push((a, b));
    }
    merges
}

/// Reference Ratcliff/Obershelp match count: try every start pair, extend,
/// keep the first longest block, recurse on both sides.
pub fn gestalt_matches<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (mut bi, mut bj, mut bk) = (0, 0, 0);
    for i in 0..a.len() {
        for j in 0..b.len() {
            let mut k = 0;
            while i + k < a.len() && j + k < b.len() && a[i + k] == b[j + k] {
                k += 1;
            }
            if k > bk {
                (bi, bj, bk) = (i, j, k);
            }
        }
    }
    if bk == 0 {
        return 0;
    }
    bk + gestalt_matches(&a[..bi], &b[..bj]) + gestalt_matches(&a[bi + bk..], &b[bj + bk..])
}

pub fn gestalt_similarity<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    2.0 * gestalt_matches(a, b) as f64 / (a.len() + b.len()) as f64
}
