//! Averaged-perceptron part-of-speech tagger with greedy left-to-right
//! decoding.
//!
//! Frequent words seen with a single tag (at least [`LEXICON_MIN_FREQ`]
//! occurrences, at least [`LEXICON_MIN_RATIO`] of them with one tag) are
//! tagged from a lookup table and skipped by the classifier, both at training
//! and at tagging time.

mod corpus;
mod features;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use corpus::{read_tagged_corpus, write_tagged_corpus};

use crate::pretok::WordToken;
use crate::tags::Tag;

pub const LEXICON_MIN_FREQ: usize = 20;
pub const LEXICON_MIN_RATIO: f64 = 0.97;
pub const MODEL_FORMAT: &str = "bite-perceptron-tagger";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TaggerError {
    #[error("unknown tag `{tag}` on line {line}")]
    UnknownTag { tag: String, line: usize },
    #[error("line {line}: expected `surface<TAB>tag`")]
    MalformedLine { line: usize },
    #[error("epochs must be >= 1")]
    ZeroEpochs,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: Tag,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, tag: Tag) -> Self {
        TaggedToken {
            surface: surface.into(),
            tag,
        }
    }
}

/// A trained, immutable tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronModel {
    tag_set: Vec<Tag>,
    lexicon: HashMap<String, Tag>,
    /// Averaged weights: feature -> (index into `tag_set`, weight).
    weights: HashMap<String, Vec<(u8, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    tag_set: Vec<Tag>,
    lexicon: BTreeMap<String, Tag>,
    weights: BTreeMap<String, Vec<(u8, f64)>>,
}

#[derive(Clone, Copy)]
struct Param {
    class: u8,
    weight: f64,
    total: f64,
    stamp: u64,
}

/// Online weights plus the bookkeeping needed for lazy averaging.
struct Trainer {
    feature_ids: HashMap<String, usize>,
    params: Vec<Vec<Param>>,
    instances: u64,
}

impl Trainer {
    fn predict(&self, feats: &[String], scores: &mut [f64]) -> usize {
        scores.iter_mut().for_each(|s| *s = 0.0);
        for f in feats {
            if let Some(&id) = self.feature_ids.get(f) {
                for p in &self.params[id] {
                    scores[p.class as usize] += p.weight;
                }
            }
        }
        argmax(scores)
    }

    fn bump(&mut self, feature: &str, class: usize, delta: f64) {
        let id = match self.feature_ids.get(feature) {
            Some(&id) => id,
            None => {
                self.params.push(Vec::new());
                self.feature_ids
                    .insert(feature.to_string(), self.params.len() - 1);
                self.params.len() - 1
            }
        };
        let now = self.instances;
        let slot = &mut self.params[id];
        let pos = match slot.iter().position(|p| p.class as usize == class) {
            Some(pos) => pos,
            None => {
                slot.push(Param {
                    class: class as u8,
                    weight: 0.0,
                    total: 0.0,
                    stamp: 0,
                });
                slot.len() - 1
            }
        };
        let p = &mut slot[pos];
        p.total += (now - p.stamp) as f64 * p.weight;
        p.stamp = now;
        p.weight += delta;
    }

    fn update(&mut self, truth: usize, guess: usize, feats: &[String]) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        for f in feats {
            self.bump(f, truth, 1.0);
            self.bump(f, guess, -1.0);
        }
    }

    fn average(self) -> HashMap<String, Vec<(u8, f64)>> {
        let n = self.instances.max(1) as f64;
        let now = self.instances;
        let mut out = HashMap::with_capacity(self.feature_ids.len());
        for (feature, id) in self.feature_ids {
            let mut avg: Vec<(u8, f64)> = self.params[id]
                .iter()
                .filter_map(|p| {
                    let total = p.total + (now - p.stamp) as f64 * p.weight;
                    let w = total / n;
                    (w != 0.0).then_some((p.class, w))
                })
                .collect();
            avg.sort_by_key(|&(c, _)| c);
            if !avg.is_empty() {
                out.insert(feature, avg);
            }
        }
        out
    }
}

/// Highest score wins; ties go to the lowest index.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn build_lexicon(sentences: &[Vec<TaggedToken>]) -> HashMap<String, Tag> {
    let mut counts: HashMap<&str, BTreeMap<Tag, usize>> = HashMap::new();
    for t in sentences.iter().flatten() {
        *counts.entry(&t.surface).or_default().entry(t.tag).or_insert(0) += 1;
    }
    counts
        .into_iter()
        .filter_map(|(word, tags)| {
            let n: usize = tags.values().sum();
            // max_by_key returns the last maximum; iterate reversed so ties
            // resolve to the earliest tag.
            let (&tag, &mode) = tags.iter().rev().max_by_key(|(_, &c)| c)?;
            (n >= LEXICON_MIN_FREQ && mode as f64 / n as f64 >= LEXICON_MIN_RATIO)
                .then(|| (word.to_string(), tag))
        })
        .collect()
}

fn context_of<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    words.iter().map(|w| features::normalize(w.as_ref())).collect()
}

impl PerceptronModel {
    /// Trains a model. Sentences are visited in corpus order on the first
    /// epoch and reshuffled with a `seed`-derived generator after each epoch.
    pub fn train(
        sentences: &[Vec<TaggedToken>],
        epochs: usize,
        seed: u64,
    ) -> Result<Self, TaggerError> {
        if epochs == 0 {
            return Err(TaggerError::ZeroEpochs);
        }
        if sentences.iter().all(Vec::is_empty) {
            return Err(TaggerError::EmptyCorpus);
        }
        let mut present = [false; 64];
        for t in sentences.iter().flatten() {
            present[t.tag.index()] = true;
        }
        let tag_set: Vec<Tag> = Tag::ALL.iter().copied().filter(|t| present[t.index()]).collect();
        let mut class_of = [0usize; 64];
        for (i, t) in tag_set.iter().enumerate() {
            class_of[t.index()] = i;
        }
        let lexicon = build_lexicon(sentences);

        let mut trainer = Trainer {
            feature_ids: HashMap::new(),
            params: Vec::new(),
            instances: 0,
        };
        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut feats = Vec::new();
        let mut scores = vec![0.0; tag_set.len()];
        for epoch in 0..epochs {
            let (mut correct, mut total) = (0usize, 0usize);
            for &si in &order {
                let sentence = &sentences[si];
                let words: Vec<&str> = sentence.iter().map(|t| t.surface.as_str()).collect();
                let context = context_of(&words);
                let (mut prev, mut prev2) = (None, None);
                for (i, tok) in sentence.iter().enumerate() {
                    let guess = match lexicon.get(&tok.surface) {
                        Some(&t) => t,
                        None => {
                            features::extract(i, &tok.surface, &context, prev, prev2, &mut feats);
                            let g = trainer.predict(&feats, &mut scores);
                            trainer.update(class_of[tok.tag.index()], g, &feats);
                            tag_set[g]
                        }
                    };
                    correct += usize::from(guess == tok.tag);
                    total += 1;
                    prev2 = prev;
                    prev = Some(guess);
                }
            }
            log::info!(
                "tagger epoch {}: {correct}/{total} = {:.2}%",
                epoch + 1,
                100.0 * correct as f64 / total.max(1) as f64
            );
            order.shuffle(&mut rng);
        }
        Ok(PerceptronModel {
            tag_set,
            lexicon,
            weights: trainer.average(),
        })
    }

    pub fn tag_set(&self) -> &[Tag] {
        &self.tag_set
    }

    pub fn lexicon(&self) -> &HashMap<String, Tag> {
        &self.lexicon
    }

    pub fn weight(&self, feature: &str, tag: Tag) -> f64 {
        let Some(class) = self.tag_set.iter().position(|&t| t == tag) else {
            return 0.0;
        };
        self.weights
            .get(feature)
            .and_then(|ws| ws.iter().find(|(c, _)| *c as usize == class))
            .map_or(0.0, |&(_, w)| w)
    }

    /// Tags a sentence given as surface strings.
    pub fn tag_words<S: AsRef<str>>(&self, words: &[S]) -> Vec<Tag> {
        let context = context_of(words);
        let mut feats = Vec::new();
        let mut scores = vec![0.0; self.tag_set.len()];
        let (mut prev, mut prev2) = (None, None);
        let mut out = Vec::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            let w = w.as_ref();
            let tag = match self.lexicon.get(w) {
                Some(&t) => t,
                None => {
                    features::extract(i, w, &context, prev, prev2, &mut feats);
                    scores.iter_mut().for_each(|s| *s = 0.0);
                    for f in &feats {
                        if let Some(ws) = self.weights.get(f) {
                            for &(c, wt) in ws {
                                scores[c as usize] += wt;
                            }
                        }
                    }
                    self.tag_set[argmax(&scores)]
                }
            };
            out.push(tag);
            prev2 = prev;
            prev = Some(tag);
        }
        out
    }

    pub fn tag(&self, tokens: &[WordToken]) -> Vec<TaggedToken> {
        let words: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        self.tag_words(&words)
            .into_iter()
            .zip(tokens)
            .map(|(tag, t)| TaggedToken::new(t.surface.clone(), tag))
            .collect()
    }

    /// Token accuracy against reference tags.
    pub fn accuracy(&self, sentences: &[Vec<TaggedToken>]) -> f64 {
        let (mut correct, mut total) = (0usize, 0usize);
        for s in sentences {
            let words: Vec<&str> = s.iter().map(|t| t.surface.as_str()).collect();
            for (pred, gold) in self.tag_words(&words).iter().zip(s) {
                correct += usize::from(*pred == gold.tag);
                total += 1;
            }
        }
        correct as f64 / total.max(1) as f64
    }

    pub fn save<W: Write>(&self, writer: W) -> Result<(), TaggerError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            tag_set: self.tag_set.clone(),
            lexicon: self.lexicon.iter().map(|(k, v)| (k.clone(), *v)).collect(),
            weights: self.weights.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, TaggerError> {
        let file: ModelFile = serde_json::from_reader(std::io::BufReader::new(reader))?;
        if file.format != MODEL_FORMAT {
            return Err(TaggerError::Format(format!("unexpected format `{}`", file.format)));
        }
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(TaggerError::Format(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        if file.tag_set.is_empty() {
            return Err(TaggerError::Format("empty tag_set".into()));
        }
        let n = file.tag_set.len();
        for ws in file.weights.values() {
            if ws.iter().any(|&(c, w)| c as usize >= n || !w.is_finite()) {
                return Err(TaggerError::Format("weight entry out of range".into()));
            }
        }
        Ok(PerceptronModel {
            tag_set: file.tag_set,
            lexicon: file.lexicon.into_iter().collect(),
            weights: file.weights.into_iter().collect(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretok::pretokenize;

    fn sent(spec: &str) -> Vec<TaggedToken> {
        spec.split_whitespace()
            .map(|wt| {
                let (w, t) = wt.rsplit_once('/').unwrap();
                TaggedToken::new(w, t.parse().unwrap())
            })
            .collect()
    }

    fn toy_corpus() -> Vec<Vec<TaggedToken>> {
        let templates = [
            "the/DT dogs/NNS bark/VBP ./.",
            "dogs/NNS run/VBP fast/RB ./.",
            "a/DT cat/NN sleeps/VBZ ./.",
            "the/DT cat/NN saw/VBD dogs/NNS ./.",
            "we/PRP walk/VBP the/DT dogs/NNS daily/RB ./.",
        ];
        (0..50).map(|i| sent(templates[i % templates.len()])).collect()
    }

    #[test]
    fn rejects_zero_epochs() {
        assert!(matches!(
            PerceptronModel::train(&toy_corpus(), 0, 1),
            Err(TaggerError::ZeroEpochs)
        ));
        assert!(matches!(
            PerceptronModel::train(&[], 1, 1),
            Err(TaggerError::EmptyCorpus)
        ));
    }

    #[test]
    fn unambiguous_words_use_lexicon() {
        let model = PerceptronModel::train(&toy_corpus(), 3, 7).unwrap();
        assert_eq!(model.lexicon().get("dogs"), Some(&Tag::NNS));
        for text in ["dogs", "quickly dogs", "the the dogs", "sleeps dogs ."] {
            let tags = model.tag(&pretokenize(text));
            let dogs = tags.iter().find(|t| t.surface == "dogs").unwrap();
            assert_eq!(dogs.tag, Tag::NNS, "{text}");
        }
        assert!(model.tag(&[]).is_empty());
    }

    #[test]
    fn training_is_deterministic() {
        let a = PerceptronModel::train(&toy_corpus(), 4, 42).unwrap();
        let b = PerceptronModel::train(&toy_corpus(), 4, 42).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn serialization_round_trips() {
        let a = PerceptronModel::train(&toy_corpus(), 2, 3).unwrap();
        let b = PerceptronModel::load(&a.to_bytes()[..]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    /// Independent simulation of plain perceptron training that records the
    /// weights in effect at every classifier instance and averages them.
    #[test]
    fn averaged_weights_match_time_weighted_mean() {
        let corpus = vec![
            sent("time/NN flies/VBZ fast/RB"),
            sent("fruit/NN flies/NNS like/VBP bananas/NNS"),
        ];
        let epochs = 1;
        let model = PerceptronModel::train(&corpus, epochs, 0).unwrap();
        let tag_set = model.tag_set().to_vec();

        let mut current: HashMap<(String, usize), f64> = HashMap::new();
        let mut sum: HashMap<(String, usize), f64> = HashMap::new();
        let mut instances = 0usize;
        let mut feats = Vec::new();
        for s in &corpus {
            let words: Vec<&str> = s.iter().map(|t| t.surface.as_str()).collect();
            let ctx = context_of(&words);
            let (mut prev, mut prev2) = (None, None);
            for (i, tok) in s.iter().enumerate() {
                features::extract(i, &tok.surface, &ctx, prev, prev2, &mut feats);
                let mut scores = vec![0.0; tag_set.len()];
                for f in &feats {
                    for (c, s) in scores.iter_mut().enumerate() {
                        *s += current.get(&(f.clone(), c)).copied().unwrap_or(0.0);
                    }
                }
                let guess = argmax(&scores);
                for (k, v) in &current {
                    *sum.entry(k.clone()).or_default() += v;
                }
                instances += 1;
                let truth = tag_set.iter().position(|&t| t == tok.tag).unwrap();
                if truth != guess {
                    for f in &feats {
                        *current.entry((f.clone(), truth)).or_default() += 1.0;
                        *current.entry((f.clone(), guess)).or_default() -= 1.0;
                    }
                }
                prev2 = prev;
                prev = Some(tag_set[guess]);
            }
        }
        assert!(instances > 0);
        let mut checked = 0;
        for ((f, c), total) in &sum {
            let expected = total / instances as f64;
            let got = model.weight(f, tag_set[*c]);
            assert!((expected - got).abs() < 1e-12, "{f}/{c}: {expected} vs {got}");
            checked += 1;
        }
        assert!(checked > 10);
    }
}
