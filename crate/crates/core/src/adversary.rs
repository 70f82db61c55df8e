//! Inflectional perturbations: swap content words for other inflections of
//! the same lemma, either greedily against a scoring objective or by
//! uniform sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::morph::MorphLexicon;
use crate::tagger::{PerceptronModel, TaggedToken};
use crate::Tag;

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, thiserror::Error)]
pub enum AdversaryError {
    #[error("token {position} is tagged {tag}, which is not a content tag")]
    NotContent { position: usize, tag: Tag },
    #[error("scorer failed at token {position}: {source}")]
    Scorer {
        position: usize,
        #[source]
        source: BoxError,
    },
    #[error("scorer failed on the clean sentence: {0}")]
    CleanScore(#[source] BoxError),
    #[error("k must be at least 1")]
    ZeroSamples,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationCandidate {
    pub position: usize,
    pub original: String,
    pub variant: String,
    pub tag_of_variant: Tag,
}

/// The other inflections of `surface`'s lemma within its lexical category,
/// each with the tag it carries in the dictionary.
pub fn variants(lexicon: &MorphLexicon, surface: &str, tag: Tag) -> Result<Vec<(String, Tag)>, AdversaryError> {
    let pos = tag
        .coarse()
        .ok_or(AdversaryError::NotContent { position: 0, tag })?;
    if tag.is_proper_noun() {
        return Ok(Vec::new());
    }
    let lemma = lexicon.lemmatize(surface, tag).expect("content tag");
    Ok(lexicon
        .paradigm(&lemma, pos)
        .into_iter()
        .filter(|(form, t)| form != surface && lexicon.lemmatize(form, *t).is_ok_and(|l| l == lemma))
        .collect())
}

/// Every single-word substitution available in `sentence`.
pub fn candidates(lexicon: &MorphLexicon, sentence: &[TaggedToken]) -> Vec<PerturbationCandidate> {
    let mut out = Vec::new();
    for (position, tok) in sentence.iter().enumerate() {
        let Ok(vs) = variants(lexicon, &tok.surface, tok.tag) else {
            continue;
        };
        out.extend(vs.into_iter().map(|(variant, tag_of_variant)| PerturbationCandidate {
            position,
            original: tok.surface.clone(),
            variant,
            tag_of_variant,
        }));
    }
    out
}

/// Objective maximized by [`greedy_attack`].
pub trait Scorer {
    fn score(&mut self, sentence: &[TaggedToken]) -> Result<f64, BoxError>;
}

impl<F> Scorer for F
where
    F: FnMut(&[TaggedToken]) -> Result<f64, BoxError>,
{
    fn score(&mut self, sentence: &[TaggedToken]) -> Result<f64, BoxError> {
        self(sentence)
    }
}

/// Number of positions whose surface differs from the clean sentence.
pub struct Hamming {
    clean: Vec<String>,
}

impl Hamming {
    pub fn new(clean: &[TaggedToken]) -> Self {
        Hamming {
            clean: clean.iter().map(|t| t.surface.clone()).collect(),
        }
    }
}

impl Scorer for Hamming {
    fn score(&mut self, sentence: &[TaggedToken]) -> Result<f64, BoxError> {
        if sentence.len() != self.clean.len() {
            return Err(format!("length {} differs from the clean {}", sentence.len(), self.clean.len()).into());
        }
        Ok(sentence.iter().zip(&self.clean).filter(|(a, b)| a.surface != **b).count() as f64)
    }
}

/// `1 - similarity` between the encoding of a candidate and that of the
/// clean sentence, under any encoder.
pub struct EncodingDivergence<F> {
    clean: Vec<String>,
    encode: F,
}

impl<F> EncodingDivergence<F>
where
    F: FnMut(&[TaggedToken]) -> Vec<String>,
{
    pub fn new(clean: &[TaggedToken], mut encode: F) -> Self {
        let clean = encode(clean);
        EncodingDivergence { clean, encode }
    }
}

impl<F> Scorer for EncodingDivergence<F>
where
    F: FnMut(&[TaggedToken]) -> Vec<String>,
{
    fn score(&mut self, sentence: &[TaggedToken]) -> Result<f64, BoxError> {
        let enc = (self.encode)(sentence);
        Ok(1.0 - crate::metrics::similarity(&self.clean, &enc))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attack {
    pub tokens: Vec<TaggedToken>,
    pub score: f64,
}

/// Left to right, each content word takes whichever of its variants (or
/// itself) scores highest with all earlier choices fixed. Only a strictly
/// higher score replaces the current word.
pub fn greedy_attack<S: Scorer + ?Sized>(
    lexicon: &MorphLexicon,
    sentence: &[TaggedToken],
    scorer: &mut S,
) -> Result<Attack, AdversaryError> {
    let mut current = sentence.to_vec();
    let mut best = scorer.score(&current).map_err(AdversaryError::CleanScore)?;
    for position in 0..sentence.len() {
        let Ok(vs) = variants(lexicon, &sentence[position].surface, sentence[position].tag) else {
            continue;
        };
        let mut choice: Option<TaggedToken> = None;
        for (form, tag) in vs {
            let original = std::mem::replace(&mut current[position], TaggedToken::new(form, tag));
            let s = scorer
                .score(&current)
                .map_err(|source| AdversaryError::Scorer { position, source });
            let candidate = std::mem::replace(&mut current[position], original);
            let s = s?;
            if s > best {
                best = s;
                choice = Some(candidate);
            }
        }
        if let Some(c) = choice {
            current[position] = c;
        }
    }
    Ok(Attack {
        tokens: current,
        score: best,
    })
}

/// `k` independent perturbations: every content word is replaced by a
/// uniform draw from itself and its variants.
pub fn sample_perturbations(
    lexicon: &MorphLexicon,
    sentence: &[TaggedToken],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<TaggedToken>>, AdversaryError> {
    if k == 0 {
        return Err(AdversaryError::ZeroSamples);
    }
    let options: Vec<Vec<(String, Tag)>> = sentence
        .iter()
        .map(|t| variants(lexicon, &t.surface, t.tag).unwrap_or_default())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut s = sentence.to_vec();
        for (tok, opts) in s.iter_mut().zip(&options) {
            if opts.is_empty() {
                continue;
            }
            let pick = rng.gen_range(0..=opts.len());
            if pick > 0 {
                let (form, tag) = &opts[pick - 1];
                *tok = TaggedToken::new(form.clone(), *tag);
            }
        }
        out.push(s);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Greedy,
    Sample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    EncodingDivergence,
    Hamming,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "sample" => Ok(Strategy::Sample),
            _ => Err(format!("unknown strategy `{s}` (expected greedy or sample)")),
        }
    }
}

impl std::str::FromStr for ScorerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "encoding-divergence" => Ok(ScorerKind::EncodingDivergence),
            "hamming" => Ok(ScorerKind::Hamming),
            _ => Err(format!("unknown scorer `{s}` (expected encoding-divergence or hamming)")),
        }
    }
}

/// Seed for one line of a multi-line run, so that samples do not depend on
/// how lines are batched.
pub fn line_seed(seed: u64, line_no: usize) -> u64 {
    seed ^ (line_no as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Replaces dictionary tags with the tagger's reading of the new words.
pub fn retag(tagger: &PerceptronModel, sentence: &[TaggedToken]) -> Vec<TaggedToken> {
    let words: Vec<&str> = sentence.iter().map(|t| t.surface.as_str()).collect();
    words
        .iter()
        .zip(tagger.tag_words(&words))
        .map(|(w, t)| TaggedToken::new(*w, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> &'static MorphLexicon {
        MorphLexicon::bundled()
    }

    fn sent(s: &[(&str, Tag)]) -> Vec<TaggedToken> {
        s.iter().map(|(w, t)| TaggedToken::new(*w, *t)).collect()
    }

    #[test]
    fn closure_of_go() {
        let v = variants(lex(), "went", Tag::VBD).unwrap();
        let forms: Vec<&str> = v.iter().map(|(f, _)| f.as_str()).collect();
        assert_eq!(forms, ["go", "going", "gone", "goes"]);
        assert!(v.contains(&("gone".to_string(), Tag::VBN)));
        assert_eq!(variants(lex(), "cat", Tag::NN).unwrap(), [("cats".to_string(), Tag::NNS)]);
        assert!(variants(lex(), ".", Tag::Period).is_err());
        assert!(variants(lex(), "London", Tag::NNP).unwrap().is_empty());
    }

    #[test]
    fn tie_keeps_original() {
        let s = sent(&[("the", Tag::DT), ("cat", Tag::NN), ("went", Tag::VBD)]);
        let mut constant = |_: &[TaggedToken]| -> Result<f64, BoxError> { Ok(1.0) };
        let a = greedy_attack(lex(), &s, &mut constant).unwrap();
        assert_eq!(a.tokens, s);
    }

    #[test]
    fn hamming_perturbs_every_content_word() {
        let s = sent(&[("the", Tag::DT), ("cat", Tag::NN), ("went", Tag::VBD), ("home", Tag::NN)]);
        let a = greedy_attack(lex(), &s, &mut Hamming::new(&s)).unwrap();
        assert_eq!(a.score, 3.0);
        assert_eq!(a.tokens[0].surface, "the");
        for i in 1..4 {
            assert_ne!(a.tokens[i].surface, s[i].surface);
            let l = |t: &TaggedToken| lex().lemmatize(&t.surface, t.tag).unwrap();
            assert_eq!(l(&a.tokens[i]), l(&s[i]));
        }
    }

    #[test]
    fn scorer_errors_carry_position() {
        let s = sent(&[("a", Tag::DT), ("cat", Tag::NN)]);
        let mut calls = 0;
        let mut failing = |_: &[TaggedToken]| -> Result<f64, BoxError> {
            calls += 1;
            if calls > 1 {
                Err("boom".into())
            } else {
                Ok(0.0)
            }
        };
        match greedy_attack(lex(), &s, &mut failing) {
            Err(AdversaryError::Scorer { position, .. }) => assert_eq!(position, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sampling() {
        let s = sent(&[("the", Tag::DT), ("dogs", Tag::NNS), ("barked", Tag::VBD)]);
        let a = sample_perturbations(lex(), &s, 4, 7).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, sample_perturbations(lex(), &s, 4, 7).unwrap());
        let plain = sent(&[("of", Tag::IN), (".", Tag::Period)]);
        assert_eq!(sample_perturbations(lex(), &plain, 3, 1).unwrap(), vec![plain.clone(); 3]);
        assert!(matches!(sample_perturbations(lex(), &s, 0, 1), Err(AdversaryError::ZeroSamples)));
    }
}
