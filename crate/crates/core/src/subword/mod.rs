//! Data-driven subword tokenizers: BPE, WordPiece and unigram LM.
//!
//! All three work inside pretokenized words; nothing merges across a word
//! boundary. Special symbols are atomic and always in the vocabulary.

mod bpe;
mod model;
mod unigram;
mod wordpiece;

use std::collections::BTreeMap;

pub use model::{
    EncodedSequence, ModelType, SubwordModel, CONTINUATION_PREFIX, END_OF_WORD, MODEL_FORMAT,
    MODEL_FORMAT_VERSION, UNK, WORD_START,
};
pub use unigram::{UnigramOptions, UnigramTrace};

#[derive(Debug, thiserror::Error)]
pub enum SubwordError {
    #[error(
        "vocab_size {requested} is too small: {characters} characters and {specials} special \
         symbols need more than {floor}"
    )]
    VocabTooSmall {
        requested: usize,
        floor: usize,
        characters: usize,
        specials: usize,
    },
    #[error("training corpus has no words")]
    EmptyCorpus,
    #[error("id {id} is out of range for a vocab of {vocab_size}")]
    IdOutOfRange { id: u32, vocab_size: usize },
    #[error("unknown model type `{0}` (expected bpe, wordpiece or unigram)")]
    UnknownModelType(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub model_type: ModelType,
    /// Total vocabulary size, special symbols included.
    pub vocab_size: usize,
    /// Reserved symbols besides `<unk>`, which is always present.
    pub special_symbols: Vec<String>,
    pub unigram: UnigramOptions,
}

impl TrainerConfig {
    pub fn new(model_type: ModelType, vocab_size: usize) -> Self {
        TrainerConfig {
            model_type,
            vocab_size,
            special_symbols: crate::bite::special_symbols(),
            unigram: UnigramOptions::default(),
        }
    }

    fn specials(&self) -> Vec<String> {
        let mut out = vec![UNK.to_string()];
        for s in &self.special_symbols {
            if !s.is_empty() && !out.contains(s) {
                out.push(s.clone());
            }
        }
        out
    }
}

/// Word frequencies of a corpus of token sequences. Special symbols and
/// empty tokens are left out; they never take part in training.
pub fn count_words<I, S, T>(sentences: I, special_symbols: &[String]) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in sentences {
        for tok in sentence {
            let tok = tok.as_ref();
            if tok.is_empty() || tok == UNK || special_symbols.iter().any(|s| s == tok) {
                continue;
            }
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

pub fn train(config: &TrainerConfig, counts: &BTreeMap<String, u64>) -> Result<SubwordModel, SubwordError> {
    if counts.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    let specials = config.specials();
    match config.model_type {
        ModelType::Bpe => bpe::train(counts, config.vocab_size, specials),
        ModelType::WordPiece => wordpiece::train(counts, config.vocab_size, specials),
        ModelType::Unigram => unigram::train(counts, config.vocab_size, specials, &config.unigram).map(|(m, _)| m),
    }
}

/// Convenience wrapper: counts the corpus, then trains.
pub fn train_on<I, S, T>(config: &TrainerConfig, sentences: I) -> Result<SubwordModel, SubwordError>
where
    I: IntoIterator<Item = S>,
    S: IntoIterator<Item = T>,
    T: AsRef<str>,
{
    let counts = count_words(sentences, &config.specials());
    train(config, &counts)
}

/// Unigram training that also returns the per-iteration log-likelihoods.
pub fn train_unigram_traced(
    config: &TrainerConfig,
    counts: &BTreeMap<String, u64>,
) -> Result<(SubwordModel, UnigramTrace), SubwordError> {
    if counts.is_empty() {
        return Err(SubwordError::EmptyCorpus);
    }
    unigram::train(counts, config.vocab_size, config.specials(), &config.unigram)
}

fn check_floor(requested: usize, characters: usize, specials: usize) -> Result<(), SubwordError> {
    let floor = characters + specials;
    if requested <= floor {
        return Err(SubwordError::VocabTooSmall {
            requested,
            floor,
            characters,
            specials,
        });
    }
    Ok(())
}
