use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{bpe, unigram, wordpiece, SubwordError};

pub const UNK: &str = "<unk>";
pub const END_OF_WORD: &str = "</w>";
pub const CONTINUATION_PREFIX: &str = "##";
pub const WORD_START: char = '\u{2581}';
pub const MODEL_FORMAT: &str = "bite-subword";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelType {
    Bpe,
    WordPiece,
    Unigram,
}

impl ModelType {
    pub const ALL: [ModelType; 3] = [ModelType::Bpe, ModelType::WordPiece, ModelType::Unigram];
}

impl fmt::Display for ModelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelType::Bpe => "bpe",
            ModelType::WordPiece => "wordpiece",
            ModelType::Unigram => "unigram",
        })
    }
}

impl FromStr for ModelType {
    type Err = SubwordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bpe" => Ok(ModelType::Bpe),
            "wordpiece" => Ok(ModelType::WordPiece),
            "unigram" => Ok(ModelType::Unigram),
            _ => Err(SubwordError::UnknownModelType(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedSequence {
    pub ids: Vec<u32>,
    pub symbols: Vec<String>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn push(&mut self, id: u32, symbol: &str) {
        self.ids.push(id);
        self.symbols.push(symbol.to_string());
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    format_version: u32,
    model_type: ModelType,
    vocab: Vec<String>,
    #[serde(default)]
    merges: Vec<String>,
    #[serde(default)]
    scores: Vec<f64>,
    special_symbols: Vec<String>,
    #[serde(default)]
    continuation_prefix: Option<String>,
}

/// A trained subword vocabulary. Ids are dense from 0; id 0 is always
/// [`UNK`], followed by the other special symbols.
#[derive(Debug, Clone)]
pub struct SubwordModel {
    pub(super) model_type: ModelType,
    pub(super) vocab: Vec<String>,
    pub(super) ids: HashMap<String, u32>,
    pub(super) specials: Vec<String>,
    pub(super) merges: Vec<(String, String)>,
    /// Unigram log-probabilities, indexed by id (0 for specials).
    pub(super) scores: Vec<f64>,
    /// BPE replay table: pair of ids -> every (rank, merged id) it was
    /// merged at, ascending. A pair can be merged again after re-forming.
    pub(super) merge_table: HashMap<(u32, u32), Vec<(u32, u32)>>,
    pub(super) max_piece_chars: usize,
}

impl PartialEq for SubwordModel {
    fn eq(&self, other: &Self) -> bool {
        self.model_type == other.model_type
            && self.vocab == other.vocab
            && self.specials == other.specials
            && self.merges == other.merges
            && self.scores.len() == other.scores.len()
            && self.scores.iter().zip(&other.scores).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl SubwordModel {
    pub(super) fn from_parts(
        model_type: ModelType,
        vocab: Vec<String>,
        specials: Vec<String>,
        merges: Vec<(String, String)>,
        scores: Vec<f64>,
    ) -> Result<Self, SubwordError> {
        let bad = |m: String| Err(SubwordError::Format(m));
        if vocab.first().map(String::as_str) != Some(UNK) {
            return bad(format!("vocab must start with {UNK}"));
        }
        if specials.first().map(String::as_str) != Some(UNK) || vocab[..specials.len().min(vocab.len())] != specials[..] {
            return bad("special symbols must lead the vocab".into());
        }
        let mut ids = HashMap::with_capacity(vocab.len());
        for (i, s) in vocab.iter().enumerate() {
            if s.is_empty() {
                return bad(format!("empty symbol at id {i}"));
            }
            if ids.insert(s.clone(), i as u32).is_some() {
                return bad(format!("duplicate symbol `{s}`"));
            }
        }
        if model_type == ModelType::Unigram {
            if scores.len() != vocab.len() {
                return bad("unigram scores must parallel the vocab".into());
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return bad("unigram scores must be finite".into());
            }
        }
        let mut merge_table = HashMap::new();
        if model_type == ModelType::Bpe {
            for (rank, (a, b)) in merges.iter().enumerate() {
                let look = |s: &str| ids.get(s).copied();
                match (look(a), look(b), look(&format!("{a}{b}"))) {
                    (Some(x), Some(y), Some(m)) => {
                        merge_table.entry((x, y)).or_insert_with(Vec::new).push((rank as u32, m));
                    }
                    _ => return bad(format!("merge `{a} {b}` refers to symbols outside the vocab")),
                }
            }
        }
        let max_piece_chars = vocab.iter().map(|s| s.chars().count()).max().unwrap_or(1);
        Ok(SubwordModel {
            model_type,
            vocab,
            ids,
            specials,
            merges,
            scores,
            merge_table,
            max_piece_chars,
        })
    }

    pub fn model_type(&self) -> ModelType {
        self.model_type
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    /// Unigram log-probabilities by id; empty for the other model types.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Special symbols, [`UNK`] first.
    pub fn special_symbols(&self) -> &[String] {
        &self.specials
    }

    pub fn continuation_prefix(&self) -> Option<&str> {
        (self.model_type == ModelType::WordPiece).then_some(CONTINUATION_PREFIX)
    }

    pub fn id_of(&self, symbol: &str) -> Option<u32> {
        self.ids.get(symbol).copied()
    }

    pub fn symbol_of(&self, id: u32) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }

    pub fn unk_id(&self) -> u32 {
        0
    }

    pub fn is_special(&self, symbol: &str) -> bool {
        self.specials.iter().any(|s| s == symbol)
    }

    /// Segments one word into vocab ids. Special symbols map to their own id.
    pub fn encode_word(&self, word: &str) -> Vec<u32> {
        if let Some(id) = self.ids.get(word).filter(|&&id| (id as usize) < self.specials.len()) {
            return vec![*id];
        }
        if word.is_empty() {
            return Vec::new();
        }
        match self.model_type {
            ModelType::Bpe => bpe::segment(self, word),
            ModelType::WordPiece => wordpiece::segment(self, word),
            ModelType::Unigram => unigram::segment(self, word),
        }
        .unwrap_or_else(|| vec![self.unk_id()])
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> EncodedSequence {
        let mut out = EncodedSequence::default();
        for t in tokens {
            for id in self.encode_word(t.as_ref()) {
                out.push(id, &self.vocab[id as usize]);
            }
        }
        out
    }

    /// Rebuilds the token sequence from ids. Every `<unk>` comes back as the
    /// literal `<unk>` token.
    pub fn decode(&self, ids: &[u32]) -> Result<Vec<String>, SubwordError> {
        let mut words: Vec<String> = Vec::new();
        let mut open = false;
        for &id in ids {
            let sym = self.symbol_of(id).ok_or(SubwordError::IdOutOfRange {
                id,
                vocab_size: self.vocab.len(),
            })?;
            if (id as usize) < self.specials.len() {
                words.push(sym.to_string());
                open = false;
                continue;
            }
            match self.model_type {
                ModelType::Bpe => {
                    let (piece, ends) = match sym.strip_suffix(END_OF_WORD) {
                        Some(p) => (p, true),
                        None => (sym, false),
                    };
                    if open {
                        words.last_mut().expect("open word").push_str(piece);
                    } else {
                        words.push(piece.to_string());
                    }
                    open = !ends;
                }
                ModelType::WordPiece => match sym.strip_prefix(CONTINUATION_PREFIX) {
                    Some(rest) if !words.is_empty() && open => words.last_mut().expect("word").push_str(rest),
                    _ => {
                        words.push(sym.to_string());
                        open = true;
                    }
                },
                ModelType::Unigram => match sym.strip_prefix(WORD_START) {
                    Some(rest) => {
                        words.push(rest.to_string());
                        open = true;
                    }
                    None if open => words.last_mut().expect("word").push_str(sym),
                    None => {
                        words.push(sym.to_string());
                        open = true;
                    }
                },
            }
        }
        Ok(words)
    }

    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), SubwordError> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            format_version: MODEL_FORMAT_VERSION,
            model_type: self.model_type,
            vocab: self.vocab.clone(),
            merges: self.merges.iter().map(|(a, b)| format!("{a} {b}")).collect(),
            scores: self.scores.clone(),
            special_symbols: self.specials.clone(),
            continuation_prefix: self.continuation_prefix().map(str::to_string),
        };
        serde_json::to_writer_pretty(&mut writer, &file)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.save(&mut buf).expect("in-memory write");
        buf
    }

    pub fn load<R: Read>(reader: R) -> Result<Self, SubwordError> {
        let file: ModelFile = serde_json::from_reader(reader)?;
        if file.format != MODEL_FORMAT {
            return Err(SubwordError::Format(format!("not a subword model (format `{}`)", file.format)));
        }
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(SubwordError::Format(format!(
                "unsupported format_version {}",
                file.format_version
            )));
        }
        let merges = file
            .merges
            .iter()
            .map(|m| {
                m.split_once(' ')
                    .map(|(a, b)| (a.to_string(), b.to_string()))
                    .ok_or_else(|| SubwordError::Format(format!("bad merge line `{m}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        SubwordModel::from_parts(file.model_type, file.vocab, file.special_symbols, merges, file.scores)
    }
}
