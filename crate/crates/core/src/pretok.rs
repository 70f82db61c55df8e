//! Whitespace and punctuation pretokenizer.
//!
//! Whitespace separates tokens and is dropped. Every punctuation or symbol
//! character (ASCII punctuation plus Unicode categories `P*` and `S*`)
//! becomes a token of its own. No normalization is applied.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory as Gc};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordToken {
    pub surface: String,
    /// Byte offsets into the source text.
    pub byte_span: Range<usize>,
    pub is_punct: bool,
}

pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        return c.is_ascii_punctuation();
    }
    matches!(
        get_general_category(c),
        Gc::ConnectorPunctuation
            | Gc::DashPunctuation
            | Gc::OpenPunctuation
            | Gc::ClosePunctuation
            | Gc::InitialPunctuation
            | Gc::FinalPunctuation
            | Gc::OtherPunctuation
            | Gc::MathSymbol
            | Gc::CurrencySymbol
            | Gc::ModifierSymbol
            | Gc::OtherSymbol
    )
}

pub fn pretokenize(text: &str) -> Vec<WordToken> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let flush = |out: &mut Vec<WordToken>, start: &mut Option<usize>, end: usize| {
        if let Some(s) = start.take() {
            out.push(WordToken {
                surface: text[s..end].to_string(),
                byte_span: s..end,
                is_punct: false,
            });
        }
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            flush(&mut out, &mut start, i);
        } else if is_punctuation(c) {
            flush(&mut out, &mut start, i);
            let end = i + c.len_utf8();
            out.push(WordToken {
                surface: text[i..end].to_string(),
                byte_span: i..end,
                is_punct: true,
            });
        } else if start.is_none() {
            start = Some(i);
        }
    }
    flush(&mut out, &mut start, text.len());
    out
}

/// Convenience wrapper returning only the surfaces.
pub fn pretokenize_surfaces(text: &str) -> Vec<String> {
    pretokenize(text).into_iter().map(|t| t.surface).collect()
}
