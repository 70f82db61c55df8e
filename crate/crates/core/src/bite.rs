//! The base-inflection transform and its inverse.
//!
//! Content words (NN*, VB*, JJ*) become their lemma, followed by a bracketed
//! tag such as `[VBD]` when the word is inflected. Everything else passes
//! through untouched.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::morph::MorphLexicon;
use crate::pretok::is_punctuation;
use crate::tagger::TaggedToken;
use crate::tags::{Tag, INFLECTION_TAGS};

pub const DUMMY_SYMBOL: &str = "[INFL]";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "text")]
pub enum BiteSymbol {
    BaseForm(String),
    Inflection(Tag),
    Dummy,
    Passthrough(String),
}

impl BiteSymbol {
    pub fn text(&self) -> String {
        match self {
            BiteSymbol::BaseForm(s) | BiteSymbol::Passthrough(s) => s.clone(),
            BiteSymbol::Inflection(t) => t.symbol(),
            BiteSymbol::Dummy => DUMMY_SYMBOL.to_string(),
        }
    }

    /// Reads one symbol back from its text. Plain words come back as
    /// [`BiteSymbol::Passthrough`]; the two are not distinguishable in text.
    pub fn parse(s: &str) -> BiteSymbol {
        if s == DUMMY_SYMBOL {
            BiteSymbol::Dummy
        } else if let Some(t) = Tag::from_symbol(s) {
            BiteSymbol::Inflection(t)
        } else {
            BiteSymbol::Passthrough(s.to_string())
        }
    }

    pub fn is_marker(&self) -> bool {
        matches!(self, BiteSymbol::Inflection(_) | BiteSymbol::Dummy)
    }
}

impl fmt::Display for BiteSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Every symbol the transform can introduce: the eight inflection symbols
/// and the dummy.
pub fn special_symbols() -> Vec<String> {
    INFLECTION_TAGS
        .iter()
        .map(|t| t.symbol())
        .chain(std::iter::once(DUMMY_SYMBOL.to_string()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiteMode {
    /// No transform; words pass through as-is.
    Off,
    #[default]
    Standard,
    /// Every inflection symbol replaced by [`DUMMY_SYMBOL`].
    Ablated,
}

#[derive(Debug, thiserror::Error)]
#[error("unknown mode `{0}` (expected one of: off, standard, ablated)")]
pub struct UnknownMode(pub String);

impl FromStr for BiteMode {
    type Err = UnknownMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(BiteMode::Off),
            "standard" => Ok(BiteMode::Standard),
            "ablated" => Ok(BiteMode::Ablated),
            _ => Err(UnknownMode(s.to_string())),
        }
    }
}

impl fmt::Display for BiteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BiteMode::Off => "off",
            BiteMode::Standard => "standard",
            BiteMode::Ablated => "ablated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("inflection symbol at position {position} does not follow a base form")]
    Dangling { position: usize },
    #[error("dummy symbol at position {position}: ablated encodings cannot be decoded")]
    NonInvertible { position: usize },
}

pub fn encode(tokens: &[TaggedToken], lexicon: &MorphLexicon, mode: BiteMode) -> Vec<BiteSymbol> {
    let mut out = Vec::with_capacity(tokens.len() * 2);
    for tok in tokens {
        if mode == BiteMode::Off || !tok.tag.is_content() {
            out.push(BiteSymbol::Passthrough(tok.surface.clone()));
            continue;
        }
        let lemma = lexicon
            .lemmatize(&tok.surface, tok.tag)
            .expect("content tag");
        let infl = lexicon.inflection_given_lemma(&tok.surface, tok.tag, &lemma);
        out.push(BiteSymbol::BaseForm(lemma));
        match (infl, mode) {
            (Some(t), BiteMode::Standard) => out.push(BiteSymbol::Inflection(t)),
            (Some(_), BiteMode::Ablated) => out.push(BiteSymbol::Dummy),
            _ => {}
        }
    }
    out
}

/// Text form of [`encode`].
pub fn encode_to_strings(tokens: &[TaggedToken], lexicon: &MorphLexicon, mode: BiteMode) -> Vec<String> {
    encode(tokens, lexicon, mode).iter().map(BiteSymbol::text).collect()
}

pub fn decode(symbols: &[BiteSymbol], lexicon: &MorphLexicon) -> Result<Vec<String>, DecodeError> {
    let mut out: Vec<String> = Vec::with_capacity(symbols.len());
    let mut prev_is_word = false;
    for (position, sym) in symbols.iter().enumerate() {
        match sym {
            BiteSymbol::Dummy => return Err(DecodeError::NonInvertible { position }),
            BiteSymbol::Inflection(tag) => {
                if !prev_is_word {
                    return Err(DecodeError::Dangling { position });
                }
                let base = out.pop().expect("preceding word");
                let surface = agreeing_form(&base, *tag, symbols, position - 1, lexicon)
                    .unwrap_or_else(|| lexicon.inflect(&base, Some(*tag)));
                out.push(surface);
                prev_is_word = false;
            }
            BiteSymbol::BaseForm(s) | BiteSymbol::Passthrough(s) => {
                out.push(s.clone());
                prev_is_word = true;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Number {
    First,
    Singular,
    Plural,
}

fn pronoun_number(w: &str) -> Option<Number> {
    match w {
        "i" => Some(Number::First),
        "he" | "she" | "it" | "this" | "one" | "everyone" | "everybody" | "nobody" | "somebody"
        | "someone" | "anyone" | "anybody" | "each" | "everything" | "nothing" | "something" => {
            Some(Number::Singular)
        }
        "we" | "you" | "they" | "these" | "those" | "both" | "many" | "few" | "several" | "others" => {
            Some(Number::Plural)
        }
        _ => None,
    }
}

/// Words looked through when searching for the subject.
fn transparent(w: &str) -> bool {
    matches!(
        w,
        "not" | "also" | "still" | "never" | "always" | "only" | "then" | "certainly" | "indeed"
            | "thus" | "therefore" | "already" | "now" | "often" | "all" | "who" | "which" | "that"
            | "surely" | "really" | "so" | "too" | "just" | "here" | "however" | "nevertheless"
    )
}

fn word_at(symbols: &[BiteSymbol], i: usize) -> Option<String> {
    match &symbols[i] {
        BiteSymbol::BaseForm(s) | BiteSymbol::Passthrough(s) => Some(s.to_lowercase()),
        _ => None,
    }
}

fn is_plural_at(symbols: &[BiteSymbol], i: usize) -> bool {
    matches!(symbols.get(i + 1), Some(BiteSymbol::Inflection(Tag::NNS)))
}

fn is_boundary(w: &str) -> bool {
    let mut c = w.chars();
    matches!((c.next(), c.next()), (Some(ch), None) if is_punctuation(ch))
}

/// Number of the first nominal to the right of `from`, for `there was/were`
/// and inverted questions.
fn number_rightwards(symbols: &[BiteSymbol], from: usize) -> Option<Number> {
    let mut seen = 0;
    for i in from..symbols.len() {
        let Some(w) = word_at(symbols, i) else { continue };
        if is_boundary(&w) {
            return None;
        }
        if let Some(n) = pronoun_number(&w) {
            return Some(n);
        }
        if is_plural_at(symbols, i) {
            return Some(Number::Plural);
        }
        seen += 1;
        if seen == 4 {
            break;
        }
    }
    None
}

fn is_preposition(w: &str) -> bool {
    matches!(w, "of" | "in" | "for" | "from" | "on" | "at" | "with" | "to" | "by" | "against" | "under")
}

/// From a nominal at `i`, walks back over `X of the Y` chains to the head `X`.
fn phrase_head(symbols: &[BiteSymbol], mut i: usize) -> usize {
    'outer: loop {
        let mut words = 0;
        for k in (0..i).rev() {
            let Some(w) = word_at(symbols, k) else { continue };
            let verbal = matches!(
                symbols.get(k + 1),
                Some(BiteSymbol::Inflection(t)) if t.coarse() == Some(crate::tags::CoarsePos::Verb)
            );
            if is_boundary(&w) || words == 3 || verbal || matches!(w.as_str(), "which" | "who" | "whom" | "that") {
                break 'outer;
            }
            if is_preposition(&w) {
                match (0..k).rev().find(|&j| word_at(symbols, j).is_some()) {
                    Some(j) if !word_at(symbols, j).is_some_and(|h| is_boundary(&h)) => {
                        i = j;
                        continue 'outer;
                    }
                    _ => break 'outer,
                }
            }
            words += 1;
        }
        break;
    }
    i
}

/// `X and Y` within a few words to the left of `i`.
fn coordinated(symbols: &[BiteSymbol], i: usize) -> bool {
    let mut words = 0;
    for k in (0..i).rev() {
        let Some(w) = word_at(symbols, k) else { continue };
        if is_boundary(&w) || words == 3 {
            return false;
        }
        if w == "and" {
            return k > 0 && word_at(symbols, k - 1).is_some_and(|p| !is_boundary(&p) && !is_preposition(&p))
                || matches!(symbols.get(k.wrapping_sub(1)), Some(BiteSymbol::Inflection(_)));
        }
        words += 1;
    }
    false
}

fn subject_number(symbols: &[BiteSymbol], base: usize) -> Option<Number> {
    // Inversion: `were it not for`, `were we to`; a question when it opens
    // the sentence.
    let next = (base + 2..symbols.len()).find_map(|i| word_at(symbols, i));
    if let Some(n) = next.as_deref().and_then(pronoun_number) {
        let opens = (0..base).rev().find_map(|i| word_at(symbols, i)).map_or(true, |w| is_boundary(&w));
        if opens {
            return Some(n);
        }
        if matches!(symbols.get(base + 1), Some(BiteSymbol::Inflection(Tag::VBD))) {
            return Some(Number::Plural);
        }
    }
    let mut last: Option<String> = None;
    for i in (0..base).rev() {
        let Some(w) = word_at(symbols, i) else { continue };
        if is_boundary(&w) {
            // `the officers, who were`, `difficulties, too, were`
            if w == "," && last.as_deref().is_some_and(transparent) {
                continue;
            }
            // A parenthetical `, too ,` between subject and verb.
            if w == "," && last.is_none() && i >= 2 {
                let inner = word_at(symbols, i - 1);
                if inner.as_deref().is_some_and(transparent) && word_at(symbols, i - 2).as_deref() == Some(",") {
                    last = inner;
                    continue;
                }
            }
            return None;
        }
        if w == "there" {
            return number_rightwards(symbols, base + 2).or(Some(Number::Singular));
        }
        if let Some(n) = pronoun_number(&w) {
            return Some(n);
        }
        if transparent(&w) {
            last = Some(w);
            continue;
        }
        // A relative clause attaches to the nearest noun.
        let relative = matches!(last.as_deref(), Some("who" | "which" | "that"));
        let head = if relative { i } else { phrase_head(symbols, i) };
        if let Some(n) = word_at(symbols, head).as_deref().and_then(pronoun_number) {
            return Some(n);
        }
        if is_plural_at(symbols, head) || coordinated(symbols, head) {
            return Some(Number::Plural);
        }
        return Some(Number::Singular);
    }
    number_rightwards(symbols, base + 2)
}

/// Overabundant forms of `be` (was/were, are/am) chosen by subject
/// agreement. `None` leaves the choice to the preference order.
fn agreeing_form(
    base: &str,
    tag: Tag,
    symbols: &[BiteSymbol],
    base_pos: usize,
    lexicon: &MorphLexicon,
) -> Option<String> {
    if !base.eq_ignore_ascii_case("be") {
        return None;
    }
    let forms = lexicon.listed_forms(base, tag)?;
    let number = subject_number(symbols, base_pos)?;
    let want = match (tag, number) {
        (Tag::VBD, Number::Plural) => "were",
        (Tag::VBD, _) => "was",
        (Tag::VBP, Number::First) => "am",
        (Tag::VBP, _) => "are",
        _ => return None,
    };
    let form = forms.iter().find(|f| f.as_str() == want)?;
    let rank_one = lexicon.inflect(base, Some(tag));
    // Re-apply the casing the lexicon gave the preferred form.
    Some(if rank_one.chars().next().is_some_and(char::is_uppercase) {
        let mut c = form.chars();
        c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
    } else if rank_one.len() > 1 && rank_one.chars().all(|c| !c.is_lowercase()) {
        form.to_uppercase()
    } else {
        form.clone()
    })
}

pub fn decode_strings<S: AsRef<str>>(symbols: &[S], lexicon: &MorphLexicon) -> Result<Vec<String>, DecodeError> {
    let parsed: Vec<BiteSymbol> = symbols.iter().map(|s| BiteSymbol::parse(s.as_ref())).collect();
    decode(&parsed, lexicon)
}

/// Joins tokens with single spaces, without a space before punctuation.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.as_ref();
        let mut chars = t.chars();
        let punct = matches!((chars.next(), chars.next()), (Some(c), None) if is_punctuation(c));
        if i > 0 && !punct {
            out.push(' ');
        }
        out.push_str(t);
    }
    out
}
