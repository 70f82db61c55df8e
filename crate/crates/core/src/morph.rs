//! Lemmatization and reinflection: dictionary lookup first, ordered suffix
//! rules as fallback.
//!
//! Lookups are case-insensitive. The capitalization pattern of the input
//! (lower, Title, UPPER) is carried over to the output, so `Went/VBD`
//! lemmatizes to `Go` and `Go + VBD` reinflects to `Went`.

use std::collections::{HashMap, HashSet};
use std::io::BufRead;
use std::sync::OnceLock;

use crate::tags::{CoarsePos, Tag};

static LEMMAS_TSV: &str = include_str!("../data/lexicon/lemmas.tsv");
static INFLECTIONS_TSV: &str = include_str!("../data/lexicon/inflections.tsv");

#[derive(Debug, thiserror::Error)]
pub enum MorphError {
    #[error("`{0}` is not a noun, verb or adjective tag")]
    NotContent(Tag),
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Caps {
    Lower,
    Title,
    Upper,
    Mixed,
}

fn caps_of(s: &str) -> Caps {
    let letters: Vec<char> = s.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.iter().all(|c| !c.is_uppercase()) {
        Caps::Lower
    } else if letters.len() > 1 && letters.iter().all(|c| !c.is_lowercase()) {
        Caps::Upper
    } else if letters.first().is_some_and(|c| c.is_uppercase())
        && letters[1..].iter().all(|c| !c.is_uppercase())
    {
        Caps::Title
    } else {
        Caps::Mixed
    }
}

fn apply_caps(s: &str, caps: Caps) -> String {
    match caps {
        Caps::Lower | Caps::Mixed => s.to_string(),
        Caps::Upper => s.to_uppercase(),
        Caps::Title => {
            let mut chars = s.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn vowel_groups(w: &str) -> usize {
    let mut groups = 0;
    let mut in_group = false;
    for (i, c) in w.chars().enumerate() {
        let v = is_vowel(c) || (c == 'y' && i > 0);
        if v && !in_group {
            groups += 1;
        }
        in_group = v;
    }
    groups
}

/// Monosyllabic consonant-vowel-consonant stems double their final consonant
/// before a vowel-initial suffix (stop -> stopped).
fn doubles_final(w: &str) -> bool {
    let c: Vec<char> = w.chars().collect();
    let n = c.len();
    n >= 3
        && c[n - 1].is_ascii_lowercase()
        && !is_vowel(c[n - 1])
        && !matches!(c[n - 1], 'w' | 'x' | 'y')
        && is_vowel(c[n - 2])
        && !is_vowel(c[n - 3])
        && vowel_groups(w) == 1
}

fn consonant_y(w: &str) -> bool {
    let mut it = w.chars().rev();
    matches!((it.next(), it.next()), (Some('y'), Some(p)) if !is_vowel(p))
}

fn sibilant(w: &str) -> bool {
    ["s", "x", "z", "ch", "sh"].iter().any(|e| w.ends_with(e))
}

/// Regular inflection of a lowercase lemma.
fn inflect_by_rules(l: &str, tag: Tag) -> String {
    let last = l.chars().last().unwrap_or(' ');
    let stem_y = || format!("{}i", &l[..l.len() - 1]);
    let doubled = || format!("{l}{last}");
    match tag {
        Tag::NNS | Tag::VBZ => {
            if sibilant(l) {
                format!("{l}es")
            } else if consonant_y(l) {
                format!("{}es", stem_y())
            } else {
                format!("{l}s")
            }
        }
        Tag::VBD | Tag::VBN => {
            if l.ends_with('e') {
                format!("{l}d")
            } else if consonant_y(l) {
                format!("{}ed", stem_y())
            } else if doubles_final(l) {
                format!("{}ed", doubled())
            } else {
                format!("{l}ed")
            }
        }
        Tag::VBG => {
            if let Some(stem) = l.strip_suffix("ie") {
                format!("{stem}ying")
            } else if l.len() > 2
                && l.ends_with('e')
                && !(l.ends_with("ee") || l.ends_with("ye") || l.ends_with("oe"))
            {
                format!("{}ing", &l[..l.len() - 1])
            } else if doubles_final(l) {
                format!("{}ing", doubled())
            } else {
                format!("{l}ing")
            }
        }
        Tag::JJR | Tag::JJS => {
            let (e, full) = if tag == Tag::JJR { ("r", "er") } else { ("st", "est") };
            if l.ends_with('e') {
                format!("{l}{e}")
            } else if consonant_y(l) {
                format!("{}{full}", stem_y())
            } else if doubles_final(l) {
                format!("{}{full}", doubled())
            } else {
                format!("{l}{full}")
            }
        }
        _ => l.to_string(),
    }
}

/// Suffix rewrites `(strip, append)`, tried in order. `None` marks the
/// undoubling rule (stopped -> stop) for the given suffix.
fn lemma_rules(tag: Tag) -> &'static [(&'static str, Option<&'static str>)] {
    match tag {
        Tag::NNS => &[
            ("ies", Some("y")),
            ("ves", Some("f")),
            ("ves", Some("fe")),
            ("sses", Some("ss")),
            ("xes", Some("x")),
            ("zes", Some("z")),
            ("ches", Some("ch")),
            ("shes", Some("sh")),
            ("ses", Some("s")),
            ("men", Some("man")),
            ("s", Some("")),
        ],
        Tag::VBZ => &[
            ("ies", Some("y")),
            ("sses", Some("ss")),
            ("xes", Some("x")),
            ("zes", Some("z")),
            ("ches", Some("ch")),
            ("shes", Some("sh")),
            ("oes", Some("o")),
            ("s", Some("")),
        ],
        Tag::VBD | Tag::VBN => &[("ied", Some("y")), ("ed", None), ("ed", Some("e")), ("ed", Some(""))],
        Tag::VBG => &[("ying", Some("ie")), ("ing", None), ("ing", Some("e")), ("ing", Some(""))],
        Tag::JJR => &[("ier", Some("y")), ("er", None), ("er", Some("e")), ("er", Some(""))],
        Tag::JJS => &[("iest", Some("y")), ("est", None), ("est", Some("e")), ("est", Some(""))],
        _ => &[],
    }
}

fn plausible(stem: &str) -> bool {
    !stem.is_empty() && stem.chars().any(|c| is_vowel(c) || c == 'y')
}

fn rule_candidates(lower: &str, tag: Tag) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for &(strip, append) in lemma_rules(tag) {
        let Some(stem) = lower.strip_suffix(strip) else {
            continue;
        };
        let cand = match append {
            Some(a) => format!("{stem}{a}"),
            None => {
                let mut it = stem.chars().rev();
                match (it.next(), it.next()) {
                    (Some(a), Some(b)) if a == b && !is_vowel(a) && !matches!(a, 's' | 'l' | 'z') => {
                        stem[..stem.len() - a.len_utf8()].to_string()
                    }
                    _ => continue,
                }
            }
        };
        if plausible(&cand) && !out.contains(&cand) {
            out.push(cand);
        }
    }
    out
}

/// Lemma and inflection tables plus the rule fallback. Immutable once built.
#[derive(Debug, Clone, Default)]
pub struct MorphLexicon {
    lemmas: HashMap<(String, Tag), String>,
    inflections: HashMap<(String, Tag), Vec<String>>,
    known_lemmas: HashSet<String>,
    known_by_pos: HashSet<(String, CoarsePos)>,
}

fn parse_tag(s: &str, file: &str, line: usize) -> Result<Tag, MorphError> {
    s.parse::<Tag>().map_err(|e| MorphError::Parse {
        file: file.to_string(),
        line,
        message: e.to_string(),
    })
}

impl MorphLexicon {
    /// The English lexicon shipped with the crate.
    pub fn bundled() -> &'static MorphLexicon {
        static LEXICON: OnceLock<MorphLexicon> = OnceLock::new();
        LEXICON.get_or_init(|| {
            MorphLexicon::from_tsv(LEMMAS_TSV.as_bytes(), INFLECTIONS_TSV.as_bytes())
                .expect("bundled lexicon is well-formed")
        })
    }

    /// Reads `surface<TAB>tag<TAB>lemma` and
    /// `lemma<TAB>tag<TAB>surface<TAB>preference-rank` records. Lines starting
    /// with `#` are comments.
    pub fn from_tsv<L: BufRead, I: BufRead>(lemmas: L, inflections: I) -> Result<Self, MorphError> {
        let mut lex = MorphLexicon::default();
        let mut ranked: HashMap<(String, Tag), Vec<(u32, String)>> = HashMap::new();
        for (i, line) in inflections.lines().enumerate() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let bad = |message: &str| MorphError::Parse {
                file: "inflections".into(),
                line: i + 1,
                message: message.into(),
            };
            if f.len() != 4 {
                return Err(bad("expected 4 tab-separated fields"));
            }
            let tag = parse_tag(f[1], "inflections", i + 1)?;
            let rank: u32 = f[3].parse().map_err(|_| bad("preference-rank is not an integer"))?;
            if f[0].is_empty() || f[2].is_empty() {
                return Err(bad("empty lemma or surface"));
            }
            ranked
                .entry((f[0].to_string(), tag))
                .or_default()
                .push((rank, f[2].to_string()));
        }
        for ((lemma, tag), mut forms) in ranked {
            forms.sort();
            if let Some(pos) = tag.coarse() {
                lex.known_by_pos.insert((lemma.clone(), pos));
            }
            lex.known_lemmas.insert(lemma.clone());
            lex.inflections
                .insert((lemma, tag), forms.into_iter().map(|(_, s)| s).collect());
        }
        for (i, line) in lemmas.lines().enumerate() {
            let line = line?;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 || f[0].is_empty() || f[2].is_empty() {
                return Err(MorphError::Parse {
                    file: "lemmas".into(),
                    line: i + 1,
                    message: "expected 3 non-empty tab-separated fields".into(),
                });
            }
            let tag = parse_tag(f[1], "lemmas", i + 1)?;
            lex.known_lemmas.insert(f[2].to_string());
            if let Some(pos) = tag.coarse() {
                lex.known_by_pos.insert((f[2].to_string(), pos));
            }
            lex.lemmas.insert((f[0].to_string(), tag), f[2].to_string());
        }
        Ok(lex)
    }

    pub fn lemma_entries(&self) -> impl Iterator<Item = (&str, Tag, &str)> {
        self.lemmas.iter().map(|((s, t), l)| (s.as_str(), *t, l.as_str()))
    }

    pub fn lemma_count(&self) -> usize {
        self.known_lemmas.len()
    }

    /// Every listed surface for `(lemma, tag)`, preferred first.
    pub fn listed_forms(&self, lemma: &str, tag: Tag) -> Option<&[String]> {
        self.inflections
            .get(&(lemma.to_lowercase(), tag))
            .map(Vec::as_slice)
    }

    pub fn is_known_lemma(&self, lemma: &str) -> bool {
        self.known_lemmas.contains(&lemma.to_lowercase())
    }

    fn lookup_lemma(&self, lower: &str, tag: Tag) -> Option<&str> {
        if let Some(l) = self.lemmas.get(&(lower.to_string(), tag)) {
            return Some(l);
        }
        // A tagger confusing e.g. VBD and VBN should still find the lemma.
        let pos = tag.coarse()?;
        pos.tags()
            .iter()
            .filter(|&&t| t != tag && !t.is_base_form())
            .find_map(|&t| self.lemmas.get(&(lower.to_string(), t)).map(String::as_str))
    }

    fn lemma_by_rules(&self, surface: &str, lower: &str, tag: Tag) -> String {
        let candidates = rule_candidates(lower, tag);
        if let Some(c) = candidates.iter().find(|c| self.known_lemmas.contains(c.as_str())) {
            return c.clone();
        }
        let shortest = |it: &mut dyn Iterator<Item = &String>| {
            it.fold(None::<&String>, |best, c| match best {
                Some(b) if b.chars().count() <= c.chars().count() => Some(b),
                _ => Some(c),
            })
            .cloned()
        };
        let reversible = shortest(&mut candidates.iter().filter(|c| inflect_by_rules(c, tag) == lower));
        match reversible.or_else(|| shortest(&mut candidates.iter())) {
            // Keep the input's own prefix so mixed-case words survive.
            Some(c)
                if caps_of(surface) == Caps::Mixed
                    && surface.len() == lower.len()
                    && lower.starts_with(c.as_str()) =>
            {
                surface[..c.len()].to_string()
            }
            Some(c) => c,
            None => lower.to_string(),
        }
    }

    /// Base form of `surface` read as `tag`.
    pub fn lemmatize(&self, surface: &str, tag: Tag) -> Result<String, MorphError> {
        if !tag.is_content() {
            return Err(MorphError::NotContent(tag));
        }
        if tag.is_base_form() || tag.is_proper_noun() || surface.is_empty() {
            return Ok(surface.to_string());
        }
        let caps = caps_of(surface);
        if let Some(l) = self.lemmas.get(&(surface.to_string(), tag)) {
            return Ok(l.clone());
        }
        let lower = surface.to_lowercase();
        if let Some(l) = self.lookup_lemma(&lower, tag) {
            return Ok(apply_caps(l, caps));
        }
        if tag == Tag::VBP {
            return Ok(surface.to_string());
        }
        let lemma = self.lemma_by_rules(surface, &lower, tag);
        if caps == Caps::Mixed {
            Ok(lemma)
        } else {
            Ok(apply_caps(&lemma, caps))
        }
    }

    /// The inflection symbol carried by `surface/tag`, or `None` when the
    /// word is uninflected.
    ///
    /// Base tags (NN, VB, JJ) and proper nouns never carry one. VBP carries
    /// one only when its surface differs from the lemma (`are`, not `run`).
    /// A non-base tag on a word that neither the dictionary nor the rules
    /// can rebuild from its lemma is treated as uninflected.
    pub fn inflection_of(&self, surface: &str, tag: Tag) -> Result<Option<Tag>, MorphError> {
        let lemma = self.lemmatize(surface, tag)?;
        Ok(self.inflection_given_lemma(surface, tag, &lemma))
    }

    pub(crate) fn inflection_given_lemma(&self, surface: &str, tag: Tag, lemma: &str) -> Option<Tag> {
        if tag.is_base_form() || tag.is_proper_noun() {
            return None;
        }
        if lemma == surface {
            if tag == Tag::VBP {
                return None;
            }
            let rebuilt = self.inflect(lemma, Some(tag));
            let listed = self
                .listed_forms(lemma, tag)
                .is_some_and(|fs| fs.iter().any(|f| f.eq_ignore_ascii_case(surface)));
            if rebuilt != surface && !listed {
                return None;
            }
        }
        Some(tag)
    }

    /// Surface form of `lemma` carrying `tag`. `None` is the identity.
    pub fn inflect(&self, lemma: &str, tag: Option<Tag>) -> String {
        let Some(tag) = tag else {
            return lemma.to_string();
        };
        if lemma.is_empty() || tag.is_base_form() || tag.is_proper_noun() || !tag.is_content() {
            return lemma.to_string();
        }
        let caps = caps_of(lemma);
        let lower = lemma.to_lowercase();
        if let Some(forms) = self.inflections.get(&(lower.clone(), tag)) {
            return apply_caps(&forms[0], caps);
        }
        if tag == Tag::VBP {
            return lemma.to_string();
        }
        if caps == Caps::Mixed {
            return keep_prefix_case(lemma, &lower, &inflect_by_rules(&lower, tag));
        }
        apply_caps(&inflect_by_rules(&lower, tag), caps)
    }

    /// Every inflected form of `lemma` within one lexical category, paired
    /// with its tag, in tag order; duplicates keep their first tag.
    pub fn paradigm(&self, lemma: &str, pos: CoarsePos) -> Vec<(String, Tag)> {
        let lower = lemma.to_lowercase();
        let caps = caps_of(lemma);
        let known = self.known_by_pos.contains(&(lower.clone(), pos));
        let mut out: Vec<(String, Tag)> = Vec::new();
        let mut push = |s: String, t: Tag| {
            if !out.iter().any(|(x, _)| *x == s) {
                out.push((s, t));
            }
        };
        for &tag in pos.tags() {
            if tag.is_base_form() || tag == Tag::VBP {
                match self.inflections.get(&(lower.clone(), tag)) {
                    Some(forms) => forms.iter().for_each(|f| push(apply_caps(f, caps), tag)),
                    None => push(lemma.to_string(), tag),
                }
                continue;
            }
            match self.inflections.get(&(lower.clone(), tag)) {
                Some(forms) => forms.iter().for_each(|f| push(apply_caps(f, caps), tag)),
                None if !known && pos != CoarsePos::Adj => push(self.inflect(lemma, Some(tag)), tag),
                None => {}
            }
        }
        out
    }
}

/// Re-applies a lowercase rule result to a mixed-case lemma: the prefix
/// shared with the lemma keeps its casing.
fn keep_prefix_case(lemma: &str, lower: &str, rebuilt: &str) -> String {
    if lemma.len() != lower.len() {
        return rebuilt.to_string();
    }
    let shared = lower
        .char_indices()
        .zip(rebuilt.chars())
        .take_while(|((_, a), b)| a == b)
        .last()
        .map_or(0, |((i, a), _)| i + a.len_utf8());
    format!("{}{}", &lemma[..shared], &rebuilt[shared..])
}
