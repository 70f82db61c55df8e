//! The closed Penn Treebank tagset and the content-word subsets the encoder
//! cares about.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

macro_rules! tagset {
    ($($variant:ident => $text:literal,)*) => {
        /// A Penn Treebank part-of-speech tag.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Tag {
            $($variant,)*
        }

        impl Tag {
            /// Every tag, in declaration order. This order is the tie-break
            /// order used by the tagger.
            pub const ALL: &'static [Tag] = &[$(Tag::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Tag::$variant => $text,)*
                }
            }
        }

        impl FromStr for Tag {
            type Err = UnknownTag;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($text => Ok(Tag::$variant),)*
                    _ => Err(UnknownTag(s.to_string())),
                }
            }
        }
    };
}

tagset! {
    CC => "CC",
    CD => "CD",
    DT => "DT",
    EX => "EX",
    FW => "FW",
    IN => "IN",
    JJ => "JJ",
    JJR => "JJR",
    JJS => "JJS",
    LS => "LS",
    MD => "MD",
    NN => "NN",
    NNS => "NNS",
    NNP => "NNP",
    NNPS => "NNPS",
    PDT => "PDT",
    POS => "POS",
    PRP => "PRP",
    PRPS => "PRP$",
    RB => "RB",
    RBR => "RBR",
    RBS => "RBS",
    RP => "RP",
    SYM => "SYM",
    TO => "TO",
    UH => "UH",
    VB => "VB",
    VBD => "VBD",
    VBG => "VBG",
    VBN => "VBN",
    VBP => "VBP",
    VBZ => "VBZ",
    WDT => "WDT",
    WP => "WP",
    WPS => "WP$",
    WRB => "WRB",
    Hash => "#",
    Dollar => "$",
    OpenQuote => "``",
    CloseQuote => "''",
    Comma => ",",
    Period => ".",
    Colon => ":",
    LeftParen => "-LRB-",
    RightParen => "-RRB-",
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown part-of-speech tag `{0}`")]
pub struct UnknownTag(pub String);

/// Coarse lexical category used by the encoder's content-word check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CoarsePos {
    Noun,
    Verb,
    Adj,
}

/// The eight tags that surface as inflection symbols.
pub const INFLECTION_TAGS: [Tag; 8] = [
    Tag::NNS,
    Tag::VBD,
    Tag::VBG,
    Tag::VBN,
    Tag::VBP,
    Tag::VBZ,
    Tag::JJR,
    Tag::JJS,
];

impl Tag {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn coarse(self) -> Option<CoarsePos> {
        match self {
            Tag::NN | Tag::NNS | Tag::NNP | Tag::NNPS => Some(CoarsePos::Noun),
            Tag::VB | Tag::VBD | Tag::VBG | Tag::VBN | Tag::VBP | Tag::VBZ => {
                Some(CoarsePos::Verb)
            }
            Tag::JJ | Tag::JJR | Tag::JJS => Some(CoarsePos::Adj),
            _ => None,
        }
    }

    pub fn is_content(self) -> bool {
        self.coarse().is_some()
    }

    pub fn is_proper_noun(self) -> bool {
        matches!(self, Tag::NNP | Tag::NNPS)
    }

    /// NN, VB and JJ: the uninflected citation forms.
    pub fn is_base_form(self) -> bool {
        matches!(self, Tag::NN | Tag::VB | Tag::JJ)
    }

    pub fn is_inflection(self) -> bool {
        INFLECTION_TAGS.contains(&self)
    }

    /// Literal surface of the inflection symbol, e.g. `[VBD]`.
    pub fn symbol(self) -> String {
        format!("[{}]", self.as_str())
    }

    /// Parses `[VBD]`-style inflection symbols.
    pub fn from_symbol(s: &str) -> Option<Tag> {
        let inner = s.strip_prefix('[')?.strip_suffix(']')?;
        inner.parse::<Tag>().ok().filter(|t| t.is_inflection())
    }
}

impl CoarsePos {
    pub fn base_tag(self) -> Tag {
        match self {
            CoarsePos::Noun => Tag::NN,
            CoarsePos::Verb => Tag::VB,
            CoarsePos::Adj => Tag::JJ,
        }
    }

    /// All lexical (non-proper) tags of this category, base tag first.
    pub fn tags(self) -> &'static [Tag] {
        match self {
            CoarsePos::Noun => &[Tag::NN, Tag::NNS],
            CoarsePos::Verb => &[Tag::VB, Tag::VBD, Tag::VBG, Tag::VBN, Tag::VBP, Tag::VBZ],
            CoarsePos::Adj => &[Tag::JJ, Tag::JJR, Tag::JJS],
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Tag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_every_tag() {
        assert_eq!(Tag::ALL.len(), 45);
        for (i, t) in Tag::ALL.iter().enumerate() {
            assert_eq!(t.index(), i);
            assert_eq!(t.as_str().parse::<Tag>().unwrap(), *t);
        }
        assert!("NNX".parse::<Tag>().is_err());
    }

    #[test]
    fn symbols() {
        assert_eq!(Tag::VBD.symbol(), "[VBD]");
        assert_eq!(Tag::from_symbol("[VBD]"), Some(Tag::VBD));
        assert_eq!(Tag::from_symbol("[NN]"), None);
        assert_eq!(Tag::from_symbol("VBD"), None);
    }

    #[test]
    fn content_classes() {
        assert_eq!(Tag::NNPS.coarse(), Some(CoarsePos::Noun));
        assert_eq!(Tag::RB.coarse(), None);
        assert!(Tag::JJ.is_base_form());
        assert!(!Tag::VBP.is_base_form());
    }
}
