//! Base-inflection encoding: split inflected words into a base form plus an
//! inflection symbol before subword tokenization.

pub mod adversary;
pub mod bite;
pub mod metrics;
pub mod morph;
pub mod pipeline;
pub mod pretok;
pub mod subword;
pub mod tagger;
pub mod tags;

use std::path::{Path, PathBuf};

pub use bite::{BiteMode, BiteSymbol};
pub use morph::MorphLexicon;
pub use pipeline::{Pipeline, PipelineConfig};
pub use subword::{ModelType, SubwordModel};
pub use tagger::{PerceptronModel, TaggedToken};
pub use tags::{CoarsePos, Tag};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Error type for whole-pipeline operations. Module-level errors are
/// folded in by kind: bad settings, unreadable input, unusable models.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(std::io::Error),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Model(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Path {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 for bad usage or settings, 2 for I/O and malformed input, 3 for
    /// models that fail to load or train.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::Path { .. } | Error::Io(_) | Error::Data(_) => 2,
            Error::Model(_) => 3,
        }
    }
}

impl From<subword::SubwordError> for Error {
    fn from(e: subword::SubwordError) -> Self {
        match e {
            subword::SubwordError::VocabTooSmall { .. } | subword::SubwordError::UnknownModelType(_) => {
                Error::Config(e.to_string())
            }
            subword::SubwordError::EmptyCorpus | subword::SubwordError::IdOutOfRange { .. } => Error::Data(e.to_string()),
            subword::SubwordError::Io(e) => Error::Io(e),
            _ => Error::Model(e.to_string()),
        }
    }
}

impl From<tagger::TaggerError> for Error {
    fn from(e: tagger::TaggerError) -> Self {
        match e {
            tagger::TaggerError::Io(e) => Error::Io(e),
            tagger::TaggerError::ZeroEpochs => Error::Config(e.to_string()),
            tagger::TaggerError::UnknownTag { .. }
            | tagger::TaggerError::MalformedLine { .. }
            | tagger::TaggerError::EmptyCorpus => Error::Data(e.to_string()),
            _ => Error::Model(e.to_string()),
        }
    }
}

impl From<adversary::AdversaryError> for Error {
    fn from(e: adversary::AdversaryError) -> Self {
        match e {
            adversary::AdversaryError::ZeroSamples => Error::Config(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<metrics::MetricsError> for Error {
    fn from(e: metrics::MetricsError) -> Self {
        match e {
            metrics::MetricsError::ZeroN | metrics::MetricsError::LambdaBelowOne(_) => Error::Config(e.to_string()),
            _ => Error::Data(e.to_string()),
        }
    }
}

impl From<bite::UnknownMode> for Error {
    fn from(e: bite::UnknownMode) -> Self {
        Error::Config(e.to_string())
    }
}
