//! Pretokenize, tag, transform and subword-encode text, one line at a time.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{self, EncodingDivergence, Hamming, Scorer, ScorerKind, Strategy};
use crate::bite::{self, BiteMode};
use crate::morph::MorphLexicon;
use crate::pretok;
use crate::subword::{count_words, EncodedSequence, ModelType, SubwordModel, TrainerConfig};
use crate::tagger::{PerceptronModel, TaggedToken};
use crate::Error;

/// Default model directory when none is configured.
pub const MODEL_DIR_ENV: &str = "BITE_MODEL_DIR";
pub const TAGGER_FILE: &str = "tagger.json";
pub const SUBWORD_FILE: &str = "subword.json";

pub const DEFAULT_MIN_WORDS: usize = 3;
pub const DEFAULT_MIN_CHARS: usize = 4;

/// Everything a run needs, loadable from a TOML file. Unset model paths
/// fall back to `model_dir`, then to `$BITE_MODEL_DIR`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model_dir: Option<PathBuf>,
    pub tagger: Option<PathBuf>,
    pub subword: Option<PathBuf>,
    /// Both or neither; the bundled lexicon otherwise.
    pub lemmas: Option<PathBuf>,
    pub inflections: Option<PathBuf>,
    pub bite_mode: BiteMode,
    pub corpus: Vec<PathBuf>,
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn model_dir(&self) -> Option<PathBuf> {
        self.model_dir
            .clone()
            .or_else(|| std::env::var_os(MODEL_DIR_ENV).map(PathBuf::from))
    }

    pub fn tagger_path(&self) -> Option<PathBuf> {
        self.tagger.clone().or_else(|| self.model_dir().map(|d| d.join(TAGGER_FILE)))
    }

    pub fn subword_path(&self) -> Option<PathBuf> {
        self.subword.clone().or_else(|| self.model_dir().map(|d| d.join(SUBWORD_FILE)))
    }
}

/// Opens a file for reading, decompressing when the name ends in `.gz`.
pub fn open_text(path: &Path) -> Result<Box<dyn BufRead + Send>, Error> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(BufReader::new(flate2::read::GzDecoder::new(f))))
    } else {
        Ok(Box::new(BufReader::new(f)))
    }
}

pub fn load_tagger(path: &Path) -> Result<PerceptronModel, Error> {
    let f = File::open(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    PerceptronModel::load(f).map_err(|e| Error::Model(format!("{}: {e}", path.display())))
}

pub fn load_subword(path: &Path) -> Result<SubwordModel, Error> {
    let f = File::open(path).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    SubwordModel::load(BufReader::new(f)).map_err(|e| Error::Model(format!("{}: {e}", path.display())))
}

pub fn load_lexicon(lemmas: &Path, inflections: &Path) -> Result<MorphLexicon, Error> {
    let l = open_text(lemmas)?;
    let i = open_text(inflections)?;
    MorphLexicon::from_tsv(l, i).map_err(|e| Error::Model(e.to_string()))
}

/// Loaded models plus the transform mode. Immutable once built.
pub struct Pipeline {
    pub tagger: PerceptronModel,
    pub subword: Option<SubwordModel>,
    pub mode: BiteMode,
    lexicon: Option<Box<MorphLexicon>>,
}

impl Pipeline {
    pub fn new(tagger: PerceptronModel, subword: Option<SubwordModel>, mode: BiteMode) -> Self {
        Pipeline {
            tagger,
            subword,
            mode,
            lexicon: None,
        }
    }

    pub fn with_lexicon(mut self, lexicon: MorphLexicon) -> Self {
        self.lexicon = Some(Box::new(lexicon));
        self
    }

    /// Loads the tagger, and the subword model when `need_subword` is set.
    pub fn load(config: &PipelineConfig, need_subword: bool) -> Result<Self, Error> {
        let tagger_path = config
            .tagger_path()
            .ok_or_else(|| Error::Config(format!("no tagger model given and {MODEL_DIR_ENV} is unset")))?;
        let tagger = load_tagger(&tagger_path)?;
        let subword = if need_subword {
            let p = config
                .subword_path()
                .ok_or_else(|| Error::Config(format!("no subword model given and {MODEL_DIR_ENV} is unset")))?;
            Some(load_subword(&p)?)
        } else {
            None
        };
        let mut pipeline = Pipeline::new(tagger, subword, config.bite_mode);
        match (&config.lemmas, &config.inflections) {
            (Some(l), Some(i)) => pipeline = pipeline.with_lexicon(load_lexicon(l, i)?),
            (None, None) => {}
            _ => return Err(Error::Config("lemmas and inflections must be given together".into())),
        }
        Ok(pipeline)
    }

    pub fn lexicon(&self) -> &MorphLexicon {
        self.lexicon.as_deref().unwrap_or_else(|| MorphLexicon::bundled())
    }

    pub fn tag(&self, text: &str) -> Vec<TaggedToken> {
        self.tagger.tag(&pretok::pretokenize(text))
    }

    /// Word-level symbols handed to the subword model under the current mode.
    pub fn transform(&self, tagged: &[TaggedToken]) -> Vec<String> {
        match self.mode {
            BiteMode::Off => tagged.iter().map(|t| t.surface.clone()).collect(),
            m => bite::encode_to_strings(tagged, self.lexicon(), m),
        }
    }

    fn subword(&self) -> Result<&SubwordModel, Error> {
        self.subword
            .as_ref()
            .ok_or_else(|| Error::Config("no subword model loaded".into()))
    }

    pub fn encode_tagged(&self, tagged: &[TaggedToken]) -> Result<EncodedSequence, Error> {
        Ok(self.subword()?.encode(&self.transform(tagged)))
    }

    pub fn encode_line(&self, text: &str) -> Result<EncodedSequence, Error> {
        self.encode_line_as(text, self.mode)
    }

    /// [`Pipeline::encode_line`] under another mode.
    pub fn encode_line_as(&self, text: &str, mode: BiteMode) -> Result<EncodedSequence, Error> {
        let sw = self.subword()?;
        Ok(match mode {
            BiteMode::Off => sw.encode(&pretok::pretokenize_surfaces(text)),
            m => sw.encode(&bite::encode_to_strings(&self.tag(text), self.lexicon(), m)),
        })
    }

    /// Token-level inverse of [`Pipeline::encode_line`].
    pub fn decode_ids(&self, ids: &[u32]) -> Result<Vec<String>, Error> {
        self.decode_ids_as(ids, self.mode)
    }

    pub fn decode_ids_as(&self, ids: &[u32], mode: BiteMode) -> Result<Vec<String>, Error> {
        let words = self.subword()?.decode(ids).map_err(|e| Error::Data(e.to_string()))?;
        match mode {
            BiteMode::Off => Ok(words),
            _ => bite::decode_strings(&words, self.lexicon()).map_err(|e| Error::Data(e.to_string())),
        }
    }

    /// Tags `text` and perturbs it. Greedy mode yields one record, sample
    /// mode `k`; every record is scored by the chosen objective.
    pub fn perturb(&self, text: &str, opts: &PerturbOptions) -> Result<Vec<PerturbRecord>, Error> {
        let clean = self.tag(text);
        let lex = self.lexicon();
        let encode = |s: &[TaggedToken]| -> Vec<String> {
            let s = if opts.retag { adversary::retag(&self.tagger, s) } else { s.to_vec() };
            self.encode_tagged(&s).map(|e| e.symbols).unwrap_or_default()
        };
        let mut scorer: Box<dyn Scorer> = match opts.scorer {
            ScorerKind::Hamming => Box::new(Hamming::new(&clean)),
            ScorerKind::EncodingDivergence => {
                self.subword()?;
                Box::new(EncodingDivergence::new(&clean, encode))
            }
        };
        let text = |s: &[TaggedToken]| s.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ");
        let clean_text = text(&clean);
        match opts.strategy {
            Strategy::Greedy => {
                let a = adversary::greedy_attack(lex, &clean, scorer.as_mut())?;
                Ok(vec![PerturbRecord {
                    sample: None,
                    clean: clean_text,
                    adversarial: text(&a.tokens),
                    score: a.score,
                }])
            }
            Strategy::Sample => adversary::sample_perturbations(lex, &clean, opts.k, opts.seed)?
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let score = scorer.score(&s).map_err(|e| Error::Data(e.to_string()))?;
                    Ok(PerturbRecord {
                        sample: Some(i),
                        clean: clean_text.clone(),
                        adversarial: text(&s),
                        score,
                    })
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbOptions {
    pub strategy: Strategy,
    pub k: usize,
    pub seed: u64,
    pub scorer: ScorerKind,
    pub retag: bool,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions {
            strategy: Strategy::Greedy,
            k: 4,
            seed: 0,
            scorer: ScorerKind::EncodingDivergence,
            retag: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sample: Option<usize>,
    pub clean: String,
    pub adversarial: String,
    pub score: f64,
}

/// Trainer settings for a model that will sit behind `mode`. Without the
/// transform no symbol ids are reserved beyond `<unk>`.
pub fn trainer_config(model_type: ModelType, vocab_size: usize, mode: BiteMode) -> TrainerConfig {
    let mut c = TrainerConfig::new(model_type, vocab_size);
    if mode == BiteMode::Off {
        c.special_symbols.clear();
    }
    c
}

/// Maps `f` over `items` on all cores, keeping order.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    if workers < 2 || items.len() < 64 {
        return items.iter().map(f).collect();
    }
    let per = items.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(per)
            .map(|part| s.spawn(|| part.iter().map(&f).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

/// Tags and transforms every line under `mode`.
pub fn transform_lines<S: AsRef<str> + Sync>(pipeline: &Pipeline, mode: BiteMode, lines: &[S]) -> Vec<Vec<String>> {
    par_map(lines, |l| match mode {
        BiteMode::Off => pretok::pretokenize_surfaces(l.as_ref()),
        m => bite::encode_to_strings(&pipeline.tag(l.as_ref()), pipeline.lexicon(), m),
    })
}

/// Word counts of the corpus as the subword trainer will see it.
pub fn count_transformed<S: AsRef<str> + Sync>(pipeline: &Pipeline, lines: &[S]) -> BTreeMap<String, u64> {
    count_words(transform_lines(pipeline, pipeline.mode, lines), &bite::special_symbols())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedLine {
    pub line_no: usize,
    pub symbols: Vec<String>,
    pub ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub lines: usize,
    pub failed: usize,
}

const CHUNK_LINES: usize = 512;

/// Reads lines, applies `f` on worker threads, writes results in input
/// order. A line that fails is logged with its 1-based number and skipped.
pub fn for_each_line<R, W, F>(mut input: R, mut output: W, f: F) -> Result<RunStats, Error>
where
    R: BufRead,
    W: Write,
    F: Fn(usize, &str) -> Result<String, Error> + Sync,
{
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut stats = RunStats::default();
    let mut buf = Vec::new();
    let mut eof = false;
    while !eof {
        let mut chunk: Vec<(usize, Result<String, Error>)> = Vec::with_capacity(CHUNK_LINES);
        while chunk.len() < CHUNK_LINES {
            buf.clear();
            if input.read_until(b'\n', &mut buf).map_err(Error::Io)? == 0 {
                eof = true;
                break;
            }
            stats.lines += 1;
            while matches!(buf.last(), Some(b'\n' | b'\r')) {
                buf.pop();
            }
            let line = String::from_utf8(buf.clone()).map_err(|_| Error::Data("invalid UTF-8".into()));
            chunk.push((stats.lines, line));
        }
        let results: Vec<Result<String, Error>> = if workers > 1 && chunk.len() > 1 {
            let per = chunk.len().div_ceil(workers);
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .chunks(per)
                    .map(|part| s.spawn(|| part.iter().map(|(n, l)| run_one(&f, *n, l)).collect::<Vec<_>>()))
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("worker panicked"))
                    .collect()
            })
        } else {
            chunk.iter().map(|(n, l)| run_one(&f, *n, l)).collect()
        };
        for ((n, _), r) in chunk.iter().zip(results) {
            match r {
                Ok(s) => {
                    output.write_all(s.as_bytes()).map_err(Error::Io)?;
                    output.write_all(b"\n").map_err(Error::Io)?;
                }
                Err(e) => {
                    log::error!("line {n}: {e}");
                    stats.failed += 1;
                }
            }
        }
    }
    output.flush().map_err(Error::Io)?;
    Ok(stats)
}

fn run_one<F>(f: &F, n: usize, line: &Result<String, Error>) -> Result<String, Error>
where
    F: Fn(usize, &str) -> Result<String, Error>,
{
    match line {
        Ok(l) => f(n, l),
        Err(e) => Err(Error::Data(e.to_string())),
    }
}

/// Streams `input` through the pipeline, writing one JSON object per line.
pub fn run_pipeline<R: BufRead, W: Write>(pipeline: &Pipeline, input: R, output: W) -> Result<RunStats, Error> {
    pipeline.subword()?;
    for_each_line(input, output, |line_no, text| {
        let enc = pipeline.encode_line(text)?;
        let rec = EncodedLine {
            line_no,
            symbols: enc.symbols,
            ids: enc.ids,
        };
        Ok(serde_json::to_string(&rec).expect("plain data serializes"))
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessStats {
    pub kept: usize,
    pub dropped_blank: usize,
    pub dropped_short: usize,
}

/// Drops blank lines and lines with fewer than `min_words` words or
/// `min_chars` characters; kept lines are trimmed.
pub fn preprocess_corpus<R: Read, W: Write>(
    input: R,
    mut output: W,
    min_words: usize,
    min_chars: usize,
) -> Result<PreprocessStats, Error> {
    let mut stats = PreprocessStats::default();
    for line in BufReader::new(input).lines() {
        let line = line.map_err(Error::Io)?;
        let t = line.trim();
        if t.is_empty() {
            stats.dropped_blank += 1;
        } else if t.split_whitespace().count() < min_words || t.chars().count() < min_chars {
            stats.dropped_short += 1;
        } else {
            stats.kept += 1;
            writeln!(output, "{t}").map_err(Error::Io)?;
        }
    }
    output.flush().map_err(Error::Io)?;
    Ok(stats)
}
