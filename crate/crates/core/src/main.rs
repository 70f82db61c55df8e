use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use bite::adversary;
use bite::metrics::{self, MetricReport};
use bite::pipeline::{self, open_text, PerturbOptions, Pipeline, PipelineConfig};
use bite::subword::{self, ModelType};
use bite::tagger::{read_tagged_corpus, PerceptronModel, TaggedToken};
use bite::{BiteMode, Error};

/// Morphology-aware tokenization: base forms plus inflection symbols,
/// composed with BPE, WordPiece or unigram subword models.
#[derive(Parser)]
#[command(name = "bite", version, about)]
struct Cli {
    #[command(flatten)]
    models: ModelArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// TOML file with any of: model_dir, tagger, subword, lemmas, inflections, bite_mode, corpus, output.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding tagger.json and subword.json.
    #[arg(long, global = true, env = "BITE_MODEL_DIR")]
    model_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    tagger: Option<PathBuf>,
    #[arg(long, global = true)]
    subword: Option<PathBuf>,
    /// Lemma table (TSV); needs --inflections. The bundled lexicon otherwise.
    #[arg(long, global = true, requires = "inflections")]
    lemmas: Option<PathBuf>,
    #[arg(long, global = true, requires = "lemmas")]
    inflections: Option<PathBuf>,
    /// off, standard or ablated [default: standard]
    #[arg(long, global = true)]
    mode: Option<BiteMode>,
}

impl ModelArgs {
    fn config(&self) -> Result<PipelineConfig, Error> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::from_toml_file(p)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        set(&mut c.model_dir, &self.model_dir);
        set(&mut c.tagger, &self.tagger);
        set(&mut c.subword, &self.subword);
        set(&mut c.lemmas, &self.lemmas);
        set(&mut c.inflections, &self.inflections);
        if let Some(m) = self.mode {
            c.bite_mode = m;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct Io {
    /// Input file; standard input when absent.
    input: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Drop blank and short lines from a raw corpus.
    Preprocess {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = pipeline::DEFAULT_MIN_WORDS)]
        min_words: usize,
        #[arg(long, default_value_t = pipeline::DEFAULT_MIN_CHARS)]
        min_chars: usize,
    },
    /// Train the part-of-speech tagger on `surface<TAB>tag` files.
    TrainTagger {
        /// Tagged corpus files (`.gz` accepted).
        #[arg(long, required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Fraction of sentences, taken from the end, held out for an accuracy report.
        #[arg(long, default_value_t = 0.0)]
        heldout: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a subword model on raw text, after the BITE transform unless --mode off.
    TrainSubword {
        #[arg(long, value_enum, default_value_t = Kind::Bpe)]
        model_type: Kind,
        #[arg(long, default_value_t = 20000)]
        vocab_size: usize,
        /// Raw text files (`.gz` accepted); the config's corpus list otherwise.
        #[arg(long, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Encode text to JSON lines `{line_no, symbols, ids}`.
    Encode {
        #[command(flatten)]
        io: Io,
    },
    /// Decode JSON lines (or lines of ids) back to tokens.
    Decode {
        #[command(flatten)]
        io: Io,
        /// Join tokens as text instead of one space between every token.
        #[arg(long)]
        detokenize: bool,
    },
    /// Tag text as `word/TAG` pairs.
    Tag {
        #[command(flatten)]
        io: Io,
    },
    /// Perturb content words with other inflections of the same lemma.
    Perturb {
        #[arg(value_enum)]
        strategy: Strategy,
        #[command(flatten)]
        io: Io,
        /// Samples per sentence in `sample` mode.
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ScorerKind::EncodingDivergence)]
        scorer: ScorerKind,
        /// Re-run the tagger on perturbed sentences instead of keeping dictionary tags.
        #[arg(long)]
        retag: bool,
    },
    /// Coverage, symbol complexity, length growth and similarity reports.
    Metrics {
        #[command(subcommand)]
        metric: Metric,
        /// Also write the curve as CSV.
        #[arg(long, global = true)]
        csv: Option<PathBuf>,
        #[arg(short, long, global = true)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Metric {
    /// Top-N type coverage of raw and BITE-encoded text.
    Coverage {
        #[arg(long, required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [500, 1000, 3000, 5000, 10000])]
        n: Vec<usize>,
    },
    /// Symbol complexity of a word-type list under one or more subword models.
    Complexity {
        /// One word type per line (`.gz` accepted).
        #[arg(long)]
        types: PathBuf,
        #[arg(long = "model", required = true, num_args = 1..)]
        models: Vec<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        lambda: f64,
    },
    /// Mean encoded-length increase of BITE+D over D.
    Length {
        #[arg(long, required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        /// Model trained on BITE output.
        #[arg(long)]
        with: PathBuf,
        /// Model trained on raw text.
        #[arg(long)]
        without: PathBuf,
    },
    /// Mean clean/adversarial encoding similarity over `perturb` output.
    Similarity {
        #[arg(long)]
        pairs: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bpe,
    Wordpiece,
    Unigram,
}

impl From<Kind> for ModelType {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Bpe => ModelType::Bpe,
            Kind::Wordpiece => ModelType::WordPiece,
            Kind::Unigram => ModelType::Unigram,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Greedy,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    EncodingDivergence,
    Hamming,
}

impl From<Strategy> for adversary::Strategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::Greedy => adversary::Strategy::Greedy,
            Strategy::Sample => adversary::Strategy::Sample,
        }
    }
}

impl From<ScorerKind> for adversary::ScorerKind {
    fn from(s: ScorerKind) -> Self {
        match s {
            ScorerKind::EncodingDivergence => adversary::ScorerKind::EncodingDivergence,
            ScorerKind::Hamming => adversary::ScorerKind::Hamming,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn input(path: &Option<PathBuf>) -> Result<Box<dyn BufRead + Send>, Error> {
    match path {
        Some(p) => open_text(p),
        None => Ok(Box::new(io::BufReader::new(io::stdin()))),
    }
}

/// Opened only once models have loaded, so failures leave no file behind.
fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?))),
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Error> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Error::Io(e.into()))?;
    out.write_all(b"\n").map_err(Error::Io)?;
    out.flush().map_err(Error::Io)
}

fn report(stats: pipeline::RunStats) {
    log::info!("{} lines, {} failed", stats.lines, stats.failed);
    if stats.failed > 0 {
        eprintln!("{} of {} lines failed", stats.failed, stats.lines);
    }
}

fn read_lines(paths: &[PathBuf]) -> Result<Vec<String>, Error> {
    let mut out = Vec::new();
    for p in paths {
        for line in open_text(p)?.lines() {
            out.push(line.map_err(|e| Error::io(p, e))?);
        }
    }
    Ok(out)
}

fn default_model_path(config: &PipelineConfig, explicit: &Option<PathBuf>, file: &str) -> Result<PathBuf, Error> {
    if let Some(p) = explicit {
        return Ok(p.clone());
    }
    config
        .model_dir
        .as_ref()
        .map(|d| d.join(file))
        .ok_or_else(|| Error::Config("give --output or a model directory".into()))
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = cli.models.config()?;
    match cli.command {
        Command::Preprocess { io, min_words, min_chars } => {
            let Some(path) = &io.input else {
                return Err(Error::Config("preprocess needs an input file".into()));
            };
            let reader = open_text(path)?;
            let stats = pipeline::preprocess_corpus(reader, output(&io.output)?, min_words, min_chars)?;
            eprintln!("{}", serde_json::to_string(&stats).expect("plain data"));
        }
        Command::TrainTagger {
            corpus,
            epochs,
            seed,
            heldout,
            output: out,
        } => {
            if !(0.0..1.0).contains(&heldout) {
                return Err(Error::Config("--heldout must be in [0, 1)".into()));
            }
            let mut sentences = Vec::new();
            for p in &corpus {
                sentences.extend(read_tagged_corpus(open_text(p)?).map_err(|e| Error::Data(format!("{}: {e}", p.display())))?);
            }
            let cut = sentences.len() - (sentences.len() as f64 * heldout).round() as usize;
            let model = PerceptronModel::train(&sentences[..cut], epochs, seed)?;
            if cut < sentences.len() {
                eprintln!("held-out accuracy {:.4}", model.accuracy(&sentences[cut..]));
            }
            let path = default_model_path(&config, &out, pipeline::TAGGER_FILE)?;
            let mut w = output(&Some(path))?;
            model.save(&mut w)?;
            w.flush().map_err(Error::Io)?;
        }
        Command::TrainSubword {
            model_type,
            vocab_size,
            corpus,
            output: out,
        } => {
            let corpus = if corpus.is_empty() { config.corpus.clone() } else { corpus };
            if corpus.is_empty() {
                return Err(Error::Config("no training corpus given".into()));
            }
            let pipe = match config.bite_mode {
                BiteMode::Off => None,
                _ => Some(Pipeline::load(&config, false)?),
            };
            let lines = read_lines(&corpus)?;
            let tc = pipeline::trainer_config(model_type.into(), vocab_size, config.bite_mode);
            let counts = match &pipe {
                Some(p) => pipeline::count_transformed(p, &lines),
                None => subword::count_words(lines.iter().map(|l| bite::pretok::pretokenize_surfaces(l)), &[]),
            };
            let model = subword::train(&tc, &counts)?;
            let path = default_model_path(&config, &out, pipeline::SUBWORD_FILE)?;
            let mut w = output(&Some(path))?;
            model.save(&mut w)?;
            w.flush().map_err(Error::Io)?;
        }
        Command::Encode { io } => {
            let pipe = Pipeline::load(&config, true)?;
            let r = input(&io.input)?;
            report(pipeline::run_pipeline(&pipe, r, output(&io.output)?)?);
        }
        Command::Decode { io, detokenize } => {
            let pipe = Pipeline::load(&config, true)?;
            let r = input(&io.input)?;
            let stats = pipeline::for_each_line(r, output(&io.output)?, |_, line| {
                let ids = parse_ids(line)?;
                let toks = pipe.decode_ids(&ids)?;
                Ok(if detokenize { bite::bite::detokenize(&toks) } else { toks.join(" ") })
            })?;
            report(stats);
        }
        Command::Tag { io } => {
            let pipe = Pipeline::load(&config, false)?;
            let r = input(&io.input)?;
            let stats = pipeline::for_each_line(r, output(&io.output)?, |_, line| {
                Ok(pipe
                    .tag(line)
                    .iter()
                    .map(|t| format!("{}/{}", t.surface, t.tag))
                    .collect::<Vec<_>>()
                    .join(" "))
            })?;
            report(stats);
        }
        Command::Perturb {
            strategy,
            io,
            k,
            seed,
            scorer,
            retag,
        } => {
            if k == 0 {
                return Err(Error::Config("--k must be at least 1".into()));
            }
            let need_subword = matches!(scorer, ScorerKind::EncodingDivergence);
            let pipe = Pipeline::load(&config, need_subword)?;
            let r = input(&io.input)?;
            let stats = pipeline::for_each_line(r, output(&io.output)?, |line_no, line| {
                let opts = PerturbOptions {
                    strategy: strategy.into(),
                    k,
                    seed: adversary::line_seed(seed, line_no),
                    scorer: scorer.into(),
                    retag,
                };
                let lines: Vec<String> = pipe
                    .perturb(line, &opts)?
                    .iter()
                    .map(|record| serde_json::to_string(&LineRecord { line_no, record }).expect("plain data"))
                    .collect();
                Ok(lines.join("\n"))
            })?;
            report(stats);
        }
        Command::Metrics { metric, csv, output: out } => {
            let (reports, curve) = run_metric(&config, metric)?;
            let mut w = output(&out)?;
            write_json(&mut *w, &reports)?;
            if let Some(p) = csv {
                let mut c = output(&Some(p))?;
                c.write_all(curve.as_bytes()).map_err(Error::Io)?;
                c.flush().map_err(Error::Io)?;
            }
        }
    }
    Ok(())
}

fn parse_ids(line: &str) -> Result<Vec<u32>, Error> {
    let t = line.trim();
    if t.starts_with('{') {
        let rec: pipeline::EncodedLine = serde_json::from_str(t).map_err(|e| Error::Data(e.to_string()))?;
        return Ok(rec.ids);
    }
    t.split_whitespace()
        .map(|s| s.parse::<u32>().map_err(|_| Error::Data(format!("not an id: `{s}`"))))
        .collect()
}

#[derive(Serialize)]
struct LineRecord<'a, T> {
    line_no: usize,
    #[serde(flatten)]
    record: &'a T,
}

fn run_metric(config: &PipelineConfig, metric: Metric) -> Result<(Vec<MetricReport>, String), Error> {
    let mut reports = Vec::new();
    let mut csv = String::new();
    match metric {
        Metric::Coverage { corpus, n } => {
            let pipe = Pipeline::load(config, false)?;
            let lines = read_lines(&corpus)?;
            let raw: Vec<Vec<String>> = lines.iter().map(|l| bite::pretok::pretokenize_surfaces(l)).collect();
            let encoded = pipeline::transform_lines(&pipe, BiteMode::Standard, &lines);
            let (rc, bc) = (metrics::type_counts(&raw), metrics::type_counts(&encoded));
            csv.push_str("n,raw,bite\n");
            for &n in &n {
                let r = metrics::coverage(&metrics::top_n_from_counts(&rc, n)?, &raw)?;
                let b = metrics::coverage(&metrics::top_n_from_counts(&bc, n)?, &encoded)?;
                csv.push_str(&format!("{n},{r},{b}\n"));
                for (name, v) in [("raw", r), ("bite", b)] {
                    reports.push(MetricReport::new("coverage", v, "fraction").with("n", n).with("encoding", name));
                }
            }
        }
        Metric::Complexity { types, models, lambda } => {
            let words: Vec<String> = read_lines(&[types])?
                .into_iter()
                .map(|l| l.trim().to_string())
                .filter(|l| !l.is_empty())
                .collect();
            csv.push_str("model,vocab_size,value\n");
            for p in &models {
                let m = pipeline::load_subword(p)?;
                let v = metrics::symbol_complexity(&m, &words, lambda)?;
                csv.push_str(&format!("{},{},{v}\n", p.display(), m.vocab_size()));
                reports.push(
                    MetricReport::new("symbol_complexity", v, "symbols")
                        .with("model", p.display().to_string())
                        .with("vocab_size", m.vocab_size())
                        .with("lambda", lambda)
                        .with("types", words.len()),
                );
            }
        }
        Metric::Length { corpus, with, without } => {
            let pipe = Pipeline::load(config, false)?;
            let (mw, mo) = (pipeline::load_subword(&with)?, pipeline::load_subword(&without)?);
            let lines = read_lines(&corpus)?;
            let tagged: Vec<Vec<TaggedToken>> = lines.iter().map(|l| pipe.tag(l)).collect();
            let d = metrics::seq_len_delta(&tagged, pipe.lexicon(), config.bite_mode, &mw, &mo)?;
            csv.push_str("vocab_size,delta_percent,inflected_percent\n");
            csv.push_str(&format!("{},{},{}\n", mw.vocab_size(), d.delta_percent, d.inflected_percent));
            reports.push(
                MetricReport::new("seq_len_delta", d.delta_percent, "percent")
                    .with("vocab_size", mw.vocab_size())
                    .with("mean_with", d.mean_with)
                    .with("mean_without", d.mean_without)
                    .with("inflected_percent", d.inflected_percent),
            );
        }
        Metric::Similarity { pairs } => {
            let pipe = Pipeline::load(config, true)?;
            let mut total = 0.0;
            let mut n = 0usize;
            for line in read_lines(&[pairs.clone()])? {
                if line.trim().is_empty() {
                    continue;
                }
                let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Data(e.to_string()))?;
                let field = |k: &str| {
                    v[k].as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Data(format!("record without `{k}`")))
                };
                let a = pipe.encode_line(&field("clean")?)?.symbols;
                let b = pipe.encode_line(&field("adversarial")?)?.symbols;
                total += metrics::similarity(&a, &b);
                n += 1;
            }
            if n == 0 {
                return Err(Error::Data(format!("{}: no pairs", pairs.display())));
            }
            let mean = total / n as f64;
            let vocab = pipe.subword.as_ref().map_or(0, |m| m.vocab_size());
            csv.push_str("vocab_size,mode,similarity\n");
            csv.push_str(&format!("{vocab},{},{mean}\n", pipe.mode));
            reports.push(
                MetricReport::new("similarity", mean, "fraction")
                    .with("pairs", n)
                    .with("vocab_size", vocab)
                    .with("bite_mode", pipe.mode.to_string()),
            );
        }
    }
    Ok((reports, csv))
}
