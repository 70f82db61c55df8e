//! Desk-scale acceptance checks. Each test writes one PASS/FAIL line to
//! stderr (bypassing output capture) and then asserts.

mod support;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bite::adversary::{self, EncodingDivergence};
use bite::bite::{decode, encode, BiteMode};
use bite::metrics;
use bite::pipeline;
use bite::subword::{self, ModelType, TrainerConfig};
use bite::tagger::{PerceptronModel, TaggedToken};
use bite::{MorphLexicon, Tag};

use support::*;

fn report(name: &str, pass: bool, detail: &str) {
    let line = format!("[{}] {name}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn check(name: &str, pass: bool, detail: String) {
    report(name, pass, &detail);
    assert!(pass, "{name}: {detail}");
}

fn lex() -> &'static MorphLexicon {
    MorphLexicon::bundled()
}

/// Corpus lines that have no silver-tagged counterpart, so the tagger
/// never trained on them.
fn unseen_lines() -> Vec<&'static String> {
    corpus()
        .iter()
        .enumerate()
        .filter(|(i, _)| i % SILVER_EVERY != 0)
        .map(|(_, l)| l)
        .collect()
}

fn tag_line(line: &str) -> Vec<TaggedToken> {
    tagger().tag(&bite::pretok::pretokenize(line))
}

#[test]
fn morphology_round_trip() {
    let t = Instant::now();
    let covered: HashSet<(String, Tag)> = lex().lemma_entries().map(|(s, t, _)| (s.to_string(), t)).collect();
    let mut total = 0;
    let mut ok = 0;
    let mut failures = Vec::new();
    for line in read_lines(&fixture("morph_pairs.tsv")) {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let (surface, tag, lemma): (&str, Tag, &str) = (f[0], f[1].parse().unwrap(), f[2]);
        assert!(covered.contains(&(surface.to_lowercase(), tag)), "{surface}/{tag} is not in the dictionary");
        total += 1;
        let got = lex().lemmatize(surface, tag).unwrap();
        let back = lex().inflect(&got, Some(tag));
        let listed = lex()
            .listed_forms(&got.to_lowercase(), tag)
            .is_some_and(|fs| fs.iter().any(|x| x.eq_ignore_ascii_case(surface)));
        if got == lemma && (back == surface || listed) {
            ok += 1;
        } else {
            failures.push(format!("{surface}/{tag} -> {got} -> {back}"));
        }
    }
    let elapsed = t.elapsed();
    check(
        "morphology round trip",
        total == 200 && ok == total && elapsed < Duration::from_secs(1),
        format!("{ok}/{total} curated pairs in {elapsed:.2?} {failures:?}"),
    );
}

#[test]
fn bite_round_trip() {
    // Gold tags: silver sentences whose inflected words are all in the
    // dictionary with a single listed form. No tagger is involved here.
    let covered: HashSet<(String, Tag)> = lex().lemma_entries().map(|(s, t, _)| (s.to_string(), t)).collect();
    let eligible = |s: &Vec<TaggedToken>| {
        let mut inflected = 0;
        for t in s {
            if !t.tag.is_content() || t.tag.is_base_form() || t.tag.is_proper_noun() {
                continue;
            }
            if !covered.contains(&(t.surface.to_lowercase(), t.tag)) {
                return false;
            }
            let lemma = lex().lemmatize(&t.surface, t.tag).unwrap();
            if lex().listed_forms(&lemma.to_lowercase(), t.tag).is_some_and(|f| f.len() > 1) {
                return false;
            }
            inflected += 1;
        }
        inflected > 0
    };
    let gold: Vec<&Vec<TaggedToken>> = silver().iter().filter(|s| eligible(s)).take(500).collect();
    let gold_ok = gold
        .iter()
        .filter(|s| {
            let orig: Vec<&str> = s.iter().map(|t| t.surface.as_str()).collect();
            decode(&encode(s, lex(), BiteMode::Standard), lex()).unwrap() == orig
        })
        .count();

    let _ = tagger();
    let mut pool = unseen_lines();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    pool.shuffle(&mut rng);
    let sample = &pool[..10_000];
    let t = Instant::now();
    let results = pipeline::par_map(sample, |line| {
        let tagged = tag_line(line);
        let dec = decode(&encode(&tagged, lex(), BiteMode::Standard), lex()).unwrap();
        tagged
            .iter()
            .zip(&dec)
            .filter(|(a, b)| a.surface != **b)
            .map(|(a, b)| format!("{}/{} -> {b}", a.surface, a.tag))
            .collect::<Vec<_>>()
    });
    let elapsed = t.elapsed();
    let exact = results.iter().filter(|r| r.is_empty()).count();
    let mut losses: HashMap<&str, usize> = HashMap::new();
    for r in &results {
        for l in r {
            *losses.entry(l.as_str()).or_default() += 1;
        }
    }
    let mut top: Vec<(&str, usize)> = losses.into_iter().collect();
    top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    top.truncate(8);
    let rate = exact as f64 / sample.len() as f64;
    check(
        "BITE round trip",
        gold.len() == 500 && gold_ok == 500 && rate >= 0.95 && elapsed < Duration::from_secs(30),
        format!(
            "gold {gold_ok}/{}; tagged {exact}/{} = {:.2}% in {elapsed:.2?}; top losses {top:?}",
            gold.len(),
            sample.len(),
            100.0 * rate
        ),
    );
}

fn random_corpus(rng: &mut ChaCha8Rng) -> BTreeMap<String, u64> {
    let letters: Vec<char> = "abcdeéz".chars().collect();
    let types: Vec<String> = (0..rng.gen_range(5..60))
        .map(|_| (0..rng.gen_range(1..8)).map(|_| letters[rng.gen_range(0..letters.len())]).collect())
        .collect();
    let n_tokens = rng.gen_range(20..=1000);
    let mut counts = BTreeMap::new();
    for _ in 0..n_tokens {
        // Skewed draw so that counts tie and differ.
        let i = rng.gen_range(0..types.len()).min(rng.gen_range(0..types.len()));
        *counts.entry(types[i].clone()).or_insert(0) += 1;
    }
    counts
}

#[test]
fn bpe_matches_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut merges = 0;
    let mut equal = 0;
    for _ in 0..20 {
        let counts = random_corpus(&mut rng);
        let cfg = TrainerConfig::new(ModelType::Bpe, 0);
        let alphabet: HashSet<char> = counts.keys().flat_map(|w| w.chars()).collect();
        let floor = alphabet.len() + 1 + 1 + cfg.special_symbols.len();
        let cfg = TrainerConfig {
            vocab_size: floor + rng.gen_range(1..300),
            ..cfg
        };
        let model = subword::train(&cfg, &counts).unwrap();
        let mut specials = vec![subword::UNK.to_string()];
        specials.extend(cfg.special_symbols.iter().cloned());
        let oracle = bpe_oracle(&counts, cfg.vocab_size, &specials);
        merges += oracle.len();
        equal += usize::from(model.merges() == oracle.as_slice());
    }
    let elapsed = t.elapsed();
    check(
        "BPE oracle equivalence",
        equal == 20 && elapsed < Duration::from_secs(60),
        format!("{equal}/20 corpora identical, {merges} merges in {elapsed:.2?}"),
    );
}

#[test]
fn coverage_gain() {
    let t = Instant::now();
    let raw = metrics::type_counts(raw_tokens());
    let enc = metrics::type_counts(bite_tokens());
    let tokens: usize = raw_tokens().iter().map(Vec::len).sum();
    let mut rows = Vec::new();
    let mut pass = tokens >= 1_000_000;
    for n in [500, 1000, 3000, 5000, 10_000] {
        let r = metrics::coverage(&metrics::top_n_from_counts(&raw, n).unwrap(), raw_tokens()).unwrap();
        let b = metrics::coverage(&metrics::top_n_from_counts(&enc, n).unwrap(), bite_tokens()).unwrap();
        let gain = 100.0 * (b - r);
        pass &= gain >= 2.0;
        rows.push(format!("N={n}: {:.2}% -> {:.2}% ({gain:+.2})", 100.0 * r, 100.0 * b));
    }
    let elapsed = t.elapsed();
    check(
        "coverage gain",
        pass && elapsed < Duration::from_secs(300),
        format!("{tokens} tokens; {}; {elapsed:.2?}", rows.join(", ")),
    );
}

#[test]
fn sequence_length_bound() {
    let t = Instant::now();
    let mut pass = true;
    let mut rows = Vec::new();
    for mt in ModelType::ALL {
        let d = metrics::seq_len_delta(
            tagged_corpus(),
            lex(),
            BiteMode::Standard,
            model(mt, 20_000, true),
            model(mt, 20_000, false),
        )
        .unwrap();
        pass &= d.delta_percent < d.inflected_percent;
        rows.push(format!("{mt} {:+.2}% (bound {:.2}%)", d.delta_percent, d.inflected_percent));
    }
    let elapsed = t.elapsed();
    check(
        "sequence-length bound",
        pass && elapsed < Duration::from_secs(600),
        format!("{}; {elapsed:.2?}", rows.join(", ")),
    );
}

#[test]
fn adversarial_similarity() {
    let t = Instant::now();
    let _ = tagger();
    let mut pool = unseen_lines();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    pool.shuffle(&mut rng);
    let sentences: Vec<Vec<TaggedToken>> = pool
        .iter()
        .filter(|l| (5..=40).contains(&bite::pretok::pretokenize(l).len()))
        .take(1500)
        .map(|l| tag_line(l))
        .filter(|s| !adversary::candidates(lex(), s).is_empty())
        .take(1000)
        .collect();
    let mut pass = sentences.len() >= 1000;
    let mut rows = Vec::new();
    for mt in ModelType::ALL {
        let plain = model(mt, 10_000, false);
        let with = model(mt, 10_000, true);
        let surfaces = |s: &[TaggedToken]| s.iter().map(|t| t.surface.clone()).collect::<Vec<_>>();
        let pairs = pipeline::par_map(&sentences, |clean| {
            let mut scorer = EncodingDivergence::new(clean, |s: &[TaggedToken]| plain.encode(&surfaces(s)).symbols);
            let adv = adversary::greedy_attack(lex(), clean, &mut scorer).unwrap().tokens;
            let d = metrics::similarity(&plain.encode(&surfaces(clean)).symbols, &plain.encode(&surfaces(&adv)).symbols);
            let b = |s: &[TaggedToken]| with.encode(&bite::bite::encode_to_strings(s, lex(), BiteMode::Standard)).symbols;
            (d, metrics::similarity(&b(clean), &b(&adv)), clean != &adv)
        });
        let n = pairs.len() as f64;
        let d = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let changed = pairs.iter().filter(|p| p.2).count();
        let gain = 100.0 * (b - d);
        pass &= gain >= 0.5;
        rows.push(format!("{mt}: {:.2}% vs {:.2}% ({gain:+.2}, {changed} perturbed)", 100.0 * b, 100.0 * d));
    }
    let elapsed = t.elapsed();
    check(
        "adversarial similarity",
        pass && elapsed < Duration::from_secs(600),
        format!("{} pairs; {}; {elapsed:.2?}", sentences.len(), rows.join(", ")),
    );
}

#[test]
fn symbol_complexity() {
    let t = Instant::now();
    let types: Vec<String> = read_lines(&data("types/wordnet-lemmas.txt.gz"))
        .into_iter()
        .filter(|w| bite::pretok::pretokenize(w).len() == 1)
        .collect();
    let mut pass = types.len() >= 50_000;
    let mut rows = Vec::new();
    for vocab in [10_000, 20_000] {
        for mt in ModelType::ALL {
            let b = metrics::symbol_complexity(model(mt, vocab, true), &types, 2.0).unwrap();
            let r = metrics::symbol_complexity(model(mt, vocab, false), &types, 2.0).unwrap();
            pass &= b <= r;
            rows.push(format!("{mt}@{vocab}: {b} vs {r}"));
        }
    }
    let elapsed = t.elapsed();
    check(
        "symbol complexity",
        pass && elapsed < Duration::from_secs(600),
        format!("{} types; {}; {elapsed:.2?}", types.len(), rows.join(", ")),
    );
}

#[test]
fn tagger_accuracy() {
    let (train, held) = silver_split();
    let t = Instant::now();
    let model = PerceptronModel::train(train, TAGGER_EPOCHS, TAGGER_SEED).unwrap();
    let elapsed = t.elapsed();
    let acc = model.accuracy(held);
    let tokens: usize = held.iter().map(Vec::len).sum();
    check(
        "tagger accuracy",
        acc >= 0.90 && elapsed < Duration::from_secs(600),
        format!("{:.2}% on {tokens} held-out tokens, trained in {elapsed:.2?}", 100.0 * acc),
    );
}

#[test]
fn similarity_matches_oracle() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut equal = 0;
    for _ in 0..1000 {
        let sigma = rng.gen_range(1..6);
        let seq = |rng: &mut ChaCha8Rng| -> Vec<u8> { (0..rng.gen_range(0..=50)).map(|_| rng.gen_range(0..sigma)).collect() };
        let (a, b) = (seq(&mut rng), seq(&mut rng));
        let m: usize = metrics::matching_blocks(&a, &b).iter().map(|x| x.2).sum();
        if m == gestalt_matches(&a, &b) && metrics::similarity(&a, &b) == gestalt_similarity(&a, &b) {
            equal += 1;
        }
    }
    let elapsed = t.elapsed();
    check(
        "similarity oracle",
        equal == 1000 && elapsed < Duration::from_secs(10),
        format!("{equal}/1000 pairs identical in {elapsed:.2?}"),
    );
}

#[test]
fn determinism() {
    let mut same = Vec::new();
    let tagger_a = PerceptronModel::train(silver_split().0, TAGGER_EPOCHS, TAGGER_SEED).unwrap();
    same.push(("train-tagger", tagger_a.to_bytes() == tagger().to_bytes()));

    let counts = subword::count_words(bite_tokens(), &bite::bite::special_symbols());
    for mt in ModelType::ALL {
        let cfg = pipeline::trainer_config(mt, 5000, BiteMode::Standard);
        let a = subword::train(&cfg, &counts).unwrap().to_bytes();
        let b = subword::train(&cfg, &counts).unwrap().to_bytes();
        same.push(("train-subword", a == b));
    }

    let mut pipe = pipeline(BiteMode::Standard);
    pipe.subword = Some(model(ModelType::Bpe, 10_000, true).clone());
    let text = corpus()[..3000].join("\n");
    let run = || {
        let mut out = Vec::new();
        pipeline::run_pipeline(&pipe, text.as_bytes(), &mut out).unwrap();
        out
    };
    same.push(("encode", run() == run()));

    let opts = pipeline::PerturbOptions {
        strategy: adversary::Strategy::Sample,
        k: 4,
        seed: 11,
        ..Default::default()
    };
    let sample = || -> Vec<_> { corpus()[..300].iter().map(|l| pipe.perturb(l, &opts).unwrap()).collect() };
    same.push(("perturb", sample() == sample()));

    let pass = same.iter().all(|(_, s)| *s);
    check("determinism", pass, format!("{same:?}"));
}
