mod support;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bite::subword::{self, ModelType, TrainerConfig, UNK};
use support::bpe_oracle;

fn check(counts: &BTreeMap<String, u64>, extra: usize) {
    let mut cfg = TrainerConfig::new(ModelType::Bpe, 0);
    let chars: std::collections::BTreeSet<char> = counts.keys().flat_map(|w| w.chars()).collect();
    cfg.vocab_size = chars.len() + 2 + cfg.special_symbols.len() + extra;
    let model = subword::train(&cfg, counts).unwrap();
    let mut specials = vec![UNK.to_string()];
    specials.extend(cfg.special_symbols.iter().cloned());
    assert_eq!(model.merges(), bpe_oracle(counts, cfg.vocab_size, &specials).as_slice(), "{counts:?}");
}

#[test]
fn toy_corpus() {
    let counts: BTreeMap<String, u64> = [("low", 5), ("lower", 2), ("newest", 6), ("widest", 3)]
        .into_iter()
        .map(|(w, c)| (w.to_string(), c))
        .collect();
    for extra in 1..20 {
        check(&counts, extra);
    }
}

#[test]
fn random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let letters: Vec<char> = "aabbcdeñ".chars().collect();
        let mut counts = BTreeMap::new();
        for _ in 0..rng.gen_range(1..40) {
            let w: String = (0..rng.gen_range(1..9)).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
            *counts.entry(w).or_insert(0) += rng.gen_range(1..6);
        }
        check(&counts, rng.gen_range(1..120));
    }
}
