//! Seeded generators for synthetic corpora.
//!
//! Paraphrase data is built from concepts, each with several synonymous
//! surface words. A sentence is a sequence of concept slots interleaved with
//! filler words; its paraphrase keeps the concept sequence and redraws every
//! surface word. Morphology data composes words from stems and affixes.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    AnnotatedPair, AnnotatedPairSet, Label, LabeledPair, LabeledPairSet, RankedPair,
    RankedPairCorpus, Sentence,
};
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "sh",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Draws distinct pseudo-words of `syllables` consonant-vowel syllables.
fn pseudo_words(
    rng: &mut ChaCha8Rng,
    count: usize,
    syllables: usize,
    taken: &mut HashSet<String>,
) -> Vec<String> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w: String = (0..syllables)
            .map(|_| {
                format!(
                    "{}{}",
                    ONSETS.choose(rng).unwrap(),
                    VOWELS.choose(rng).unwrap()
                )
            })
            .collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParaphraseConfig {
    pub concepts: usize,
    pub synonyms: usize,
    pub fillers: usize,
    pub min_concepts: usize,
    pub max_concepts: usize,
    /// Chance of a filler word after each concept slot.
    pub filler_rate: f64,
}

impl Default for ParaphraseConfig {
    fn default() -> Self {
        ParaphraseConfig {
            concepts: 60,
            synonyms: 3,
            fillers: 8,
            min_concepts: 3,
            max_concepts: 6,
            filler_rate: 0.4,
        }
    }
}

/// Templated synonym paraphrase generator.
#[derive(Debug, Clone)]
pub struct ParaphraseGenerator {
    config: ParaphraseConfig,
    concepts: Vec<Vec<String>>,
    fillers: Vec<String>,
    rng: ChaCha8Rng,
}

impl ParaphraseGenerator {
    pub fn new(config: ParaphraseConfig, seed: u64) -> Result<Self> {
        if config.concepts < 2
            || config.synonyms == 0
            || config.min_concepts == 0
            || config.min_concepts > config.max_concepts
            || !(0.0..=1.0).contains(&config.filler_rate)
        {
            return Err(Error::InvalidArgument(
                "invalid paraphrase generator settings".into(),
            ));
        }
        let mut rng = seeded_rng(seed);
        let mut taken = HashSet::new();
        let fillers = pseudo_words(&mut rng, config.fillers, 1, &mut taken);
        let concepts = (0..config.concepts)
            .map(|_| pseudo_words(&mut rng, config.synonyms, 2, &mut taken))
            .collect();
        Ok(ParaphraseGenerator {
            config,
            concepts,
            fillers,
            rng,
        })
    }

    pub fn config(&self) -> &ParaphraseConfig {
        &self.config
    }

    /// Restarts the sentence draws from `seed`, keeping the word inventory.
    pub fn reseed(&mut self, seed: u64) {
        self.rng = seeded_rng(seed);
    }

    /// Synonym sets, one per concept.
    pub fn concepts(&self) -> &[Vec<String>] {
        &self.concepts
    }

    fn plan(&mut self) -> Vec<usize> {
        let n = self
            .rng
            .gen_range(self.config.min_concepts..=self.config.max_concepts);
        (0..n)
            .map(|_| self.rng.gen_range(0..self.concepts.len()))
            .collect()
    }

    fn realize(&mut self, plan: &[usize]) -> Sentence {
        let mut tokens = Vec::new();
        for &c in plan {
            tokens.push(self.concepts[c].choose(&mut self.rng).unwrap().clone());
            if !self.fillers.is_empty() && self.rng.gen_bool(self.config.filler_rate) {
                tokens.push(self.fillers.choose(&mut self.rng).unwrap().clone());
            }
        }
        Sentence::from_tokens(tokens).expect("plans are non-empty")
    }

    /// Two realizations of the same concept sequence.
    pub fn paraphrase_pair(&mut self) -> (Sentence, Sentence) {
        let plan = self.plan();
        (self.realize(&plan), self.realize(&plan))
    }

    /// Realizations of two independent concept sequences.
    pub fn unrelated_pair(&mut self) -> (Sentence, Sentence) {
        let (p, q) = (self.plan(), self.plan());
        (self.realize(&p), self.realize(&q))
    }

    /// `n` paraphrase pairs scored best-first.
    pub fn ranked_corpus(&mut self, n: usize) -> Result<RankedPairCorpus> {
        let pairs = (0..n)
            .map(|i| {
                let (a, b) = self.paraphrase_pair();
                RankedPair {
                    a,
                    b,
                    rank_score: Some((n - i) as f64 / n as f64),
                }
            })
            .collect();
        RankedPairCorpus::new(pairs)
    }

    /// Shuffled labeled pairs with the given class counts.
    pub fn labeled_set(&mut self, positives: usize, negatives: usize) -> LabeledPairSet {
        let mut pairs = Vec::with_capacity(positives + negatives);
        for k in 0..positives + negatives {
            let (label, (a, b)) = if k < positives {
                (Label::Positive, self.paraphrase_pair())
            } else {
                (Label::Negative, self.unrelated_pair())
            };
            pairs.push(LabeledPair { a, b, label });
        }
        pairs.shuffle(&mut self.rng);
        LabeledPairSet { pairs }
    }

    /// Annotated pairs: paraphrases graded 4, unrelated pairs graded 1.
    pub fn annotated_set(&mut self, positives: usize, negatives: usize) -> AnnotatedPairSet {
        let labeled = self.labeled_set(positives, negatives);
        let pairs = labeled
            .pairs
            .into_iter()
            .map(|p| AnnotatedPair {
                a: p.a,
                b: p.b,
                grade: if p.label.is_positive() { 4.0 } else { 1.0 },
            })
            .collect();
        AnnotatedPairSet::new(pairs).expect("valid grades")
    }
}

/// Replaces the second sentence of a seeded `fraction` of pairs with the
/// second sentence of another pair, keeping order and scores.
pub fn corrupt_positives(
    corpus: &RankedPairCorpus,
    fraction: f64,
    seed: u64,
) -> Result<RankedPairCorpus> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} outside [0, 1]"
        )));
    }
    let n = corpus.len();
    let k = (fraction * n as f64).round() as usize;
    let mut pairs = corpus.pairs.clone();
    if k == 0 || n < 2 {
        return RankedPairCorpus::new(pairs);
    }
    let mut rng = seeded_rng(seed);
    let chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
    for i in chosen {
        let mut j = rng.gen_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        pairs[i].b = corpus.pairs[j].b.clone();
    }
    RankedPairCorpus::new(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MorphologyConfig {
    pub stems: usize,
    pub prefixes: usize,
    pub suffixes: usize,
    /// Chance that a word carries a prefix.
    pub prefix_rate: f64,
    /// Upper bound on stacked suffixes per word.
    pub max_suffixes: usize,
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for MorphologyConfig {
    fn default() -> Self {
        MorphologyConfig {
            stems: 300,
            prefixes: 4,
            suffixes: 10,
            prefix_rate: 0.3,
            max_suffixes: 2,
            min_len: 4,
            max_len: 10,
        }
    }
}

/// Sentences whose words are `prefix? stem suffix*`, with Zipf-like stem frequencies.
pub fn compositional_corpus(
    config: &MorphologyConfig,
    sentences: usize,
    seed: u64,
) -> Result<Vec<Sentence>> {
    if config.stems == 0 || config.min_len == 0 || config.min_len > config.max_len {
        return Err(Error::InvalidArgument(
            "invalid morphology generator settings".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let mut taken = HashSet::new();
    let stems = pseudo_words(&mut rng, config.stems, 2, &mut taken);
    let prefixes = pseudo_words(&mut rng, config.prefixes, 1, &mut taken);
    let suffixes = pseudo_words(&mut rng, config.suffixes, 1, &mut taken);
    // Cumulative 1/rank weights.
    let mut cumulative = Vec::with_capacity(stems.len());
    let mut total = 0.0;
    for r in 0..stems.len() {
        total += 1.0 / (r + 1) as f64;
        cumulative.push(total);
    }
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let words: Vec<String> = (0..len)
            .map(|_| {
                let u = rng.gen_range(0.0..total);
                let s = cumulative.partition_point(|&c| c <= u).min(stems.len() - 1);
                let mut w = String::new();
                if !prefixes.is_empty() && rng.gen_bool(config.prefix_rate) {
                    w.push_str(prefixes.choose(&mut rng).unwrap());
                }
                w.push_str(&stems[s]);
                if !suffixes.is_empty() {
                    for _ in 0..rng.gen_range(0..=config.max_suffixes) {
                        w.push_str(suffixes.choose(&mut rng).unwrap());
                    }
                }
                w
            })
            .collect();
        out.push(Sentence::from_tokens(words)?);
    }
    Ok(out)
}
