use rand::Rng;

use super::{Label, LabeledPair, LabeledPairSet, RankedPair, RankedPairCorpus};
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

/// Labeled training set from the head of a ranked corpus.
///
/// The first `n_positive` pairs are the positives, in corpus order. The same
/// number of negatives follows, each made of two sentences drawn uniformly
/// from the sentences of those positives.
pub fn sample_training_set(
    corpus: &RankedPairCorpus,
    n_positive: usize,
    seed: u64,
) -> Result<LabeledPairSet> {
    if n_positive > corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {n_positive} positives from a corpus of {} pairs",
            corpus.len()
        )));
    }
    Ok(label_prefix(&corpus.pairs[..n_positive], seed))
}

/// Like [`sample_training_set`], but the prefix is the longest one whose
/// total token count (both sides) stays within `token_budget`.
pub fn sample_by_token_budget(
    corpus: &RankedPairCorpus,
    token_budget: usize,
    seed: u64,
) -> Result<LabeledPairSet> {
    let first = corpus
        .pairs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty corpus".into()))?;
    if token_budget < first.token_count() {
        return Err(Error::InvalidArgument(format!(
            "token budget {token_budget} is smaller than the first pair ({} tokens)",
            first.token_count()
        )));
    }
    let mut used = 0usize;
    let take = corpus
        .pairs
        .iter()
        .take_while(|p| {
            used += p.token_count();
            used <= token_budget
        })
        .count();
    Ok(label_prefix(&corpus.pairs[..take], seed))
}

fn label_prefix(prefix: &[RankedPair], seed: u64) -> LabeledPairSet {
    let mut pairs: Vec<LabeledPair> = prefix
        .iter()
        .map(|p| LabeledPair {
            a: p.a.clone(),
            b: p.b.clone(),
            label: Label::Positive,
        })
        .collect();
    pairs.extend(negatives_from_prefix(prefix, prefix.len(), seed));
    LabeledPairSet { pairs }
}

/// `count` random pairings of the sentences in `prefix`. The two members
/// are always distinct sentence slots; an accidental true paraphrase is kept.
pub fn negatives_from_prefix(prefix: &[RankedPair], count: usize, seed: u64) -> Vec<LabeledPair> {
    let pool = prefix.len() * 2;
    if pool == 0 {
        return Vec::new();
    }
    let slot = |k: usize| {
        let p = &prefix[k / 2];
        if k % 2 == 0 {
            &p.a
        } else {
            &p.b
        }
    };
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| {
            let i = rng.gen_range(0..pool);
            let mut j = rng.gen_range(0..pool);
            while j == i {
                j = rng.gen_range(0..pool);
            }
            LabeledPair {
                a: slot(i).clone(),
                b: slot(j).clone(),
                label: Label::Negative,
            }
        })
        .collect()
}
