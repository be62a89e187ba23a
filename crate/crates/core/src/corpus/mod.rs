//! Paraphrase corpora: ranked candidate pairs, graded annotations and
//! labeled training sets, plus the samplers that turn one into the other.
//!
//! All files are UTF-8 TSV with one pair per line:
//!
//! | file | columns |
//! |------|---------|
//! | ranked corpus | `sentence_a`, `sentence_b`, optional `rank_score` |
//! | annotated set | `sentence_a`, `sentence_b`, `grade` |
//! | labeled set | `label` (1 or 0), `sentence_a`, `sentence_b` |
//!
//! Sentences are already tokenized; tokens are separated by whitespace.

mod io;
mod quality;
mod sampling;
mod vocab;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    load_annotated_set, load_labeled_set, load_pair_corpus, parse_annotated_set, parse_labeled_set,
    parse_pair_corpus, save_labeled_set, write_labeled_set,
};
pub use quality::{load_quality_curve, select_prefix_for_quality, QualityCurve};
pub use sampling::{negatives_from_prefix, sample_by_token_budget, sample_training_set};
pub use vocab::{build_vocab, Vocabulary, UNKNOWN_TOKEN};

/// The seven annotation grades, ascending.
pub const GRADES: [f64; 7] = [1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0];

/// A pre-tokenized sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    raw: String,
    tokens: Vec<String>,
}

impl Sentence {
    pub fn parse(raw: &str) -> Result<Self> {
        let tokens: Vec<String> = raw.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            return Err(Error::EmptySequence);
        }
        Ok(Sentence {
            raw: raw.to_owned(),
            tokens,
        })
    }

    pub fn from_tokens<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Result<Self> {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.is_empty()
            || tokens
                .iter()
                .any(|t| t.is_empty() || t.contains(char::is_whitespace))
        {
            return Err(Error::InvalidArgument(
                "tokens must be non-empty and free of whitespace".into(),
            ));
        }
        Ok(Sentence {
            raw: tokens.join(" "),
            tokens,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens joined by single spaces.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub a: Sentence,
    pub b: Sentence,
    pub rank_score: Option<f64>,
}

impl RankedPair {
    pub fn token_count(&self) -> usize {
        self.a.len() + self.b.len()
    }
}

/// Candidate paraphrase pairs ordered best-first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedPairCorpus {
    pub pairs: Vec<RankedPair>,
}

impl RankedPairCorpus {
    /// Checks the ordering invariant: present rank scores never increase.
    pub fn new(pairs: Vec<RankedPair>) -> Result<Self> {
        let mut last: Option<f64> = None;
        for (i, p) in pairs.iter().enumerate() {
            if let Some(s) = p.rank_score {
                if let Some(prev) = last {
                    if s > prev {
                        return Err(Error::InvalidArgument(format!(
                            "rank scores must be non-increasing: pair {} has {s} after {prev}",
                            i + 1
                        )));
                    }
                }
                last = Some(s);
            }
        }
        Ok(RankedPairCorpus { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().flat_map(|p| [&p.a, &p.b])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedPair {
    pub a: Sentence,
    pub b: Sentence,
    pub grade: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnotatedPairSet {
    pub pairs: Vec<AnnotatedPair>,
}

pub fn is_valid_grade(grade: f64) -> bool {
    GRADES.iter().any(|&g| g == grade)
}

impl AnnotatedPairSet {
    pub fn new(pairs: Vec<AnnotatedPair>) -> Result<Self> {
        if let Some(p) = pairs.iter().find(|p| !is_valid_grade(p.grade)) {
            return Err(Error::InvalidArgument(format!("invalid grade {}", p.grade)));
        }
        Ok(AnnotatedPairSet { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn digit(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }

    pub fn from_digit(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Label::Positive),
            "0" => Some(Label::Negative),
            _ => None,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub a: Sentence,
    pub b: Sentence,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledPairSet {
    pub pairs: Vec<LabeledPair>,
}

impl LabeledPairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.pairs.iter().filter(|p| p.label.is_positive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.pairs.iter().flat_map(|p| [&p.a, &p.b])
    }
}

/// Binary labels from graded annotations: 3.0 and above are paraphrases,
/// 2.0 and below are not, and the borderline 2.5 is left out.
pub fn binarize_annotations(set: &AnnotatedPairSet) -> LabeledPairSet {
    let pairs = set
        .pairs
        .iter()
        .filter_map(|p| {
            let label = if p.grade >= 3.0 {
                Label::Positive
            } else if p.grade <= 2.0 {
                Label::Negative
            } else {
                return None;
            };
            Some(LabeledPair {
                a: p.a.clone(),
                b: p.b.clone(),
                label,
            })
        })
        .collect();
    LabeledPairSet { pairs }
}

/// Rewrites every sentence of a pair collection, keeping pair structure and
/// side information.
pub trait MapSentences: Sized {
    fn map_sentences<F: FnMut(&Sentence) -> Sentence>(&self, f: F) -> Self;
}

impl MapSentences for RankedPairCorpus {
    fn map_sentences<F: FnMut(&Sentence) -> Sentence>(&self, mut f: F) -> Self {
        RankedPairCorpus {
            pairs: self
                .pairs
                .iter()
                .map(|p| RankedPair {
                    a: f(&p.a),
                    b: f(&p.b),
                    rank_score: p.rank_score,
                })
                .collect(),
        }
    }
}

impl MapSentences for AnnotatedPairSet {
    fn map_sentences<F: FnMut(&Sentence) -> Sentence>(&self, mut f: F) -> Self {
        AnnotatedPairSet {
            pairs: self
                .pairs
                .iter()
                .map(|p| AnnotatedPair {
                    a: f(&p.a),
                    b: f(&p.b),
                    grade: p.grade,
                })
                .collect(),
        }
    }
}

impl MapSentences for LabeledPairSet {
    fn map_sentences<F: FnMut(&Sentence) -> Sentence>(&self, mut f: F) -> Self {
        LabeledPairSet {
            pairs: self
                .pairs
                .iter()
                .map(|p| LabeledPair {
                    a: f(&p.a),
                    b: f(&p.b),
                    label: p.label,
                })
                .collect(),
        }
    }
}
