use std::collections::HashMap;

use super::Sentence;
use crate::error::{Error, Result};

/// Display form of the reserved unknown-token id. A corpus token spelled the
/// same way still gets its own id.
pub const UNKNOWN_TOKEN: &str = "<unk>";

/// Token strings mapped to dense ids. Id 0 is the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_of: HashMap<String, u32>,
}

impl Vocabulary {
    pub const UNKNOWN_ID: u32 = 0;

    /// Builds from known tokens in id order (ids start at 1).
    pub fn from_known_tokens<S: Into<String>>(known: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut tokens = vec![UNKNOWN_TOKEN.to_owned()];
        let mut id_of = HashMap::new();
        for t in known {
            let t = t.into();
            let id = tokens.len() as u32;
            if id_of.insert(t.clone(), id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary entry `{t}`"
                )));
            }
            tokens.push(t);
        }
        Ok(Vocabulary { tokens, id_of })
    }

    /// Number of ids, including the unknown id.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of corpus tokens (ids other than unknown).
    pub fn known_len(&self) -> usize {
        self.tokens.len() - 1
    }

    pub fn id(&self, token: &str) -> u32 {
        self.id_of.get(token).copied().unwrap_or(Self::UNKNOWN_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of.contains_key(token)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Known tokens in id order.
    pub fn known_tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens[1..].iter().map(String::as_str)
    }

    pub fn encode(&self, sentence: &Sentence) -> Vec<u32> {
        sentence.tokens().iter().map(|t| self.id(t)).collect()
    }
}

/// Every token seen at least `min_count` times, most frequent first (ties
/// broken lexicographically).
pub fn build_vocab<'a>(
    sentences: impl IntoIterator<Item = &'a Sentence>,
    min_count: usize,
) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        for t in s.tokens() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_known_tokens(kept.into_iter().map(|(t, _)| t)).expect("tokens are unique keys")
}
