//! Unsupervised morphological segmentation by greedy minimum description
//! length search.
//!
//! The model cost, in nats, has two parts:
//!
//! * corpus cost: `-sum over morph tokens of ln(count(m) / N)`, where `N` is
//!   the number of morph tokens in the segmented word table;
//! * lexicon cost: `sum over morph types of (chars(m) + 1) * ln(K + 1)`, a flat
//!   per-character code over an alphabet of `K` symbols plus an end marker.
//!
//! Training starts from whole words. Each epoch tries, in order:
//! re-segmenting each word, introducing substrings shared by several words,
//! merging frequent adjacent morph pairs, re-segmenting each morph everywhere
//! it is used, and spelling every word in characters. A change is kept only
//! when it lowers the total cost.

mod io;

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{MapSentences, Sentence};
use crate::error::{Error, Result};
use crate::numcore::seeded_rng;

pub use io::{load_model, load_word_counts, parse_model, save_model, write_model};

/// Word frequencies from a training corpus.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordCountTable {
    counts: BTreeMap<String, u64>,
}

impl WordCountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, word: &str, count: u64) -> Result<()> {
        if word.is_empty() || count == 0 {
            return Err(Error::InvalidArgument(format!(
                "word table entries need a non-empty word and a positive count (`{word}`, {count})"
            )));
        }
        *self.counts.entry(word.to_owned()).or_default() += count;
        Ok(())
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: impl IntoIterator<Item = (S, u64)>) -> Result<Self> {
        let mut t = Self::new();
        for (w, c) in pairs {
            t.add(w.as_ref(), c)?;
        }
        Ok(t)
    }

    pub fn from_sentences<'a>(sentences: impl IntoIterator<Item = &'a Sentence>) -> Self {
        let mut t = Self::new();
        for s in sentences {
            for w in s.tokens() {
                *t.counts.entry(w.clone()).or_default() += 1;
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<u64> {
        self.counts.get(word).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Distinct characters over all words.
    pub fn alphabet_size(&self) -> usize {
        self.counts
            .keys()
            .flat_map(|w| w.chars())
            .collect::<HashSet<char>>()
            .len()
    }
}

/// How word frequencies enter the corpus cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Each word contributes its corpus frequency.
    #[default]
    Tokens,
    /// Each word type contributes once.
    Types,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub seed: u64,
    /// Stop once an epoch gains less than this many nats. `None` means
    /// 0.5% of the initial whole-word cost.
    pub convergence_threshold: Option<f64>,
    pub count_mode: CountMode,
    pub max_epochs: usize,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            seed: 42,
            convergence_threshold: None,
            count_mode: CountMode::Tokens,
            max_epochs: 50,
        }
    }
}

pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.005;

/// Smallest cost decrease, in nats, that counts as an improvement.
const IMPROVEMENT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochTrace {
    pub epoch: usize,
    pub cost: f64,
    pub accepted: usize,
}

/// Morph lexicon with counts and the analysis of every training word.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationModel {
    morph_counts: BTreeMap<String, u64>,
    total_morph_tokens: u64,
    alphabet_size: usize,
    count_mode: CountMode,
    analyses: HashMap<String, Vec<String>>,
    // Effective count of every training word.
    weights: HashMap<String, u64>,
    // Incrementally maintained cost terms.
    sum_c_ln_c: f64,
    lexicon_symbols: u64,
    trace: Vec<EpochTrace>,
}

fn chars(s: &str) -> u64 {
    s.chars().count() as u64
}

fn c_ln_c(c: u64) -> f64 {
    if c == 0 {
        0.0
    } else {
        c as f64 * (c as f64).ln()
    }
}

impl SegmentationModel {
    fn empty(alphabet_size: usize, count_mode: CountMode) -> Self {
        SegmentationModel {
            morph_counts: BTreeMap::new(),
            total_morph_tokens: 0,
            alphabet_size,
            count_mode,
            analyses: HashMap::new(),
            weights: HashMap::new(),
            sum_c_ln_c: 0.0,
            lexicon_symbols: 0,
            trace: Vec::new(),
        }
    }

    /// Model from a stored lexicon; there are no training analyses, so every
    /// word goes through [`segment_word`]'s search.
    pub fn from_lexicon(
        morph_counts: impl IntoIterator<Item = (String, u64)>,
        alphabet_size: usize,
    ) -> Result<Self> {
        let mut m = Self::empty(alphabet_size, CountMode::Tokens);
        for (morph, c) in morph_counts {
            if morph.is_empty() || c == 0 {
                return Err(Error::InvalidArgument(format!(
                    "bad lexicon entry `{morph}` ({c})"
                )));
            }
            m.add_morph(&morph, c);
        }
        Ok(m)
    }

    fn add_morph(&mut self, morph: &str, c: u64) {
        let entry = self.morph_counts.entry(morph.to_owned()).or_insert(0);
        if *entry == 0 {
            self.lexicon_symbols += chars(morph) + 1;
        }
        self.sum_c_ln_c += c_ln_c(*entry + c) - c_ln_c(*entry);
        *entry += c;
        self.total_morph_tokens += c;
    }

    fn remove_morph(&mut self, morph: &str, c: u64) {
        let entry = self
            .morph_counts
            .get_mut(morph)
            .expect("removing a morph that was never added");
        debug_assert!(*entry >= c);
        self.sum_c_ln_c += c_ln_c(*entry - c) - c_ln_c(*entry);
        *entry -= c;
        self.total_morph_tokens -= c;
        if *entry == 0 {
            self.morph_counts.remove(morph);
            self.lexicon_symbols -= chars(morph) + 1;
        }
    }

    fn add_all(&mut self, morphs: &[String], c: u64) {
        for m in morphs {
            self.add_morph(m, c);
        }
    }

    fn remove_all(&mut self, morphs: &[String], c: u64) {
        for m in morphs {
            self.remove_morph(m, c);
        }
    }

    /// Recomputes the running cost terms from the counts to shed drift.
    fn refresh(&mut self) {
        self.sum_c_ln_c = self.morph_counts.values().map(|&c| c_ln_c(c)).sum();
        self.lexicon_symbols = self.morph_counts.keys().map(|m| chars(m) + 1).sum();
    }

    pub fn corpus_cost(&self) -> f64 {
        c_ln_c(self.total_morph_tokens) - self.sum_c_ln_c
    }

    pub fn lexicon_cost(&self) -> f64 {
        self.lexicon_symbols as f64 * ((self.alphabet_size + 1) as f64).ln()
    }

    /// Total description length of the current state, in nats.
    pub fn cost(&self) -> f64 {
        self.corpus_cost() + self.lexicon_cost()
    }

    pub fn morph_count(&self, morph: &str) -> u64 {
        self.morph_counts.get(morph).copied().unwrap_or(0)
    }

    pub fn morph_counts(&self) -> &BTreeMap<String, u64> {
        &self.morph_counts
    }

    pub fn total_morph_tokens(&self) -> u64 {
        self.total_morph_tokens
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn count_mode(&self) -> CountMode {
        self.count_mode
    }

    pub fn lexicon_size(&self) -> usize {
        self.morph_counts.len()
    }

    pub fn analysis(&self, word: &str) -> Option<&[String]> {
        self.analyses.get(word).map(Vec::as_slice)
    }

    pub fn trace(&self) -> &[EpochTrace] {
        &self.trace
    }

    /// Best segmentation of `s` (occurring `c` times) by recursive binary
    /// splitting. The chosen morphs are left added to the counts.
    fn best_split(&mut self, s: &str, c: u64) -> Vec<String> {
        self.add_morph(s, c);
        let mut best_cost = self.cost();
        self.remove_morph(s, c);

        let mut best: Option<usize> = None;
        for (i, _) in s.char_indices().skip(1) {
            let (l, r) = s.split_at(i);
            self.add_morph(l, c);
            self.add_morph(r, c);
            let cost = self.cost();
            if cost < best_cost - 1e-12 {
                best_cost = cost;
                best = Some(i);
            }
            self.remove_morph(l, c);
            self.remove_morph(r, c);
        }

        match best {
            None => {
                self.add_morph(s, c);
                vec![s.to_owned()]
            }
            Some(i) => {
                let (l, r) = s.split_at(i);
                self.add_morph(l, c);
                self.add_morph(r, c);
                self.remove_morph(l, c);
                let mut out = self.best_split(l, c);
                self.remove_morph(r, c);
                out.extend(self.best_split(r, c));
                out
            }
        }
    }

    /// Re-segments one word; returns whether the new analysis was kept.
    fn resplit(&mut self, word: &str, c: u64) -> bool {
        let old = self.analyses.get(word).cloned().expect("word in model");
        let before = self.cost();
        self.remove_all(&old, c);
        if word.chars().count() <= EXHAUSTIVE_MAX_CHARS {
            let new = self.cheapest_segmentation(word, c);
            return self.commit(word, c, old, new, before);
        }
        // Recursive binary splitting cannot reach analyses that need several
        // cuts at once; the cheapest full segmentation is tried as well.
        let split = self.best_split(word, c);
        let split_cost = self.cost();
        self.remove_all(&split, c);
        let joint = viterbi(self, word, Some(c));
        self.add_all(&joint, c);
        let new = if self.cost() < split_cost - 1e-12 {
            joint
        } else {
            self.remove_all(&joint, c);
            self.add_all(&split, c);
            split
        };
        self.commit(word, c, old, new, before)
    }

    /// Every segmentation of `word` scored against the current counts; the
    /// cheapest one is left added.
    fn cheapest_segmentation(&mut self, word: &str, c: u64) -> Vec<String> {
        self.cheapest_containing(word, c, None)
            .expect("unconstrained search always succeeds")
    }

    /// Like [`Self::cheapest_segmentation`], restricted to segmentations that
    /// use `required` as one of their morphs. `None` if there is none.
    fn cheapest_containing(
        &mut self,
        word: &str,
        c: u64,
        required: Option<&str>,
    ) -> Option<Vec<String>> {
        let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).skip(1).collect();
        let mut best = (f64::INFINITY, None);
        for mask in 0..1u32 << bounds.len() {
            let morphs = cut(word, &bounds, mask);
            if required.is_some_and(|r| !morphs.iter().any(|m| m == r)) {
                continue;
            }
            self.add_all(&morphs, c);
            let cost = self.cost();
            if cost < best.0 - 1e-12 {
                best = (cost, Some(mask));
            }
            self.remove_all(&morphs, c);
        }
        let morphs = cut(word, &bounds, best.1?);
        self.add_all(&morphs, c);
        Some(morphs)
    }

    /// Re-segments some of `words` at once so that they use `shared` as a
    /// morph; returns whether the change was kept. Small groups try every
    /// subset of the words, larger ones force all of them.
    fn introduce_shared(&mut self, shared: &str, words: &[(String, u64)]) -> bool {
        let before = self.cost();
        let old: Vec<Vec<String>> = words
            .iter()
            .map(|(w, _)| self.analyses[w.as_str()].clone())
            .collect();
        if old.iter().all(|a| a.iter().any(|m| m == shared)) {
            return false;
        }
        let subsets: Vec<u64> = if words.len() <= SHARED_SUBSET_MAX_WORDS {
            (1..1u64 << words.len()).collect()
        } else {
            vec![u64::MAX]
        };
        let mut best: Option<(f64, Vec<Vec<String>>)> = None;
        let mut everywhere = None;
        for subset in subsets {
            let (cost, new) = self.try_shared(shared, words, &old, subset);
            if subset.count_ones() as usize >= words.len() {
                everywhere = Some(new.clone());
            }
            if best.as_ref().map_or(true, |(b, _)| cost < *b - 1e-12) {
                best = Some((cost, new));
            }
        }
        let (_, cheapest) = best.expect("at least one subset");
        // The cheapest subset first, then the shared morph in every word.
        for new in [Some(cheapest), everywhere].into_iter().flatten() {
            if new == old {
                continue;
            }
            let changes = words.iter().map(|(w, _)| w.clone()).zip(new).collect();
            if self.apply_with_repair(changes, before) {
                return true;
            }
        }
        false
    }

    /// Forces `shared` into the words selected by `subset` and reports the
    /// resulting cost and analyses. The counts are left as they were.
    fn try_shared(
        &mut self,
        shared: &str,
        words: &[(String, u64)],
        old: &[Vec<String>],
        subset: u64,
    ) -> (f64, Vec<Vec<String>>) {
        let mut new = old.to_vec();
        // Later words see the morphs chosen for earlier ones; a few sweeps let
        // the earlier words catch up.
        for _ in 0..SHARED_SWEEPS {
            let mut changed = false;
            for (k, ((w, c), a)) in words.iter().zip(new.iter_mut()).enumerate() {
                if subset >> k.min(63) & 1 == 1 {
                    self.remove_all(a, *c);
                    let forced = self
                        .cheapest_containing(w, *c, Some(shared))
                        .expect("every candidate word contains the shared substring");
                    changed |= forced != *a;
                    *a = forced;
                }
            }
            if !changed {
                break;
            }
        }
        let cost = self.cost();
        for ((_, c), (a, o)) in words.iter().zip(new.iter().zip(old)) {
            self.remove_all(a, *c);
            self.add_all(o, *c);
        }
        (cost, new)
    }

    /// Re-segments a morph everywhere it occurs; returns whether the split
    /// was kept.
    fn resplit_morph(&mut self, morph: &str) -> bool {
        let c = self.morph_count(morph);
        if c == 0 || morph.chars().count() < 2 {
            return false;
        }
        let before = self.cost();
        self.remove_morph(morph, c);
        let pieces = if morph.chars().count() <= EXHAUSTIVE_MAX_CHARS {
            self.cheapest_segmentation(morph, c)
        } else {
            self.best_split(morph, c)
        };
        if pieces.len() == 1 {
            return false;
        }
        if self.cost() >= before - IMPROVEMENT_EPS {
            self.remove_all(&pieces, c);
            self.add_morph(morph, c);
            return false;
        }
        for analysis in self.analyses.values_mut() {
            if analysis.iter().any(|m| m == morph) {
                *analysis = analysis
                    .iter()
                    .flat_map(|m| {
                        if m == morph {
                            pieces.clone()
                        } else {
                            vec![m.clone()]
                        }
                    })
                    .collect();
            }
        }
        true
    }

    /// Joins every adjacent occurrence of `left` followed by `right` into one
    /// morph; returns whether the merge was kept. With `repair`, a merge that
    /// raises the cost may still be kept, see [`Self::apply_with_repair`].
    fn merge_pair(&mut self, left: &str, right: &str, repair: bool) -> bool {
        let before = self.cost();
        let changes: Vec<(String, Vec<String>)> = self
            .analyses
            .iter()
            .filter(|(_, a)| a.windows(2).any(|p| p[0] == left && p[1] == right))
            .map(|(w, a)| (w.clone(), join_pair(a, left, right)))
            .collect();
        if changes.is_empty() {
            return false;
        }
        if repair {
            return self.apply_with_repair(changes, before);
        }
        let old = self.replace_analyses(&changes);
        if self.cost() < before - IMPROVEMENT_EPS {
            true
        } else {
            self.replace_analyses(&old);
            false
        }
    }

    /// Spells every word out in single characters, kept only if cheaper.
    fn try_characters(&mut self) -> bool {
        let before = self.cost();
        let changes: Vec<(String, Vec<String>)> = self
            .analyses
            .iter()
            .filter(|(_, a)| a.iter().any(|m| m.chars().count() > 1))
            .map(|(w, _)| (w.clone(), w.chars().map(String::from).collect()))
            .collect();
        if changes.is_empty() {
            return false;
        }
        let old = self.replace_analyses(&changes);
        if self.cost() < before - IMPROVEMENT_EPS {
            true
        } else {
            self.replace_analyses(&old);
            false
        }
    }

    /// Installs new analyses for some words and returns the previous ones.
    fn replace_analyses(
        &mut self,
        changes: &[(String, Vec<String>)],
    ) -> Vec<(String, Vec<String>)> {
        let mut old = Vec::with_capacity(changes.len());
        for (w, new) in changes {
            let c = self.weights[w.as_str()];
            let prev = self
                .analyses
                .insert(w.clone(), new.clone())
                .expect("training word");
            self.remove_all(&prev, c);
            self.add_all(new, c);
            old.push((w.clone(), prev));
        }
        old
    }

    /// Installs `changes`. If that alone does not lower the cost below
    /// `before`, the short words, morphs and adjacent pairs involving the
    /// morphs it touched are re-segmented and merged, and the whole step is
    /// undone unless the cost then ends up lower.
    fn apply_with_repair(&mut self, changes: Vec<(String, Vec<String>)>, before: f64) -> bool {
        let snapshot = self.clone();
        let old = self.replace_analyses(&changes);
        if self.cost() < before - IMPROVEMENT_EPS {
            return true;
        }
        let touched: HashSet<String> = changes
            .iter()
            .chain(&old)
            .flat_map(|(_, a)| a.iter().cloned())
            .collect();
        let followers: Vec<(String, u64)> = self
            .weights
            .iter()
            .filter(|(w, _)| w.chars().count() <= EXHAUSTIVE_MAX_CHARS)
            .filter(|(w, _)| touched.iter().any(|m| w.contains(m.as_str())))
            .map(|(w, &c)| (w.clone(), c))
            .collect();
        if followers.len() > REPAIR_MAX_WORDS {
            *self = snapshot;
            return false;
        }
        let mut followers = followers;
        followers.sort_unstable();
        for (w, c) in &followers {
            self.resplit(w, *c);
        }
        let mut morphs: Vec<&String> = touched.iter().collect();
        morphs.sort_unstable();
        for m in morphs {
            self.resplit_morph(m);
        }
        let mut pairs: Vec<(String, String)> = self
            .frequent_pairs()
            .into_iter()
            .filter(|(l, r)| touched.contains(l) || touched.contains(r))
            .collect();
        pairs.truncate(REPAIR_MAX_WORDS);
        for (l, r) in &pairs {
            self.merge_pair(l, r, false);
        }
        if self.cost() < before - IMPROVEMENT_EPS {
            true
        } else {
            *self = snapshot;
            false
        }
    }

    /// Adjacent morph pairs over all analyses, most frequent first.
    fn frequent_pairs(&self) -> Vec<(String, String)> {
        let mut counts: HashMap<(&str, &str), u64> = HashMap::new();
        for (w, a) in &self.analyses {
            let c = self.weights[w.as_str()];
            for p in a.windows(2) {
                *counts.entry((p[0].as_str(), p[1].as_str())).or_default() += c;
            }
        }
        let mut pairs: Vec<((&str, &str), u64)> = counts.into_iter().collect();
        pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        pairs
            .into_iter()
            .take(MERGE_MAX_CANDIDATES)
            .map(|((l, r), _)| (l.to_owned(), r.to_owned()))
            .collect()
    }

    /// Keeps `new` (already added) if the cost did not rise, else restores `old`.
    fn commit(
        &mut self,
        word: &str,
        c: u64,
        old: Vec<String>,
        new: Vec<String>,
        before: f64,
    ) -> bool {
        if new == old {
            return false;
        }
        if self.cost() < before - IMPROVEMENT_EPS {
            self.analyses.insert(word.to_owned(), new);
            true
        } else {
            self.remove_all(&new, c);
            self.add_all(&old, c);
            false
        }
    }
}

/// Words up to this length are re-segmented by scoring all their segmentations.
pub const EXHAUSTIVE_MAX_CHARS: usize = 12;

/// Substrings tried as new shared morphs per epoch.
pub const SHARED_MAX_CANDIDATES: usize = 256;
/// Adjacent morph pairs tried for merging per epoch.
pub const MERGE_MAX_CANDIDATES: usize = 256;
/// Re-segmentation sweeps over a group when introducing a shared morph.
const SHARED_SWEEPS: usize = 3;
/// Groups up to this size try introducing a shared morph into every subset.
pub const SHARED_SUBSET_MAX_WORDS: usize = 6;
/// Words and pairs revisited when repairing a tentative move.
pub const REPAIR_MAX_WORDS: usize = 32;
/// Substrings found in more word types than this are not tried as shared morphs.
pub const SHARED_MAX_WORDS: usize = 32;

/// Substrings found in at least two word types, each with the words
/// that contain it, most widely shared first.
fn shared_substrings(words: &[(String, u64)]) -> Vec<(String, Vec<(String, u64)>)> {
    let mut found: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, (w, _)) in words.iter().enumerate() {
        let bounds: Vec<usize> = w.char_indices().map(|(i, _)| i).chain([w.len()]).collect();
        let mut seen = HashSet::new();
        for i in 0..bounds.len() {
            for j in i + 1..bounds.len() {
                let sub = &w[bounds[i]..bounds[j]];
                if seen.insert(sub) {
                    found.entry(sub).or_default().push(k);
                }
            }
        }
    }
    let mut out: Vec<(&str, Vec<usize>)> = found
        .into_iter()
        .filter(|(_, ws)| (2..=SHARED_MAX_WORDS).contains(&ws.len()))
        .collect();
    out.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(b.0)));
    out.truncate(SHARED_MAX_CANDIDATES);
    out.into_iter()
        .map(|(sub, mut ws)| {
            ws.sort_unstable();
            (
                sub.to_owned(),
                ws.into_iter().map(|k| words[k].clone()).collect(),
            )
        })
        .collect()
}

fn join_pair(analysis: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(analysis.len());
    let mut i = 0;
    while i < analysis.len() {
        if i + 1 < analysis.len() && analysis[i] == left && analysis[i + 1] == right {
            out.push(format!("{left}{right}"));
            i += 2;
        } else {
            out.push(analysis[i].clone());
            i += 1;
        }
    }
    out
}

fn cut(word: &str, bounds: &[usize], mask: u32) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    for (k, &b) in bounds.iter().enumerate() {
        if mask & (1 << k) != 0 {
            out.push(word[start..b].to_owned());
            start = b;
        }
    }
    out.push(word[start..].to_owned());
    out
}

fn effective_count(count: u64, mode: CountMode) -> u64 {
    match mode {
        CountMode::Tokens => count,
        CountMode::Types => 1,
    }
}

/// Greedy description-length training from whole words.
pub fn train_segmenter(
    table: &WordCountTable,
    config: &SegmenterConfig,
) -> Result<SegmentationModel> {
    if table.is_empty() {
        return Err(Error::InvalidArgument("empty word table".into()));
    }
    let mut model = SegmentationModel::empty(table.alphabet_size(), config.count_mode);
    for (w, c) in table.iter() {
        let c = effective_count(c, config.count_mode);
        model.add_morph(w, c);
        model.analyses.insert(w.to_owned(), vec![w.to_owned()]);
        model.weights.insert(w.to_owned(), c);
    }
    let initial = model.cost();
    let threshold = config
        .convergence_threshold
        .unwrap_or(DEFAULT_RELATIVE_THRESHOLD * initial);
    model.trace.push(EpochTrace {
        epoch: 0,
        cost: initial,
        accepted: 0,
    });

    let mut words: Vec<(String, u64)> = table
        .iter()
        .map(|(w, c)| (w.to_owned(), effective_count(c, config.count_mode)))
        .collect();
    let mut rng = seeded_rng(config.seed);
    let mut previous = initial;
    for epoch in 1..=config.max_epochs {
        words.shuffle(&mut rng);
        let mut accepted = 0;
        for (w, c) in &words {
            if model.resplit(w, *c) {
                accepted += 1;
            }
        }
        let short: Vec<(String, u64)> = words
            .iter()
            .filter(|(w, _)| w.chars().count() <= EXHAUSTIVE_MAX_CHARS)
            .cloned()
            .collect();
        for (shared, group) in shared_substrings(&short) {
            if model.introduce_shared(&shared, &group) {
                accepted += 1;
            }
        }
        for (l, r) in model.frequent_pairs() {
            if model.merge_pair(&l, &r, true) {
                accepted += 1;
            }
        }
        let mut morphs: Vec<String> = model.morph_counts.keys().cloned().collect();
        morphs.shuffle(&mut rng);
        for m in &morphs {
            if model.resplit_morph(m) {
                accepted += 1;
            }
        }
        if model.try_characters() {
            accepted += 1;
        }
        model.refresh();
        let cost = model.cost();
        model.trace.push(EpochTrace {
            epoch,
            cost,
            accepted,
        });
        log::debug!("segmenter epoch {epoch}: cost {cost:.3}, {accepted} words re-segmented");
        if previous - cost < threshold {
            break;
        }
        previous = cost;
    }
    Ok(model)
}

/// Cost of `model` after checking that it segments exactly the words of `table`.
pub fn model_cost(model: &SegmentationModel, table: &WordCountTable) -> Result<f64> {
    if model.analyses.len() != table.len() {
        return Err(Error::InconsistentModel(format!(
            "model has {} analyses, table has {} words",
            model.analyses.len(),
            table.len()
        )));
    }
    let mut expected: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total = 0u64;
    for (w, c) in table.iter() {
        let a = model
            .analyses
            .get(w)
            .ok_or_else(|| Error::InconsistentModel(format!("no analysis for `{w}`")))?;
        if a.concat() != w {
            return Err(Error::InconsistentModel(format!(
                "analysis of `{w}` is {a:?}"
            )));
        }
        let c = effective_count(c, model.count_mode);
        for m in a {
            *expected.entry(m.as_str()).or_default() += c;
            total += c;
        }
    }
    if total != model.total_morph_tokens
        || expected.len() != model.morph_counts.len()
        || expected.iter().any(|(m, &c)| model.morph_count(m) != c)
    {
        return Err(Error::InconsistentModel(
            "morph counts do not match the analyses".into(),
        ));
    }
    let corpus = c_ln_c(total) - expected.values().map(|&c| c_ln_c(c)).sum::<f64>();
    let symbols: u64 = expected.keys().map(|m| chars(m) + 1).sum();
    Ok(corpus + symbols as f64 * ((model.alphabet_size + 1) as f64).ln())
}

/// Segmentation of a single word.
///
/// Training words return their stored analysis. Other words get the most
/// probable segmentation into known morphs; characters no known morph covers
/// become single-character units, so the concatenation always reproduces
/// the word.
pub fn segment_word(model: &SegmentationModel, word: &str) -> Result<Vec<String>> {
    if word.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot segment an empty word".into(),
        ));
    }
    if let Some(a) = model.analyses.get(word) {
        return Ok(a.clone());
    }
    Ok(viterbi(model, word, None))
}

/// Cheapest segmentation under the current counts.
///
/// With `training = Some(c)` the word occurs `c` times and any substring may
/// become a new morph, paying its spelling in the lexicon. Otherwise only
/// known morphs and single characters are used.
fn viterbi(model: &SegmentationModel, word: &str, training: Option<u64>) -> Vec<String> {
    let n_tokens = model.total_morph_tokens.max(1) as f64;
    let ln_n = n_tokens.ln();
    let ln_k = ((model.alphabet_size + 1) as f64).ln();
    // An unseen character pays what a new one-character morph would: one
    // token at the lowest probability plus its spelling in the lexicon.
    let unseen_char = ln_n + 2.0 * ln_k + 1.0;
    let weight = training.unwrap_or(1) as f64;
    let max_len = match training {
        Some(_) => word.chars().count(),
        None => model
            .morph_counts
            .keys()
            .map(|m| chars(m))
            .max()
            .unwrap_or(1) as usize,
    };

    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n = bounds.len() - 1;
    let mut best = vec![f64::INFINITY; n + 1];
    let mut back = vec![0usize; n + 1];
    best[0] = 0.0;
    for end in 1..=n {
        let lo = end.saturating_sub(max_len.max(1));
        for start in lo..end {
            if !best[start].is_finite() {
                continue;
            }
            let piece = &word[bounds[start]..bounds[end]];
            let cost = match (model.morph_counts.get(piece), training) {
                (Some(&c), _) => weight * (ln_n - (c as f64).ln()),
                (None, Some(_)) => weight * ln_n + (end - start + 1) as f64 * ln_k,
                (None, None) if end - start == 1 => unseen_char,
                (None, None) => continue,
            };
            let total = best[start] + cost;
            if total < best[end] {
                best[end] = total;
                back[end] = start;
            }
        }
    }
    let mut out = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = back[end];
        out.push(word[bounds[start]..bounds[end]].to_owned());
        end = start;
    }
    out.reverse();
    out
}

/// Replaces every token of every sentence by its morphs.
pub fn apply_segmentation<C: MapSentences>(corpus: &C, model: &SegmentationModel) -> C {
    let mut cache: HashMap<String, Vec<String>> = HashMap::new();
    corpus.map_sentences(|s| {
        let morphs = s.tokens().iter().flat_map(|t| {
            cache
                .entry(t.clone())
                .or_insert_with(|| segment_word(model, t).expect("tokens are non-empty"))
                .clone()
        });
        Sentence::from_tokens(morphs.collect::<Vec<_>>()).expect("morphs are non-empty")
    })
}
