use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{
    is_valid_grade, AnnotatedPair, AnnotatedPairSet, Label, LabeledPair, LabeledPairSet,
    RankedPair, RankedPairCorpus, Sentence,
};
use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers, split on tabs.
fn records<'a>(text: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

fn sentence(origin: &Path, line: usize, field: &str) -> Result<Sentence> {
    Sentence::parse(field).map_err(|_| Error::parse(origin, line, "empty sentence"))
}

pub fn parse_pair_corpus(text: &str, origin: &Path) -> Result<RankedPairCorpus> {
    let mut pairs = Vec::new();
    let mut last_score: Option<f64> = None;
    for (line, fields) in records(text) {
        if !(2..=3).contains(&fields.len()) {
            return Err(Error::parse(
                origin,
                line,
                format!(
                    "expected 2 or 3 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let rank_score = match fields.get(2) {
            Some(f) => {
                let s: f64 = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(origin, line, format!("bad rank score `{f}`")))?;
                if let Some(prev) = last_score {
                    if s > prev {
                        return Err(Error::parse(
                            origin,
                            line,
                            format!("rank score {s} increases over previous {prev}"),
                        ));
                    }
                }
                last_score = Some(s);
                Some(s)
            }
            None => None,
        };
        pairs.push(RankedPair {
            a: sentence(origin, line, fields[0])?,
            b: sentence(origin, line, fields[1])?,
            rank_score,
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    Ok(RankedPairCorpus { pairs })
}

pub fn load_pair_corpus(path: impl AsRef<Path>) -> Result<RankedPairCorpus> {
    let path = path.as_ref();
    parse_pair_corpus(&read_text(path)?, path)
}

pub fn parse_annotated_set(text: &str, origin: &Path) -> Result<AnnotatedPairSet> {
    let mut pairs = Vec::new();
    for (line, fields) in records(text) {
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let grade: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(origin, line, format!("bad grade `{}`", fields[2])))?;
        if !is_valid_grade(grade) {
            return Err(Error::parse(
                origin,
                line,
                format!("grade {grade} is not one of 1.0, 1.5, .., 4.0"),
            ));
        }
        pairs.push(AnnotatedPair {
            a: sentence(origin, line, fields[0])?,
            b: sentence(origin, line, fields[1])?,
            grade,
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    Ok(AnnotatedPairSet { pairs })
}

pub fn load_annotated_set(path: impl AsRef<Path>) -> Result<AnnotatedPairSet> {
    let path = path.as_ref();
    parse_annotated_set(&read_text(path)?, path)
}

pub fn parse_labeled_set(text: &str, origin: &Path) -> Result<LabeledPairSet> {
    let mut pairs = Vec::new();
    for (line, fields) in records(text) {
        if fields.len() != 3 {
            return Err(Error::parse(
                origin,
                line,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let label = Label::from_digit(fields[0].trim()).ok_or_else(|| {
            Error::parse(
                origin,
                line,
                format!("label must be 1 or 0, got `{}`", fields[0]),
            )
        })?;
        pairs.push(LabeledPair {
            a: sentence(origin, line, fields[1])?,
            b: sentence(origin, line, fields[2])?,
            label,
        });
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput(origin.to_path_buf()));
    }
    Ok(LabeledPairSet { pairs })
}

pub fn load_labeled_set(path: impl AsRef<Path>) -> Result<LabeledPairSet> {
    let path = path.as_ref();
    parse_labeled_set(&read_text(path)?, path)
}

pub fn write_labeled_set<W: Write>(set: &LabeledPairSet, mut out: W) -> std::io::Result<()> {
    for p in &set.pairs {
        writeln!(out, "{}\t{}\t{}", p.label.digit(), p.a.text(), p.b.text())?;
    }
    out.flush()
}

pub fn save_labeled_set(set: &LabeledPairSet, path: impl AsRef<Path>) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_labeled_set(set, BufWriter::new(file)).map_err(|e| Error::io(&path, e))
}
