use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{SegmentationModel, WordCountTable};
use crate::error::{Error, Result};

const HEADER_PREFIX: &str = "#morphseg v1";

/// `#morphseg v1 total=<N> alphabet=<K>` followed by `morph<TAB>count`
/// lines, most frequent first.
pub fn write_model<W: Write>(model: &SegmentationModel, mut out: W) -> std::io::Result<()> {
    writeln!(
        out,
        "{HEADER_PREFIX} total={} alphabet={}",
        model.total_morph_tokens(),
        model.alphabet_size()
    )?;
    let mut entries: Vec<(&String, &u64)> = model.morph_counts().iter().collect();
    entries.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    for (m, c) in entries {
        writeln!(out, "{m}\t{c}")?;
    }
    out.flush()
}

pub fn save_model(model: &SegmentationModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(model, BufWriter::new(f)).map_err(|e| Error::io(path, e))
}

pub fn parse_model(text: &str, origin: &Path) -> Result<SegmentationModel> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput(origin.to_path_buf()))?;
    let rest = header
        .strip_prefix(HEADER_PREFIX)
        .ok_or_else(|| Error::parse(origin, 1, format!("expected `{HEADER_PREFIX} ...` header")))?;
    let mut total: Option<u64> = None;
    let mut alphabet: Option<usize> = None;
    for field in rest.split_whitespace() {
        let bad = || Error::parse(origin, 1, format!("bad header field `{field}`"));
        match field.split_once('=') {
            Some(("total", v)) => total = Some(v.parse().map_err(|_| bad())?),
            Some(("alphabet", v)) => alphabet = Some(v.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        }
    }
    let (total, alphabet) = match (total, alphabet) {
        (Some(t), Some(a)) => (t, a),
        _ => return Err(Error::parse(origin, 1, "header needs total= and alphabet=")),
    };

    let mut lexicon = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::parse(origin, i + 1, "expected `morph<TAB>count`");
        let (m, c) = line.split_once('\t').ok_or_else(bad)?;
        let c: u64 = c.trim().parse().map_err(|_| bad())?;
        if m.is_empty() || c == 0 {
            return Err(bad());
        }
        lexicon.push((m.to_owned(), c));
    }
    let model = SegmentationModel::from_lexicon(lexicon, alphabet)?;
    if model.total_morph_tokens() != total {
        return Err(Error::parse(
            origin,
            1,
            format!(
                "header total {total} disagrees with the counts ({})",
                model.total_morph_tokens()
            ),
        ));
    }
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SegmentationModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text, path)
}

/// `word<TAB>count` lines.
pub fn load_word_counts(path: impl AsRef<Path>) -> Result<WordCountTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = WordCountTable::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::parse(path, i + 1, "expected `word<TAB>count`");
        let (w, c) = line.split_once('\t').ok_or_else(bad)?;
        let c: u64 = c.trim().parse().map_err(|_| bad())?;
        table.add(w.trim(), c).map_err(|_| bad())?;
    }
    if table.is_empty() {
        return Err(Error::EmptyInput(path.to_path_buf()));
    }
    Ok(table)
}
