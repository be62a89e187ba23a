use std::fmt::Write as _;
use std::path::Path;

use super::{GradeStats, Histogram};
use crate::error::{Error, Result};

/// `bin_low,bin_high,count` per bin.
pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_low,bin_high,count\n");
    for (bin, count) in h.counts.iter().enumerate() {
        let (lo, hi) = h.bin_bounds(bin);
        writeln!(s, "{lo},{hi},{count}").unwrap();
    }
    s
}

/// Per-grade table, a blank line, then the neighbouring-grade tests.
/// Untestable rows leave `t` and `p` empty and mark `significant` as `untestable`.
pub fn grade_stats_csv(stats: &GradeStats) -> String {
    let mut s = String::from("grade,count,mean,std\n");
    for g in &stats.grades {
        writeln!(s, "{},{},{},{}", g.grade, g.count, g.mean, g.std).unwrap();
    }
    s.push_str("\ngrade_a,grade_b,t,p,significant\n");
    for t in &stats.tests {
        match (t.test, t.significant()) {
            (Some(w), Some(sig)) => {
                writeln!(s, "{},{},{},{},{}", t.lower, t.higher, w.t, w.p, sig).unwrap()
            }
            _ => writeln!(s, "{},{},,,untestable", t.lower, t.higher).unwrap(),
        }
    }
    s
}

/// `rank,similarity,sentence`, ranks starting at 1.
pub fn topk_tsv<S: AsRef<str>>(rows: &[(f64, S)]) -> String {
    let mut s = String::from("rank\tsimilarity\tsentence\n");
    for (rank, (sim, sentence)) in rows.iter().enumerate() {
        writeln!(s, "{}\t{}\t{}", rank + 1, sim, sentence.as_ref()).unwrap();
    }
    s
}

fn write(path: &Path, text: String) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    write(path, histogram_csv(h))
}

pub fn write_grade_stats_csv(path: &Path, stats: &GradeStats) -> Result<()> {
    write(path, grade_stats_csv(stats))
}

pub fn write_topk_tsv<S: AsRef<str>>(path: &Path, rows: &[(f64, S)]) -> Result<()> {
    write(path, topk_tsv(rows))
}
