use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm};

/// Rows scanned by one parallel task.
pub const SHARD_ROWS: usize = 1 << 16;

/// Unit-normalized sentence embeddings, addressed by insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingIndex {
    dim: usize,
    data: Vec<f32>,
    zero: Vec<bool>,
}

fn normalized(v: &[f32]) -> (Vec<f32>, bool) {
    let n = norm(v);
    if n == 0.0 {
        (vec![0.0; v.len()], true)
    } else {
        (v.iter().map(|&x| (x as f64 / n) as f32).collect(), false)
    }
}

impl EmbeddingIndex {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "index dimension must be positive".into(),
            ));
        }
        Ok(EmbeddingIndex {
            dim,
            data: Vec::new(),
            zero: Vec::new(),
        })
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Result<Self> {
        let mut index = Self::new(dim)?;
        index.data.reserve_exact(rows * dim);
        index.zero.reserve_exact(rows);
        Ok(index)
    }

    pub fn from_vectors<V: AsRef<[f32]>>(
        dim: usize,
        vectors: impl IntoIterator<Item = V>,
    ) -> Result<Self> {
        let mut index = Self::new(dim)?;
        for v in vectors {
            index.push(v.as_ref())?;
        }
        Ok(index)
    }

    /// Adds a vector, returning its id. Zero vectors are stored as zero and flagged.
    pub fn push(&mut self, v: &[f32]) -> Result<usize> {
        if v.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector of length {} in an index of dimension {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("indexed vector".into()));
        }
        let (unit, is_zero) = normalized(v);
        self.data.extend_from_slice(&unit);
        self.zero.push(is_zero);
        Ok(self.zero.len() - 1)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.zero.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zero.is_empty()
    }

    pub fn vector(&self, id: usize) -> &[f32] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn is_zero(&self, id: usize) -> bool {
        self.zero[id]
    }

    pub fn zero_count(&self) -> usize {
        self.zero.iter().filter(|&&z| z).count()
    }

    /// Cosine similarity between stored item `id` and a unit query.
    pub fn similarity(&self, id: usize, unit_query: &[f32]) -> f64 {
        cosine_of_units(self.vector(id), unit_query)
    }

    fn unit_query(&self, query: &[f32]) -> Result<Vec<f32>> {
        if query.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "query of length {} against an index of dimension {}",
                query.len(),
                self.dim
            )));
        }
        if query.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("query vector".into()));
        }
        let (unit, is_zero) = normalized(query);
        if is_zero {
            log::warn!("zero query vector; every similarity is 0");
        }
        Ok(unit)
    }

    /// Normalized query, for use with [`EmbeddingIndex::similarity`].
    pub fn normalize_query(&self, query: &[f32]) -> Result<Vec<f32>> {
        self.unit_query(query)
    }

    fn shards(&self) -> impl IndexedParallelIterator<Item = (usize, &[f32])> {
        self.data
            .par_chunks(SHARD_ROWS * self.dim)
            .enumerate()
            .map(|(k, chunk)| (k * SHARD_ROWS, chunk))
    }
}

/// Dot product of unit vectors, with -0 folded into +0 so that ties compare equal.
fn cosine_of_units(a: &[f32], b: &[f32]) -> f64 {
    dot(a, b) + 0.0
}

/// Heap entry ordered so that the heap top is the weakest of the kept items.
#[derive(Debug, Clone, Copy)]
struct Hit {
    sim: f64,
    id: usize,
}

impl Hit {
    /// Ranking order: higher similarity first, then lower id.
    fn rank(&self, other: &Self) -> Ordering {
        other.sim.total_cmp(&self.sim).then(self.id.cmp(&other.id))
    }
}

impl PartialEq for Hit {
    fn eq(&self, other: &Self) -> bool {
        self.rank(other) == Ordering::Equal
    }
}

impl Eq for Hit {}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank(other)
    }
}

/// Exact top-`k` items by cosine similarity, descending, ties by ascending id.
pub fn topk_similar(index: &EmbeddingIndex, query: &[f32], k: usize) -> Result<Vec<(usize, f64)>> {
    if index.is_empty() {
        return Err(Error::InvalidArgument("empty index".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let q = index.unit_query(query)?;
    let k = k.min(index.len());
    let dim = index.dim;
    let partial: Vec<Vec<Hit>> = index
        .shards()
        .map(|(offset, chunk)| {
            let mut heap = BinaryHeap::with_capacity(k + 1);
            for (j, row) in chunk.chunks_exact(dim).enumerate() {
                let hit = Hit {
                    sim: cosine_of_units(row, &q),
                    id: offset + j,
                };
                if heap.len() < k {
                    heap.push(hit);
                } else if hit < *heap.peek().expect("k >= 1") {
                    heap.pop();
                    heap.push(hit);
                }
            }
            heap.into_vec()
        })
        .collect();
    let mut all: Vec<Hit> = partial.into_iter().flatten().collect();
    all.sort_unstable();
    all.truncate(k);
    Ok(all.into_iter().map(|h| (h.id, h.sim)).collect())
}

/// Counts of similarities in equal-width bins covering [-1, 1].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        2.0 / self.counts.len() as f64
    }

    pub fn bin_bounds(&self, bin: usize) -> (f64, f64) {
        let w = self.bin_width();
        (-1.0 + bin as f64 * w, -1.0 + (bin + 1) as f64 * w)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin holding similarity `s`; values are clamped to [-1, 1] and 1 falls in the last bin.
    pub fn bin_of(bins: usize, s: f64) -> usize {
        let s = s.clamp(-1.0, 1.0);
        (((s + 1.0) / 2.0 * bins as f64).floor() as usize).min(bins - 1)
    }
}

/// Number of bins for `bin_width`, which must divide 2 to within 1e-9.
pub fn bins_for_width(bin_width: f64) -> Result<usize> {
    if !(bin_width > 0.0 && bin_width <= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "bin width {bin_width} outside (0, 2]"
        )));
    }
    let bins = (2.0 / bin_width).round();
    if (bins * bin_width - 2.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "bin width {bin_width} does not divide 2"
        )));
    }
    Ok(bins as usize)
}

/// Histogram of the similarities between `query` and every indexed item.
pub fn similarity_histogram(
    index: &EmbeddingIndex,
    query: &[f32],
    bin_width: f64,
) -> Result<Histogram> {
    index.histogram(query, bins_for_width(bin_width)?)
}

impl EmbeddingIndex {
    /// Histogram with a given number of bins.
    pub fn histogram(&self, query: &[f32], bins: usize) -> Result<Histogram> {
        if bins == 0 {
            return Err(Error::InvalidArgument("need at least one bin".into()));
        }
        let q = self.unit_query(query)?;
        let dim = self.dim;
        let counts = self
            .shards()
            .map(|(_, chunk)| {
                let mut counts = vec![0u64; bins];
                for row in chunk.chunks_exact(dim) {
                    counts[Histogram::bin_of(bins, cosine_of_units(row, &q))] += 1;
                }
                counts
            })
            .reduce(
                || vec![0u64; bins],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            );
        Ok(Histogram { counts })
    }
}
