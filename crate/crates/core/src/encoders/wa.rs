use super::{check_ids, names, ForwardCache};
use crate::error::{Error, Result};
use crate::numcore::{uniform_init, Gradients, Matrix, ParameterSet, EMBEDDING_INIT_RANGE};
use crate::scalar::Scalar;

/// Word averaging: the sentence embedding is the mean of its token embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct WaEncoder<T> {
    params: ParameterSet<T>,
}

impl<T: Scalar> WaEncoder<T> {
    pub fn init(vocab_size: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 || vocab_size == 0 {
            return Err(Error::InvalidArgument(
                "dimension and vocabulary must be non-empty".into(),
            ));
        }
        let (lo, hi) = EMBEDDING_INIT_RANGE;
        let params = ParameterSet::new().with(
            names::EMBEDDING,
            uniform_init(vocab_size, dim, lo, hi, seed)?,
        )?;
        Ok(WaEncoder { params })
    }

    pub fn from_params(params: ParameterSet<T>) -> Result<Self> {
        let e = params.get(names::EMBEDDING)?;
        if e.rows() == 0 || e.cols() == 0 {
            return Err(Error::InvalidArgument("empty embedding matrix".into()));
        }
        if params.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "word averaging takes only the embedding matrix, got {:?}",
                params.names()
            )));
        }
        Ok(WaEncoder { params })
    }

    pub fn dim(&self) -> usize {
        self.embedding().cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding().rows()
    }

    /// `|V| x d`; row `i` is the embedding of token id `i`.
    pub fn embedding(&self) -> &Matrix<T> {
        self.params
            .get(names::EMBEDDING)
            .expect("validated at construction")
    }

    pub fn params(&self) -> &ParameterSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet<T> {
        &mut self.params
    }

    pub fn encode(&self, ids: &[u32]) -> Result<Vec<T>> {
        check_ids(ids, self.vocab_size())?;
        let emb = self.embedding();
        let mut acc = vec![0.0f64; self.dim()];
        for &id in ids {
            for (a, x) in acc.iter_mut().zip(emb.row(id as usize)) {
                *a += x.widen();
            }
        }
        let n = ids.len() as f64;
        Ok(acc.into_iter().map(|a| T::narrow(a / n)).collect())
    }

    pub(crate) fn forward(&self, ids: &[u32]) -> Result<(Vec<T>, ForwardCache<T>)> {
        let out = self.encode(ids)?;
        Ok((out, ForwardCache::Wa { ids: ids.to_vec() }))
    }

    pub(crate) fn backward(
        &self,
        ids: &[u32],
        grad_out: &[T],
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        let scale = T::narrow(1.0 / ids.len() as f64);
        let share: Vec<T> = grad_out.iter().map(|&g| g * scale).collect();
        let de = grads.get_mut(names::EMBEDDING)?;
        for &id in ids {
            de.add_to_row(id as usize, &share);
        }
        Ok(())
    }
}
