use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_ids, names, ForwardCache};
use crate::error::{Error, Result};
use crate::numcore::{
    seeded_rng, sigmoid, uniform_with_rng, xavier_with_rng, Activation, DropoutMask, Gradients,
    Matrix, ParameterSet, EMBEDDING_INIT_RANGE,
};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GranOptions {
    pub hidden: usize,
    /// Nonlinearity of the candidate state.
    pub activation: Activation,
    /// Adds bias vectors to the reset and update gates.
    pub gate_biases: bool,
}

impl Default for GranOptions {
    fn default() -> Self {
        GranOptions {
            hidden: 300,
            activation: Activation::default(),
            gate_biases: false,
        }
    }
}

/// Parameter names and shapes of a recurrent encoder, in storage order.
pub fn parameter_shapes(
    vocab_size: usize,
    dim: usize,
    options: &GranOptions,
) -> Vec<(&'static str, (usize, usize))> {
    let (v, d, h) = (vocab_size, dim, options.hidden);
    let mut shapes = vec![
        (names::EMBEDDING, (v, d)),
        (names::W_R, (h, d)),
        (names::W_Z, (h, d)),
        (names::W_H, (h, d)),
        (names::U_R, (h, h)),
        (names::U_Z, (h, h)),
        (names::U_H, (h, h)),
        (names::B_H, (h, 1)),
        (names::W_X, (d, d)),
        (names::W_G, (d, h)),
        (names::B, (d, 1)),
    ];
    if options.gate_biases {
        shapes.push((names::B_R, (h, 1)));
        shapes.push((names::B_Z, (h, 1)));
    }
    shapes
}

/// Gated recurrent averaging network.
///
/// A recurrent cell reads the token embeddings `e_t`:
///
/// ```text
/// r_t = sigmoid(W_r e_t + U_r h_{t-1})
/// z_t = sigmoid(W_z e_t + U_z h_{t-1})
/// h_t = (1 - z_t) * h_{t-1} + z_t * f(W_h e_t + U_h (r_t * h_{t-1}) + b_h)
/// ```
///
/// with `h_0 = 0`; hidden units saturate at [`hidden_limit`]. Each embedding is then gated by its hidden state and the
/// gated vectors are averaged:
///
/// ```text
/// a_t  = e_t * sigmoid(W_x e_t + W_g h_t + b)
/// g(s) = mean_t a_t
/// ```
///
/// The update gate multiplies the candidate state directly; there is no
/// separate interpolation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GranEncoder<T> {
    params: ParameterSet<T>,
    options: GranOptions,
}

/// Variational dropout masks for one sequence: one over the cell input and
/// one over the recurrent state, each reused at every time step.
#[derive(Debug, Clone)]
pub struct GranMasks<T> {
    pub input: DropoutMask<T>,
    pub hidden: DropoutMask<T>,
}

impl<T: Scalar> GranMasks<T> {
    pub fn sample<R: Rng>(dim: usize, hidden: usize, keep_prob: f64, rng: &mut R) -> Result<Self> {
        Ok(GranMasks {
            input: DropoutMask::sample(dim, keep_prob, rng)?,
            hidden: DropoutMask::sample(hidden, keep_prob, rng)?,
        })
    }
}

struct View<'a, T> {
    emb: &'a Matrix<T>,
    w_r: &'a Matrix<T>,
    w_z: &'a Matrix<T>,
    w_h: &'a Matrix<T>,
    u_r: &'a Matrix<T>,
    u_z: &'a Matrix<T>,
    u_h: &'a Matrix<T>,
    b_h: &'a Matrix<T>,
    w_x: &'a Matrix<T>,
    w_g: &'a Matrix<T>,
    b: &'a Matrix<T>,
    b_r: Option<&'a Matrix<T>>,
    b_z: Option<&'a Matrix<T>>,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GranStep<T> {
    pub id: u32,
    pub e: Vec<T>,
    /// Cell input after the input mask.
    pub x: Vec<T>,
    /// Previous hidden state before and after the recurrent mask.
    pub h_prev: Vec<T>,
    pub h_prev_masked: Vec<T>,
    pub r: Vec<T>,
    pub z: Vec<T>,
    /// Candidate pre-activation and its image under `f`.
    pub cand_pre: Vec<T>,
    pub cand: Vec<T>,
    pub h: Vec<T>,
    pub gate: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GranCache<T> {
    pub steps: Vec<GranStep<T>>,
    pub(crate) input_mask: Option<Vec<T>>,
    pub(crate) hidden_mask: Option<Vec<T>>,
}

/// Hidden units saturate at this magnitude so that an unbounded candidate
/// activation cannot overflow the recurrence or the gates.
pub fn hidden_limit<T: Scalar>() -> T {
    T::max_value().sqrt()
}

fn add_into<T: Scalar>(a: &mut [T], b: &[T]) {
    for (x, &y) in a.iter_mut().zip(b) {
        *x = *x + y;
    }
}

fn hadamard<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x * y).collect()
}

impl<T: Scalar> GranEncoder<T> {
    /// Embeddings uniform in [-0.01, 0.01], weight matrices Xavier-uniform,
    /// biases zero.
    pub fn init(vocab_size: usize, dim: usize, options: GranOptions, seed: u64) -> Result<Self> {
        if dim == 0 || vocab_size == 0 || options.hidden == 0 {
            return Err(Error::InvalidArgument(
                "dimension, hidden size and vocabulary must be non-empty".into(),
            ));
        }
        let hidden = options.hidden;
        let mut rng = seeded_rng(seed);
        let (lo, hi) = EMBEDDING_INIT_RANGE;
        let mut p = ParameterSet::new();
        p.insert(
            names::EMBEDDING,
            uniform_with_rng(vocab_size, dim, lo, hi, &mut rng)?,
        )?;
        p.insert(names::W_R, xavier_with_rng(hidden, dim, &mut rng)?)?;
        p.insert(names::W_Z, xavier_with_rng(hidden, dim, &mut rng)?)?;
        p.insert(names::W_H, xavier_with_rng(hidden, dim, &mut rng)?)?;
        p.insert(names::U_R, xavier_with_rng(hidden, hidden, &mut rng)?)?;
        p.insert(names::U_Z, xavier_with_rng(hidden, hidden, &mut rng)?)?;
        p.insert(names::U_H, xavier_with_rng(hidden, hidden, &mut rng)?)?;
        p.insert(names::B_H, Matrix::zeros(hidden, 1))?;
        p.insert(names::W_X, xavier_with_rng(dim, dim, &mut rng)?)?;
        p.insert(names::W_G, xavier_with_rng(dim, hidden, &mut rng)?)?;
        p.insert(names::B, Matrix::zeros(dim, 1))?;
        if options.gate_biases {
            p.insert(names::B_R, Matrix::zeros(hidden, 1))?;
            p.insert(names::B_Z, Matrix::zeros(hidden, 1))?;
        }
        Ok(GranEncoder { params: p, options })
    }

    /// Wraps existing parameters after checking every shape.
    pub fn from_params(params: ParameterSet<T>, options: GranOptions) -> Result<Self> {
        let emb = params.get(names::EMBEDDING)?;
        let (v, d) = emb.shape();
        let h = options.hidden;
        if v == 0 || d == 0 || h == 0 {
            return Err(Error::InvalidArgument("empty encoder dimensions".into()));
        }
        let expected = parameter_shapes(v, d, &options);
        if params.len() != expected.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {:?}",
                expected.len(),
                params.names()
            )));
        }
        for (name, shape) in expected {
            let actual = params.get(name)?.shape();
            if actual != shape {
                return Err(Error::ShapeMismatch {
                    name: name.to_owned(),
                    expected: shape,
                    actual,
                });
            }
        }
        Ok(GranEncoder { params, options })
    }

    pub fn dim(&self) -> usize {
        self.embedding().cols()
    }

    pub fn hidden(&self) -> usize {
        self.options.hidden
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding().rows()
    }

    pub fn options(&self) -> &GranOptions {
        &self.options
    }

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

    fn view(&self) -> View<'_, T> {
        let g = |n| self.params.get(n).expect("validated at construction");
        View {
            emb: g(names::EMBEDDING),
            w_r: g(names::W_R),
            w_z: g(names::W_Z),
            w_h: g(names::W_H),
            u_r: g(names::U_R),
            u_z: g(names::U_Z),
            u_h: g(names::U_H),
            b_h: g(names::B_H),
            w_x: g(names::W_X),
            w_g: g(names::W_G),
            b: g(names::B),
            b_r: self.params.get(names::B_R).ok(),
            b_z: self.params.get(names::B_Z).ok(),
        }
    }

    /// Runs the recurrence and the gates, returning every intermediate.
    pub fn run(&self, ids: &[u32], masks: Option<&GranMasks<T>>) -> Result<(Vec<T>, GranCache<T>)> {
        check_ids(ids, self.vocab_size())?;
        let v = self.view();
        let (d, hdim) = (self.dim(), self.hidden());
        if let Some(m) = masks {
            if m.input.len() != d || m.hidden.len() != hdim {
                return Err(Error::InvalidArgument(
                    "dropout mask sizes do not match the encoder".into(),
                ));
            }
        }
        let act = self.options.activation;
        let mut h_prev = vec![T::zero(); hdim];
        let mut acc = vec![0.0f64; d];
        let mut steps = Vec::with_capacity(ids.len());
        let mut tmp = vec![T::zero(); hdim];
        let mut tmp_d = vec![T::zero(); d];

        for &id in ids {
            let e = v.emb.row(id as usize).to_vec();
            let x = match masks {
                Some(m) => hadamard(&e, m.input.as_slice()),
                None => e.clone(),
            };
            let hh = match masks {
                Some(m) => hadamard(&h_prev, m.hidden.as_slice()),
                None => h_prev.clone(),
            };

            let mut r = v.w_r.matvec(&x);
            v.u_r.matvec_into(&hh, &mut tmp);
            add_into(&mut r, &tmp);
            if let Some(b) = v.b_r {
                add_into(&mut r, b.as_slice());
            }
            r.iter_mut().for_each(|a| *a = sigmoid(*a));

            let mut z = v.w_z.matvec(&x);
            v.u_z.matvec_into(&hh, &mut tmp);
            add_into(&mut z, &tmp);
            if let Some(b) = v.b_z {
                add_into(&mut z, b.as_slice());
            }
            z.iter_mut().for_each(|a| *a = sigmoid(*a));

            let rh = hadamard(&r, &hh);
            let mut cand_pre = v.w_h.matvec(&x);
            v.u_h.matvec_into(&rh, &mut tmp);
            add_into(&mut cand_pre, &tmp);
            add_into(&mut cand_pre, v.b_h.as_slice());
            let cand: Vec<T> = cand_pre.iter().map(|&c| act.apply(c)).collect();

            let limit = hidden_limit::<T>();
            let h: Vec<T> = (0..hdim)
                .map(|i| {
                    ((T::one() - z[i]) * h_prev[i] + z[i] * cand[i])
                        .max(-limit)
                        .min(limit)
                })
                .collect();

            let mut gate = v.w_x.matvec(&e);
            v.w_g.matvec_into(&h, &mut tmp_d);
            add_into(&mut gate, &tmp_d);
            add_into(&mut gate, v.b.as_slice());
            gate.iter_mut().for_each(|a| *a = sigmoid(*a));

            for ((a, &ei), &gi) in acc.iter_mut().zip(&e).zip(&gate) {
                *a += (ei * gi).widen();
            }

            steps.push(GranStep {
                id,
                e,
                x,
                h_prev: std::mem::replace(&mut h_prev, h.clone()),
                h_prev_masked: hh,
                r,
                z,
                cand_pre,
                cand,
                h,
                gate,
            });
        }
        let n = ids.len() as f64;
        let out = acc.into_iter().map(|a| T::narrow(a / n)).collect();
        Ok((
            out,
            GranCache {
                steps,
                input_mask: masks.map(|m| m.input.as_slice().to_vec()),
                hidden_mask: masks.map(|m| m.hidden.as_slice().to_vec()),
            },
        ))
    }

    /// Hidden states `h_1 .. h_n`.
    pub fn gru_forward(&self, ids: &[u32], masks: Option<&GranMasks<T>>) -> Result<Vec<Vec<T>>> {
        let (_, cache) = self.run(ids, masks)?;
        Ok(cache.steps.into_iter().map(|s| s.h).collect())
    }

    /// Sentence embedding. With `training`, variational dropout masks are
    /// drawn from `seed`; otherwise no dropout is applied.
    pub fn encode(&self, ids: &[u32], training: Option<(f64, u64)>) -> Result<Vec<T>> {
        let masks = match training {
            Some((keep_prob, seed)) => Some(GranMasks::sample(
                self.dim(),
                self.hidden(),
                keep_prob,
                &mut seeded_rng(seed),
            )?),
            None => None,
        };
        Ok(self.run(ids, masks.as_ref())?.0)
    }

    pub(crate) fn forward(
        &self,
        ids: &[u32],
        masks: Option<&GranMasks<T>>,
    ) -> Result<(Vec<T>, ForwardCache<T>)> {
        let (out, cache) = self.run(ids, masks)?;
        Ok((out, ForwardCache::Gran(cache)))
    }

    pub(crate) fn backward(
        &self,
        cache: &GranCache<T>,
        grad_out: &[T],
        grads: &mut Gradients<T>,
    ) -> Result<()> {
        let v = self.view();
        let act = self.options.activation;
        let (d, hdim) = (self.dim(), self.hidden());
        let n = cache.steps.len();
        let scale = T::narrow(1.0 / n as f64);
        let g_out: Vec<T> = grad_out.iter().map(|&g| g * scale).collect();

        let [d_emb, d_wr, d_wz, d_wh, d_ur, d_uz, d_uh, d_bh, d_wx, d_wg, d_b] =
            grads.many_mut([
                names::EMBEDDING,
                names::W_R,
                names::W_Z,
                names::W_H,
                names::U_R,
                names::U_Z,
                names::U_H,
                names::B_H,
                names::W_X,
                names::W_G,
                names::B,
            ])?;
        let mut d_gate_bias_r = vec![T::zero(); hdim];
        let mut d_gate_bias_z = vec![T::zero(); hdim];

        let mut dh_next = vec![T::zero(); hdim];
        for s in cache.steps.iter().rev() {
            // a_t = e * gate
            let mut de: Vec<T> = hadamard(&g_out, &s.gate);
            let dq: Vec<T> = (0..d)
                .map(|i| g_out[i] * s.e[i] * s.gate[i] * (T::one() - s.gate[i]))
                .collect();
            d_wx.add_outer(&dq, &s.e);
            v.w_x.matvec_transposed_add(&dq, &mut de);
            d_wg.add_outer(&dq, &s.h);
            add_into(d_b.as_mut_slice(), &dq);
            let mut dh = dh_next.clone();
            v.w_g.matvec_transposed_add(&dq, &mut dh);
            for (g, &h) in dh.iter_mut().zip(&s.h) {
                if h.abs() >= hidden_limit::<T>() {
                    *g = T::zero();
                }
            }

            // h = (1 - z) h_prev + z cand
            let dz: Vec<T> = (0..hdim)
                .map(|i| dh[i] * (s.cand[i] - s.h_prev[i]))
                .collect();
            let mut dh_prev: Vec<T> = (0..hdim).map(|i| dh[i] * (T::one() - s.z[i])).collect();
            let dc: Vec<T> = (0..hdim)
                .map(|i| dh[i] * s.z[i] * act.grad(s.cand_pre[i]))
                .collect();

            let mut dx = vec![T::zero(); d];
            let rh = hadamard(&s.r, &s.h_prev_masked);
            d_wh.add_outer(&dc, &s.x);
            v.w_h.matvec_transposed_add(&dc, &mut dx);
            add_into(d_bh.as_mut_slice(), &dc);
            d_uh.add_outer(&dc, &rh);
            let mut drh = vec![T::zero(); hdim];
            v.u_h.matvec_transposed_add(&dc, &mut drh);
            let dr = hadamard(&drh, &s.h_prev_masked);
            let mut dhh = hadamard(&drh, &s.r);

            let daz: Vec<T> = (0..hdim)
                .map(|i| dz[i] * s.z[i] * (T::one() - s.z[i]))
                .collect();
            d_wz.add_outer(&daz, &s.x);
            v.w_z.matvec_transposed_add(&daz, &mut dx);
            d_uz.add_outer(&daz, &s.h_prev_masked);
            v.u_z.matvec_transposed_add(&daz, &mut dhh);
            add_into(&mut d_gate_bias_z, &daz);

            let dar: Vec<T> = (0..hdim)
                .map(|i| dr[i] * s.r[i] * (T::one() - s.r[i]))
                .collect();
            d_wr.add_outer(&dar, &s.x);
            v.w_r.matvec_transposed_add(&dar, &mut dx);
            d_ur.add_outer(&dar, &s.h_prev_masked);
            v.u_r.matvec_transposed_add(&dar, &mut dhh);
            add_into(&mut d_gate_bias_r, &dar);

            match &cache.hidden_mask {
                Some(m) => add_into(&mut dh_prev, &hadamard(&dhh, m)),
                None => add_into(&mut dh_prev, &dhh),
            }
            match &cache.input_mask {
                Some(m) => add_into(&mut de, &hadamard(&dx, m)),
                None => add_into(&mut de, &dx),
            }
            d_emb.add_to_row(s.id as usize, &de);
            dh_next = dh_prev;
        }

        if self.options.gate_biases {
            add_into(grads.get_mut(names::B_R)?.as_mut_slice(), &d_gate_bias_r);
            add_into(grads.get_mut(names::B_Z)?.as_mut_slice(), &d_gate_bias_z);
        }
        Ok(())
    }
}
