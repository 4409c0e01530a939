//! Peephole LSTM cell and the bidirectional layer built from it.
//!
//! The input, forget and output gates read `[x_t, h_{t-1}, c_{t-1}]`; the
//! candidate reads `[x_t, h_{t-1}]`:
//!
//! ```text
//! i_t  = σ(W_i [x, h, c] + b_i)      c̃_t = tanh(W_c [x, h] + b_c)
//! f_t  = σ(W_f [x, h, c] + b_f)      c_t  = f_t * c_{t-1} + i_t * c̃_t
//! o_t  = σ(W_o [x, h, c] + b_o)      h_t  = o_t * tanh(c_t)
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{sigmoid, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams<T> {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `n x (d + 2n)`
    pub w_i: Matrix<T>,
    pub w_f: Matrix<T>,
    pub w_o: Matrix<T>,
    /// `n x (d + n)`
    pub w_c: Matrix<T>,
    pub b_i: Vec<T>,
    pub b_f: Vec<T>,
    pub b_o: Vec<T>,
    pub b_c: Vec<T>,
}

impl<T: Scalar> LstmParams<T> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let (d, n) = (input_dim, hidden_dim);
        LstmParams {
            input_dim,
            hidden_dim,
            w_i: Matrix::zeros(n, d + 2 * n),
            w_f: Matrix::zeros(n, d + 2 * n),
            w_o: Matrix::zeros(n, d + 2 * n),
            w_c: Matrix::zeros(n, d + n),
            b_i: vec![T::zero(); n],
            b_f: vec![T::zero(); n],
            b_o: vec![T::zero(); n],
            b_c: vec![T::zero(); n],
        }
    }

    /// Glorot-uniform weights, zero biases except the forget bias (1.0).
    pub fn glorot<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let (d, n) = (input_dim, hidden_dim);
        LstmParams {
            input_dim,
            hidden_dim,
            w_i: Matrix::glorot(n, d + 2 * n, rng),
            w_f: Matrix::glorot(n, d + 2 * n, rng),
            w_o: Matrix::glorot(n, d + 2 * n, rng),
            w_c: Matrix::glorot(n, d + n, rng),
            b_i: vec![T::zero(); n],
            b_f: vec![T::one(); n],
            b_o: vec![T::zero(); n],
            b_c: vec![T::zero(); n],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden_dim)
    }

    pub(crate) fn tensors(&self) -> [&[T]; 8] {
        [
            self.w_i.as_slice(),
            self.w_f.as_slice(),
            self.w_o.as_slice(),
            self.w_c.as_slice(),
            &self.b_i,
            &self.b_f,
            &self.b_o,
            &self.b_c,
        ]
    }

    pub(crate) fn tensors_mut(&mut self) -> [&mut [T]; 8] {
        [
            self.w_i.as_mut_slice(),
            self.w_f.as_mut_slice(),
            self.w_o.as_mut_slice(),
            self.w_c.as_mut_slice(),
            &mut self.b_i,
            &mut self.b_f,
            &mut self.b_o,
            &mut self.b_c,
        ]
    }

    fn step(&self, x: &[T], h_prev: &[T], c_prev: &[T], mask: Option<&[T]>) -> StepCache<T> {
        let (d, n) = (self.input_dim, self.hidden_dim);
        let mut z = Vec::with_capacity(d + 2 * n);
        z.extend_from_slice(x);
        match mask {
            Some(m) => z.extend(h_prev.iter().zip(m).map(|(&h, &k)| h * k)),
            None => z.extend_from_slice(h_prev),
        }
        z.extend_from_slice(c_prev);

        let gate = |w: &Matrix<T>, b: &[T], input: &[T]| {
            let mut a = b.to_vec();
            w.matvec_add(input, &mut a);
            a
        };
        let mut i = gate(&self.w_i, &self.b_i, &z);
        let mut f = gate(&self.w_f, &self.b_f, &z);
        let mut o = gate(&self.w_o, &self.b_o, &z);
        let mut g = gate(&self.w_c, &self.b_c, &z[..d + n]);
        for k in 0..n {
            i[k] = sigmoid(i[k]);
            f[k] = sigmoid(f[k]);
            o[k] = sigmoid(o[k]);
            g[k] = g[k].tanh();
        }
        let c: Vec<T> = (0..n).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
        let h = (0..n).map(|k| o[k] * tanh_c[k]).collect();
        StepCache {
            z,
            i,
            f,
            o,
            g,
            c,
            tanh_c,
            h,
        }
    }

    /// Run over `inputs` in the given order from zero state.
    pub(crate) fn run(&self, inputs: &[&[T]], mask: Option<Vec<T>>) -> DirectionCache<T> {
        let n = self.hidden_dim;
        let mut steps: Vec<StepCache<T>> = Vec::with_capacity(inputs.len());
        let zero = vec![T::zero(); n];
        for x in inputs {
            let (h_prev, c_prev) = match steps.last() {
                Some(s) => (s.h.as_slice(), s.c.as_slice()),
                None => (zero.as_slice(), zero.as_slice()),
            };
            let s = self.step(x, h_prev, c_prev, mask.as_deref());
            steps.push(s);
        }
        DirectionCache { steps, mask }
    }

    /// BPTT. `dh_out[t]` is the external gradient on the hidden state of
    /// processing step `t`. Accumulates into `grad` and returns dL/dx per step.
    pub(crate) fn backward(
        &self,
        cache: &DirectionCache<T>,
        dh_out: &[Vec<T>],
        grad: &mut LstmParams<T>,
    ) -> Vec<Vec<T>> {
        let (d, n) = (self.input_dim, self.hidden_dim);
        let len = cache.steps.len();
        let mut dx = vec![Vec::new(); len];
        let mut dh_next = vec![T::zero(); n];
        let mut dc_next = vec![T::zero(); n];
        let (mut da_i, mut da_f, mut da_o, mut da_g) =
            (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
        let one = T::one();

        for t in (0..len).rev() {
            let s = &cache.steps[t];
            let c_prev = &s.z[d + n..];
            let mut dc_prev = vec![T::zero(); n];
            for k in 0..n {
                let dh = dh_out[t][k] + dh_next[k];
                let dc = dc_next[k] + dh * s.o[k] * (one - s.tanh_c[k] * s.tanh_c[k]);
                let d_o = dh * s.tanh_c[k];
                let d_i = dc * s.g[k];
                let d_f = dc * c_prev[k];
                let d_g = dc * s.i[k];
                dc_prev[k] = dc * s.f[k];
                da_i[k] = d_i * s.i[k] * (one - s.i[k]);
                da_f[k] = d_f * s.f[k] * (one - s.f[k]);
                da_o[k] = d_o * s.o[k] * (one - s.o[k]);
                da_g[k] = d_g * (one - s.g[k] * s.g[k]);
            }
            grad.w_i.add_outer(&da_i, &s.z);
            grad.w_f.add_outer(&da_f, &s.z);
            grad.w_o.add_outer(&da_o, &s.z);
            grad.w_c.add_outer(&da_g, &s.z[..d + n]);
            for k in 0..n {
                grad.b_i[k] += da_i[k];
                grad.b_f[k] += da_f[k];
                grad.b_o[k] += da_o[k];
                grad.b_c[k] += da_g[k];
            }

            let mut dz = vec![T::zero(); d + 2 * n];
            self.w_i.tmatvec_add(&da_i, &mut dz);
            self.w_f.tmatvec_add(&da_f, &mut dz);
            self.w_o.tmatvec_add(&da_o, &mut dz);
            self.w_c.tmatvec_add(&da_g, &mut dz[..d + n]);

            for k in 0..n {
                let dh_masked = dz[d + k];
                dh_next[k] = match &cache.mask {
                    Some(m) => dh_masked * m[k],
                    None => dh_masked,
                };
                dc_next[k] = dc_prev[k] + dz[d + n + k];
            }
            dz.truncate(d);
            dx[t] = dz;
        }
        dx
    }
}

#[derive(Clone, Debug)]
pub(crate) struct StepCache<T> {
    /// `[x, masked h_{t-1}, c_{t-1}]`
    z: Vec<T>,
    i: Vec<T>,
    f: Vec<T>,
    o: Vec<T>,
    g: Vec<T>,
    c: Vec<T>,
    tanh_c: Vec<T>,
    h: Vec<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct DirectionCache<T> {
    steps: Vec<StepCache<T>>,
    mask: Option<Vec<T>>,
}

impl<T> DirectionCache<T> {
    fn hidden(&self, t: usize) -> &[T] {
        &self.steps[t].h
    }
}

/// Single LSTM step from explicit state.
pub fn lstm_cell_forward<T: Scalar>(
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    params: &LstmParams<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let n = params.hidden_dim;
    if x.len() != params.input_dim {
        return Err(Error::dim("lstm input", params.input_dim, x.len()));
    }
    if h_prev.len() != n {
        return Err(Error::dim("lstm hidden state", n, h_prev.len()));
    }
    if c_prev.len() != n {
        return Err(Error::dim("lstm cell state", n, c_prev.len()));
    }
    let s = params.step(x, h_prev, c_prev, None);
    Ok((s.h, s.c))
}

/// Forward and backward LSTMs over the same positions.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmLayer<T> {
    pub forward: LstmParams<T>,
    pub backward: LstmParams<T>,
}

#[derive(Clone, Debug)]
pub(crate) struct BiCache<T> {
    fwd: DirectionCache<T>,
    bwd: DirectionCache<T>,
}

impl<T: Scalar> BiLstmLayer<T> {
    pub fn glorot<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        BiLstmLayer {
            forward: LstmParams::glorot(input_dim, hidden_dim, rng),
            backward: LstmParams::glorot(input_dim, hidden_dim, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        BiLstmLayer {
            forward: self.forward.zeros_like(),
            backward: self.backward.zeros_like(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.forward.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden_dim
    }

    /// Returns the per-position outputs `[→h_t, ←h_t]`.
    pub(crate) fn run(
        &self,
        inputs: &[&[T]],
        masks: (Option<Vec<T>>, Option<Vec<T>>),
    ) -> (Vec<Vec<T>>, BiCache<T>) {
        let len = inputs.len();
        let fwd = self.forward.run(inputs, masks.0);
        let reversed: Vec<&[T]> = inputs.iter().rev().copied().collect();
        let bwd = self.backward.run(&reversed, masks.1);
        let outputs = (0..len)
            .map(|t| {
                let mut o = fwd.hidden(t).to_vec();
                o.extend_from_slice(bwd.hidden(len - 1 - t));
                o
            })
            .collect();
        (outputs, BiCache { fwd, bwd })
    }

    /// Backward from per-position output gradients; returns dL/dx per position.
    pub(crate) fn backward(
        &self,
        cache: &BiCache<T>,
        d_outputs: &[Vec<T>],
        grad: &mut BiLstmLayer<T>,
    ) -> Vec<Vec<T>> {
        let n = self.hidden_dim();
        let len = d_outputs.len();
        let dh_f: Vec<Vec<T>> = d_outputs.iter().map(|d| d[..n].to_vec()).collect();
        let dh_b: Vec<Vec<T>> = (0..len).map(|s| d_outputs[len - 1 - s][n..].to_vec()).collect();
        let mut dx = self.forward.backward(&cache.fwd, &dh_f, &mut grad.forward);
        let dx_b = self.backward.backward(&cache.bwd, &dh_b, &mut grad.backward);
        for (t, row) in dx.iter_mut().enumerate() {
            for (a, b) in row.iter_mut().zip(&dx_b[len - 1 - t]) {
                *a += *b;
            }
        }
        dx
    }
}

/// Final forward state concatenated with final backward state (`2n` values).
/// Rows at and past `valid_len` are never read.
pub fn bilstm_forward<T: Scalar>(
    seq: &Matrix<T>,
    valid_len: usize,
    layer: &BiLstmLayer<T>,
    recurrent_masks: Option<(&[T], &[T])>,
) -> Result<Vec<T>> {
    if valid_len == 0 {
        return Err(Error::EmptySequence);
    }
    if valid_len > seq.rows() {
        return Err(Error::dim("valid_len", seq.rows(), valid_len));
    }
    if seq.cols() != layer.input_dim() {
        return Err(Error::dim("bilstm input", layer.input_dim(), seq.cols()));
    }
    let n = layer.hidden_dim();
    let masks = match recurrent_masks {
        Some((f, b)) => {
            if f.len() != n || b.len() != n {
                return Err(Error::dim("recurrent mask", n, f.len().min(b.len())));
            }
            (Some(f.to_vec()), Some(b.to_vec()))
        }
        None => (None, None),
    };
    let rows: Vec<&[T]> = (0..valid_len).map(|t| seq.row(t)).collect();
    let (outputs, _) = layer.run(&rows, masks);
    Ok(final_states(&outputs, n))
}

/// `[→h_{L-1}, ←h_0]` from per-position outputs.
pub(crate) fn final_states<T: Scalar>(outputs: &[Vec<T>], n: usize) -> Vec<T> {
    let mut out = outputs[outputs.len() - 1][..n].to_vec();
    out.extend_from_slice(&outputs[0][n..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_parameters_give_half_gates() {
        let p = LstmParams::<f64>::zeros(3, 4);
        let (h, c) = lstm_cell_forward(&[0.3, -1.0, 2.0], &[0.1; 4], &[1.0; 4], &p).unwrap();
        for k in 0..4 {
            assert!((c[k] - 0.5).abs() < 1e-15);
            assert!((h[k] - 0.5 * 0.5f64.tanh()).abs() < 1e-12);
            assert!((h[k] - 0.231059).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_forget_gate_carries_the_cell() {
        let mut p = LstmParams::<f64>::zeros(2, 3);
        p.b_f = vec![20.0; 3];
        let c_prev = [0.7, -1.3, 2.5];
        let (_, c) = lstm_cell_forward(&[0.0, 0.0], &[0.0; 3], &c_prev, &p).unwrap();
        for k in 0..3 {
            assert!((c[k] - c_prev[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn cell_dimension_checks() {
        let p = LstmParams::<f32>::zeros(3, 2);
        assert!(matches!(
            lstm_cell_forward(&[0.0; 4], &[0.0; 2], &[0.0; 2], &p),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(lstm_cell_forward(&[0.0; 3], &[0.0; 3], &[0.0; 2], &p).is_err());
    }

    #[test]
    fn output_is_2n_and_palindromes_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let params = LstmParams::<f64>::glorot(5, 128, &mut rng);
        let layer = BiLstmLayer {
            forward: params.clone(),
            backward: params,
        };
        let rows = [[0.1, 0.2, -0.3, 0.0, 0.5], [0.9, -0.1, 0.0, 0.3, 0.2]];
        let mut seq = Matrix::zeros(5, 5);
        for (t, r) in [0usize, 1, 0].iter().enumerate() {
            seq.row_mut(t).copy_from_slice(&rows[*r]);
        }
        let out = bilstm_forward(&seq, 3, &layer, None).unwrap();
        assert_eq!(out.len(), 256);
        assert_eq!(&out[..128], &out[128..]);
    }

    #[test]
    fn single_step_and_padding_rows_are_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let layer = BiLstmLayer::<f64>::glorot(3, 4, &mut rng);
        let mut seq = Matrix::uniform(6, 3, 1.0, &mut rng);
        let a = bilstm_forward(&seq, 1, &layer, None).unwrap();
        let x = seq.row(0).to_vec();
        let (hf, _) = lstm_cell_forward(&x, &[0.0; 4], &[0.0; 4], &layer.forward).unwrap();
        let (hb, _) = lstm_cell_forward(&x, &[0.0; 4], &[0.0; 4], &layer.backward).unwrap();
        assert_eq!(&a[..4], hf.as_slice());
        assert_eq!(&a[4..], hb.as_slice());

        let full = bilstm_forward(&seq, 4, &layer, None).unwrap();
        for t in 4..6 {
            seq.row_mut(t).fill(123.0);
        }
        assert_eq!(bilstm_forward(&seq, 4, &layer, None).unwrap(), full);
        assert!(matches!(bilstm_forward(&seq, 0, &layer, None), Err(Error::EmptySequence)));
    }

    #[test]
    fn recurrent_mask_changes_output_only_past_first_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layer = BiLstmLayer::<f64>::glorot(2, 3, &mut rng);
        let seq = Matrix::uniform(3, 2, 1.0, &mut rng);
        let zero = [0.0; 3];
        let plain = bilstm_forward(&seq, 1, &layer, None).unwrap();
        // One step: h_{-1} is zero, so masking it cannot matter.
        assert_eq!(bilstm_forward(&seq, 1, &layer, Some((&zero, &zero))).unwrap(), plain);
        let plain3 = bilstm_forward(&seq, 3, &layer, None).unwrap();
        assert_ne!(bilstm_forward(&seq, 3, &layer, Some((&zero, &zero))).unwrap(), plain3);
    }
}
