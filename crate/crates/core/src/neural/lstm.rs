//! LSTM cell: forward pass, cached forward for training, and the
//! hand-derived backward pass.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::neural::tensor::{add_assign, dot, Matrix};
use crate::scalar::{sigmoid, Scalar};

/// Gate index order used everywhere, including the weights file:
/// input, forget, cell candidate, output.
pub const GATE_NAMES: [&str; 4] = ["i", "f", "g", "o"];

const INPUT: usize = 0;
const FORGET: usize = 1;
const CELL: usize = 2;
const OUTPUT: usize = 3;

/// Weight block for one LSTM cell. `w` maps the input, `u` the previous
/// hidden state; one matrix/bias per gate in [`GATE_NAMES`] order.
///
/// The same struct doubles as the gradient accumulator for a cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmWeights<F> {
    pub w: [Matrix<F>; 4],
    pub u: [Matrix<F>; 4],
    pub b: [Vec<F>; 4],
}

/// Hidden and cell state of an LSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState<F> {
    pub h: Vec<F>,
    pub c: Vec<F>,
}

impl<F: Scalar> LstmState<F> {
    pub fn zeros(d: usize) -> Self {
        LstmState {
            h: vec![F::zero(); d],
            c: vec![F::zero(); d],
        }
    }
}

/// Per-step activations retained for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct LstmStepCache<F> {
    pub x: Vec<F>,
    pub h_prev: Vec<F>,
    pub c_prev: Vec<F>,
    /// Post-activation gate values, [`GATE_NAMES`] order.
    pub gates: [Vec<F>; 4],
    pub tanh_c: Vec<F>,
}

impl<F: Scalar> LstmWeights<F> {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmWeights {
            w: std::array::from_fn(|_| Matrix::zeros(hidden_dim, input_dim)),
            u: std::array::from_fn(|_| Matrix::zeros(hidden_dim, hidden_dim)),
            b: std::array::from_fn(|_| vec![F::zero(); hidden_dim]),
        }
    }

    /// Uniform init in [-scale, scale]; draws are made in a fixed order.
    pub fn init(input_dim: usize, hidden_dim: usize, scale: f64, rng: &mut dyn RngCore) -> Self {
        let mut block = Self::zeros(input_dim, hidden_dim);
        for m in block.w.iter_mut().chain(block.u.iter_mut()) {
            for v in m.as_mut_slice() {
                *v = super::uniform_symmetric(scale, rng);
            }
        }
        for b in block.b.iter_mut() {
            for v in b.iter_mut() {
                *v = super::uniform_symmetric(scale, rng);
            }
        }
        block
    }

    pub fn hidden_dim(&self) -> usize {
        self.w[0].rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w[0].cols()
    }

    fn check_shapes(&self, x: &[F], state: &LstmState<F>) -> Result<()> {
        let d = self.hidden_dim();
        if x.len() != self.input_dim() || state.h.len() != d || state.c.len() != d {
            return Err(Error::Shape(format!(
                "lstm step: input {} (expected {}), state {}/{} (expected {})",
                x.len(),
                self.input_dim(),
                state.h.len(),
                state.c.len(),
                d
            )));
        }
        Ok(())
    }

    /// One cell update. Deterministic; pure given the weights.
    pub fn step(&self, x: &[F], state: &LstmState<F>) -> Result<LstmState<F>> {
        self.check_shapes(x, state)?;
        Ok(self.step_unchecked(x, state).0)
    }

    /// Cell update that also returns the cached activations for backprop.
    pub(crate) fn step_cached(
        &self,
        x: &[F],
        state: &LstmState<F>,
    ) -> Result<(LstmState<F>, LstmStepCache<F>)> {
        self.check_shapes(x, state)?;
        let (next, cache) = self.step_unchecked(x, state);
        Ok((next, cache.expect("cache requested")))
    }

    fn step_unchecked(&self, x: &[F], state: &LstmState<F>) -> (LstmState<F>, Option<LstmStepCache<F>>) {
        let d = self.hidden_dim();
        let mut gates: [Vec<F>; 4] = std::array::from_fn(|_| vec![F::zero(); d]);
        for g in 0..4 {
            let pre = &mut gates[g];
            self.w[g].matvec(x, pre);
            self.u[g].matvec_add(&state.h, pre);
            add_assign(pre, &self.b[g]);
            if g == CELL {
                for v in pre.iter_mut() {
                    *v = v.tanh();
                }
            } else {
                for v in pre.iter_mut() {
                    *v = sigmoid(*v);
                }
            }
        }
        let mut c = vec![F::zero(); d];
        let mut tanh_c = vec![F::zero(); d];
        let mut h = vec![F::zero(); d];
        for k in 0..d {
            c[k] = gates[FORGET][k] * state.c[k] + gates[INPUT][k] * gates[CELL][k];
            tanh_c[k] = c[k].tanh();
            h[k] = gates[OUTPUT][k] * tanh_c[k];
        }
        let next = LstmState { h, c };
        let cache = LstmStepCache {
            x: x.to_vec(),
            h_prev: state.h.clone(),
            c_prev: state.c.clone(),
            gates,
            tanh_c,
        };
        (next, Some(cache))
    }

    /// Backward through one cell step.
    ///
    /// `dh`/`dc` are the loss gradients w.r.t. this step's outputs. Weight
    /// gradients accumulate into `grads`; returns the gradients w.r.t. the
    /// step inputs as (dx, dh_prev, dc_prev).
    pub(crate) fn backward(
        &self,
        cache: &LstmStepCache<F>,
        dh: &[F],
        dc: &[F],
        grads: &mut LstmWeights<F>,
    ) -> (Vec<F>, Vec<F>, Vec<F>) {
        let d = self.hidden_dim();
        let one = F::one();
        let i = &cache.gates[INPUT];
        let f = &cache.gates[FORGET];
        let g = &cache.gates[CELL];
        let o = &cache.gates[OUTPUT];
        let tc = &cache.tanh_c;

        // Pre-activation gradients per gate.
        let mut da: [Vec<F>; 4] = std::array::from_fn(|_| vec![F::zero(); d]);
        let mut dc_prev = vec![F::zero(); d];
        for k in 0..d {
            let dc_total = dc[k] + dh[k] * o[k] * (one - tc[k] * tc[k]);
            let do_ = dh[k] * tc[k];
            da[OUTPUT][k] = do_ * o[k] * (one - o[k]);
            da[FORGET][k] = dc_total * cache.c_prev[k] * f[k] * (one - f[k]);
            da[INPUT][k] = dc_total * g[k] * i[k] * (one - i[k]);
            da[CELL][k] = dc_total * i[k] * (one - g[k] * g[k]);
            dc_prev[k] = dc_total * f[k];
        }

        let mut dx = vec![F::zero(); self.input_dim()];
        let mut dh_prev = vec![F::zero(); d];
        for q in 0..4 {
            grads.w[q].add_outer(&da[q], &cache.x);
            grads.u[q].add_outer(&da[q], &cache.h_prev);
            add_assign(&mut grads.b[q], &da[q]);
            self.w[q].matvec_t_add(&da[q], &mut dx);
            self.u[q].matvec_t_add(&da[q], &mut dh_prev);
        }
        (dx, dh_prev, dc_prev)
    }

    /// Tensor views in serialization order: w_i..w_o, u_i..u_o, b_i..b_o.
    pub(crate) fn slices(&self) -> [&[F]; 12] {
        [
            self.w[0].as_slice(),
            self.w[1].as_slice(),
            self.w[2].as_slice(),
            self.w[3].as_slice(),
            self.u[0].as_slice(),
            self.u[1].as_slice(),
            self.u[2].as_slice(),
            self.u[3].as_slice(),
            &self.b[0],
            &self.b[1],
            &self.b[2],
            &self.b[3],
        ]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [F]; 12] {
        let [w0, w1, w2, w3] = &mut self.w;
        let [u0, u1, u2, u3] = &mut self.u;
        let [b0, b1, b2, b3] = &mut self.b;
        [
            w0.as_mut_slice(),
            w1.as_mut_slice(),
            w2.as_mut_slice(),
            w3.as_mut_slice(),
            u0.as_mut_slice(),
            u1.as_mut_slice(),
            u2.as_mut_slice(),
            u3.as_mut_slice(),
            b0,
            b1,
            b2,
            b3,
        ]
    }
}

/// Scalar-by-scalar reference cell used by the tests below; written
/// independently of the vectorized path (no shared kernels).
#[cfg(test)]
pub(crate) fn reference_step(
    weights: &LstmWeights<f64>,
    x: &[f64],
    state: &LstmState<f64>,
) -> LstmState<f64> {
    let d = weights.hidden_dim();
    let gate = |q: usize, k: usize| -> f64 {
        let mut a = weights.b[q][k];
        for (j, &xv) in x.iter().enumerate() {
            a += weights.w[q].row(k)[j] * xv;
        }
        for (j, &hv) in state.h.iter().enumerate() {
            a += weights.u[q].row(k)[j] * hv;
        }
        a
    };
    let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
    let mut h = vec![0.0; d];
    let mut c = vec![0.0; d];
    for k in 0..d {
        let ig = sig(gate(0, k));
        let fg = sig(gate(1, k));
        let gg = gate(2, k).tanh();
        let og = sig(gate(3, k));
        c[k] = fg * state.c[k] + ig * gg;
        h[k] = og * c[k].tanh();
    }
    LstmState { h, c }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_zero_state_give_zero_output() {
        let w = LstmWeights::<f64>::zeros(3, 3);
        let state = LstmState::zeros(3);
        let next = w.step(&[0.7, -0.3, 2.0], &state).unwrap();
        // sigmoid(0) * tanh(0) = 0 everywhere
        assert!(next.h.iter().all(|&v| v == 0.0));
        assert!(next.c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = LstmWeights::<f64>::init(4, 4, 0.5, &mut rng);
        let state = LstmState {
            h: vec![0.1, -0.2, 0.3, 0.0],
            c: vec![0.5, 0.5, -0.5, 0.25],
        };
        let x = [1.0, 0.0, -1.0, 0.5];
        let a = w.step(&x, &state).unwrap();
        let b = w.step(&x, &state).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_matches_scalar_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let w = LstmWeights::<f64>::init(2, 2, 0.7, &mut rng);
        let state = LstmState {
            h: vec![0.3, -0.8],
            c: vec![-0.1, 0.9],
        };
        let x = [0.4, -1.2];
        let fast = w.step(&x, &state).unwrap();
        let slow = reference_step(&w, &x, &state);
        for k in 0..2 {
            assert!((fast.h[k] - slow.h[k]).abs() < 1e-14);
            assert!((fast.c[k] - slow.c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let w = LstmWeights::<f64>::zeros(3, 3);
        let state = LstmState::zeros(3);
        assert!(matches!(
            w.step(&[1.0, 2.0], &state),
            Err(crate::error::Error::Shape(_))
        ));
    }
}
