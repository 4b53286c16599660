//! Additive pointer attention: scores each reference vector against a
//! query and returns a softmax distribution over the references.
//!
//! u_i = v · tanh(W_ref · r_i + W_q · q)

use crate::neural::tensor::{add_scaled, dot, Matrix};
use crate::scalar::Scalar;

/// Forward result for one attention evaluation.
#[derive(Clone, Debug)]
pub(crate) struct AttentionEval<F> {
    pub probs: Vec<F>,
    pub logprobs: Vec<F>,
    /// tanh(W_ref r_i + W_q q) per reference; kept for the backward pass.
    pub tanh: Vec<Vec<F>>,
}

pub(crate) fn forward<F: Scalar>(
    attn_ref: &Matrix<F>,
    attn_query: &Matrix<F>,
    v: &[F],
    refs: &[&[F]],
    query: &[F],
) -> AttentionEval<F> {
    let d = v.len();
    let mut wq_q = vec![F::zero(); d];
    attn_query.matvec(query, &mut wq_q);

    let mut scores = Vec::with_capacity(refs.len());
    let mut tanh = Vec::with_capacity(refs.len());
    for r in refs {
        let mut z = wq_q.clone();
        attn_ref.matvec_add(r, &mut z);
        for t in z.iter_mut() {
            *t = t.tanh();
        }
        scores.push(dot(v, &z));
        tanh.push(z);
    }

    let (probs, logprobs) = softmax(&scores);
    AttentionEval {
        probs,
        logprobs,
        tanh,
    }
}

/// Backward through one attention evaluation.
///
/// `du` is the loss gradient w.r.t. the raw scores. Accumulates weight
/// gradients into the `g_*` arguments, the query gradient into `dquery`,
/// and per-reference gradients via `add_ref_grad(i, dr_i)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward<F: Scalar>(
    attn_ref: &Matrix<F>,
    attn_query: &Matrix<F>,
    v: &[F],
    refs: &[&[F]],
    query: &[F],
    eval: &AttentionEval<F>,
    du: &[F],
    g_ref: &mut Matrix<F>,
    g_query: &mut Matrix<F>,
    g_v: &mut [F],
    dquery: &mut [F],
    mut add_ref_grad: impl FnMut(usize, &[F]),
) {
    let one = F::one();
    let mut dz = vec![F::zero(); v.len()];
    let mut dr = vec![F::zero(); v.len()];
    for (i, t) in eval.tanh.iter().enumerate() {
        let dui = du[i];
        if dui == F::zero() {
            continue;
        }
        add_scaled(g_v, t, dui);
        for (k, z) in dz.iter_mut().enumerate() {
            *z = dui * v[k] * (one - t[k] * t[k]);
        }
        g_ref.add_outer(&dz, refs[i]);
        g_query.add_outer(&dz, query);
        attn_query.matvec_t_add(&dz, dquery);
        for r in dr.iter_mut() {
            *r = F::zero();
        }
        attn_ref.matvec_t_add(&dz, &mut dr);
        add_ref_grad(i, &dr);
    }
}

/// Stable softmax; returns (probs, logprobs). Every probability is
/// strictly positive because scores are bounded by ‖v‖₁.
pub(crate) fn softmax<F: Scalar>(scores: &[F]) -> (Vec<F>, Vec<F>) {
    let max = scores
        .iter()
        .copied()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    let mut sum = F::zero();
    for &s in scores {
        sum += (s - max).exp();
    }
    let lse = max + sum.ln();
    let logprobs: Vec<F> = scores.iter().map(|&s| s - lse).collect();
    let probs: Vec<F> = logprobs.iter().map(|&l| l.exp()).collect();
    (probs, logprobs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_sums_to_one() {
        let (p, _) = softmax(&[0.3f64, -1.2, 2.0, 0.0]);
        let s: f64 = p.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn softmax_shift_invariant() {
        let (p1, _) = softmax(&[1.0f64, 2.0, 3.0]);
        let (p2, _) = softmax(&[101.0f64, 102.0, 103.0]);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
