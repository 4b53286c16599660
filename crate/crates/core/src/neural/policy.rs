//! The crossover policy network: gene embeddings, a shared encoder LSTM
//! run over each parent, and a decoder LSTM whose pointer attention picks
//! which parent contributes each offspring gene.

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::neural::attention;
use crate::neural::lstm::{LstmState, LstmWeights};
use crate::neural::tensor::{add_scaled, Matrix};
use crate::scalar::Scalar;

/// All learnable weights of the crossover policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParameters<F> {
    /// Latent dimension.
    d: usize,
    /// Exclusive upper bound on embeddable gene values.
    vocab_size: usize,
    /// Gene-value embedding table, vocab_size × d.
    pub embed: Matrix<F>,
    pub enc: LstmWeights<F>,
    pub dec: LstmWeights<F>,
    pub attn_ref: Matrix<F>,
    pub attn_query: Matrix<F>,
    pub attn_v: Vec<F>,
    /// Trainable input for the first decoder step.
    pub start_token: Vec<F>,
}

/// Which encoder states the pointer scores at decoding step j.
///
/// The decision at step j is between the parents' j-th genes, so `AtStep`
/// is what the crossover operator uses; `PreviousStep` scores the states
/// one position back (the zero initial state at j = 0).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefIndex {
    AtStep,
    PreviousStep,
}

impl RefIndex {
    fn position(self, j: usize) -> Option<usize> {
        match self {
            RefIndex::AtStep => Some(j),
            RefIndex::PreviousStep => j.checked_sub(1),
        }
    }
}

/// Encoder output: the full state sequence per parent plus the
/// concatenated final hidden states (length m·d).
#[derive(Clone, Debug)]
pub struct ParentEncoding<F> {
    pub states: Vec<Vec<LstmState<F>>>,
    pub summary: Vec<F>,
}

/// One decoding step of a produced child.
#[derive(Clone, Debug)]
pub struct GeneChoice<F> {
    /// Index of the parent the gene was taken from.
    pub parent: usize,
    /// Log-probability of that parent under the policy distribution.
    pub logprob: F,
    /// True when the choice was the uniform ε-exploration branch.
    pub exploratory: bool,
}

/// A child genome together with its decoding trace.
#[derive(Clone, Debug)]
pub struct DecodedChild<F> {
    pub genes: Vec<usize>,
    pub steps: Vec<GeneChoice<F>>,
}

impl<F: Scalar> PolicyParameters<F> {
    /// Fresh parameters, uniform in [-1/√d, 1/√d]. Draw order is fixed so
    /// a seeded RNG reproduces the same network.
    pub fn init(d: usize, vocab_size: usize, rng: &mut dyn RngCore) -> Self {
        assert!(d > 0 && vocab_size > 0, "d and vocab_size must be positive");
        let scale = 1.0 / (d as f64).sqrt();
        let embed = Matrix::from_fn(vocab_size, d, |_, _| super::uniform_symmetric(scale, rng));
        let enc = LstmWeights::init(d, d, scale, rng);
        let dec = LstmWeights::init(d, d, scale, rng);
        let attn_ref = Matrix::from_fn(d, d, |_, _| super::uniform_symmetric(scale, rng));
        let attn_query = Matrix::from_fn(d, d, |_, _| super::uniform_symmetric(scale, rng));
        let attn_v = (0..d).map(|_| super::uniform_symmetric(scale, rng)).collect();
        let start_token = (0..d).map(|_| super::uniform_symmetric(scale, rng)).collect();
        PolicyParameters {
            d,
            vocab_size,
            embed,
            enc,
            dec,
            attn_ref,
            attn_query,
            attn_v,
            start_token,
        }
    }

    /// Zero-valued parameters with the given shape (used by deserialization).
    pub(crate) fn zeros(d: usize, vocab_size: usize) -> Self {
        PolicyParameters {
            d,
            vocab_size,
            embed: Matrix::zeros(vocab_size, d),
            enc: LstmWeights::zeros(d, d),
            dec: LstmWeights::zeros(d, d),
            attn_ref: Matrix::zeros(d, d),
            attn_query: Matrix::zeros(d, d),
            attn_v: vec![F::zero(); d],
            start_token: vec![F::zero(); d],
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.d
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Embedding row for a gene value.
    pub fn embed_gene(&self, gene: usize) -> Result<&[F]> {
        if gene >= self.vocab_size {
            return Err(Error::EmbeddingRange {
                gene,
                vocab_size: self.vocab_size,
            });
        }
        Ok(self.embed.row(gene))
    }

    /// Checks that genomes with values below `required` can be embedded.
    pub fn require_vocab(&self, required: usize) -> Result<()> {
        if self.vocab_size < required {
            return Err(Error::TransferIncompatible {
                available: self.vocab_size,
                required,
            });
        }
        Ok(())
    }

    fn validate_parents(&self, parents: &[&[usize]]) -> Result<usize> {
        if parents.len() < 2 {
            return Err(Error::Shape(format!(
                "need at least 2 parents, got {}",
                parents.len()
            )));
        }
        let n = parents[0].len();
        if n == 0 {
            return Err(Error::Shape("empty parent genome".into()));
        }
        for p in parents {
            if p.len() != n {
                return Err(Error::Shape(format!(
                    "parent genome lengths differ: {} vs {}",
                    n,
                    p.len()
                )));
            }
            for &gene in p.iter() {
                if gene >= self.vocab_size {
                    return Err(Error::TransferIncompatible {
                        available: self.vocab_size,
                        required: gene + 1,
                    });
                }
            }
        }
        Ok(n)
    }

    /// Runs the shared encoder over each parent independently from a zero
    /// initial state. The summary concatenates the final hidden states in
    /// parent order.
    pub fn encode_parents(&self, parents: &[&[usize]]) -> Result<ParentEncoding<F>> {
        let n = self.validate_parents(parents)?;
        let mut states = Vec::with_capacity(parents.len());
        let mut summary = Vec::with_capacity(parents.len() * self.d);
        for p in parents {
            let mut seq = Vec::with_capacity(n);
            let mut state = LstmState::zeros(self.d);
            for &gene in p.iter() {
                let x = self.embed_gene(gene)?.to_vec();
                state = self.enc.step(&x, &state)?;
                seq.push(state.clone());
            }
            summary.extend_from_slice(&seq[n - 1].h);
            states.push(seq);
        }
        Ok(ParentEncoding { states, summary })
    }

    /// Pointer distribution over the reference vectors for a query.
    pub fn pointer_attention(&self, refs: &[&[F]], query: &[F]) -> Result<Vec<F>> {
        if refs.len() < 2 {
            return Err(Error::Shape(format!(
                "pointer needs at least 2 references, got {}",
                refs.len()
            )));
        }
        if query.len() != self.d || refs.iter().any(|r| r.len() != self.d) {
            return Err(Error::Shape("pointer vectors must have length d".into()));
        }
        Ok(attention::forward(&self.attn_ref, &self.attn_query, &self.attn_v, refs, query).probs)
    }

    /// Decoder initial state: the per-parent final encoder states, mean
    /// pooled so arbitrary parent counts map onto the d-sized state.
    pub(crate) fn decoder_init(&self, enc: &ParentEncoding<F>) -> LstmState<F> {
        let inv = F::from(1.0 / enc.states.len() as f64).unwrap();
        let mut init = LstmState::zeros(self.d);
        for seq in &enc.states {
            let last = seq.last().expect("non-empty encoding");
            add_scaled(&mut init.h, &last.h, inv);
            add_scaled(&mut init.c, &last.c, inv);
        }
        init
    }

    /// Shared decode loop: the decoder consumes the embedding of the
    /// previously chosen gene (the start token at step 0), the pointer
    /// scores the encoder states, and `choose` picks the parent index.
    fn decode_with(
        &self,
        parents: &[&[usize]],
        ref_index: RefIndex,
        mut choose: impl FnMut(usize, &[F]) -> (usize, bool),
    ) -> Result<DecodedChild<F>> {
        let n = parents[0].len();
        let m = parents.len();
        let encoding = self.encode_parents(parents)?;
        let zero_ref = vec![F::zero(); self.d];
        let mut state = self.decoder_init(&encoding);
        let mut x = self.start_token.clone();
        let mut genes = Vec::with_capacity(n);
        let mut steps = Vec::with_capacity(n);
        for j in 0..n {
            state = self.dec.step(&x, &state)?;
            let refs: Vec<&[F]> = match ref_index.position(j) {
                Some(pos) => (0..m).map(|i| encoding.states[i][pos].h.as_slice()).collect(),
                None => (0..m).map(|_| zero_ref.as_slice()).collect(),
            };
            let eval =
                attention::forward(&self.attn_ref, &self.attn_query, &self.attn_v, &refs, &state.h);
            let (parent, exploratory) = choose(j, &eval.probs);
            debug_assert!(parent < m);
            steps.push(GeneChoice {
                parent,
                logprob: eval.logprobs[parent],
                exploratory,
            });
            let gene = parents[parent][j];
            genes.push(gene);
            if j + 1 < n {
                x = self.embed_gene(gene)?.to_vec();
            }
        }
        Ok(DecodedChild { genes, steps })
    }

    /// Samples a child gene by gene. Each step takes the uniform-random
    /// branch with probability `epsilon` and otherwise samples the pointer
    /// distribution.
    pub fn sample_child(
        &self,
        parents: &[&[usize]],
        epsilon: f64,
        ref_index: RefIndex,
        rng: &mut dyn RngCore,
    ) -> Result<DecodedChild<F>> {
        let m = parents.len();
        self.decode_with(parents, ref_index, |_, probs| {
            if rng.gen::<f64>() < epsilon {
                (rng.gen_range(0..m), true)
            } else {
                (sample_categorical(probs, rng), false)
            }
        })
    }

    /// Re-evaluates a fixed choice sequence, returning the per-step
    /// log-probabilities under the current parameters.
    pub fn teacher_forced_logprobs(
        &self,
        parents: &[&[usize]],
        choices: &[usize],
        ref_index: RefIndex,
    ) -> Result<Vec<F>> {
        if choices.len() != parents[0].len() {
            return Err(Error::Shape(format!(
                "choice sequence length {} does not match genome length {}",
                choices.len(),
                parents[0].len()
            )));
        }
        let child = self.decode_with(parents, ref_index, |j, _| (choices[j], false))?;
        Ok(child.steps.into_iter().map(|s| s.logprob).collect())
    }
}

fn sample_categorical<F: Scalar>(probs: &[F], rng: &mut dyn RngCore) -> usize {
    let r: f64 = rng.gen();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p.to_f64().unwrap();
        if r < cum {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(d: usize, vocab: usize, seed: u64) -> PolicyParameters<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PolicyParameters::init(d, vocab, &mut rng)
    }

    #[test]
    fn embed_gene_is_a_table_lookup() {
        let mut p = params(4, 5, 1);
        for v in p.embed.row_mut(0) {
            *v = 0.0;
        }
        assert_eq!(p.embed_gene(0).unwrap(), &[0.0; 4]);
        let row: Vec<f64> = (1..=4).map(|i| i as f64).collect();
        p.embed.row_mut(3).copy_from_slice(&row);
        assert_eq!(p.embed_gene(3).unwrap(), row.as_slice());
    }

    #[test]
    fn embed_gene_rejects_out_of_range() {
        let p = params(4, 5, 1);
        match p.embed_gene(5) {
            Err(Error::EmbeddingRange { gene, vocab_size }) => {
                assert_eq!(gene, 5);
                assert_eq!(vocab_size, 5);
            }
            other => panic!("expected range error, got {other:?}"),
        }
    }

    #[test]
    fn encode_shapes_match_contract() {
        let p = params(3, 10, 2);
        let a = vec![1usize];
        let b = vec![2usize];
        let enc = p.encode_parents(&[&a, &b]).unwrap();
        assert_eq!(enc.summary.len(), 2 * 3);
        assert_eq!(enc.states.len(), 2);
        assert_eq!(enc.states[0].len(), 1);

        let c = vec![3usize];
        let enc3 = p.encode_parents(&[&a, &b, &c]).unwrap();
        assert_eq!(enc3.summary.len(), 3 * 3);
    }

    #[test]
    fn encode_is_equivariant_under_parent_permutation() {
        let p = params(4, 10, 3);
        let a = vec![1usize, 2, 3];
        let b = vec![4usize, 5, 6];
        let c = vec![7usize, 8, 9];
        let fwd = p.encode_parents(&[&a, &b, &c]).unwrap();
        let rev = p.encode_parents(&[&c, &a, &b]).unwrap();
        let d = 4;
        assert_eq!(&fwd.summary[0..d], &rev.summary[d..2 * d]);
        assert_eq!(&fwd.summary[d..2 * d], &rev.summary[2 * d..3 * d]);
        assert_eq!(&fwd.summary[2 * d..3 * d], &rev.summary[0..d]);
    }

    #[test]
    fn encode_rejects_mismatched_lengths() {
        let p = params(3, 10, 4);
        let a = vec![1usize, 2];
        let b = vec![3usize];
        assert!(matches!(
            p.encode_parents(&[&a, &b]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn pointer_uniform_for_identical_refs() {
        let p = params(6, 4, 5);
        let r = vec![0.3f64, -0.2, 0.7, 0.1, 0.0, -0.9];
        let q = vec![0.5f64; 6];
        for m in 2..=4 {
            let refs: Vec<&[f64]> = (0..m).map(|_| r.as_slice()).collect();
            let probs = p.pointer_attention(&refs, &q).unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            for &pr in &probs {
                assert!((pr - 1.0 / m as f64).abs() < 1e-12);
                assert!(pr > 0.0);
            }
        }
    }

    #[test]
    fn pointer_with_constructed_scores_gives_three_quarters() {
        // W_q = 0, W_ref = I, v = (2, 0): score for ref1 = 2·tanh(z), so a
        // first component of atanh(ln3 / 2) forces scores (ln 3, 0) and a
        // softmax of (0.75, 0.25).
        let mut p = params(2, 4, 6);
        p.attn_query = Matrix::zeros(2, 2);
        p.attn_ref = Matrix::from_fn(2, 2, |r, c| if r == c { 1.0 } else { 0.0 });
        p.attn_v = vec![2.0, 0.0];
        let half_ln3 = (3.0f64).ln() / 2.0;
        let z = 0.5 * ((1.0 + half_ln3) / (1.0 - half_ln3)).ln(); // atanh
        let r1 = vec![z, 0.0];
        let r2 = vec![0.0, 0.0];
        let q = vec![9.0, -3.0]; // irrelevant: W_q = 0
        let probs = p.pointer_attention(&[&r1, &r2], &q).unwrap();
        assert!((probs[0] - 0.75).abs() < 1e-12);
        assert!((probs[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn pointer_invariant_under_uniform_score_shift() {
        // Second latent component is constant across references (W_ref row
        // 1 zeroed) and driven by the query through W_q, so varying the
        // query shifts every score equally.
        let mut p = params(2, 4, 7);
        p.attn_ref = Matrix::from_fn(2, 2, |r, c| if r == 0 && c == 0 { 1.0 } else { 0.0 });
        p.attn_query = Matrix::from_fn(2, 2, |r, c| if r == 1 && c == 0 { 1.0 } else { 0.0 });
        p.attn_v = vec![1.5, 4.0];
        let r1 = vec![0.6, 0.0];
        let r2 = vec![-0.4, 0.0];
        let base = p.pointer_attention(&[&r1, &r2], &[0.0, 0.0]).unwrap();
        let shifted = p.pointer_attention(&[&r1, &r2], &[2.0, 0.0]).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_parents_reproduce_themselves() {
        let p = params(4, 8, 8);
        let g = vec![3usize, 1, 4, 1, 5];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let child = p
                .sample_child(&[&g, &g], 0.3, RefIndex::AtStep, &mut rng)
                .unwrap();
            assert_eq!(child.genes, g);
        }
    }

    #[test]
    fn sampled_logprobs_match_teacher_forcing() {
        let p = params(5, 12, 9);
        let a = vec![0usize, 5, 2, 11, 7];
        let b = vec![3usize, 1, 9, 4, 6];
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..10 {
            let child = p
                .sample_child(&[&a, &b], 0.25, RefIndex::AtStep, &mut rng)
                .unwrap();
            let choices: Vec<usize> = child.steps.iter().map(|s| s.parent).collect();
            let replayed = p
                .teacher_forced_logprobs(&[&a, &b], &choices, RefIndex::AtStep)
                .unwrap();
            for (step, lp) in child.steps.iter().zip(&replayed) {
                assert!((step.logprob - lp).abs() < 1e-9);
                assert!(step.logprob <= 0.0);
            }
        }
    }

    #[test]
    fn previous_step_refs_are_accepted() {
        let p = params(4, 8, 10);
        let a = vec![1usize, 2, 3];
        let b = vec![4usize, 5, 6];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let child = p
            .sample_child(&[&a, &b], 0.0, RefIndex::PreviousStep, &mut rng)
            .unwrap();
        assert_eq!(child.genes.len(), 3);
        // At j = 0 both references are the zero initial state, so the
        // distribution is exactly uniform.
        let lp = child.steps[0].logprob;
        assert!((lp - (0.5f64).ln()).abs() < 1e-12);
    }
}
