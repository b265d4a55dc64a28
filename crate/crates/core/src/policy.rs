//! A tiny autoregressive categorical policy over a bounded-order context.
//!
//! The policy is a dense logit table indexed by (context row, token), where
//! the context row hashes the last `k` tokens of prompt-plus-generation
//! (left-padded with a dedicated no-token symbol). The learner, the behavior
//! policy, and the frozen reference are all instances of [`PolicyParams`].
//! Everything is exact: log-probabilities, gradients, per-prefix KL, and
//! full enumeration of short generations, which is what the verification
//! oracles in the learning module rely on.
//!
//! Generation is resumable: sampling consumes exactly one uniform draw per
//! token from a caller-supplied deterministic stream, so continuing a
//! truncated generation from the stored stream position reproduces the
//! single-shot generation byte for byte.
//!
//! # Snapshot byte layout
//!
//! [`PolicyParams::to_bytes`] produces, all little-endian:
//!
//! | offset | size | field |
//! |--------|------|-------|
//! | 0      | 8    | version (u64) |
//! | 8      | 4    | vocab_size (u32) |
//! | 12     | 4    | context_order (u32) |
//! | 16     | 4    | max_len (u32) |
//! | 20     | 4    | reserved, zero (u32) |
//! | 24     | 8    | entry count = (vocab_size+1)^context_order * vocab_size (u64) |
//! | 32     | 8*n  | logits, row-major (f64) |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::DetRng;

/// End-of-sequence is an ordinary vocabulary token; prompts use ids >= 1.
pub const EOS_TOKEN: u32 = 0;

/// Byte length of the snapshot header preceding the logit block.
pub const SNAPSHOT_HEADER_LEN: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("token {token} outside vocabulary of size {vocab}")]
    TokenOutOfRange { token: u32, vocab: u32 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),
}

/// Dense (rows x vocab) table of f64 values, used both for logits and for
/// gradients accumulated against them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTable {
    rows: usize,
    vocab: usize,
    data: Vec<f64>,
}

impl ParamTable {
    pub fn zeros(rows: usize, vocab: usize) -> Self {
        Self {
            rows,
            vocab,
            data: vec![0.0; rows * vocab],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.vocab..(r + 1) * self.vocab]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.vocab..(r + 1) * self.vocab]
    }

    pub fn same_shape(&self, other: &ParamTable) -> bool {
        self.rows == other.rows && self.vocab == other.vocab
    }

    /// `self += scale * other`, shapes must match.
    pub fn add_scaled(&mut self, other: &ParamTable, scale: f64) -> Result<(), PolicyError> {
        if !self.same_shape(other) {
            return Err(PolicyError::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.vocab, other.rows, other.vocab
            )));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ParamTable) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Versioned parameters of the bounded-context softmax policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    version: u64,
    vocab_size: u32,
    context_order: u32,
    max_len: u32,
    table: ParamTable,
}

impl PolicyParams {
    pub fn new(vocab_size: u32, context_order: u32, max_len: u32) -> Result<Self, PolicyError> {
        if vocab_size < 2 {
            return Err(PolicyError::InvalidConfig(
                "vocabulary needs at least the end token and one more".into(),
            ));
        }
        if context_order == 0 || max_len == 0 {
            return Err(PolicyError::InvalidConfig(
                "context order and max length must be at least 1".into(),
            ));
        }
        let rows = (vocab_size as u64 + 1)
            .checked_pow(context_order)
            .filter(|&r| r.saturating_mul(vocab_size as u64) <= 100_000_000)
            .ok_or_else(|| {
                PolicyError::InvalidConfig("context table too large to allocate".into())
            })?;
        Ok(Self {
            version: 0,
            vocab_size,
            context_order,
            max_len,
            table: ParamTable::zeros(rows as usize, vocab_size as usize),
        })
    }

    /// Deterministic random initialization: logits uniform in [-scale, scale].
    pub fn seeded(
        vocab_size: u32,
        context_order: u32,
        max_len: u32,
        seed: u64,
        scale: f64,
    ) -> Result<Self, PolicyError> {
        let mut p = Self::new(vocab_size, context_order, max_len)?;
        let mut rng = DetRng::derive(seed, &[0x70_6f_6c_69]);
        for v in p.table.data_mut() {
            *v = rng.range_f64(-scale, scale);
        }
        Ok(p)
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn context_order(&self) -> u32 {
        self.context_order
    }

    pub fn max_len(&self) -> u32 {
        self.max_len
    }

    pub fn table(&self) -> &ParamTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut ParamTable {
        &mut self.table
    }

    pub fn zero_gradient(&self) -> ParamTable {
        ParamTable::zeros(self.table.rows(), self.table.vocab())
    }

    pub fn same_shape(&self, other: &PolicyParams) -> bool {
        self.vocab_size == other.vocab_size && self.context_order == other.context_order
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), PolicyError> {
        for &t in tokens {
            if t >= self.vocab_size {
                return Err(PolicyError::TokenOutOfRange {
                    token: t,
                    vocab: self.vocab_size,
                });
            }
        }
        Ok(())
    }

    /// Row index for the context preceding the next generated token: the
    /// last `context_order` tokens of prompt-plus-generation, left-padded
    /// with the no-token symbol (id `vocab_size`).
    pub fn context_row(&self, prompt: &[u32], generated: &[u32]) -> usize {
        let k = self.context_order as usize;
        let pad = self.vocab_size as u64; // the no-token symbol
        let base = self.vocab_size as u64 + 1;
        let mut row: u64 = 0;
        let total = prompt.len() + generated.len();
        for i in 0..k {
            // Position from the left of the k-window.
            let pos = total as i64 - (k - i) as i64;
            let sym = if pos < 0 {
                pad
            } else if (pos as usize) < prompt.len() {
                prompt[pos as usize] as u64
            } else {
                generated[pos as usize - prompt.len()] as u64
            };
            row = row * base + sym;
        }
        row as usize
    }

    /// Softmax probabilities of one context row at the given temperature.
    pub fn token_distribution(&self, row: usize, temperature: f64) -> Vec<f64> {
        let logits = self.table.row(row);
        let mut max = f64::NEG_INFINITY;
        for &l in logits {
            max = max.max(l / temperature);
        }
        let mut probs: Vec<f64> = logits
            .iter()
            .map(|&l| (l / temperature - max).exp())
            .collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        probs
    }

    /// Log-softmax of one context row at the given temperature. Shares the
    /// normalization path with sampling so that recomputing a stored
    /// behavior log-probability under identical parameters is bit-identical.
    pub fn token_logprobs(&self, row: usize, temperature: f64) -> Vec<f64> {
        let logits = self.table.row(row);
        let mut max = f64::NEG_INFINITY;
        for &l in logits {
            max = max.max(l / temperature);
        }
        let log_sum = logits
            .iter()
            .map(|&l| (l / temperature - max).exp())
            .sum::<f64>()
            .ln();
        logits
            .iter()
            .map(|&l| l / temperature - max - log_sum)
            .collect()
    }

    /// Serialize to the documented flat binary layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.table.data().len() as u64;
        let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 8 * n as usize);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&self.vocab_size.to_le_bytes());
        out.extend_from_slice(&self.context_order.to_le_bytes());
        out.extend_from_slice(&self.max_len.to_le_bytes());
        out.extend_from_slice(&0u32.to_le_bytes());
        out.extend_from_slice(&n.to_le_bytes());
        for v in self.table.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PolicyError> {
        if bytes.len() < SNAPSHOT_HEADER_LEN {
            return Err(PolicyError::MalformedSnapshot(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let u64le = |b: &[u8]| u64::from_le_bytes(b.try_into().unwrap());
        let u32le = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
        let version = u64le(&bytes[0..8]);
        let vocab_size = u32le(&bytes[8..12]);
        let context_order = u32le(&bytes[12..16]);
        let max_len = u32le(&bytes[16..20]);
        let n = u64le(&bytes[24..32]) as usize;
        let mut params = Self::new(vocab_size, context_order, max_len)?;
        if params.table.data().len() != n {
            return Err(PolicyError::MalformedSnapshot(format!(
                "entry count {n} does not match shape ({} expected)",
                params.table.data().len()
            )));
        }
        if bytes.len() != SNAPSHOT_HEADER_LEN + 8 * n {
            return Err(PolicyError::MalformedSnapshot(format!(
                "expected {} bytes, got {}",
                SNAPSHOT_HEADER_LEN + 8 * n,
                bytes.len()
            )));
        }
        for (i, v) in params.table.data_mut().iter_mut().enumerate() {
            let o = SNAPSHOT_HEADER_LEN + 8 * i;
            *v = f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        }
        params.version = version;
        Ok(params)
    }
}

/// One generated trajectory: prompt, generated tokens, and the behavior
/// log-probability of each token at sampling time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    pub prompt_id: u64,
    pub prompt: Vec<u32>,
    pub tokens: Vec<u32>,
    pub behavior_logprobs: Vec<f64>,
    /// Version of the policy that started this generation.
    pub behavior_version: u64,
    /// False when the per-call token budget ran out before the end token;
    /// such sequences are resumable.
    pub complete: bool,
}

impl Sequence {
    /// Number of uniform draws consumed so far; doubles as the sampling
    /// stream position for resumption.
    pub fn stream_position(&self) -> usize {
        self.tokens.len()
    }
}

/// Sample a new trajectory. Stops at the end token, at the model's length
/// cap, or after `max_new_tokens` draws, whichever comes first; in the last
/// case the sequence is flagged incomplete and resumable.
pub fn generate(
    params: &PolicyParams,
    prompt_id: u64,
    prompt: &[u32],
    rng: &mut DetRng,
    max_new_tokens: usize,
    temperature: f64,
) -> Result<Sequence, PolicyError> {
    params.check_tokens(prompt)?;
    let mut seq = Sequence {
        prompt_id,
        prompt: prompt.to_vec(),
        tokens: Vec::new(),
        behavior_logprobs: Vec::new(),
        behavior_version: params.version(),
        complete: false,
    };
    resume(params, &mut seq, rng, max_new_tokens, temperature)?;
    Ok(seq)
}

/// Continue a truncated generation. The stream must be positioned where the
/// previous call left off (one draw per generated token); under unchanged
/// parameters the result is byte-identical to a single-shot generation.
pub fn resume(
    params: &PolicyParams,
    seq: &mut Sequence,
    rng: &mut DetRng,
    max_new_tokens: usize,
    temperature: f64,
) -> Result<(), PolicyError> {
    if max_new_tokens == 0 {
        return Err(PolicyError::InvalidConfig(
            "token budget must be at least 1".into(),
        ));
    }
    if seq.complete {
        return Ok(());
    }
    for _ in 0..max_new_tokens {
        if seq.tokens.len() >= params.max_len() as usize {
            seq.complete = true;
            return Ok(());
        }
        let row = params.context_row(&seq.prompt, &seq.tokens);
        let probs = params.token_distribution(row, temperature);
        let logprobs = params.token_logprobs(row, temperature);
        let u = rng.next_f64();
        let mut cum = 0.0;
        let mut tok = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                tok = i;
                break;
            }
        }
        seq.tokens.push(tok as u32);
        seq.behavior_logprobs.push(logprobs[tok]);
        if tok as u32 == EOS_TOKEN {
            seq.complete = true;
            return Ok(());
        }
    }
    seq.complete = seq.tokens.len() >= params.max_len() as usize;
    Ok(())
}

/// Exact log-probability of a full generation under `params` at unit
/// temperature: the sum over steps of the per-token log-softmax.
pub fn sequence_logprob(
    params: &PolicyParams,
    prompt: &[u32],
    tokens: &[u32],
) -> Result<f64, PolicyError> {
    params.check_tokens(prompt)?;
    params.check_tokens(tokens)?;
    let mut total = 0.0;
    for t in 0..tokens.len() {
        let row = params.context_row(prompt, &tokens[..t]);
        total += params.token_logprobs(row, 1.0)[tokens[t] as usize];
    }
    Ok(total)
}

/// Exact gradient of [`sequence_logprob`] with respect to the logit table:
/// each visited context row receives +1 on the taken token and minus the
/// row's softmax on every token.
pub fn grad_log_prob(
    params: &PolicyParams,
    prompt: &[u32],
    tokens: &[u32],
) -> Result<ParamTable, PolicyError> {
    params.check_tokens(prompt)?;
    params.check_tokens(tokens)?;
    let mut grad = params.zero_gradient();
    accumulate_grad_log_prob(params, prompt, tokens, 1.0, &mut grad);
    Ok(grad)
}

/// Accumulate `scale * grad log pi(tokens | prompt)` into `grad`.
/// Shared by the plain gradient op and the batched estimators.
pub(crate) fn accumulate_grad_log_prob(
    params: &PolicyParams,
    prompt: &[u32],
    tokens: &[u32],
    scale: f64,
    grad: &mut ParamTable,
) {
    for t in 0..tokens.len() {
        accumulate_step_grad(params, prompt, &tokens[..t], tokens[t], scale, grad);
    }
}

/// Accumulate `scale * grad log pi(token | prefix)` for a single step.
pub(crate) fn accumulate_step_grad(
    params: &PolicyParams,
    prompt: &[u32],
    generated_prefix: &[u32],
    token: u32,
    scale: f64,
    grad: &mut ParamTable,
) {
    let row = params.context_row(prompt, generated_prefix);
    let probs = params.token_distribution(row, 1.0);
    let g = grad.row_mut(row);
    for (i, p) in probs.iter().enumerate() {
        g[i] -= scale * p;
    }
    g[token as usize] += scale;
}

/// Exact KL divergence of the next-token distributions at one prefix:
/// `sum_v pi(v|prefix) * (log pi(v|prefix) - log base(v|prefix))`.
pub fn kl_to_reference(
    params: &PolicyParams,
    base: &PolicyParams,
    prompt: &[u32],
    generated_prefix: &[u32],
) -> Result<f64, PolicyError> {
    if !params.same_shape(base) {
        return Err(PolicyError::ShapeMismatch(
            "policy and reference must share vocabulary and context order".into(),
        ));
    }
    let row = params.context_row(prompt, generated_prefix);
    let p = params.token_distribution(row, 1.0);
    let lp = params.token_logprobs(row, 1.0);
    let lq = base.token_logprobs(row, 1.0);
    Ok(p.iter()
        .zip(lp.iter().zip(&lq))
        .map(|(pi, (a, b))| pi * (a - b))
        .sum())
}

/// Exact KL summed over every prefix of a generation; the sequence-level
/// regularization term used when scoring.
pub fn sequence_kl_to_reference(
    params: &PolicyParams,
    base: &PolicyParams,
    prompt: &[u32],
    tokens: &[u32],
) -> Result<f64, PolicyError> {
    let mut total = 0.0;
    for t in 0..tokens.len() {
        total += kl_to_reference(params, base, prompt, &tokens[..t])?;
    }
    Ok(total)
}

/// Every trajectory the sampler can halt on within `t_cap` tokens: the end
/// token may appear only as the final token and is required unless the
/// trajectory uses the full budget. Probabilities of these trajectories sum
/// to one under any policy whose length cap is `t_cap`.
pub fn halted_sequences(vocab_size: u32, t_cap: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<u32>> = vec![vec![]];
    while let Some(prefix) = stack.pop() {
        if prefix.len() == t_cap {
            out.push(prefix);
            continue;
        }
        for tok in 0..vocab_size {
            let mut next = prefix.clone();
            next.push(tok);
            if tok == EOS_TOKEN {
                out.push(next);
            } else {
                stack.push(next);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_params(vocab: u32) -> PolicyParams {
        PolicyParams::new(vocab, 2, 8).unwrap()
    }

    #[test]
    fn test_uniform_logits_record_log_quarter() {
        let params = uniform_params(4);
        let mut rng = DetRng::derive(1, &[0]);
        let seq = generate(&params, 0, &[1, 2], &mut rng, 8, 1.0).unwrap();
        assert!(!seq.tokens.is_empty());
        for lp in &seq.behavior_logprobs {
            assert!((lp - (1.0f64 / 4.0).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn test_saturated_logits_generate_deterministically() {
        let mut params = uniform_params(4);
        // Saturate every row toward token 3, then toward the end token once
        // the context contains a 3, so generation is forced regardless of rng.
        let rows = params.table().rows();
        for r in 0..rows {
            params.table_mut().row_mut(r)[3] = 1e3;
        }
        // Context (3, 3) forces the end token.
        let row_33 = params.context_row(&[3, 3], &[]);
        params.table_mut().row_mut(row_33)[3] = 0.0;
        params.table_mut().row_mut(row_33)[EOS_TOKEN as usize] = 1e3;

        let mut seqs = Vec::new();
        for seed in 0..5 {
            let mut rng = DetRng::derive(seed, &[7]);
            seqs.push(generate(&params, 0, &[1], &mut rng, 8, 1.0).unwrap());
        }
        for s in &seqs[1..] {
            assert_eq!(s.tokens, seqs[0].tokens);
        }
        assert_eq!(seqs[0].tokens, vec![3, 3, EOS_TOKEN]);
        assert!(seqs[0].complete);
    }

    #[test]
    fn test_generate_is_deterministic_bytewise() {
        let params = PolicyParams::seeded(16, 2, 8, 99, 1.0).unwrap();
        let run = || {
            let mut rng = DetRng::derive(5, &[11, 0]);
            generate(&params, 11, &[3, 9, 4], &mut rng, 8, 1.0).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
        for (x, y) in a.behavior_logprobs.iter().zip(&b.behavior_logprobs) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn test_resume_matches_single_shot() {
        // Oracle: one uninterrupted generation from the same stream.
        for seed in 0..100u64 {
            let params = PolicyParams::seeded(16, 2, 8, seed ^ 0xabc, 1.5).unwrap();
            let prompt = [1 + (seed % 14) as u32, 2 + (seed % 13) as u32];

            let mut rng_oracle = DetRng::derive(42, &[seed, 0]);
            let oracle = generate(&params, seed, &prompt, &mut rng_oracle, 8, 1.0).unwrap();

            // Budget schedule derived from the seed: chunks of 1..=3 tokens.
            let mut rng = DetRng::derive(42, &[seed, 0]);
            let mut sched = DetRng::derive(7, &[seed]);
            let first = 1 + (sched.next_u64() % 3) as usize;
            let mut seq = generate(&params, seed, &prompt, &mut rng, first, 1.0).unwrap();
            while !seq.complete {
                let budget = 1 + (sched.next_u64() % 3) as usize;
                resume(&params, &mut seq, &mut rng, budget, 1.0).unwrap();
            }
            assert_eq!(seq, oracle, "seed {seed}");
        }
    }

    #[test]
    fn test_stream_position_tracks_draws() {
        let params = PolicyParams::seeded(16, 2, 8, 3, 1.0).unwrap();
        let mut rng = DetRng::derive(8, &[1, 0]);
        let before = rng.state();
        let seq = generate(&params, 1, &[5], &mut rng, 3, 1.0).unwrap();
        // Replaying the same number of draws lands on the same state.
        let mut replay = DetRng::derive(8, &[1, 0]);
        replay.set_state(before);
        for _ in 0..seq.stream_position() {
            replay.next_f64();
        }
        assert_eq!(replay.state(), rng.state());
    }

    #[test]
    fn test_sequence_logprob_uniform_and_single_token() {
        let params = uniform_params(4);
        let lp = sequence_logprob(&params, &[1, 2], &[3, 1, 0]).unwrap();
        assert!((lp - 3.0 * (1.0f64 / 4.0).ln()).abs() < 1e-12);

        let single = sequence_logprob(&params, &[1], &[2]).unwrap();
        let row = params.context_row(&[1], &[]);
        assert_eq!(single, params.token_logprobs(row, 1.0)[2]);
    }

    #[test]
    fn test_sequence_logprob_rejects_out_of_vocab() {
        let params = uniform_params(4);
        assert_eq!(
            sequence_logprob(&params, &[1], &[9]),
            Err(PolicyError::TokenOutOfRange { token: 9, vocab: 4 })
        );
    }

    #[test]
    fn test_halted_sequences_probabilities_sum_to_one() {
        // Enumeration oracle: generation halts at the end token or after
        // two draws, so the probabilities of all halted trajectories sum to 1.
        let params = PolicyParams::seeded(4, 2, 2, 17, 1.2).unwrap();
        let prompt = [2, 3];
        let mut total = 0.0;
        for y in halted_sequences(4, 2) {
            total += sequence_logprob(&params, &prompt, &y).unwrap().exp();
        }
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn test_grad_uniform_logits_known_entries() {
        let params = uniform_params(4);
        let grad = grad_log_prob(&params, &[1], &[2]).unwrap();
        let row = params.context_row(&[1], &[]);
        let g = grad.row(row);
        assert!((g[2] - 0.75).abs() < 1e-12);
        for i in [0usize, 1, 3] {
            assert!((g[i] + 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn test_grad_zero_steps_is_zero() {
        let params = uniform_params(4);
        let grad = grad_log_prob(&params, &[1, 2], &[]).unwrap();
        assert_eq!(grad.l2_norm(), 0.0);
    }

    #[test]
    fn test_grad_matches_central_finite_differences() {
        // Oracle: directional derivative by central differences, h = 1e-5.
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for seed in 0..100u64 {
            let params = PolicyParams::seeded(5, 2, 6, seed, 1.0).unwrap();
            let mut rng = DetRng::derive(3, &[seed]);
            let prompt = [1 + (rng.next_u64() % 4) as u32];
            let seq = generate(&params, seed, &prompt, &mut rng, 6, 1.0).unwrap();
            if seq.tokens.is_empty() {
                continue;
            }
            let grad = grad_log_prob(&params, &prompt, &seq.tokens).unwrap();

            // Random direction over the table.
            let mut dir = params.zero_gradient();
            let mut drng = DetRng::derive(91, &[seed]);
            for v in dir.data_mut() {
                *v = drng.range_f64(-1.0, 1.0);
            }
            let dot: f64 = grad
                .data()
                .iter()
                .zip(dir.data())
                .map(|(a, b)| a * b)
                .sum();

            let mut plus = params.clone();
            plus.table_mut().add_scaled(&dir, h).unwrap();
            let mut minus = params.clone();
            minus.table_mut().add_scaled(&dir, -h).unwrap();
            let fd = (sequence_logprob(&plus, &prompt, &seq.tokens).unwrap()
                - sequence_logprob(&minus, &prompt, &seq.tokens).unwrap())
                / (2.0 * h);
            let rel = (dot - fd).abs() / dot.abs().max(1e-9);
            worst = worst.max(rel);
        }
        assert!(worst <= 1e-6, "worst relative error {worst}");
    }

    #[test]
    fn test_kl_zero_against_self_and_nonnegative() {
        let params = PolicyParams::seeded(8, 2, 8, 1, 1.0).unwrap();
        let kl = kl_to_reference(&params, &params, &[1, 2], &[]).unwrap();
        assert!(kl.abs() < 1e-15);

        let mut rng = DetRng::new(9);
        for seed in 0..50u64 {
            let a = PolicyParams::seeded(8, 2, 8, seed, 2.0).unwrap();
            let b = PolicyParams::seeded(8, 2, 8, seed ^ 0xff, 2.0).unwrap();
            let prefix = [(1 + rng.next_u64() % 7) as u32];
            let kl = kl_to_reference(&a, &b, &prefix, &[]).unwrap();
            assert!(kl >= 0.0, "seed {seed}: kl {kl}");
        }
    }

    #[test]
    fn test_kl_matches_monte_carlo_within_three_sigma() {
        let a = PolicyParams::seeded(6, 2, 8, 12, 1.0).unwrap();
        let b = PolicyParams::seeded(6, 2, 8, 34, 1.0).unwrap();
        let prompt = [2u32, 4];
        let exact = kl_to_reference(&a, &b, &prompt, &[]).unwrap();

        let row = a.context_row(&prompt, &[]);
        let lp = a.token_logprobs(row, 1.0);
        let lq = b.token_logprobs(row, 1.0);
        let probs = a.token_distribution(row, 1.0);
        let n = 100_000;
        let mut rng = DetRng::new(777);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let u = rng.next_f64();
            let mut cum = 0.0;
            let mut tok = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                cum += p;
                if u < cum {
                    tok = i;
                    break;
                }
            }
            let x = lp[tok] - lq[tok];
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let var = (sum_sq / n as f64 - mean * mean).max(0.0);
        let sigma = (var / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 3.0 * sigma + 1e-12,
            "mc {mean} vs exact {exact} (sigma {sigma})"
        );
    }

    #[test]
    fn test_snapshot_roundtrip_is_bitwise() {
        let mut params = PolicyParams::seeded(16, 2, 8, 5, 1.0).unwrap();
        params.set_version(42);
        let bytes = params.to_bytes();
        assert_eq!(
            bytes.len(),
            SNAPSHOT_HEADER_LEN + 8 * params.table().data().len()
        );
        let back = PolicyParams::from_bytes(&bytes).unwrap();
        assert_eq!(back.version(), 42);
        assert_eq!(back, params);
        for (a, b) in back.table().data().iter().zip(params.table().data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Truncated payload is rejected.
        assert!(PolicyParams::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn test_context_row_padding_and_window() {
        let params = uniform_params(4);
        // Empty history: both context slots are the pad symbol (id 4).
        assert_eq!(params.context_row(&[], &[]), 4 * 5 + 4);
        // One prompt token: pad then token.
        assert_eq!(params.context_row(&[3], &[]), 4 * 5 + 3);
        // Window slides over prompt + generation.
        assert_eq!(params.context_row(&[3, 1], &[2]), 5 + 2);
    }
}
