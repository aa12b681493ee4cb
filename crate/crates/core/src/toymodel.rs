// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small deterministic decoder-only transformer.
//!
//! Byte-level tokens, learned absolute positions, and `n_layers` pre-norm
//! blocks: `x += attn(rms(x))` followed by `x += mlp(rms(x))`, with causal
//! multi-head attention and a SiLU-gated MLP of width `4 * d_model`. The
//! residual stream after each block, at the final position, is what
//! [`ToyModel::forward_cached`] returns.
//!
//! Weights are uniform in `[-0.08, 0.08]`, drawn from [`ProbeRng`]
//! (xoshiro256++ seeded via SplitMix64) in this order: token embedding,
//! position embedding, then per layer `wq, wk, wv, wo, w_gate, w_up,
//! w_down`, each row-major `(in, out)`. Norm gains start at 1. Math is `f64`
//! with sums in index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::pairgen::SentencePair;
use crate::rng::ProbeRng;
use crate::tensorio::{ActivationRun, TensorIoError};

pub const INIT_SCALE: f64 = 0.08;
const RMS_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("invalid toy config: {0}")]
    InvalidConfig(String),
    #[error("empty token sequence")]
    EmptyInput,
    #[error("sequence of {len} tokens exceeds max_context {max}")]
    TooLong { len: usize, max: usize },
    #[error("token id {0} outside the vocabulary")]
    UnknownToken(u32),
    #[error("pair {pair_id}: {source}")]
    Pair {
        pair_id: String,
        #[source]
        source: Box<ToyError>,
    },
    #[error(transparent)]
    Run(#[from] TensorIoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub seed: u64,
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub vocab_size: usize,
    pub max_context: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_layers: 4,
            d_model: 32,
            n_heads: 4,
            vocab_size: 256,
            max_context: 256,
        }
    }
}

impl ToyConfig {
    pub fn validate(&self) -> Result<(), ToyError> {
        let bad = |m: String| Err(ToyError::InvalidConfig(m));
        if self.n_layers == 0 || self.d_model == 0 || self.n_heads == 0 || self.max_context == 0 {
            return bad("all dimensions must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!(
                "n_heads {} does not divide d_model {}",
                self.n_heads, self.d_model
            ));
        }
        if self.vocab_size < 256 {
            return bad(format!(
                "vocab_size {} cannot hold byte tokens",
                self.vocab_size
            ));
        }
        Ok(())
    }
}

/// Byte-level tokenization: one id per UTF-8 byte.
pub fn tokenize(text: &str) -> Vec<u32> {
    text.bytes().map(u32::from).collect()
}

pub fn detokenize(tokens: &[u32]) -> Option<String> {
    let bytes = tokens
        .iter()
        .map(|&t| u8::try_from(t).ok())
        .collect::<Option<Vec<u8>>>()?;
    String::from_utf8(bytes).ok()
}

/// Final-position states per layer for the certain and uncertain prompt.
type PairStates = (Vec<Vec<f64>>, Vec<Vec<f64>>);

#[derive(Debug, Clone)]
struct Block {
    attn_gain: Vec<f64>,
    wq: Matrix,
    wk: Matrix,
    wv: Matrix,
    wo: Matrix,
    mlp_gain: Vec<f64>,
    w_gate: Matrix,
    w_up: Matrix,
    w_down: Matrix,
}

#[derive(Debug, Clone)]
pub struct ToyModel {
    config: ToyConfig,
    token_embedding: Matrix,
    position_embedding: Matrix,
    blocks: Vec<Block>,
}

fn random_matrix(rng: &mut ProbeRng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.uniform(-INIT_SCALE, INIT_SCALE))
}

/// `x · w` for a row vector `x`.
fn matvec(x: &[f64], w: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for (i, &xi) in x.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(w.row(i)) {
            *o += xi * wij;
        }
    }
    out
}

fn rms_norm(x: &[f64], gain: &[f64]) -> Vec<f64> {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let inv = 1.0 / (ms + RMS_EPS).sqrt();
    x.iter().zip(gain).map(|(v, g)| v * inv * g).collect()
}

fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

impl ToyModel {
    pub fn build(config: ToyConfig) -> Result<Self, ToyError> {
        config.validate()?;
        let d = config.d_model;
        let hidden = 4 * d;
        let mut rng = ProbeRng::new(config.seed);
        let token_embedding = random_matrix(&mut rng, config.vocab_size, d);
        let position_embedding = random_matrix(&mut rng, config.max_context, d);
        let blocks = (0..config.n_layers)
            .map(|_| Block {
                attn_gain: vec![1.0; d],
                wq: random_matrix(&mut rng, d, d),
                wk: random_matrix(&mut rng, d, d),
                wv: random_matrix(&mut rng, d, d),
                wo: random_matrix(&mut rng, d, d),
                mlp_gain: vec![1.0; d],
                w_gate: random_matrix(&mut rng, d, hidden),
                w_up: random_matrix(&mut rng, d, hidden),
                w_down: random_matrix(&mut rng, hidden, d),
            })
            .collect();
        Ok(Self {
            config,
            token_embedding,
            position_embedding,
            blocks,
        })
    }

    pub fn config(&self) -> &ToyConfig {
        &self.config
    }

    pub fn model_id(&self) -> String {
        format!(
            "toy:{}:{}x{}",
            self.config.seed, self.config.n_layers, self.config.d_model
        )
    }

    /// FNV-1a over the bit patterns of every weight, in initialization order.
    pub fn weight_checksum(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |vals: &[f64]| {
            for v in vals {
                for b in v.to_bits().to_le_bytes() {
                    hash ^= u64::from(b);
                    hash = hash.wrapping_mul(0x0100_0000_01b3);
                }
            }
        };
        feed(self.token_embedding.as_slice());
        feed(self.position_embedding.as_slice());
        for b in &self.blocks {
            feed(&b.attn_gain);
            for w in [&b.wq, &b.wk, &b.wv, &b.wo] {
                feed(w.as_slice());
            }
            feed(&b.mlp_gain);
            for w in [&b.w_gate, &b.w_up, &b.w_down] {
                feed(w.as_slice());
            }
        }
        hash
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<(), ToyError> {
        if tokens.is_empty() {
            return Err(ToyError::EmptyInput);
        }
        if tokens.len() > self.config.max_context {
            return Err(ToyError::TooLong {
                len: tokens.len(),
                max: self.config.max_context,
            });
        }
        if let Some(&t) = tokens.iter().find(|&&t| t as usize >= self.config.vocab_size) {
            return Err(ToyError::UnknownToken(t));
        }
        Ok(())
    }

    /// Residual stream entering block 0, one row per position.
    pub fn embed(&self, tokens: &[u32]) -> Result<Matrix, ToyError> {
        self.check_tokens(tokens)?;
        let d = self.config.d_model;
        Ok(Matrix::from_fn(tokens.len(), d, |t, j| {
            self.token_embedding.get(tokens[t] as usize, j) + self.position_embedding.get(t, j)
        }))
    }

    /// Applies block `layer` to a full residual stream.
    #[allow(clippy::needless_range_loop)]
    pub fn block_forward(&self, layer: usize, resid: &Matrix) -> Matrix {
        let block = &self.blocks[layer];
        let (t_len, d) = resid.shape();
        let n_heads = self.config.n_heads;
        let dh = d / n_heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let normed: Vec<Vec<f64>> = resid.iter_rows().map(|r| rms_norm(r, &block.attn_gain)).collect();
        let q: Vec<Vec<f64>> = normed.iter().map(|h| matvec(h, &block.wq)).collect();
        let k: Vec<Vec<f64>> = normed.iter().map(|h| matvec(h, &block.wk)).collect();
        let v: Vec<Vec<f64>> = normed.iter().map(|h| matvec(h, &block.wv)).collect();

        let mut out = resid.clone();
        let mut scores = vec![0.0; t_len];
        for t in 0..t_len {
            let mut mixed = vec![0.0; d];
            for h in 0..n_heads {
                let span = h * dh..(h + 1) * dh;
                let mut max = f64::NEG_INFINITY;
                for s in 0..=t {
                    let sc: f64 = q[t][span.clone()]
                        .iter()
                        .zip(&k[s][span.clone()])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        * scale;
                    scores[s] = sc;
                    max = max.max(sc);
                }
                let mut denom = 0.0;
                for s in scores.iter_mut().take(t + 1) {
                    *s = (*s - max).exp();
                    denom += *s;
                }
                for s in 0..=t {
                    let w = scores[s] / denom;
                    for (m, &vv) in mixed[span.clone()].iter_mut().zip(&v[s][span.clone()]) {
                        *m += w * vv;
                    }
                }
            }
            let attn = matvec(&mixed, &block.wo);
            for (o, a) in out.row_mut(t).iter_mut().zip(attn) {
                *o += a;
            }
        }

        for t in 0..t_len {
            let h = rms_norm(out.row(t), &block.mlp_gain);
            let gate = matvec(&h, &block.w_gate);
            let up = matvec(&h, &block.w_up);
            let act: Vec<f64> = gate.iter().zip(&up).map(|(g, u)| silu(*g) * u).collect();
            let down = matvec(&act, &block.w_down);
            for (o, m) in out.row_mut(t).iter_mut().zip(down) {
                *o += m;
            }
        }
        out
    }

    /// Residual stream after every block, all positions.
    pub fn forward_all(&self, tokens: &[u32]) -> Result<Vec<Matrix>, ToyError> {
        let mut resid = self.embed(tokens)?;
        let mut states = Vec::with_capacity(self.blocks.len());
        for layer in 0..self.blocks.len() {
            resid = self.block_forward(layer, &resid);
            states.push(resid.clone());
        }
        Ok(states)
    }

    /// Final-position residual after each block, one vector per layer.
    pub fn forward_cached(&self, tokens: &[u32]) -> Result<Vec<Vec<f64>>, ToyError> {
        Ok(self
            .forward_all(tokens)?
            .into_iter()
            .map(|m| m.row(m.rows() - 1).to_vec())
            .collect())
    }

    /// Runs both prompt variants of every pair and packs the final-token
    /// activations into a run, rows in pair order.
    pub fn run_pairs(&self, pairs: &[SentencePair]) -> Result<ActivationRun, ToyError> {
        let per_pair = pairs
            .par_iter()
            .map(|p| {
                let wrap = |source| ToyError::Pair {
                    pair_id: p.pair_id.clone(),
                    source: Box::new(source),
                };
                let c = self.forward_cached(&tokenize(&p.prompt_certain)).map_err(wrap)?;
                let u = self.forward_cached(&tokenize(&p.prompt_uncertain)).map_err(wrap)?;
                Ok((c, u))
            })
            .collect::<Result<Vec<_>, ToyError>>()?;

        let n = pairs.len();
        let d = self.config.d_model;
        let gather = |pick: &dyn Fn(&PairStates) -> &Vec<Vec<f64>>| {
            (0..self.config.n_layers)
                .map(|l| Matrix::from_fn(n, d, |i, j| pick(&per_pair[i])[l][j] as f32))
                .collect::<Vec<_>>()
        };
        let certain = gather(&|x| &x.0);
        let uncertain = gather(&|x| &x.1);
        let ids = pairs.iter().map(|p| p.pair_id.clone()).collect();
        Ok(ActivationRun::new(self.model_id(), ids, certain, uncertain)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ToyModel {
        ToyModel::build(ToyConfig::default()).unwrap()
    }

    #[test]
    fn tokenizer_is_bytewise() {
        assert_eq!(tokenize("A"), vec![65]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("AB"), vec![65, 66]);
        assert_eq!(detokenize(&tokenize("héllo")).unwrap(), "héllo");
    }

    #[test]
    fn seeds_control_weights() {
        let a = ToyModel::build(ToyConfig::default()).unwrap();
        let b = ToyModel::build(ToyConfig::default()).unwrap();
        assert_eq!(a.weight_checksum(), b.weight_checksum());
        let c = ToyModel::build(ToyConfig { seed: 1, ..Default::default() }).unwrap();
        assert_ne!(a.weight_checksum(), c.weight_checksum());
    }

    #[test]
    fn config_errors() {
        let cfg = ToyConfig { n_heads: 5, ..Default::default() };
        assert!(matches!(ToyModel::build(cfg), Err(ToyError::InvalidConfig(_))));
        let cfg = ToyConfig { n_layers: 0, ..Default::default() };
        assert!(ToyModel::build(cfg).is_err());
    }

    #[test]
    fn input_length_is_checked() {
        let m = small();
        assert!(matches!(m.forward_cached(&[]), Err(ToyError::EmptyInput)));
        let long = vec![65; 257];
        assert!(matches!(m.forward_cached(&long), Err(ToyError::TooLong { len: 257, max: 256 })));
        assert_eq!(m.forward_cached(&[65; 256]).unwrap().len(), 4);
    }

    #[test]
    fn forward_is_pure() {
        let m = small();
        let toks = tokenize("We [MASK] act.");
        let a = m.forward_cached(&toks).unwrap();
        let b = m.forward_cached(&toks).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|v| v.len() == 32));
    }

    #[test]
    fn model_id_format() {
        assert_eq!(small().model_id(), "toy:0:4x32");
    }
}
