//! Pre-norm decoder-only transformer with 3-component rotary attention and
//! per-layer/per-head attention recording.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    assign_positions_with_next, FrameTensor, PositionIndex, Token, TokenKind, TokenSequence,
    VlmError, BYTE_VOCAB, EOS_ID, RESERVED_SPECIALS,
};
use crate::datamodel::VideoRef;

const LN_EPS: f64 = 1e-5;
const ROTARY_BASE: f64 = 10_000.0;
const PATCH_PROJECTION_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    /// (rows, cols) of the per-frame patch grid.
    pub patch_grid: (usize, usize),
    pub max_frames: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_layers: 4,
            n_heads: 4,
            d_model: 64,
            d_ff: 256,
            vocab_size: (BYTE_VOCAB + RESERVED_SPECIALS) as usize,
            patch_grid: (4, 4),
            max_frames: 32,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), VlmError> {
        if self.n_layers == 0 || self.n_heads == 0 || self.d_model == 0 || self.d_ff == 0 {
            return Err(VlmError::InvalidConfig("all counts must be >= 1".into()));
        }
        if self.patch_grid.0 == 0 || self.patch_grid.1 == 0 || self.max_frames == 0 {
            return Err(VlmError::InvalidConfig("all counts must be >= 1".into()));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(VlmError::InvalidConfig(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if !(self.d_model / self.n_heads).is_multiple_of(2) {
            return Err(VlmError::InvalidConfig(
                "head dimension must be even for rotary pairs".into(),
            ));
        }
        if self.vocab_size < (BYTE_VOCAB + RESERVED_SPECIALS) as usize {
            return Err(VlmError::InvalidConfig(format!(
                "vocab_size {} below byte vocab plus reserved specials ({})",
                self.vocab_size,
                BYTE_VOCAB + RESERVED_SPECIALS
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn from_json_str(text: &str) -> Result<Self, VlmError> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| VlmError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, VlmError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| VlmError::InvalidConfig(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }
}

/// Attention record for a single query token: `weights[layer][head][key]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTensor {
    pub weights: Vec<Vec<Vec<f64>>>,
}

impl AttentionTensor {
    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_heads(&self) -> usize {
        self.weights.first().map_or(0, |l| l.len())
    }

    pub fn key_len(&self) -> usize {
        self.weights
            .first()
            .and_then(|l| l.first())
            .map_or(0, |h| h.len())
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .flat_map(|layer| layer.iter().map(|row| row.as_slice()))
    }
}

/// Last-position logits plus the attention rows of that query.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Vec<f32>,
    pub attention: AttentionTensor,
}

/// Everything the analysis paths need: per-position logits, post-softmax
/// attention and pre-softmax scores as `[layer][head][query][key]`.
#[derive(Debug, Clone)]
pub struct DetailedForward {
    pub logits: Vec<Vec<f32>>,
    pub attention: Vec<Vec<Vec<Vec<f64>>>>,
    pub scores: Vec<Vec<Vec<Vec<f32>>>>,
}

/// Greedy decode session output. `sequence` is the committed token stream
/// (prompt plus generated text tokens); one attention record is kept per
/// prediction step.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub sequence: TokenSequence,
    pub prompt_len: usize,
    pub step_attention: Vec<AttentionTensor>,
}

impl DecodeResult {
    pub fn generated(&self) -> &[Token] {
        &self.sequence.tokens[self.prompt_len..]
    }

    pub fn answer_text(&self) -> String {
        super::detokenize(self.generated())
    }
}

struct LayerWeights {
    wq: Vec<f32>,
    wk: Vec<f32>,
    wv: Vec<f32>,
    wo: Vec<f32>,
    ln1_g: Vec<f32>,
    ln1_b: Vec<f32>,
    w_up: Vec<f32>,
    w_down: Vec<f32>,
    ln2_g: Vec<f32>,
    ln2_b: Vec<f32>,
}

struct Weights {
    embed: Vec<f32>,
    layers: Vec<LayerWeights>,
    lnf_g: Vec<f32>,
    lnf_b: Vec<f32>,
    lm_head: Vec<f32>,
}

/// Immutable after construction; concurrent decodes on one model are safe.
pub struct Model {
    cfg: ModelConfig,
    weights: Weights,
    /// Per-pair rotary frequencies, length head_dim/2.
    inv_freqs: Vec<f64>,
    /// Pair counts assigned to the (t, h, w) components, in order.
    sections: [usize; 3],
}

impl Model {
    pub fn new(cfg: ModelConfig) -> Result<Self, VlmError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let normal = Normal::new(0.0f32, 0.02).expect("valid stddev");
        let mut mat = |rows: usize, cols: usize| -> Vec<f32> {
            (0..rows * cols).map(|_| normal.sample(&mut rng)).collect()
        };

        let d = cfg.d_model;
        let embed = mat(cfg.vocab_size, d);
        let mut layers = Vec::with_capacity(cfg.n_layers);
        for _ in 0..cfg.n_layers {
            layers.push(LayerWeights {
                wq: mat(d, d),
                wk: mat(d, d),
                wv: mat(d, d),
                wo: mat(d, d),
                ln1_g: vec![1.0; d],
                ln1_b: vec![0.0; d],
                w_up: mat(cfg.d_ff, d),
                w_down: mat(d, cfg.d_ff),
                ln2_g: vec![1.0; d],
                ln2_b: vec![0.0; d],
            });
        }
        let lm_head = mat(cfg.vocab_size, d);

        let n_pairs = cfg.head_dim() / 2;
        let hw = n_pairs / 3;
        let sections = [n_pairs - 2 * hw, hw, hw];
        let inv_freqs = (0..n_pairs)
            .map(|j| ROTARY_BASE.powf(-2.0 * j as f64 / cfg.head_dim() as f64))
            .collect();

        Ok(Model {
            cfg,
            weights: Weights {
                embed,
                layers,
                lnf_g: vec![1.0; d],
                lnf_b: vec![0.0; d],
                lm_head,
            },
            inv_freqs,
            sections,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// Converts synthetic frames into video tokens: one token per patch of
    /// the configured grid, embedded by a seeded linear projection of the
    /// patch's per-channel means.
    pub fn encode_video(
        &self,
        _video: &VideoRef,
        frames: &[FrameTensor],
    ) -> Result<TokenSequence, VlmError> {
        if frames.len() > self.cfg.max_frames {
            return Err(VlmError::TooManyFrames {
                got: frames.len(),
                max: self.cfg.max_frames,
            });
        }
        let (rows, cols) = self.cfg.patch_grid;
        let channels = match frames.first() {
            Some(f) => f.channels,
            None => return Ok(TokenSequence::default()),
        };
        for (i, f) in frames.iter().enumerate() {
            if f.channels == 0 || f.channels != channels {
                return Err(VlmError::BadDimensions(format!(
                    "frame {i}: inconsistent channel count"
                )));
            }
            if f.height % rows != 0 || f.width % cols != 0 {
                return Err(VlmError::BadDimensions(format!(
                    "frame {i}: {}x{} not divisible by the {rows}x{cols} patch grid",
                    f.height, f.width
                )));
            }
            if f.height == 0 || f.width == 0 {
                return Err(VlmError::BadDimensions(format!("frame {i}: empty frame")));
            }
        }

        let proj = self.patch_projection(channels);
        let mut tokens = Vec::with_capacity(frames.len() * rows * cols);
        for (f_idx, frame) in frames.iter().enumerate() {
            for r in 0..rows {
                for c in 0..cols {
                    let means = frame.patch_channel_means(rows, cols, r, c);
                    let emb = matvec(&proj, &means, self.cfg.d_model, channels);
                    tokens.push(Token::video(f_idx as u32, r as u32, c as u32, emb));
                }
            }
        }
        Ok(TokenSequence::new(tokens))
    }

    /// Fixed projection for a given channel count, derived from the model
    /// seed so identical configs embed identical frames identically.
    fn patch_projection(&self, channels: usize) -> Vec<f32> {
        let mut rng =
            ChaCha8Rng::seed_from_u64(self.cfg.seed ^ PATCH_PROJECTION_SALT ^ channels as u64);
        let normal = Normal::new(0.0f32, 1.0 / (channels as f32).sqrt()).expect("valid stddev");
        (0..self.cfg.d_model * channels)
            .map(|_| normal.sample(&mut rng))
            .collect()
    }

    fn embed_token(&self, tok: &Token) -> Vec<f32> {
        if let Some(e) = &tok.embedding {
            assert_eq!(e.len(), self.cfg.d_model, "carried embedding width");
            return e.clone();
        }
        let id = tok.id as usize;
        assert!(id < self.cfg.vocab_size, "token id within vocab");
        let d = self.cfg.d_model;
        let mut v = self.weights.embed[id * d..(id + 1) * d].to_vec();
        if tok.kind == TokenKind::Timestamp {
            let ts = tok.timestamp_s.expect("timestamp token carries a time");
            for (a, b) in v.iter_mut().zip(sinusoidal_time_encoding(ts, d)) {
                *a += b;
            }
        }
        v
    }

    fn apply_rotary(&self, v: &mut [f32], pos: &PositionIndex) {
        let comps = [pos.t as f64, pos.h as f64, pos.w as f64];
        let mut pair = 0;
        for (sec, &comp) in self.sections.iter().zip(&comps) {
            for _ in 0..*sec {
                let angle = self.inv_freqs[pair] * comp;
                let (sin, cos) = (angle.sin() as f32, angle.cos() as f32);
                let (a, b) = (v[2 * pair], v[2 * pair + 1]);
                v[2 * pair] = a * cos - b * sin;
                v[2 * pair + 1] = a * sin + b * cos;
                pair += 1;
            }
        }
    }

    /// Causal forward pass over the whole sequence, returning last-position
    /// logits and the last query's attention rows. Panics on an empty
    /// sequence.
    pub fn forward(&self, seq: &TokenSequence) -> ForwardOutput {
        let detail = self.run(seq, false);
        let last = seq.len() - 1;
        let attention = AttentionTensor {
            weights: detail
                .attention
                .into_iter()
                .map(|layer| {
                    layer
                        .into_iter()
                        .map(|mut head| head.pop().expect("row"))
                        .collect()
                })
                .collect(),
        };
        ForwardOutput {
            logits: detail.logits.into_iter().nth(last).expect("last logits"),
            attention,
        }
    }

    /// Full forward with per-position logits and complete attention and
    /// score tensors; intended for analysis and tests.
    pub fn forward_detailed(&self, seq: &TokenSequence) -> DetailedForward {
        self.run(seq, true)
    }

    fn run(&self, seq: &TokenSequence, full_rows: bool) -> DetailedForward {
        assert!(!seq.is_empty(), "forward needs a non-empty sequence");
        let n = seq.len();
        let d = self.cfg.d_model;
        let hd = self.cfg.head_dim();
        let scale = 1.0 / (hd as f32).sqrt();

        let mut x: Vec<Vec<f32>> = seq.tokens.iter().map(|t| self.embed_token(t)).collect();
        let mut att_all = Vec::with_capacity(self.cfg.n_layers);
        let mut scores_all = Vec::with_capacity(self.cfg.n_layers);

        for layer in &self.weights.layers {
            let normed: Vec<Vec<f32>> = x
                .iter()
                .map(|xi| layer_norm(xi, &layer.ln1_g, &layer.ln1_b))
                .collect();
            let mut qs = Vec::with_capacity(n);
            let mut ks = Vec::with_capacity(n);
            let mut vs = Vec::with_capacity(n);
            for (i, ni) in normed.iter().enumerate() {
                let mut q = matvec(&layer.wq, ni, d, d);
                let mut k = matvec(&layer.wk, ni, d, d);
                let v = matvec(&layer.wv, ni, d, d);
                for h in 0..self.cfg.n_heads {
                    self.apply_rotary(&mut q[h * hd..(h + 1) * hd], &seq.tokens[i].pos);
                    self.apply_rotary(&mut k[h * hd..(h + 1) * hd], &seq.tokens[i].pos);
                }
                qs.push(q);
                ks.push(k);
                vs.push(v);
            }

            let mut att_layer: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.cfg.n_heads];
            let mut score_layer: Vec<Vec<Vec<f32>>> = vec![Vec::new(); self.cfg.n_heads];
            let mut attn_out: Vec<Vec<f32>> = vec![vec![0.0; d]; n];
            for h in 0..self.cfg.n_heads {
                let lo = h * hd;
                for i in 0..n {
                    let mut scores = Vec::with_capacity(i + 1);
                    for kj in ks.iter().take(i + 1) {
                        let mut dot = 0.0f32;
                        for t in 0..hd {
                            dot += qs[i][lo + t] * kj[lo + t];
                        }
                        scores.push(dot * scale);
                    }
                    let weights = softmax_f64(&scores);
                    for t in 0..hd {
                        let mut acc = 0.0f64;
                        for (j, w) in weights.iter().enumerate() {
                            acc += w * vs[j][lo + t] as f64;
                        }
                        attn_out[i][lo + t] = acc as f32;
                    }
                    let keep = full_rows || i == n - 1;
                    if keep {
                        att_layer[h].push(weights);
                        score_layer[h].push(scores);
                    }
                }
            }
            att_all.push(att_layer);
            scores_all.push(score_layer);

            for i in 0..n {
                let proj = matvec(&layer.wo, &attn_out[i], d, d);
                for t in 0..d {
                    x[i][t] += proj[t];
                }
            }

            for xi in x.iter_mut() {
                let ni = layer_norm(xi, &layer.ln2_g, &layer.ln2_b);
                let up = matvec(&layer.w_up, &ni, self.cfg.d_ff, d);
                let act: Vec<f32> = up.into_iter().map(gelu).collect();
                let down = matvec(&layer.w_down, &act, d, self.cfg.d_ff);
                for t in 0..d {
                    xi[t] += down[t];
                }
            }
        }

        let logits: Vec<Vec<f32>> = x
            .iter()
            .map(|xi| {
                let nf = layer_norm(xi, &self.weights.lnf_g, &self.weights.lnf_b);
                matvec(&self.weights.lm_head, &nf, self.cfg.vocab_size, d)
            })
            .collect();

        DetailedForward {
            logits,
            attention: att_all,
            scores: scores_all,
        }
    }

    /// Greedy continuation: repeatedly appends the argmax over generable
    /// ids (bytes plus the end token; ties go to the lowest id) until the
    /// end token or `max_new` tokens. The prompt gets positions assigned
    /// first; generated tokens continue the 1D counter.
    pub fn greedy_decode(&self, prompt: &TokenSequence, max_new: usize) -> DecodeResult {
        assert!(max_new >= 1, "greedy_decode requires max_new >= 1");
        let (mut seq, mut next_pos) = assign_positions_with_next(prompt);
        let prompt_len = seq.len();
        let mut step_attention = Vec::new();
        for _ in 0..max_new {
            let out = self.forward(&seq);
            step_attention.push(out.attention);
            let next = argmax_generable(&out.logits);
            if next == EOS_ID {
                break;
            }
            let mut tok = Token::text(next);
            tok.pos = PositionIndex::uniform(next_pos);
            next_pos += 1;
            seq.push(tok);
        }
        DecodeResult {
            sequence: seq,
            prompt_len,
            step_attention,
        }
    }
}

/// Argmax over the ids the decoder may emit: raw bytes and the end token.
/// Control/video/timestamp ids never enter the generated stream.
pub(crate) fn argmax_generable(logits: &[f32]) -> u32 {
    let mut best = 0u32;
    let mut best_val = logits[0];
    for id in 1..BYTE_VOCAB {
        let v = logits[id as usize];
        if v > best_val {
            best = id;
            best_val = v;
        }
    }
    if logits[EOS_ID as usize] > best_val {
        best = EOS_ID;
    }
    best
}

/// Sinusoidal encoding of an absolute time in seconds; gives timestamp
/// tokens value-dependent embeddings on top of their shared vocabulary row.
pub fn sinusoidal_time_encoding(t_s: f64, d: usize) -> Vec<f32> {
    let mut v = Vec::with_capacity(d);
    for i in 0..d / 2 {
        let freq = ROTARY_BASE.powf(-2.0 * i as f64 / d as f64);
        v.push((t_s * freq).sin() as f32);
        v.push((t_s * freq).cos() as f32);
    }
    if d % 2 == 1 {
        v.push(0.0);
    }
    v
}

fn layer_norm(x: &[f32], gamma: &[f32], beta: &[f32]) -> Vec<f32> {
    let n = x.len() as f64;
    let mean = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = x.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let denom = (var + LN_EPS).sqrt();
    x.iter()
        .enumerate()
        .map(|(i, &v)| (((v as f64 - mean) / denom) as f32) * gamma[i] + beta[i])
        .collect()
}

fn softmax_f64(scores: &[f32]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = scores.iter().map(|&s| (s as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn gelu(x: f32) -> f32 {
    let x64 = x as f64;
    let inner = (2.0 / std::f64::consts::PI).sqrt() * (x64 + 0.044715 * x64.powi(3));
    (0.5 * x64 * (1.0 + inner.tanh())) as f32
}

/// Row-major (rows x cols) matrix times a cols-vector.
fn matvec(m: &[f32], x: &[f32], rows: usize, cols: usize) -> Vec<f32> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut out = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = &m[r * cols..(r + 1) * cols];
        let mut acc = 0.0f32;
        for (a, b) in row.iter().zip(x) {
            acc += a * b;
        }
        out.push(acc);
    }
    out
}
