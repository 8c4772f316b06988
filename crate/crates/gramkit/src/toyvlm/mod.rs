//! A deterministic, randomly initialized, desk-scale autoregressive
//! multimodal transformer.
//!
//! The model is untrained on purpose: the grounding mechanism it hosts is
//! training-free, so everything that matters here is mechanism behaviour —
//! causality, positional structure, attention bookkeeping, reproducibility —
//! not output quality. Weights derive entirely from the config seed; there
//! are no weight files.

mod model;
mod positions;
mod tokenizer;
mod video;

pub(crate) use model::argmax_generable;
pub use model::{
    sinusoidal_time_encoding, AttentionTensor, DecodeResult, DetailedForward, ForwardOutput, Model,
    ModelConfig,
};
pub use positions::{assign_positions, assign_positions_with_next};
pub use tokenizer::{detokenize, detokenize_bytes, tokenize, tokenize_bytes};
pub use video::FrameTensor;

use thiserror::Error;

/// First id above the 256 byte tokens.
pub const BYTE_VOCAB: u32 = 256;
pub const BOS_ID: u32 = 256;
pub const EOS_ID: u32 = 257;
/// Placeholder id carried by video tokens; their embeddings come from the
/// patch projection, never from the vocabulary table.
pub const VIDEO_ID: u32 = 258;
pub const TIMESTAMP_ID: u32 = 259;
/// Ids reserved above the byte range (specials plus headroom).
pub const RESERVED_SPECIALS: u32 = 32;

#[derive(Debug, Error)]
pub enum VlmError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("{got} frames exceed the configured maximum of {max}")]
    TooManyFrames { got: usize, max: usize },
    #[error("bad frame dimensions: {0}")]
    BadDimensions(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Text,
    Video,
    Timestamp,
    Control,
}

/// Rotary position triplet. Text-like tokens carry equal components (the
/// 3D scheme degenerates to 1D); video tokens carry a per-frame temporal
/// index plus their patch-grid coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PositionIndex {
    pub t: u32,
    pub h: u32,
    pub w: u32,
}

impl PositionIndex {
    pub fn uniform(p: u32) -> Self {
        PositionIndex { t: p, h: p, w: p }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub id: u32,
    pub kind: TokenKind,
    pub pos: PositionIndex,
    pub frame_index: Option<u32>,
    /// (row, col) within the patch grid, for video tokens.
    pub grid_pos: Option<(u32, u32)>,
    pub timestamp_s: Option<f64>,
    /// Dense embedding for tokens that are not vocabulary entries.
    pub embedding: Option<Vec<f32>>,
}

impl Token {
    pub fn text(id: u32) -> Self {
        debug_assert!(id < BYTE_VOCAB);
        Token {
            id,
            kind: TokenKind::Text,
            pos: PositionIndex::default(),
            frame_index: None,
            grid_pos: None,
            timestamp_s: None,
            embedding: None,
        }
    }

    pub fn control(id: u32) -> Self {
        Token {
            id,
            kind: TokenKind::Control,
            pos: PositionIndex::default(),
            frame_index: None,
            grid_pos: None,
            timestamp_s: None,
            embedding: None,
        }
    }

    pub fn video(frame_index: u32, row: u32, col: u32, embedding: Vec<f32>) -> Self {
        Token {
            id: VIDEO_ID,
            kind: TokenKind::Video,
            pos: PositionIndex::default(),
            frame_index: Some(frame_index),
            grid_pos: Some((row, col)),
            timestamp_s: None,
            embedding: Some(embedding),
        }
    }

    pub fn timestamp(timestamp_s: f64) -> Self {
        Token {
            id: TIMESTAMP_ID,
            kind: TokenKind::Timestamp,
            pos: PositionIndex::default(),
            frame_index: None,
            grid_pos: None,
            timestamp_s: Some(timestamp_s),
            embedding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenSequence {
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(tokens: Vec<Token>) -> Self {
        TokenSequence { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn push(&mut self, token: Token) {
        self.tokens.push(token);
    }

    pub fn extend(&mut self, other: TokenSequence) {
        self.tokens.extend(other.tokens);
    }

    /// Sequence positions of every video token, ascending.
    pub fn video_positions(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| t.kind == TokenKind::Video)
            .map(|(i, _)| i)
            .collect()
    }
}
