//! Attention-guided grounded decoding: timestamp interleaving, reasoning-step
//! boundary detection, cross-layer/head attention aggregation, top-N video
//! token selection, and the grounded greedy loop.

mod decode;
mod timestamp;

pub use decode::{
    aggregate_attention, grounded_decode, is_step_boundary, select_top_n, BoundaryRule,
    GroundedDecodeResult, GroundingConfig, StepGrounding,
};
pub use timestamp::{interleave_timestamps, round_to_tenth, TimestampToken};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("prompt contains no video tokens to ground on")]
    NoVideoTokens,
    #[error("video position {position} outside the attended range of {len} keys")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("not a timestamp token surface: {0:?}")]
    BadTimestampSurface(String),
}
