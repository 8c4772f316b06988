//! Explicit timestamp tokens: literal time anchors like `<5.1s>` inserted
//! before each frame's token block.

use super::GroundingError;
use crate::toyvlm::{Token, TokenKind, TokenSequence};

/// Rounds to one decimal place, half away from zero (for the non-negative
/// times used here, half up). `0.25` renders as `0.3`.
pub fn round_to_tenth(t_s: f64) -> f64 {
    debug_assert!(t_s >= 0.0, "timestamps are non-negative");
    (t_s * 10.0 + 0.5).floor() / 10.0
}

/// A time anchor with its literal surface form. The stored time is
/// quantized to the surface precision, so parse(render(t)) round-trips.
#[derive(Debug, Clone, PartialEq)]
pub struct TimestampToken {
    timestamp_s: f64,
    surface: String,
}

impl TimestampToken {
    pub fn new(t_s: f64) -> Self {
        let quantized = round_to_tenth(t_s);
        TimestampToken {
            timestamp_s: quantized,
            surface: format!("<{quantized:.1}s>"),
        }
    }

    pub fn parse(surface: &str) -> Result<Self, GroundingError> {
        let bad = || GroundingError::BadTimestampSurface(surface.to_string());
        let inner = surface
            .strip_prefix('<')
            .and_then(|s| s.strip_suffix("s>"))
            .ok_or_else(bad)?;
        let value: f64 = inner.parse().map_err(|_| bad())?;
        if !value.is_finite() || value < 0.0 {
            return Err(bad());
        }
        let token = TimestampToken::new(value);
        if token.surface != surface {
            // Enforce the canonical one-decimal rendering.
            return Err(bad());
        }
        Ok(token)
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_s
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn to_token(&self) -> Token {
        Token::timestamp(self.timestamp_s)
    }
}

/// Inserts one timestamp token before each frame's block of video tokens,
/// anchored at `frame_index / fps`. Non-video tokens pass through; output
/// length grows by exactly the number of frame blocks.
pub fn interleave_timestamps(video_tokens: &TokenSequence, fps: f64) -> TokenSequence {
    assert!(fps > 0.0, "fps must be positive");
    let mut out = Vec::with_capacity(video_tokens.len());
    let mut current_frame: Option<u32> = None;
    for tok in &video_tokens.tokens {
        if tok.kind == TokenKind::Video {
            let frame = tok.frame_index.expect("video token carries frame_index");
            if current_frame != Some(frame) {
                let anchor = TimestampToken::new(frame as f64 / fps);
                out.push(anchor.to_token());
                current_frame = Some(frame);
            }
        } else {
            current_frame = None;
        }
        out.push(tok.clone());
    }
    TokenSequence::new(out)
}
