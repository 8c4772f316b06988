//! Rotary position assignment across mixed text/video sequences.
//!
//! A single 1D counter runs along the sequence. Every non-video token takes
//! the counter for all three components and advances it by one. A maximal
//! run of video tokens forms a span: each token in the span gets
//! `t = span_base + frame ordinal`, `h`/`w` from its patch-grid coordinates,
//! and the counter advances by one per frame in the span — the temporal
//! index increments per frame, not per token.

use super::{PositionIndex, Token, TokenKind, TokenSequence};

pub fn assign_positions(seq: &TokenSequence) -> TokenSequence {
    assign_positions_with_next(seq).0
}

/// Also returns the running position after the last token, which is where
/// generated continuation tokens pick up.
pub fn assign_positions_with_next(seq: &TokenSequence) -> (TokenSequence, u32) {
    let mut tokens: Vec<Token> = seq.tokens.clone();
    let mut pos: u32 = 0;
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != TokenKind::Video {
            tokens[i].pos = PositionIndex::uniform(pos);
            pos += 1;
            i += 1;
            continue;
        }
        // Collect the maximal video span starting here.
        let span_base = pos;
        let mut span_end = i;
        while span_end < tokens.len() && tokens[span_end].kind == TokenKind::Video {
            span_end += 1;
        }
        // Frame ordinal = rank of the frame_index by first appearance.
        let mut frame_order: Vec<u32> = Vec::new();
        for tok in &mut tokens[i..span_end] {
            let f = tok.frame_index.expect("video token carries frame_index");
            let ordinal = match frame_order.iter().position(|&x| x == f) {
                Some(k) => k as u32,
                None => {
                    frame_order.push(f);
                    (frame_order.len() - 1) as u32
                }
            };
            let (row, col) = tok.grid_pos.expect("video token carries grid_pos");
            tok.pos = PositionIndex {
                t: span_base + ordinal,
                h: row,
                w: col,
            };
        }
        pos = span_base + frame_order.len() as u32;
        i = span_end;
    }
    (TokenSequence::new(tokens), pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toyvlm::tokenize;

    fn frame_tokens(frame: u32, rows: u32, cols: u32) -> Vec<Token> {
        let mut v = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                v.push(Token::video(frame, r, c, vec![0.0]));
            }
        }
        v
    }

    #[test]
    fn pure_text_counts_up_with_equal_components() {
        let seq = tokenize("hello");
        let (assigned, next) = assign_positions_with_next(&seq);
        for (i, tok) in assigned.tokens.iter().enumerate() {
            assert_eq!(tok.pos, PositionIndex::uniform(i as u32));
        }
        assert_eq!(next, 5);
    }

    #[test]
    fn single_frame_span_shares_the_insertion_position() {
        let mut seq = tokenize("ab");
        seq.tokens.extend(frame_tokens(0, 2, 2));
        let assigned = assign_positions(&seq);
        for tok in &assigned.tokens[2..] {
            assert_eq!(tok.pos.t, 2);
            assert!(tok.pos.h < 2 && tok.pos.w < 2);
        }
    }

    #[test]
    fn temporal_component_increments_per_frame() {
        let mut seq = TokenSequence::default();
        seq.tokens.extend(frame_tokens(0, 2, 2));
        seq.tokens.extend(frame_tokens(1, 2, 2));
        let (assigned, next) = assign_positions_with_next(&seq);
        assert_eq!(assigned.tokens[0].pos.t + 1, assigned.tokens[4].pos.t);
        assert_eq!(next, 2);
    }

    #[test]
    fn text_after_video_resumes_the_counter() {
        let mut seq = tokenize("ab");
        seq.tokens.extend(frame_tokens(0, 2, 2));
        seq.tokens.extend(frame_tokens(1, 2, 2));
        seq.tokens.extend(tokenize("c").tokens);
        let assigned = assign_positions(&seq);
        let last = assigned.tokens.last().unwrap();
        assert_eq!(last.pos, PositionIndex::uniform(4));
    }
}
