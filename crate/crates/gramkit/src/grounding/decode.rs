//! Step-wise grounded decoding.
//!
//! The greedy loop is interrupted at reasoning-step boundaries: the attention
//! of the last committed token is averaged over every layer and head, the
//! top-N most attended video tokens are selected, and their embeddings are
//! appended (with their original position indices) to the decoder input for
//! the following predictions. Grounding tokens steer computation only; the
//! emitted text stream never contains them.

use std::collections::BTreeSet;

use super::GroundingError;
use crate::toyvlm::{
    argmax_generable, assign_positions_with_next, AttentionTensor, Model, PositionIndex, Token,
    TokenKind, TokenSequence, EOS_ID,
};

/// What marks the beginning of a new reasoning step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryRule {
    /// The next token starts a step whenever the last generated token's
    /// surface ends with a full stop.
    AfterFullStop,
    AfterNewline,
    /// Any generated token id in the set ends a step.
    Custom(BTreeSet<u32>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundingConfig {
    /// How many video tokens to select per step.
    pub n_select: usize,
    pub boundary_rule: BoundaryRule,
    /// Keep previous steps' grounding blocks appended instead of replacing
    /// them each step.
    pub cumulative: bool,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            n_select: 64,
            boundary_rule: BoundaryRule::AfterFullStop,
            cumulative: false,
        }
    }
}

/// Record of one grounded step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGrounding {
    pub step_index: usize,
    /// Sequence position of the query token whose attention was aggregated.
    pub boundary_position: usize,
    /// Aggregated score per input video token, aligned with the session's
    /// `video_positions`.
    pub scores: Vec<f64>,
    /// Selected video-token sequence positions, ascending.
    pub selected_positions: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct GroundedDecodeResult {
    /// Committed stream: prompt plus generated text tokens.
    pub sequence: TokenSequence,
    pub prompt_len: usize,
    /// Sequence positions of the prompt's video tokens.
    pub video_positions: Vec<usize>,
    pub steps: Vec<StepGrounding>,
    /// One record per prediction pass; at grounded steps its key length
    /// includes the appended grounding block.
    pub step_attention: Vec<AttentionTensor>,
}

impl GroundedDecodeResult {
    pub fn generated(&self) -> &[Token] {
        &self.sequence.tokens[self.prompt_len..]
    }

    pub fn answer_text(&self) -> String {
        crate::toyvlm::detokenize(self.generated())
    }
}

/// True when the next token to be generated starts a new reasoning step.
/// The first token of the response always does.
pub fn is_step_boundary(generated: &[Token], rule: &BoundaryRule) -> bool {
    let Some(last) = generated.last() else {
        return true;
    };
    match rule {
        BoundaryRule::AfterFullStop => last.kind == TokenKind::Text && last.id == b'.' as u32,
        BoundaryRule::AfterNewline => last.kind == TokenKind::Text && last.id == b'\n' as u32,
        BoundaryRule::Custom(ids) => ids.contains(&last.id),
    }
}

/// Mean attention weight from the recorded query to each video position,
/// averaged over every layer and head. Scores are not renormalized over the
/// video subset; top-N selection is invariant to positive rescaling.
pub fn aggregate_attention(
    att: &AttentionTensor,
    video_positions: &[usize],
) -> Result<Vec<f64>, GroundingError> {
    let key_len = att.key_len();
    let mut scores = vec![0.0f64; video_positions.len()];
    let mut rows = 0usize;
    for layer in &att.weights {
        for head in layer {
            rows += 1;
            for (slot, &pos) in video_positions.iter().enumerate() {
                let w = head.get(pos).ok_or(GroundingError::PositionOutOfRange {
                    position: pos,
                    len: key_len,
                })?;
                scores[slot] += w;
            }
        }
    }
    debug_assert!(rows > 0, "attention tensor has at least one row");
    for s in &mut scores {
        *s /= rows as f64;
    }
    Ok(scores)
}

/// Indices of the `min(n_select, len)` largest scores. Ties break toward
/// the lower index; the result is sorted ascending.
pub fn select_top_n(scores: &[f64], n_select: usize) -> Vec<usize> {
    let n = n_select.min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut picked: Vec<usize> = order.into_iter().take(n).collect();
    picked.sort_unstable();
    picked
}

/// Greedy decoding with step-wise grounding per [`GroundingConfig`].
pub fn grounded_decode(
    model: &Model,
    prompt: &TokenSequence,
    cfg: &GroundingConfig,
    max_new: usize,
) -> Result<GroundedDecodeResult, GroundingError> {
    assert!(max_new >= 1, "grounded_decode requires max_new >= 1");
    assert!(cfg.n_select >= 1, "n_select must be >= 1");
    let (mut seq, mut next_pos) = assign_positions_with_next(prompt);
    let prompt_len = seq.len();
    let video_positions = seq.video_positions();
    if video_positions.is_empty() {
        return Err(GroundingError::NoVideoTokens);
    }

    let mut block: Vec<Token> = Vec::new();
    let mut steps: Vec<StepGrounding> = Vec::new();
    let mut step_attention: Vec<AttentionTensor> = Vec::new();

    for _ in 0..max_new {
        if is_step_boundary(&seq.tokens[prompt_len..], &cfg.boundary_rule) {
            // Aggregate at the last committed token, over the committed
            // stream only, then rebuild the grounding block.
            let boundary_out = model.forward(&seq);
            let scores = aggregate_attention(&boundary_out.attention, &video_positions)?;
            let picked = select_top_n(&scores, cfg.n_select);
            let selected_positions: Vec<usize> =
                picked.iter().map(|&i| video_positions[i]).collect();
            let selected_tokens: Vec<Token> = selected_positions
                .iter()
                .map(|&p| seq.tokens[p].clone())
                .collect();
            if cfg.cumulative {
                block.extend(selected_tokens);
            } else {
                block = selected_tokens;
            }
            steps.push(StepGrounding {
                step_index: steps.len(),
                boundary_position: seq.len() - 1,
                scores,
                selected_positions,
            });
        }

        let mut input = seq.clone();
        input.tokens.extend(block.iter().cloned());
        let out = model.forward(&input);
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

    Ok(GroundedDecodeResult {
        sequence: seq,
        prompt_len,
        video_positions,
        steps,
        step_attention,
    })
}
