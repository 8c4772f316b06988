//! Grounded-decode demonstration on synthetic frames, with a side-by-side
//! plain decode and a per-step grounding trace.

use std::path::PathBuf;

use serde_json::json;

use super::{atomic_write, synth_frames, HarnessError};
use crate::datamodel::VideoRef;
use crate::grounding::{
    grounded_decode, interleave_timestamps, GroundedDecodeResult, GroundingConfig,
};
use crate::toyvlm::{
    tokenize, DecodeResult, FrameTensor, Model, ModelConfig, Token, TokenSequence, BOS_ID,
};

#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub model: ModelConfig,
    pub n_frames: usize,
    pub fps: f64,
    pub question: String,
    pub grounding: GroundingConfig,
    /// Interleave explicit timestamp tokens before each frame block.
    pub ett: bool,
    /// Run the grounded decode (otherwise plain greedy only, no trace).
    pub gram: bool,
    pub max_new: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for DemoConfig {
    fn default() -> Self {
        DemoConfig {
            model: ModelConfig::default(),
            n_frames: 4,
            fps: 2.0,
            question: "What is happening in the video? Think step by step.".into(),
            grounding: GroundingConfig::default(),
            ett: true,
            gram: true,
            max_new: 24,
            out_dir: None,
        }
    }
}

#[derive(Debug)]
pub struct DemoOutput {
    pub plain: DecodeResult,
    pub grounded: Option<GroundedDecodeResult>,
    pub trace_path: Option<PathBuf>,
    pub prompt_len: usize,
}

impl DemoOutput {
    /// Deterministic human-readable run summary: per-step selected
    /// (frame, row, col, score) tuples plus both decoded texts.
    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        if let Some(grounded) = &self.grounded {
            for step in &grounded.steps {
                let tuples: Vec<String> = step
                    .selected_positions
                    .iter()
                    .map(|&pos| {
                        let tok = &grounded.sequence.tokens[pos];
                        let slot = grounded
                            .video_positions
                            .iter()
                            .position(|&v| v == pos)
                            .expect("selected position is a video position");
                        let (row, col) = tok.grid_pos.expect("video token has grid_pos");
                        format!(
                            "(f={},r={row},c={col},s={:.6})",
                            tok.frame_index.expect("video token has frame_index"),
                            step.scores[slot]
                        )
                    })
                    .collect();
                lines.push(format!(
                    "step {} @pos {}: {}",
                    step.step_index,
                    step.boundary_position,
                    tuples.join(" ")
                ));
            }
            lines.push(format!("grounded answer: {:?}", grounded.answer_text()));
        }
        lines.push(format!("plain answer:    {:?}", self.plain.answer_text()));
        lines
    }
}

/// Prompt layout: begin token, video block (timestamps optional), then the
/// question text.
pub fn build_prompt(
    model: &Model,
    question: &str,
    video: &VideoRef,
    frames: &[FrameTensor],
    ett: bool,
) -> Result<TokenSequence, HarnessError> {
    let mut video_tokens = model.encode_video(video, frames)?;
    if ett {
        video_tokens = interleave_timestamps(&video_tokens, video.fps);
    }
    let mut seq = TokenSequence::new(vec![Token::control(BOS_ID)]);
    seq.extend(video_tokens);
    seq.extend(tokenize("\n"));
    seq.extend(tokenize(question));
    Ok(seq)
}

/// Runs the demonstration: grounded decode (unless disabled) plus a plain
/// decode for comparison, writing the trace file when an output directory
/// is configured.
pub fn cmd_demo(cfg: &DemoConfig) -> Result<DemoOutput, HarnessError> {
    if cfg.n_frames == 0 {
        return Err(HarnessError::Usage("demo needs at least one frame".into()));
    }
    if !(cfg.fps.is_finite() && cfg.fps > 0.0) {
        return Err(HarnessError::Usage(format!("fps {} must be > 0", cfg.fps)));
    }
    if cfg.max_new == 0 {
        return Err(HarnessError::Usage("max_new must be >= 1".into()));
    }
    let model = Model::new(cfg.model.clone())?;
    let (rows, cols) = model.config().patch_grid;
    let (height, width) = (rows * 8, cols * 8);
    let frames = synth_frames(model.config().seed, cfg.n_frames, 3, height, width);
    let video = VideoRef {
        path: "synthetic://demo".into(),
        fps: cfg.fps,
        width: width as u32,
        height: height as u32,
        n_frames: cfg.n_frames as u32,
    };
    let prompt = build_prompt(&model, &cfg.question, &video, &frames, cfg.ett)?;
    let prompt_len = prompt.len();

    let plain = model.greedy_decode(&prompt, cfg.max_new);
    let grounded = if cfg.gram {
        Some(grounded_decode(
            &model,
            &prompt,
            &cfg.grounding,
            cfg.max_new,
        )?)
    } else {
        None
    };

    let trace_path = match (&grounded, &cfg.out_dir) {
        (Some(result), Some(dir)) => {
            let path = dir.join("trace.json");
            atomic_write(&path, &render_trace(result))?;
            Some(path)
        }
        _ => None,
    };

    Ok(DemoOutput {
        plain,
        grounded,
        trace_path,
        prompt_len,
    })
}

/// Serializes the per-step grounding record: for every step, the boundary
/// position and the selected (position, frame, row, col, score) tuples.
pub fn render_trace(result: &GroundedDecodeResult) -> String {
    let steps: Vec<serde_json::Value> = result
        .steps
        .iter()
        .map(|step| {
            let selected: Vec<serde_json::Value> = step
                .selected_positions
                .iter()
                .map(|&pos| {
                    let tok = &result.sequence.tokens[pos];
                    let slot = result
                        .video_positions
                        .iter()
                        .position(|&v| v == pos)
                        .expect("selected position is a video position");
                    let (row, col) = tok.grid_pos.expect("video token has grid_pos");
                    json!({
                        "position": pos,
                        "frame_index": tok.frame_index.expect("video token has frame_index"),
                        "row": row,
                        "col": col,
                        "score": step.scores[slot],
                    })
                })
                .collect();
            json!({
                "step_index": step.step_index,
                "boundary_position": step.boundary_position,
                "selected": selected,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&steps).expect("trace serializes");
    s.push('\n');
    s
}
