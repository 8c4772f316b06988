//! gramkit: spatio-temporal grounded-reasoning evaluation and decoding.
//!
//! Four pieces:
//!
//! - [`datamodel`]: the benchmark schema (instances, annotations,
//!   predictions) and its on-disk loaders.
//! - [`metrics`]: IoU / xIoU scoring, temporal-window correctness, mean
//!   absolute deviation, and per-category aggregation.
//! - [`toyvlm`]: a deterministic desk-scale multimodal transformer with
//!   3-component rotary positions and per-layer/head attention recording.
//! - [`grounding`]: the attention-guided grounded decoding loop with
//!   explicit timestamp tokens and top-N video-token selection.
//!
//! [`harness`] glues them into the `gramkit` CLI: `eval` scores prediction
//! files against a benchmark, `gen` emits synthetic fixtures with exactly
//! known rates, and `demo` runs grounded decoding with a trace dump.

pub mod datamodel;
pub mod grounding;
pub mod harness;
pub mod metrics;
pub mod toyvlm;
