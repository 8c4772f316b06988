//! CLI entry points and glue: fixture generation, prediction scoring with
//! report emission, and grounded-decode demonstrations.

mod demo;
mod eval;
mod frames;
mod gen;
mod report;

pub use demo::{build_prompt, cmd_demo, render_trace, DemoConfig, DemoOutput};
pub use eval::{cmd_eval, EvalSummary, RunManifest};
pub use frames::synth_frames;
pub use gen::{cmd_gen, generate, GeneratedFixture, SyntheticSpec};
pub use report::{render_report, OutputFormat};

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::datamodel::DataModelError;
use crate::grounding::GroundingError;
use crate::metrics::MetricsError;
use crate::toyvlm::VlmError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Vlm(#[from] VlmError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
    #[error("predictions reference unknown instance ids: {}", .0.join(", "))]
    UnmatchedIds(Vec<String>),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Internal(String),
}

impl HarnessError {
    /// Process exit status: 2 for input parse/schema failures, 3 for
    /// unmatched ids promoted to errors under --strict, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Data(_) => 2,
            HarnessError::UnmatchedIds(_) => 3,
            _ => 1,
        }
    }
}

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write-temp-then-rename so readers never observe a partial file.
pub(crate) fn atomic_write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}
