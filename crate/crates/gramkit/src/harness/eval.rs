//! Scoring pipeline behind `gramkit eval`.

use std::collections::HashSet;
use std::path::PathBuf;

use rayon::prelude::*;

use super::{atomic_write, report::render_report, HarnessError, OutputFormat};
use crate::datamodel::{
    load_benchmark, load_predictions, Prediction, ScenarioCategory, TestInstance, ALL_CATEGORIES,
};
use crate::metrics::{
    aggregate_with, reduce_category, score_one, ActionMatcher, CategoryReport,
    NormalizedExactMatch, Scored, ThresholdConfig,
};

/// Everything one `eval` run needs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub benchmark_path: PathBuf,
    pub predictions_path: PathBuf,
    pub thresholds: ThresholdConfig,
    /// When set, only these categories are scored.
    pub categories: Option<Vec<ScenarioCategory>>,
    pub format: OutputFormat,
    pub out_dir: PathBuf,
    pub strict: bool,
    pub workers: usize,
    /// Show every configured threshold for every category, instead of the
    /// default table layout (hand-object at the lowest threshold only).
    pub full_thresholds: bool,
    /// Recorded for provenance; scoring itself is deterministic.
    pub seed: u64,
}

impl RunManifest {
    pub fn new(benchmark_path: impl Into<PathBuf>, predictions_path: impl Into<PathBuf>) -> Self {
        RunManifest {
            benchmark_path: benchmark_path.into(),
            predictions_path: predictions_path.into(),
            thresholds: ThresholdConfig::default(),
            categories: None,
            format: OutputFormat::Csv,
            out_dir: PathBuf::from("out"),
            strict: false,
            workers: 1,
            full_thresholds: false,
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct EvalSummary {
    pub reports: Vec<CategoryReport>,
    /// Prediction ids with no benchmark instance, in first-seen order.
    pub unmatched_ids: Vec<String>,
    /// Report files written, one per category.
    pub files: Vec<PathBuf>,
    /// Rendered report text, one entry per category (same order).
    pub rendered: Vec<String>,
}

/// Loads, scores, and writes one report file per category present. The run
/// is bit-reproducible: scoring is pure and the reduction order is fixed,
/// so parallel and serial runs emit identical bytes.
pub fn cmd_eval(manifest: &RunManifest) -> Result<EvalSummary, HarnessError> {
    let instances = load_benchmark(&manifest.benchmark_path)?;
    let predictions = load_predictions(&manifest.predictions_path)?;

    let known: HashSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    let mut unmatched_ids = Vec::new();
    let mut seen = HashSet::new();
    for p in &predictions {
        if !known.contains(p.instance_id.as_str()) && seen.insert(p.instance_id.as_str()) {
            unmatched_ids.push(p.instance_id.clone());
        }
    }
    if manifest.strict && !unmatched_ids.is_empty() {
        return Err(HarnessError::UnmatchedIds(unmatched_ids));
    }

    let scored: Vec<TestInstance> = match &manifest.categories {
        Some(filter) => instances
            .into_iter()
            .filter(|i| filter.contains(&i.category))
            .collect(),
        None => instances,
    };

    let matcher = NormalizedExactMatch;
    let reports = if manifest.workers > 1 {
        parallel_aggregate(
            &scored,
            &predictions,
            &manifest.thresholds,
            &matcher,
            manifest.workers,
        )?
    } else {
        aggregate_with(&scored, &predictions, &manifest.thresholds, &matcher)
    };

    let mut files = Vec::new();
    let mut rendered = Vec::new();
    for report in &reports {
        let text = render_report(report, manifest.format, manifest.full_thresholds);
        let path = manifest.out_dir.join(format!(
            "report_{}.{}",
            report.category.label(),
            manifest.format.extension()
        ));
        atomic_write(&path, &text)?;
        files.push(path);
        rendered.push(text);
    }
    Ok(EvalSummary {
        reports,
        unmatched_ids,
        files,
        rendered,
    })
}

/// Same reduction as [`aggregate_with`], scoring instances in a worker
/// pool. Ordered collection keeps the result identical to the serial path.
fn parallel_aggregate(
    instances: &[TestInstance],
    predictions: &[Prediction],
    cfg: &ThresholdConfig,
    matcher: &dyn ActionMatcher,
    workers: usize,
) -> Result<Vec<CategoryReport>, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Internal(format!("worker pool: {e}")))?;

    let mut by_id = std::collections::HashMap::new();
    for p in predictions {
        by_id.entry(p.instance_id.as_str()).or_insert(p);
    }

    let mut reports = Vec::new();
    for category in ALL_CATEGORIES {
        let insts: Vec<&TestInstance> = instances
            .iter()
            .filter(|i| i.category == category)
            .collect();
        if insts.is_empty() {
            continue;
        }
        let outcomes: Vec<Scored> = pool.install(|| {
            insts
                .par_iter()
                .map(|inst| score_one(inst, by_id.get(inst.id.as_str()).copied(), cfg, matcher))
                .collect()
        });
        reports.push(reduce_category(category, &insts, &outcomes, cfg));
    }
    Ok(reports)
}
