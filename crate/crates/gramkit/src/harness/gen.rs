//! Synthetic fixture generator.
//!
//! Emits a benchmark and a prediction file whose per-category rates are
//! exact by construction: pass/fail schedules are integer counts validated
//! against the requested fractions, boxes are placed with analytically
//! chosen overlap, and temporal deviations are applied on a representable
//! grid so an independent rescoring reproduces every target to the digit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{atomic_write, HarnessError};
use crate::datamodel::{
    benchmark_to_string, predictions_to_string, BoundingBox, EntityKind, EntityTrack,
    PredictedTime, Prediction, ScenarioCategory, TestInstance, TimeInterval, TrackBox, VideoRef,
    ALL_CATEGORIES,
};

const ACTIONS: &[&str] = &[
    "opening the door",
    "drinking coffee",
    "taking a book",
    "closing the refrigerator",
    "sitting on a sofa",
    "washing dishes",
    "folding a blanket",
    "turning off the stove",
];

const VIDEO_W: u32 = 320;
const VIDEO_H: u32 = 240;

/// Targets for one generated fixture. Counts times fractions must be
/// integral so the resulting rates are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Instances per generated category.
    pub per_category: usize,
    pub categories: Vec<ScenarioCategory>,
    /// Fraction of spatial instances whose predicted time falls inside the
    /// action interval.
    pub t_acc: f64,
    /// Per IoU threshold: fraction of spatial instances passing the full
    /// conjunction at that threshold. Fractions must be non-increasing in
    /// tau and bounded by `t_acc`.
    pub acc_targets: Vec<(f64, f64)>,
    /// Fraction of temporal instances with a correct action label.
    pub action_acc: f64,
    /// Start-time deviations for temporal predictions, cycled over the
    /// instances.
    pub deviations: Vec<f64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 0,
            per_category: 5,
            categories: ALL_CATEGORIES.to_vec(),
            t_acc: 1.0,
            acc_targets: vec![(0.25, 1.0), (0.5, 1.0)],
            action_acc: 1.0,
            deviations: vec![0.0],
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::InvalidSpec(msg));
        if self.per_category == 0 {
            return bad("per-category count must be >= 1".into());
        }
        if self.categories.is_empty() {
            return bad("no categories requested".into());
        }
        if self.acc_targets.is_empty() {
            return bad("need at least one accuracy target".into());
        }
        let mut fractions = vec![("t_acc", self.t_acc), ("action_acc", self.action_acc)];
        let mut targets = self.acc_targets.clone();
        targets.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (tau, f) in &targets {
            if !tau.is_finite() || *tau <= 0.0 || *tau > 1.0 {
                return bad(format!("IoU threshold {tau} outside (0, 1]"));
            }
            fractions.push(("acc target", *f));
        }
        for (name, f) in fractions {
            if !f.is_finite() || !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} fraction {f} outside [0, 1]"));
            }
            let scaled = f * self.per_category as f64;
            if (scaled - scaled.round()).abs() > 1e-9 {
                return bad(format!(
                    "{name} fraction {f} times count {} is not integral",
                    self.per_category
                ));
            }
        }
        for w in targets.windows(2) {
            if w[1].1 > w[0].1 + 1e-12 {
                return bad(format!(
                    "accuracy at tau {} cannot exceed accuracy at tau {}",
                    w[1].0, w[0].0
                ));
            }
        }
        if targets[0].1 > self.t_acc + 1e-12 {
            return bad(format!(
                "accuracy target {} exceeds t_acc {}; the conjunction cannot reach it",
                targets[0].1, self.t_acc
            ));
        }
        for d in &self.deviations {
            if !d.is_finite() || *d < 0.0 {
                return bad(format!("deviation {d} must be a non-negative number"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedFixture {
    pub instances: Vec<TestInstance>,
    pub predictions: Vec<Prediction>,
}

fn count(frac: f64, n: usize) -> usize {
    (frac * n as f64).round() as usize
}

/// Ground-truth region per entity kind, inside the 320x240 frame and with
/// enough right-margin that every shifted prediction stays in bounds.
fn region(kind: EntityKind) -> BoundingBox {
    let (x0, y0, x1, y1) = match kind {
        EntityKind::Person => (20.0, 20.0, 120.0, 170.0),
        EntityKind::Object => (150.0, 60.0, 200.0, 110.0),
        EntityKind::LeftHand => (40.0, 180.0, 80.0, 215.0),
        EntityKind::RightHand => (240.0, 180.0, 280.0, 215.0),
    };
    BoundingBox::new(x0, y0, x1, y1).expect("static region is valid")
}

/// Box with IoU exactly (1 - s) / (1 + s) against `base`, via a horizontal
/// shift by fraction `s` of the width. Inverting for a target IoU v gives
/// s = (1 - v) / (1 + v).
fn shifted_for_iou(base: &BoundingBox, target_iou: f64) -> BoundingBox {
    let s = (1.0 - target_iou) / (1.0 + target_iou);
    let dx = s * base.width();
    BoundingBox::new(base.x_min + dx, base.y_min, base.x_max + dx, base.y_max)
        .expect("shifted region stays valid")
}

/// Far-corner box disjoint from every entity region.
fn disjoint_box() -> BoundingBox {
    BoundingBox::new(2.0, 2.0, 12.0, 12.0).expect("static box is valid")
}

/// Predicted box for schedule slot `j`: identical to the ground truth when
/// every threshold passes, mid-band overlap for a partial pass, disjoint
/// otherwise.
fn scheduled_box(base: &BoundingBox, j: usize, n: usize, targets: &[(f64, f64)]) -> BoundingBox {
    let passed = targets.iter().take_while(|(_, f)| j < count(*f, n)).count();
    if passed == targets.len() {
        *base
    } else if passed == 0 {
        disjoint_box()
    } else {
        let lo = targets[passed - 1].0;
        let hi = targets[passed].0;
        shifted_for_iou(base, (lo + hi) / 2.0)
    }
}

fn question_for(category: ScenarioCategory, action: &str) -> String {
    match category {
        ScenarioCategory::PersonGr => {
            format!("Who is {action}, and where are they while it happens?")
        }
        ScenarioCategory::ObjectGr => {
            format!("Which object is involved in {action}, and where is it?")
        }
        ScenarioCategory::PersonObjectCoGr => {
            format!("Who is {action} and which object do they use? Localize both.")
        }
        ScenarioCategory::HandObjectCoGr => {
            format!("Which hands perform {action} and on what object? Localize all three.")
        }
        ScenarioCategory::TemporalGr => {
            format!("Which action happens first, and when does {action} start?")
        }
    }
}

/// Builds the fixture in memory. Deterministic in the configured seed.
pub fn generate(spec: &SyntheticSpec) -> Result<GeneratedFixture, HarnessError> {
    spec.validate()?;
    let mut targets = spec.acc_targets.clone();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = spec.per_category;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut instances = Vec::new();
    let mut predictions = Vec::new();
    for category in ALL_CATEGORIES {
        if !spec.categories.contains(&category) {
            continue;
        }
        for j in 0..n {
            let id = format!("{}_{j:03}", category.label());
            let action = ACTIONS[rng.gen_range(0..ACTIONS.len())];
            // Start on a half-second grid keeps deviation arithmetic exact.
            let start = rng.gen_range(8..80) as f64 * 0.5;
            let interval = TimeInterval::new(start, start + 4.0).expect("valid interval");
            let n_frames = rng.gen_range(8..=24);

            let video = VideoRef {
                path: format!("videos/{id}.mp4"),
                fps: 2.0,
                width: VIDEO_W,
                height: VIDEO_H,
                n_frames,
            };

            let (tracks, pred_boxes): (Vec<EntityTrack>, BTreeMap<EntityKind, BoundingBox>) =
                if category.is_spatial() {
                    let mut tracks = Vec::new();
                    let mut boxes = BTreeMap::new();
                    for &kind in category.required_kinds() {
                        let gt = region(kind);
                        tracks.push(EntityTrack {
                            kind,
                            boxes: vec![
                                TrackBox {
                                    t_s: start + 1.0,
                                    bbox: gt,
                                },
                                TrackBox {
                                    t_s: start + 3.0,
                                    bbox: gt,
                                },
                            ],
                        });
                        boxes.insert(kind, scheduled_box(&gt, j, n, &targets));
                    }
                    (tracks, boxes)
                } else {
                    (Vec::new(), BTreeMap::new())
                };

            instances.push(TestInstance {
                id: id.clone(),
                category,
                video,
                question: question_for(category, action),
                action_label: action.to_string(),
                action_interval: interval,
                tracks,
            });

            let prediction = if category.is_spatial() {
                let time = if j < count(spec.t_acc, n) {
                    if j % 2 == 0 {
                        PredictedTime::Point(start + 2.0)
                    } else {
                        PredictedTime::Interval(
                            TimeInterval::new(start + 1.0, start + 3.0).expect("valid"),
                        )
                    }
                } else {
                    PredictedTime::Point(start + 7.5)
                };
                Prediction {
                    instance_id: id,
                    answer_text: format!("The action is {action}."),
                    boxes: pred_boxes,
                    time: Some(time),
                    action_label: None,
                }
            } else {
                let dev = spec.deviations[j % spec.deviations.len()];
                let label = if j < count(spec.action_acc, n) {
                    action.to_string()
                } else {
                    "an unrelated activity".to_string()
                };
                Prediction {
                    instance_id: id,
                    answer_text: format!("{label} starts near {:.1}s.", start + dev),
                    boxes: BTreeMap::new(),
                    time: Some(PredictedTime::Point(start + dev)),
                    action_label: Some(label),
                }
            };
            predictions.push(prediction);
        }
    }
    Ok(GeneratedFixture {
        instances,
        predictions,
    })
}

/// Writes `benchmark.json` and `predictions.jsonl` under `out_dir` and
/// returns their paths.
pub fn cmd_gen(spec: &SyntheticSpec, out_dir: &Path) -> Result<(PathBuf, PathBuf), HarnessError> {
    let fixture = generate(spec)?;
    let bench_path = out_dir.join("benchmark.json");
    let pred_path = out_dir.join("predictions.jsonl");
    atomic_write(&bench_path, &benchmark_to_string(&fixture.instances))?;
    atomic_write(&pred_path, &predictions_to_string(&fixture.predictions))?;
    Ok((bench_path, pred_path))
}
