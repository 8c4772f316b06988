//! Evaluation formulas and per-category aggregation.
//!
//! Spatial scoring combines an entity-overlap test (xIoU, the maximum IoU
//! of the predicted box against every ground-truth box within the action
//! duration) with a timestamp test (predicted moment inside the annotated
//! action interval, closed on both ends). Temporal scoring combines an
//! action-label match with an absolute start-time deviation, reported both
//! as windowed accuracy and as mean absolute deviation.
//!
//! All comparisons against thresholds and windows are inclusive: a
//! prediction exactly on the boundary counts as a hit.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::datamodel::{
    BoundingBox, EntityKind, Prediction, ScenarioCategory, TestInstance, ALL_CATEGORIES,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ground-truth box set is empty")]
    EmptyGroundTruth,
    #[error("cannot aggregate an empty outcome list")]
    EmptyInput,
    #[error("instance \"{instance_id}\": expected a {expected} category, got {actual}")]
    CategoryMismatch {
        instance_id: String,
        expected: &'static str,
        actual: String,
    },
    #[error("instance \"{instance_id}\": prediction is missing {field}")]
    MissingField {
        instance_id: String,
        field: &'static str,
    },
    #[error("invalid threshold configuration: {0}")]
    InvalidThreshold(String),
}

/// IoU thresholds and temporal windows the scorer evaluates at. Values are
/// kept sorted ascending and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    iou_thresholds: Vec<f64>,
    temporal_windows: Vec<f64>,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            iou_thresholds: vec![0.25, 0.5],
            temporal_windows: vec![2.0, 4.0, 6.0],
        }
    }
}

impl ThresholdConfig {
    pub fn new(iou_thresholds: &[f64], temporal_windows: &[f64]) -> Result<Self, MetricsError> {
        if iou_thresholds.is_empty() || temporal_windows.is_empty() {
            return Err(MetricsError::InvalidThreshold(
                "need at least one IoU threshold and one temporal window".into(),
            ));
        }
        for &tau in iou_thresholds {
            if !tau.is_finite() || tau <= 0.0 || tau > 1.0 {
                return Err(MetricsError::InvalidThreshold(format!(
                    "IoU threshold {tau} is outside (0, 1]"
                )));
            }
        }
        for &delta in temporal_windows {
            if !delta.is_finite() || delta <= 0.0 {
                return Err(MetricsError::InvalidThreshold(format!(
                    "temporal window {delta} must be > 0"
                )));
            }
        }
        let mut taus = iou_thresholds.to_vec();
        taus.sort_by(f64::total_cmp);
        taus.dedup();
        let mut deltas = temporal_windows.to_vec();
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        Ok(ThresholdConfig {
            iou_thresholds: taus,
            temporal_windows: deltas,
        })
    }

    pub fn iou_thresholds(&self) -> &[f64] {
        &self.iou_thresholds
    }

    pub fn temporal_windows(&self) -> &[f64] {
        &self.temporal_windows
    }
}

/// Intersection-over-union of two pixel boxes. Returns 0 when the union has
/// zero area, so degenerate boxes never divide by zero.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Maximum IoU of the predicted box against every ground-truth box.
pub fn x_iou(pred: &BoundingBox, gt: &[BoundingBox]) -> Result<f64, MetricsError> {
    if gt.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    Ok(gt
        .iter()
        .map(|g| iou(pred, g))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Outcome of scoring one spatial-category prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SgrOutcome {
    pub time_ok: bool,
    pub per_entity_iou: BTreeMap<EntityKind, f64>,
    /// Per threshold: which required entities clear it.
    pub pass_at: Vec<(f64, BTreeMap<EntityKind, bool>)>,
    /// Per threshold: time_ok AND every required entity clears it.
    pub acc_at: Vec<(f64, bool)>,
}

impl SgrOutcome {
    pub fn accurate_at(&self, tau: f64) -> Option<bool> {
        self.acc_at.iter().find(|(t, _)| *t == tau).map(|(_, v)| *v)
    }

    pub fn passes(&self, tau: f64, kind: EntityKind) -> Option<bool> {
        self.pass_at
            .iter()
            .find(|(t, _)| *t == tau)
            .and_then(|(_, m)| m.get(&kind).copied())
    }
}

/// Outcome of scoring one temporal-category prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct TgrOutcome {
    pub action_ok: bool,
    pub abs_dev_s: f64,
    /// Per window: action_ok AND deviation within the window.
    pub correct_at: Vec<(f64, bool)>,
}

impl TgrOutcome {
    pub fn correct_at(&self, delta: f64) -> Option<bool> {
        self.correct_at
            .iter()
            .find(|(d, _)| *d == delta)
            .map(|(_, v)| *v)
    }
}

/// Scores a spatial-category prediction against its instance.
///
/// A prediction that omits the time or a required entity box is not an
/// error here: the missing component simply fails its conjunct (IoU 0,
/// time_ok false), mirroring how absent predictions score as incorrect.
pub fn score_sgr(
    inst: &TestInstance,
    pred: &Prediction,
    cfg: &ThresholdConfig,
) -> Result<SgrOutcome, MetricsError> {
    if !inst.category.is_spatial() {
        return Err(MetricsError::CategoryMismatch {
            instance_id: inst.id.clone(),
            expected: "spatial",
            actual: inst.category.label().into(),
        });
    }
    let time_ok = match pred.normalized_time_s() {
        Ok(t) => inst.action_interval.contains(t),
        Err(_) => false,
    };
    let mut per_entity_iou = BTreeMap::new();
    for &kind in inst.category.required_kinds() {
        let track = inst
            .track(kind)
            .expect("validated instance carries every required track");
        let value = match pred.boxes.get(&kind) {
            Some(b) => x_iou(b, &track.gt_boxes())?,
            None => 0.0,
        };
        per_entity_iou.insert(kind, value);
    }
    let pass_at: Vec<(f64, BTreeMap<EntityKind, bool>)> = cfg
        .iou_thresholds()
        .iter()
        .map(|&tau| {
            let m = per_entity_iou
                .iter()
                .map(|(k, v)| (*k, *v >= tau))
                .collect();
            (tau, m)
        })
        .collect();
    let acc_at = pass_at
        .iter()
        .map(|(tau, m)| (*tau, time_ok && m.values().all(|p| *p)))
        .collect();
    Ok(SgrOutcome {
        time_ok,
        per_entity_iou,
        pass_at,
        acc_at,
    })
}

/// Hook for plugging a different answer/label equivalence into temporal
/// scoring and aggregation.
pub trait ActionMatcher: Sync {
    fn matches(&self, predicted: &str, reference: &str) -> bool;
}

/// Default matcher: case-insensitive exact match after trimming, collapsing
/// internal whitespace, and stripping terminal punctuation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizedExactMatch;

impl ActionMatcher for NormalizedExactMatch {
    fn matches(&self, predicted: &str, reference: &str) -> bool {
        action_match(predicted, reference)
    }
}

pub fn action_match(pred_label: &str, gt_label: &str) -> bool {
    normalize_label(pred_label) == normalize_label(gt_label)
}

fn normalize_label(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .to_lowercase()
}

pub fn score_tgr(
    inst: &TestInstance,
    pred: &Prediction,
    cfg: &ThresholdConfig,
) -> Result<TgrOutcome, MetricsError> {
    score_tgr_with(inst, pred, cfg, &NormalizedExactMatch)
}

pub fn score_tgr_with(
    inst: &TestInstance,
    pred: &Prediction,
    cfg: &ThresholdConfig,
    matcher: &dyn ActionMatcher,
) -> Result<TgrOutcome, MetricsError> {
    if inst.category != ScenarioCategory::TemporalGr {
        return Err(MetricsError::CategoryMismatch {
            instance_id: inst.id.clone(),
            expected: "temporal",
            actual: inst.category.label().into(),
        });
    }
    let label = pred
        .action_label
        .as_deref()
        .ok_or(MetricsError::MissingField {
            instance_id: inst.id.clone(),
            field: "action_label",
        })?;
    let t_hat = pred
        .normalized_time_s()
        .map_err(|_| MetricsError::MissingField {
            instance_id: inst.id.clone(),
            field: "time",
        })?;
    let action_ok = matcher.matches(label, &inst.action_label);
    let abs_dev_s = (t_hat - inst.action_interval.start_s).abs();
    let correct_at = cfg
        .temporal_windows()
        .iter()
        .map(|&delta| (delta, action_ok && abs_dev_s <= delta))
        .collect();
    Ok(TgrOutcome {
        action_ok,
        abs_dev_s,
        correct_at,
    })
}

/// Mean absolute deviation over scored temporal outcomes. Deviations are
/// summed in a canonical order so the result is permutation-invariant.
pub fn mad(outcomes: &[TgrOutcome]) -> Result<f64, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut devs: Vec<f64> = outcomes.iter().map(|o| o.abs_dev_s).collect();
    devs.sort_by(f64::total_cmp);
    Ok(devs.iter().sum::<f64>() / devs.len() as f64)
}

/// Accuracy pair for one temporal window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRow {
    /// Percent with |predicted - onset| within the window, label ignored.
    pub time_acc: f64,
    /// Percent with the label correct AND the deviation within the window.
    pub acc: f64,
}

/// One row set of the per-category result table.
///
/// Rates are percentages over every instance of the category; instances
/// without a matching prediction count as failing every predicate. `mad`
/// covers only instances whose prediction yielded a deviation, and is
/// `None` when there were none.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryReport {
    pub category: ScenarioCategory,
    pub n_scored: usize,
    pub n_missing: usize,
    pub t_acc: Option<f64>,
    pub per_entity_rate: Vec<(f64, BTreeMap<EntityKind, f64>)>,
    pub acc: Vec<(f64, f64)>,
    pub action_acc: Option<f64>,
    pub mad: Option<f64>,
    pub acc_by_window: Vec<(f64, WindowRow)>,
}

impl CategoryReport {
    pub fn acc_at(&self, tau: f64) -> Option<f64> {
        self.acc.iter().find(|(t, _)| *t == tau).map(|(_, v)| *v)
    }

    pub fn entity_rate_at(&self, tau: f64, kind: EntityKind) -> Option<f64> {
        self.per_entity_rate
            .iter()
            .find(|(t, _)| *t == tau)
            .and_then(|(_, m)| m.get(&kind).copied())
    }

    pub fn window_row(&self, delta: f64) -> Option<WindowRow> {
        self.acc_by_window
            .iter()
            .find(|(d, _)| *d == delta)
            .map(|(_, r)| *r)
    }
}

fn pct(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

/// Scores every instance against its matched prediction and reduces to one
/// report per category present, in fixed category order. When several
/// records share an instance id the first one wins.
pub fn aggregate(
    instances: &[TestInstance],
    predictions: &[Prediction],
    cfg: &ThresholdConfig,
) -> Vec<CategoryReport> {
    aggregate_with(instances, predictions, cfg, &NormalizedExactMatch)
}

pub fn aggregate_with(
    instances: &[TestInstance],
    predictions: &[Prediction],
    cfg: &ThresholdConfig,
    matcher: &dyn ActionMatcher,
) -> Vec<CategoryReport> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
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
        let outcomes: Vec<Scored> = insts
            .iter()
            .map(|inst| score_one(inst, by_id.get(inst.id.as_str()).copied(), cfg, matcher))
            .collect();
        reports.push(reduce_category(category, &insts, &outcomes, cfg));
    }
    reports
}

/// Scoring result for one instance; `Missing` covers absent predictions and
/// (for temporal instances) predictions lacking the fields the score needs.
pub(crate) enum Scored {
    Spatial(SgrOutcome),
    Temporal(TgrOutcome),
    Missing { matched: bool },
}

pub(crate) fn score_one(
    inst: &TestInstance,
    pred: Option<&Prediction>,
    cfg: &ThresholdConfig,
    matcher: &dyn ActionMatcher,
) -> Scored {
    let Some(pred) = pred else {
        return Scored::Missing { matched: false };
    };
    if inst.category.is_spatial() {
        match score_sgr(inst, pred, cfg) {
            Ok(o) => Scored::Spatial(o),
            Err(_) => Scored::Missing { matched: true },
        }
    } else {
        match score_tgr_with(inst, pred, cfg, matcher) {
            Ok(o) => Scored::Temporal(o),
            Err(_) => Scored::Missing { matched: true },
        }
    }
}

pub(crate) fn reduce_category(
    category: ScenarioCategory,
    insts: &[&TestInstance],
    outcomes: &[Scored],
    cfg: &ThresholdConfig,
) -> CategoryReport {
    let total = insts.len();
    let n_scored = outcomes
        .iter()
        .filter(|o| !matches!(o, Scored::Missing { matched: false }))
        .count();
    let n_missing = total - n_scored;

    if category.is_spatial() {
        let sgr: Vec<Option<&SgrOutcome>> = outcomes
            .iter()
            .map(|o| match o {
                Scored::Spatial(s) => Some(s),
                _ => None,
            })
            .collect();
        let t_acc = pct(sgr.iter().flatten().filter(|o| o.time_ok).count(), total);
        let mut per_entity_rate = Vec::new();
        let mut acc = Vec::new();
        for &tau in cfg.iou_thresholds() {
            let mut rates = BTreeMap::new();
            for &kind in category.required_kinds() {
                let hits = sgr
                    .iter()
                    .flatten()
                    .filter(|o| o.passes(tau, kind) == Some(true))
                    .count();
                rates.insert(kind, pct(hits, total));
            }
            per_entity_rate.push((tau, rates));
            let hits = sgr
                .iter()
                .flatten()
                .filter(|o| o.accurate_at(tau) == Some(true))
                .count();
            acc.push((tau, pct(hits, total)));
        }
        CategoryReport {
            category,
            n_scored,
            n_missing,
            t_acc: Some(t_acc),
            per_entity_rate,
            acc,
            action_acc: None,
            mad: None,
            acc_by_window: Vec::new(),
        }
    } else {
        let tgr: Vec<Option<&TgrOutcome>> = outcomes
            .iter()
            .map(|o| match o {
                Scored::Temporal(t) => Some(t),
                _ => None,
            })
            .collect();
        let action_acc = pct(tgr.iter().flatten().filter(|o| o.action_ok).count(), total);
        let scored: Vec<TgrOutcome> = tgr.iter().flatten().map(|o| (*o).clone()).collect();
        let mad_value = mad(&scored).ok();
        let acc_by_window = cfg
            .temporal_windows()
            .iter()
            .map(|&delta| {
                let time_hits = tgr
                    .iter()
                    .flatten()
                    .filter(|o| o.abs_dev_s <= delta)
                    .count();
                let hits = tgr
                    .iter()
                    .flatten()
                    .filter(|o| o.correct_at(delta) == Some(true))
                    .count();
                (
                    delta,
                    WindowRow {
                        time_acc: pct(time_hits, total),
                        acc: pct(hits, total),
                    },
                )
            })
            .collect();
        CategoryReport {
            category,
            n_scored,
            n_missing,
            t_acc: None,
            per_entity_rate: Vec::new(),
            acc: Vec::new(),
            action_acc: Some(action_acc),
            mad: mad_value,
            acc_by_window,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::datamodel::{EntityTrack, PredictedTime, TimeInterval, TrackBox, VideoRef};

    fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
        BoundingBox::new(x0, y0, x1, y1).unwrap()
    }

    prop_compose! {
        fn arb_box()(x0 in 0.0f64..90.0, y0 in 0.0f64..90.0, w in 0.0f64..40.0, h in 0.0f64..40.0)
            -> BoundingBox
        {
            bb(x0, y0, x0 + w, y0 + h)
        }
    }

    proptest! {
        #[test]
        fn iou_is_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            let ba = iou(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }

    fn video() -> VideoRef {
        VideoRef {
            path: "videos/a.mp4".into(),
            fps: 2.0,
            width: 320,
            height: 240,
            n_frames: 16,
        }
    }

    fn spatial_instance(
        category: ScenarioCategory,
        tracks: Vec<(EntityKind, BoundingBox)>,
    ) -> TestInstance {
        TestInstance {
            id: "q_001".into(),
            category,
            video: video(),
            question: "what happens?".into(),
            action_label: "opening the door".into(),
            action_interval: TimeInterval::new(2.0, 5.0).unwrap(),
            tracks: tracks
                .into_iter()
                .map(|(kind, bbox)| EntityTrack {
                    kind,
                    boxes: vec![TrackBox { t_s: 3.0, bbox }],
                })
                .collect(),
        }
    }

    fn temporal_instance(start: f64) -> TestInstance {
        TestInstance {
            id: "t_001".into(),
            category: ScenarioCategory::TemporalGr,
            video: video(),
            question: "when does it start?".into(),
            action_label: "opening the door".into(),
            action_interval: TimeInterval::new(start, start + 5.0).unwrap(),
            tracks: vec![],
        }
    }

    fn prediction(
        time: Option<PredictedTime>,
        boxes: Vec<(EntityKind, BoundingBox)>,
        action_label: Option<&str>,
    ) -> Prediction {
        Prediction {
            instance_id: "q_001".into(),
            answer_text: String::new(),
            boxes: boxes.into_iter().collect(),
            time,
            action_label: action_label.map(String::from),
        }
    }

    #[test]
    fn iou_identity_is_one() {
        let b = bb(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&b, &b), 1.0);
    }

    #[test]
    fn iou_disjoint_is_zero() {
        assert_eq!(
            iou(&bb(0.0, 0.0, 10.0, 10.0), &bb(20.0, 20.0, 30.0, 30.0)),
            0.0
        );
    }

    #[test]
    fn iou_half_shift_is_one_third() {
        // Pixel-count oracle: intersection 50 cells, union 150 cells.
        let v = iou(&bb(0.0, 0.0, 10.0, 10.0), &bb(5.0, 0.0, 15.0, 10.0));
        assert!((v - 50.0 / 150.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn iou_zero_union_is_zero() {
        let p = bb(3.0, 3.0, 3.0, 3.0);
        assert_eq!(iou(&p, &p), 0.0);
    }

    #[test]
    fn x_iou_attains_identity_member() {
        let pred = bb(40.0, 40.0, 60.0, 60.0);
        let gt = vec![
            bb(0.0, 0.0, 10.0, 10.0),
            bb(100.0, 0.0, 110.0, 10.0),
            bb(40.0, 40.0, 60.0, 60.0),
            bb(0.0, 100.0, 10.0, 110.0),
            bb(200.0, 200.0, 210.0, 210.0),
        ];
        assert_eq!(x_iou(&pred, &gt).unwrap(), 1.0);
    }

    #[test]
    fn x_iou_all_disjoint_is_zero() {
        let pred = bb(0.0, 0.0, 10.0, 10.0);
        let gt = vec![bb(20.0, 20.0, 30.0, 30.0), bb(50.0, 50.0, 60.0, 60.0)];
        assert_eq!(x_iou(&pred, &gt).unwrap(), 0.0);
    }

    #[test]
    fn x_iou_takes_the_maximum() {
        // Pairwise IoUs are 1/3 and 1/2; the max must win.
        let pred = bb(0.0, 0.0, 10.0, 10.0);
        let gt = vec![bb(5.0, 0.0, 15.0, 10.0), bb(0.0, 0.0, 10.0, 5.0)];
        assert_eq!(x_iou(&pred, &gt).unwrap(), 0.5);
    }

    #[test]
    fn x_iou_rejects_empty_ground_truth() {
        assert!(matches!(
            x_iou(&bb(0.0, 0.0, 1.0, 1.0), &[]),
            Err(MetricsError::EmptyGroundTruth)
        ));
    }

    #[test]
    fn sgr_time_and_box_both_pass() {
        let gt = bb(10.0, 10.0, 110.0, 110.0);
        let inst = spatial_instance(ScenarioCategory::PersonGr, vec![(EntityKind::Person, gt)]);
        // IoU 0.6 via a partial overlap: widths chosen so inter/union = 0.6.
        // 100x100 gt, pred shifted by 25 px: inter 75*100, union 125*100 -> 0.6.
        let pred_box = bb(35.0, 10.0, 135.0, 110.0);
        let pred = prediction(
            Some(PredictedTime::Point(3.0)),
            vec![(EntityKind::Person, pred_box)],
            None,
        );
        let out = score_sgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(out.time_ok);
        assert!((out.per_entity_iou[&EntityKind::Person] - 0.6).abs() < 1e-12);
        assert_eq!(out.accurate_at(0.25), Some(true));
        assert_eq!(out.accurate_at(0.5), Some(true));
    }

    #[test]
    fn sgr_time_outside_interval_fails_even_with_perfect_box() {
        let gt = bb(10.0, 10.0, 110.0, 110.0);
        let inst = spatial_instance(ScenarioCategory::PersonGr, vec![(EntityKind::Person, gt)]);
        let pred = prediction(
            Some(PredictedTime::Point(6.0)),
            vec![(EntityKind::Person, gt)],
            None,
        );
        let out = score_sgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(!out.time_ok);
        assert!((out.per_entity_iou[&EntityKind::Person] - 1.0).abs() < 1e-12);
        assert!(out.acc_at.iter().all(|(_, v)| !v));
    }

    #[test]
    fn sgr_conjunction_over_required_set() {
        // Person IoU 0.3, object IoU 0.2, time ok: fails at tau 0.25 because
        // the object conjunct fails.
        let p_gt = bb(0.0, 0.0, 100.0, 100.0);
        let o_gt = bb(120.0, 0.0, 220.0, 100.0);
        let inst = spatial_instance(
            ScenarioCategory::PersonObjectCoGr,
            vec![(EntityKind::Person, p_gt), (EntityKind::Object, o_gt)],
        );
        // shift fraction s gives IoU (1-s)/(1+s): s such that IoU ~ 0.3 / 0.2.
        let p_pred = bb(53.847, 0.0, 153.847, 100.0); // ~0.30
        let o_pred = bb(186.67, 0.0, 286.67, 100.0); // ~0.20
        let pred = prediction(
            Some(PredictedTime::Point(3.0)),
            vec![(EntityKind::Person, p_pred), (EntityKind::Object, o_pred)],
            None,
        );
        let out = score_sgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(out.time_ok);
        assert!(out.per_entity_iou[&EntityKind::Person] >= 0.25);
        assert!(out.per_entity_iou[&EntityKind::Object] < 0.25);
        assert_eq!(out.accurate_at(0.25), Some(false));
    }

    #[test]
    fn sgr_missing_required_box_scores_zero() {
        let gt = bb(10.0, 10.0, 110.0, 110.0);
        let inst = spatial_instance(ScenarioCategory::PersonGr, vec![(EntityKind::Person, gt)]);
        let pred = prediction(Some(PredictedTime::Point(3.0)), vec![], None);
        let out = score_sgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert_eq!(out.per_entity_iou[&EntityKind::Person], 0.0);
        assert_eq!(out.accurate_at(0.25), Some(false));
    }

    #[test]
    fn sgr_missing_time_fails_temporal_conjunct() {
        let gt = bb(10.0, 10.0, 110.0, 110.0);
        let inst = spatial_instance(ScenarioCategory::PersonGr, vec![(EntityKind::Person, gt)]);
        let pred = prediction(None, vec![(EntityKind::Person, gt)], None);
        let out = score_sgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(!out.time_ok);
        assert_eq!(out.accurate_at(0.5), Some(false));
    }

    #[test]
    fn sgr_rejects_temporal_category() {
        let inst = temporal_instance(10.0);
        let pred = prediction(Some(PredictedTime::Point(10.0)), vec![], Some("x"));
        assert!(matches!(
            score_sgr(&inst, &pred, &ThresholdConfig::default()),
            Err(MetricsError::CategoryMismatch { .. })
        ));
    }

    #[test]
    fn tgr_zero_deviation_correct_everywhere() {
        let inst = temporal_instance(10.0);
        let pred = prediction(
            Some(PredictedTime::Point(10.0)),
            vec![],
            Some("opening the door"),
        );
        let out = score_tgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(out.action_ok);
        assert_eq!(out.abs_dev_s, 0.0);
        assert!(out.correct_at.iter().all(|(_, v)| *v));
    }

    #[test]
    fn tgr_window_boundary_is_inclusive() {
        let inst = temporal_instance(10.0);
        let pred = prediction(
            Some(PredictedTime::Point(12.0)),
            vec![],
            Some("opening the door"),
        );
        let out = score_tgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert_eq!(out.abs_dev_s, 2.0);
        assert_eq!(out.correct_at(2.0), Some(true));
    }

    #[test]
    fn tgr_wrong_label_fails_everywhere() {
        let inst = temporal_instance(10.0);
        let pred = prediction(
            Some(PredictedTime::Point(10.0)),
            vec![],
            Some("closing the door"),
        );
        let out = score_tgr(&inst, &pred, &ThresholdConfig::default()).unwrap();
        assert!(!out.action_ok);
        assert!(out.correct_at.iter().all(|(_, v)| !v));
    }

    #[test]
    fn tgr_missing_fields_error() {
        let inst = temporal_instance(10.0);
        let no_label = prediction(Some(PredictedTime::Point(10.0)), vec![], None);
        assert!(matches!(
            score_tgr(&inst, &no_label, &ThresholdConfig::default()),
            Err(MetricsError::MissingField {
                field: "action_label",
                ..
            })
        ));
        let no_time = prediction(None, vec![], Some("opening the door"));
        assert!(matches!(
            score_tgr(&inst, &no_time, &ThresholdConfig::default()),
            Err(MetricsError::MissingField { field: "time", .. })
        ));
    }

    #[test]
    fn action_match_normalization() {
        assert!(action_match("Opening the door.", "opening the door"));
        assert!(!action_match("closing door", "opening door"));
        assert!(action_match(" drinking  coffee ", "drinking coffee"));
    }

    #[test]
    fn mad_examples() {
        let mk = |d: f64| TgrOutcome {
            action_ok: true,
            abs_dev_s: d,
            correct_at: vec![],
        };
        assert_eq!(mad(&[mk(0.0), mk(0.0), mk(0.0)]).unwrap(), 0.0);
        let v = mad(&[mk(2.0), mk(0.0), mk(2.0)]).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(mad(&[mk(7.5)]).unwrap(), 7.5);
        assert!(matches!(mad(&[]), Err(MetricsError::EmptyInput)));
    }

    fn person_fixture(n: usize) -> (Vec<TestInstance>, Vec<Prediction>) {
        let gt = bb(10.0, 10.0, 110.0, 110.0);
        let mut instances = Vec::new();
        let mut predictions = Vec::new();
        for j in 0..n {
            let mut inst =
                spatial_instance(ScenarioCategory::PersonGr, vec![(EntityKind::Person, gt)]);
            inst.id = format!("pg_{j:03}");
            instances.push(inst);
            // first two accurate, third with a disjoint box
            let pbox = if j < 2 {
                gt
            } else {
                bb(200.0, 150.0, 210.0, 160.0)
            };
            let mut pred = prediction(
                Some(PredictedTime::Point(3.0)),
                vec![(EntityKind::Person, pbox)],
                None,
            );
            pred.instance_id = format!("pg_{j:03}");
            predictions.push(pred);
        }
        (instances, predictions)
    }

    #[test]
    fn aggregate_rate_is_count_over_total() {
        let (instances, predictions) = person_fixture(3);
        let reports = aggregate(&instances, &predictions, &ThresholdConfig::default());
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.n_scored, 3);
        assert_eq!(r.n_missing, 0);
        let acc25 = r.acc_at(0.25).unwrap();
        assert!((acc25 - 200.0 / 3.0).abs() < 1e-9, "{acc25}");
    }

    #[test]
    fn aggregate_all_missing_scores_zero() {
        let (instances, _) = person_fixture(3);
        let reports = aggregate(&instances, &[], &ThresholdConfig::default());
        let r = &reports[0];
        assert_eq!(r.n_missing, 3);
        assert_eq!(r.t_acc, Some(0.0));
        assert!(r.acc.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn aggregate_keeps_category_denominators_independent() {
        let (mut instances, mut predictions) = person_fixture(3);
        let mut temporal = temporal_instance(10.0);
        temporal.id = "tg_000".into();
        instances.push(temporal);
        let mut tp = prediction(
            Some(PredictedTime::Point(10.0)),
            vec![],
            Some("opening the door"),
        );
        tp.instance_id = "tg_000".into();
        predictions.push(tp);

        let reports = aggregate(&instances, &predictions, &ThresholdConfig::default());
        assert_eq!(reports.len(), 2);
        let tgr = reports
            .iter()
            .find(|r| r.category == ScenarioCategory::TemporalGr)
            .unwrap();
        assert_eq!(tgr.action_acc, Some(100.0));
        assert_eq!(tgr.mad, Some(0.0));
        assert_eq!(tgr.window_row(2.0).unwrap().acc, 100.0);
    }

    #[test]
    fn aggregate_is_permutation_invariant() {
        let (mut instances, mut predictions) = person_fixture(7);
        for j in 0..5 {
            let mut t = temporal_instance(10.0 + j as f64);
            t.id = format!("tg_{j:03}");
            instances.push(t);
            let mut p = prediction(
                Some(PredictedTime::Point(10.0 + j as f64 + 0.7 * (j % 3) as f64)),
                vec![],
                Some(if j % 2 == 0 {
                    "opening the door"
                } else {
                    "other"
                }),
            );
            p.instance_id = format!("tg_{j:03}");
            predictions.push(p);
        }
        let base = aggregate(&instances, &predictions, &ThresholdConfig::default());
        instances.reverse();
        predictions.reverse();
        let shuffled = aggregate(&instances, &predictions, &ThresholdConfig::default());
        assert_eq!(base, shuffled);
    }

    #[test]
    fn aggregate_conjunction_never_exceeds_components() {
        let (instances, predictions) = person_fixture(5);
        let reports = aggregate(&instances, &predictions, &ThresholdConfig::default());
        let r = &reports[0];
        for (tau, acc) in &r.acc {
            assert!(*acc <= r.t_acc.unwrap() + 1e-12);
            for rate in r.per_entity_rate[r
                .per_entity_rate
                .iter()
                .position(|(t, _)| t == tau)
                .unwrap()]
            .1
            .values()
            {
                assert!(*acc <= *rate + 1e-12);
            }
        }
    }

    #[test]
    fn aggregate_first_record_wins_on_duplicate_ids() {
        let (instances, mut predictions) = person_fixture(1);
        let mut dup = predictions[0].clone();
        dup.boxes.clear(); // would score zero if it won
        predictions.push(dup);
        let reports = aggregate(&instances, &predictions, &ThresholdConfig::default());
        assert_eq!(reports[0].acc_at(0.5), Some(100.0));
    }

    #[test]
    fn threshold_config_validates_ranges() {
        assert!(ThresholdConfig::new(&[0.0], &[2.0]).is_err());
        assert!(ThresholdConfig::new(&[1.0], &[2.0]).is_ok());
        assert!(ThresholdConfig::new(&[1.1], &[2.0]).is_err());
        assert!(ThresholdConfig::new(&[0.5], &[0.0]).is_err());
        let cfg = ThresholdConfig::new(&[0.5, 0.25, 0.5], &[6.0, 2.0, 4.0]).unwrap();
        assert_eq!(cfg.iou_thresholds(), &[0.25, 0.5]);
        assert_eq!(cfg.temporal_windows(), &[2.0, 4.0, 6.0]);
    }
}
