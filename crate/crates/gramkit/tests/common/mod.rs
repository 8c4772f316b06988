//! Independent oracles and helpers shared by the integration suites.
//!
//! Everything here recomputes results from first principles (pixel
//! counting, straight loops over the scoring definitions) without touching
//! the library's scoring path, so agreement is meaningful.

// Each test binary uses a subset of these oracles.
#![allow(dead_code)]

use std::collections::HashMap;

use gramkit::datamodel::{Prediction, ScenarioCategory, TestInstance};

/// IoU by counting unit pixel cells, valid for integer-coordinate boxes.
/// Box layout is [x_min, y_min, x_max, y_max].
pub fn pixel_count_iou(a: [i64; 4], b: [i64; 4]) -> f64 {
    let covers = |bx: [i64; 4], x: i64, y: i64| -> bool {
        x >= bx[0] && x < bx[2] && y >= bx[1] && y < bx[3]
    };
    let x_lo = a[0].min(b[0]);
    let x_hi = a[2].max(b[2]);
    let y_lo = a[1].min(b[1]);
    let y_hi = a[3].max(b[3]);
    let mut inter = 0u64;
    let mut union = 0u64;
    for x in x_lo..x_hi {
        for y in y_lo..y_hi {
            let in_a = covers(a, x, y);
            let in_b = covers(b, x, y);
            if in_a && in_b {
                inter += 1;
            }
            if in_a || in_b {
                union += 1;
            }
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Plain-loop rescoring of one spatial category: (t_acc, acc@tau ascending),
/// percentages over all instances of the category, missing predictions
/// failing everything.
pub fn naive_spatial_rates(
    instances: &[TestInstance],
    predictions: &[Prediction],
    category: ScenarioCategory,
    taus: &[f64],
) -> (f64, Vec<f64>) {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        by_id.entry(p.instance_id.as_str()).or_insert(p);
    }
    let insts: Vec<&TestInstance> = instances
        .iter()
        .filter(|i| i.category == category)
        .collect();
    let n = insts.len();
    assert!(n > 0, "category {category:?} empty");

    let rect_iou = |a: &gramkit::datamodel::BoundingBox, b: &gramkit::datamodel::BoundingBox| {
        let ix = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
        let iy = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0.0);
        let inter = ix * iy;
        let ua = (a.x_max - a.x_min) * (a.y_max - a.y_min);
        let ub = (b.x_max - b.x_min) * (b.y_max - b.y_min);
        let union = ua + ub - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    };

    let mut time_hits = 0usize;
    let mut acc_hits = vec![0usize; taus.len()];
    for inst in &insts {
        let Some(pred) = by_id.get(inst.id.as_str()) else {
            continue;
        };
        let t_hat = match pred.time {
            Some(gramkit::datamodel::PredictedTime::Point(t)) => Some(t),
            Some(gramkit::datamodel::PredictedTime::Interval(iv)) => {
                Some((iv.start_s + iv.end_s) / 2.0)
            }
            None => None,
        };
        let time_ok = t_hat
            .is_some_and(|t| inst.action_interval.start_s <= t && t <= inst.action_interval.end_s);
        if time_ok {
            time_hits += 1;
        }
        // Per-entity max IoU over every ground-truth box of that kind.
        let mut entity_ious = Vec::new();
        for track in &inst.tracks {
            let value = match pred.boxes.get(&track.kind) {
                Some(pb) => track
                    .boxes
                    .iter()
                    .map(|tb| rect_iou(pb, &tb.bbox))
                    .fold(0.0f64, f64::max),
                None => 0.0,
            };
            entity_ious.push(value);
        }
        for (k, &tau) in taus.iter().enumerate() {
            if time_ok && entity_ious.iter().all(|&v| v >= tau) {
                acc_hits[k] += 1;
            }
        }
    }
    (
        100.0 * time_hits as f64 / n as f64,
        acc_hits
            .iter()
            .map(|&h| 100.0 * h as f64 / n as f64)
            .collect(),
    )
}

/// Plain-loop rescoring of the temporal category: (action_acc, mad, per
/// delta (time_acc, acc)).
pub fn naive_temporal_rates(
    instances: &[TestInstance],
    predictions: &[Prediction],
    deltas: &[f64],
) -> (f64, Option<f64>, Vec<(f64, f64)>) {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::new();
    for p in predictions {
        by_id.entry(p.instance_id.as_str()).or_insert(p);
    }
    let insts: Vec<&TestInstance> = instances
        .iter()
        .filter(|i| i.category == ScenarioCategory::TemporalGr)
        .collect();
    let n = insts.len();
    assert!(n > 0, "temporal category empty");

    let normalize = |s: &str| -> String {
        s.split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .trim_end_matches(|c: char| c.is_ascii_punctuation())
            .to_lowercase()
    };

    let mut action_hits = 0usize;
    let mut devs: Vec<f64> = Vec::new();
    let mut rows = vec![(0usize, 0usize); deltas.len()];
    for inst in &insts {
        let Some(pred) = by_id.get(inst.id.as_str()) else {
            continue;
        };
        let (Some(label), Some(time)) = (&pred.action_label, &pred.time) else {
            continue;
        };
        let t_hat = match time {
            gramkit::datamodel::PredictedTime::Point(t) => *t,
            gramkit::datamodel::PredictedTime::Interval(iv) => (iv.start_s + iv.end_s) / 2.0,
        };
        let action_ok = normalize(label) == normalize(&inst.action_label);
        if action_ok {
            action_hits += 1;
        }
        let dev = (t_hat - inst.action_interval.start_s).abs();
        devs.push(dev);
        for (k, &delta) in deltas.iter().enumerate() {
            if dev <= delta {
                rows[k].0 += 1;
            }
            if action_ok && dev <= delta {
                rows[k].1 += 1;
            }
        }
    }
    let mad = if devs.is_empty() {
        None
    } else {
        devs.sort_by(f64::total_cmp);
        Some(devs.iter().sum::<f64>() / devs.len() as f64)
    };
    (
        100.0 * action_hits as f64 / n as f64,
        mad,
        rows.iter()
            .map(|&(t, a)| (100.0 * t as f64 / n as f64, 100.0 * a as f64 / n as f64))
            .collect(),
    )
}
