//! On-disk representation and loaders.
//!
//! Parsing is two-staged: serde maps the document onto raw records (shape
//! only), then each record is promoted to a domain value with every
//! invariant checked. This keeps location info on malformed documents and
//! instance/field attribution on semantic violations.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    validate_instance, BoundingBox, DataModelError, EntityKind, EntityTrack, PredictedTime,
    Prediction, ScenarioCategory, TestInstance, TimeInterval, TrackBox, VideoRef,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    id: String,
    category: ScenarioCategory,
    video: VideoRef,
    question: String,
    action_label: String,
    action_interval: [f64; 2],
    tracks: Vec<RawTrack>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrack {
    kind: EntityKind,
    boxes: Vec<RawTrackBox>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrackBox {
    t: f64,
    #[serde(rename = "box")]
    bbox: [f64; 4],
}

/// Prediction records tolerate extra fields; model wrappers often attach
/// their own metadata.
#[derive(Debug, Serialize, Deserialize)]
struct RawPrediction {
    instance_id: String,
    #[serde(default)]
    answer_text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    boxes: BTreeMap<EntityKind, [f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time: Option<RawTime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_label: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
enum RawTime {
    #[serde(rename = "point")]
    Point(f64),
    #[serde(rename = "interval")]
    Interval([f64; 2]),
}

fn promote_instance(raw: RawInstance) -> Result<TestInstance, DataModelError> {
    let id = raw.id;
    let action_interval = TimeInterval::new(raw.action_interval[0], raw.action_interval[1])
        .map_err(|msg| DataModelError::schema(&id, "action_interval", msg))?;
    let mut tracks = Vec::with_capacity(raw.tracks.len());
    for t in raw.tracks {
        let field = format!("tracks[{}]", t.kind.label());
        let mut boxes = Vec::with_capacity(t.boxes.len());
        for rb in t.boxes {
            let bbox = BoundingBox::try_from(rb.bbox)
                .map_err(|msg| DataModelError::schema(&id, field.clone(), msg))?;
            boxes.push(TrackBox { t_s: rb.t, bbox });
        }
        tracks.push(EntityTrack {
            kind: t.kind,
            boxes,
        });
    }
    let inst = TestInstance {
        id,
        category: raw.category,
        video: raw.video,
        question: raw.question,
        action_label: raw.action_label,
        action_interval,
        tracks,
    };
    validate_instance(&inst)?;
    Ok(inst)
}

fn demote_instance(inst: &TestInstance) -> RawInstance {
    RawInstance {
        id: inst.id.clone(),
        category: inst.category,
        video: inst.video.clone(),
        question: inst.question.clone(),
        action_label: inst.action_label.clone(),
        action_interval: inst.action_interval.into(),
        tracks: inst
            .tracks
            .iter()
            .map(|t| RawTrack {
                kind: t.kind,
                boxes: t
                    .boxes
                    .iter()
                    .map(|b| RawTrackBox {
                        t: b.t_s,
                        bbox: b.bbox.into(),
                    })
                    .collect(),
            })
            .collect(),
    }
}

fn promote_prediction(raw: RawPrediction, line: usize) -> Result<Prediction, DataModelError> {
    let id = raw.instance_id;
    let mut boxes = BTreeMap::new();
    for (kind, arr) in raw.boxes {
        let bbox = BoundingBox::try_from(arr).map_err(|msg| {
            DataModelError::schema(&id, format!("boxes[{}] (line {line})", kind.label()), msg)
        })?;
        boxes.insert(kind, bbox);
    }
    let time = match raw.time {
        None => None,
        Some(RawTime::Point(t)) => {
            if !t.is_finite() || t < 0.0 {
                return Err(DataModelError::schema(
                    &id,
                    format!("time (line {line})"),
                    "time point must be a non-negative number",
                ));
            }
            Some(PredictedTime::Point(t))
        }
        Some(RawTime::Interval(arr)) => {
            let iv = TimeInterval::new(arr[0], arr[1])
                .map_err(|msg| DataModelError::schema(&id, format!("time (line {line})"), msg))?;
            Some(PredictedTime::Interval(iv))
        }
    };
    Ok(Prediction {
        instance_id: id,
        answer_text: raw.answer_text,
        boxes,
        time,
        action_label: raw.action_label,
    })
}

fn demote_prediction(pred: &Prediction) -> RawPrediction {
    RawPrediction {
        instance_id: pred.instance_id.clone(),
        answer_text: pred.answer_text.clone(),
        boxes: pred.boxes.iter().map(|(k, b)| (*k, (*b).into())).collect(),
        time: pred.time.map(|t| match t {
            PredictedTime::Point(p) => RawTime::Point(p),
            PredictedTime::Interval(iv) => RawTime::Interval(iv.into()),
        }),
        action_label: pred.action_label.clone(),
    }
}

/// Parses a whole benchmark document (a JSON array of instance records).
pub fn parse_benchmark(text: &str) -> Result<Vec<TestInstance>, DataModelError> {
    let raw: Vec<RawInstance> = serde_json::from_str(text).map_err(|e| DataModelError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        let inst = promote_instance(r)?;
        if !seen.insert(inst.id.clone()) {
            return Err(DataModelError::schema(
                &inst.id,
                "id",
                "duplicate instance id",
            ));
        }
        out.push(inst);
    }
    Ok(out)
}

pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<TestInstance>, DataModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_benchmark(&text).map_err(|e| locate(e, path))
}

pub fn benchmark_to_string(instances: &[TestInstance]) -> String {
    let raw: Vec<RawInstance> = instances.iter().map(demote_instance).collect();
    let mut s = serde_json::to_string_pretty(&raw).expect("benchmark records serialize");
    s.push('\n');
    s
}

pub fn save_benchmark(
    path: impl AsRef<Path>,
    instances: &[TestInstance],
) -> Result<(), DataModelError> {
    let path = path.as_ref();
    fs::write(path, benchmark_to_string(instances)).map_err(|source| DataModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses line-delimited prediction records. Blank lines are skipped.
pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, DataModelError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let raw: RawPrediction = serde_json::from_str(line).map_err(|e| DataModelError::Parse {
            location: format!("line {}, column {}", lineno, e.column()),
            message: e.to_string(),
        })?;
        out.push(promote_prediction(raw, lineno)?);
    }
    Ok(out)
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, DataModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_predictions(&text).map_err(|e| locate(e, path))
}

pub fn predictions_to_string(predictions: &[Prediction]) -> String {
    let mut s = String::new();
    for p in predictions {
        s.push_str(&serde_json::to_string(&demote_prediction(p)).expect("record serializes"));
        s.push('\n');
    }
    s
}

pub fn save_predictions(
    path: impl AsRef<Path>,
    predictions: &[Prediction],
) -> Result<(), DataModelError> {
    let path = path.as_ref();
    fs::write(path, predictions_to_string(predictions)).map_err(|source| DataModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn locate(e: DataModelError, path: &Path) -> DataModelError {
    match e {
        DataModelError::Parse { location, message } => DataModelError::Parse {
            location: format!("{}, {location}", path.display()),
            message,
        },
        other => other,
    }
}
