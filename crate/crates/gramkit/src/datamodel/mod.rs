//! Benchmark schema: test instances, ground-truth annotations, and model
//! predictions, plus the loaders for their on-disk formats.
//!
//! A benchmark document is a single JSON array of instance records; a
//! prediction file is line-delimited JSON, one record per line. Both are
//! validated on load: structural problems surface as [`DataModelError::Parse`]
//! with a line/column location, semantic problems as
//! [`DataModelError::Schema`] naming the offending instance and field.

mod io;

pub use io::{
    benchmark_to_string, load_benchmark, load_predictions, parse_benchmark, parse_predictions,
    predictions_to_string, save_benchmark, save_predictions,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataModelError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {location}: {message}")]
    Parse { location: String, message: String },
    #[error("schema violation for instance \"{instance_id}\", field {field}: {message}")]
    Schema {
        instance_id: String,
        field: String,
        message: String,
    },
    #[error("prediction carries no time field")]
    MissingTime,
}

impl DataModelError {
    pub(crate) fn schema(
        instance_id: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        DataModelError::Schema {
            instance_id: instance_id.into(),
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Axis-aligned box in absolute pixel coordinates of the annotated video.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, String> {
        let b = BoundingBox {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.check()?;
        Ok(b)
    }

    fn check(&self) -> Result<(), String> {
        let vals = [self.x_min, self.y_min, self.x_max, self.y_max];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("coordinates must be finite".into());
        }
        if vals.iter().any(|v| *v < 0.0) {
            return Err("coordinates must be non-negative".into());
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err("requires x_min <= x_max and y_min <= y_max".into());
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Zero for degenerate boxes; such boxes are valid values but never
    /// reach any positive IoU threshold.
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = String;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

/// Closed interval of seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", try_from = "[f64; 2]")]
pub struct TimeInterval {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeInterval {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, String> {
        if !start_s.is_finite() || !end_s.is_finite() {
            return Err("interval endpoints must be finite".into());
        }
        if start_s < 0.0 || end_s < 0.0 {
            return Err("interval endpoints must be non-negative".into());
        }
        if start_s > end_s {
            return Err(format!("interval start {start_s} exceeds end {end_s}"));
        }
        Ok(TimeInterval { start_s, end_s })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_s <= t && t <= self.end_s
    }

    pub fn midpoint(&self) -> f64 {
        (self.start_s + self.end_s) / 2.0
    }
}

impl From<TimeInterval> for [f64; 2] {
    fn from(i: TimeInterval) -> Self {
        [i.start_s, i.end_s]
    }
}

impl TryFrom<[f64; 2]> for TimeInterval {
    type Error = String;

    fn try_from(v: [f64; 2]) -> Result<Self, Self::Error> {
        TimeInterval::new(v[0], v[1])
    }
}

/// Entity classes a spatial prediction can ground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    #[serde(rename = "P")]
    Person,
    #[serde(rename = "O")]
    Object,
    #[serde(rename = "LH")]
    LeftHand,
    #[serde(rename = "RH")]
    RightHand,
}

impl EntityKind {
    pub fn label(&self) -> &'static str {
        match self {
            EntityKind::Person => "P",
            EntityKind::Object => "O",
            EntityKind::LeftHand => "LH",
            EntityKind::RightHand => "RH",
        }
    }
}

/// The five test scenarios. Spatial categories require a fixed entity set;
/// the temporal category carries no tracks at all.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioCategory {
    #[serde(rename = "person_gr")]
    PersonGr,
    #[serde(rename = "object_gr")]
    ObjectGr,
    #[serde(rename = "person_object_gr")]
    PersonObjectCoGr,
    #[serde(rename = "hand_object_gr")]
    HandObjectCoGr,
    #[serde(rename = "temporal_gr")]
    TemporalGr,
}

pub const ALL_CATEGORIES: [ScenarioCategory; 5] = [
    ScenarioCategory::PersonGr,
    ScenarioCategory::ObjectGr,
    ScenarioCategory::PersonObjectCoGr,
    ScenarioCategory::HandObjectCoGr,
    ScenarioCategory::TemporalGr,
];

impl ScenarioCategory {
    pub fn required_kinds(&self) -> &'static [EntityKind] {
        match self {
            ScenarioCategory::PersonGr => &[EntityKind::Person],
            ScenarioCategory::ObjectGr => &[EntityKind::Object],
            ScenarioCategory::PersonObjectCoGr => &[EntityKind::Person, EntityKind::Object],
            ScenarioCategory::HandObjectCoGr => &[
                EntityKind::LeftHand,
                EntityKind::RightHand,
                EntityKind::Object,
            ],
            ScenarioCategory::TemporalGr => &[],
        }
    }

    pub fn is_spatial(&self) -> bool {
        !matches!(self, ScenarioCategory::TemporalGr)
    }

    /// Stable identifier, also used in file names and CLI filters.
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioCategory::PersonGr => "person_gr",
            ScenarioCategory::ObjectGr => "object_gr",
            ScenarioCategory::PersonObjectCoGr => "person_object_gr",
            ScenarioCategory::HandObjectCoGr => "hand_object_gr",
            ScenarioCategory::TemporalGr => "temporal_gr",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        ALL_CATEGORIES.iter().copied().find(|c| c.label() == s)
    }
}

/// One annotated box at one timestamp within the action window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBox {
    pub t_s: f64,
    pub bbox: BoundingBox,
}

/// All annotated boxes for one entity kind across the action duration.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityTrack {
    pub kind: EntityKind,
    pub boxes: Vec<TrackBox>,
}

impl EntityTrack {
    pub fn gt_boxes(&self) -> Vec<BoundingBox> {
        self.boxes.iter().map(|b| b.bbox).collect()
    }
}

/// Metadata for the referenced clip; no media is decoded anywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoRef {
    pub path: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub n_frames: u32,
}

/// One benchmark tuple: clip, question, and ground-truth annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct TestInstance {
    pub id: String,
    pub category: ScenarioCategory,
    pub video: VideoRef,
    pub question: String,
    pub action_label: String,
    pub action_interval: TimeInterval,
    pub tracks: Vec<EntityTrack>,
}

impl TestInstance {
    pub fn track(&self, kind: EntityKind) -> Option<&EntityTrack> {
        self.tracks.iter().find(|t| t.kind == kind)
    }
}

/// A predicted moment: either a single timestamp or a duration. Durations
/// are collapsed to their midpoint when a point estimate is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictedTime {
    Point(f64),
    Interval(TimeInterval),
}

/// One model output for one test instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub instance_id: String,
    pub answer_text: String,
    pub boxes: BTreeMap<EntityKind, BoundingBox>,
    pub time: Option<PredictedTime>,
    pub action_label: Option<String>,
}

impl Prediction {
    /// Point estimate in seconds: points pass through, intervals collapse
    /// to their temporal midpoint.
    pub fn normalized_time_s(&self) -> Result<f64, DataModelError> {
        match self.time {
            Some(PredictedTime::Point(t)) => Ok(t),
            Some(PredictedTime::Interval(iv)) => Ok(iv.midpoint()),
            None => Err(DataModelError::MissingTime),
        }
    }
}

/// Validates a fully parsed instance against every schema invariant.
pub(crate) fn validate_instance(inst: &TestInstance) -> Result<(), DataModelError> {
    let id = &inst.id;
    if !inst.video.fps.is_finite() || inst.video.fps <= 0.0 {
        return Err(DataModelError::schema(id, "video.fps", "fps must be > 0"));
    }
    if inst.video.n_frames < 1 {
        return Err(DataModelError::schema(
            id,
            "video.n_frames",
            "frame count must be >= 1",
        ));
    }

    let required = inst.category.required_kinds();
    let mut seen: Vec<EntityKind> = Vec::new();
    for track in &inst.tracks {
        if seen.contains(&track.kind) {
            return Err(DataModelError::schema(
                id,
                "tracks",
                format!("duplicate track for entity kind {}", track.kind.label()),
            ));
        }
        seen.push(track.kind);
        if !required.contains(&track.kind) {
            return Err(DataModelError::schema(
                id,
                "tracks",
                format!(
                    "entity kind {} is not part of category {}",
                    track.kind.label(),
                    inst.category.label()
                ),
            ));
        }
    }
    for kind in required {
        if !seen.contains(kind) {
            return Err(DataModelError::schema(
                id,
                "tracks",
                format!(
                    "category {} requires a {} track",
                    inst.category.label(),
                    kind.label()
                ),
            ));
        }
    }

    for track in &inst.tracks {
        let field = format!("tracks[{}]", track.kind.label());
        if track.boxes.is_empty() {
            return Err(DataModelError::schema(
                id,
                field,
                "track needs at least one annotated box",
            ));
        }
        let mut prev = f64::NEG_INFINITY;
        for tb in &track.boxes {
            if !tb.t_s.is_finite() {
                return Err(DataModelError::schema(
                    id,
                    field.clone(),
                    "box timestamp must be finite",
                ));
            }
            if tb.t_s <= prev {
                return Err(DataModelError::schema(
                    id,
                    field.clone(),
                    "box timestamps must be strictly increasing",
                ));
            }
            prev = tb.t_s;
            if !inst.action_interval.contains(tb.t_s) {
                return Err(DataModelError::schema(
                    id,
                    field.clone(),
                    format!(
                        "box timestamp {} lies outside the action interval [{}, {}]",
                        tb.t_s, inst.action_interval.start_s, inst.action_interval.end_s
                    ),
                ));
            }
            check_box_in_frame(&tb.bbox, &inst.video)
                .map_err(|msg| DataModelError::schema(id, field.clone(), msg))?;
        }
    }
    Ok(())
}

/// Boxes are absolute pixels in the annotated resolution; anything more
/// than half a pixel outside the frame indicates a mixed-convention file.
fn check_box_in_frame(b: &BoundingBox, video: &VideoRef) -> Result<(), String> {
    let slack = 0.5;
    if b.x_max > video.width as f64 + slack || b.y_max > video.height as f64 + slack {
        return Err(format!(
            "box [{}, {}, {}, {}] exceeds the {}x{} frame by more than {slack} px",
            b.x_min, b.y_min, b.x_max, b.y_max, video.width, video.height
        ));
    }
    Ok(())
}
