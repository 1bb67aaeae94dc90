//! The sequence file: one JSON document per recorded or generated sequence.
//!
//! ```json
//! {
//!   "camera": {
//!     "intrinsics": {"fx": 1266.0, "fy": 1266.0, "cx0": 800.0, "cy0": 450.0, "width": 1600, "height": 900},
//!     "radar_to_camera": {"rotation": [[0,-1,0],[0,0,-1],[1,0,0]], "translation": [0,0.8,1.5]}
//!   },
//!   "frames": [
//!     {"frame_id": 0, "image_path": "optional.jpg",
//!      "radar": [{"x": 40.1, "y": -2.0, "z": 0.3, "v": -1.2, "is_clutter": false}],
//!      "gt": [{"x0": 700.5, "y0": 410.0, "x1": 760.2, "y1": 437.1, "class": "car", "occluded": false}]}
//!   ]
//! }
//! ```
//!
//! A frame may carry its own `camera` object when its calibration differs from
//! the sequence default. See `docs/sequence-format.md` for the full schema.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use roifuse_core::geometry::{CameraIntrinsics, Pose3, RadarPoint};
use roifuse_core::{BBox, ClassId, Frame, GroundTruthBox, RadarReturn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result, SchemaError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&Pose3> for PoseSpec {
    fn from(p: &Pose3) -> Self {
        Self {
            rotation: *p.rotation(),
            translation: *p.translation(),
        }
    }
}

/// Calibration shared by the frames of a sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub intrinsics: CameraIntrinsics,
    pub radar_to_camera: PoseSpec,
}

impl CameraSpec {
    pub fn new(intrinsics: CameraIntrinsics, radar_to_camera: &Pose3) -> Self {
        Self {
            intrinsics,
            radar_to_camera: radar_to_camera.into(),
        }
    }

    /// Validated calibration. `prefix` is prepended to field names in errors.
    pub fn resolve(
        &self,
        frame_id: Option<u64>,
        prefix: &str,
    ) -> Result<(CameraIntrinsics, Pose3), SchemaError> {
        self.intrinsics.validate().map_err(|e| {
            SchemaError::new(frame_id, format!("{prefix}intrinsics"), e.to_string())
        })?;
        let pose = Pose3::new(
            self.radar_to_camera.rotation,
            self.radar_to_camera.translation,
        )
        .map_err(|e| {
            SchemaError::new(frame_id, format!("{prefix}radar_to_camera"), e.to_string())
        })?;
        Ok((self.intrinsics, pose))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarRecord {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_clutter: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GtRecord {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub class: String,
    #[serde(default)]
    pub occluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub frame_id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<CameraSpec>,
    #[serde(default)]
    pub radar: Vec<RadarRecord>,
    #[serde(default)]
    pub gt: Vec<GtRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub camera: CameraSpec,
    pub frames: Vec<FrameRecord>,
}

/// Deserializes `value`, reporting failures by field path under `prefix`.
fn typed<T: DeserializeOwned>(
    value: Value,
    frame_id: Option<u64>,
    prefix: &str,
) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(value).map_err(|err| {
        let path = err.path().to_string();
        let field = match (prefix.is_empty(), path.as_str()) {
            (true, _) => path,
            (false, ".") => prefix.to_string(),
            (false, _) => format!("{prefix}.{path}"),
        };
        SchemaError::new(frame_id, field, err.into_inner().to_string())
    })
}

impl FrameRecord {
    fn to_frame(&self, default_camera: &(CameraIntrinsics, Pose3)) -> Result<Frame, SchemaError> {
        let id = Some(self.frame_id);
        let (intrinsics, radar_to_camera) = match &self.camera {
            Some(c) => c.resolve(id, "camera.")?,
            None => *default_camera,
        };
        let radar = self
            .radar
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let point = RadarPoint::new(r.x, r.y, r.z, r.v)
                    .map_err(|e| SchemaError::new(id, format!("radar[{i}]"), e.to_string()))?;
                Ok(RadarReturn {
                    point,
                    is_clutter: r.is_clutter,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        let (w, h) = (intrinsics.width as f64, intrinsics.height as f64);
        let ground_truth = self
            .gt
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let class_id = ClassId::from_label(&g.class).ok_or_else(|| {
                    SchemaError::new(
                        id,
                        format!("gt[{i}].class"),
                        format!("unknown class `{}`", g.class),
                    )
                })?;
                let bbox = BBox::new(g.x0, g.y0, g.x1, g.y1);
                if !bbox.is_valid() {
                    return Err(SchemaError::new(
                        id,
                        format!("gt[{i}]"),
                        "box must be finite with x0 < x1 and y0 < y1",
                    ));
                }
                if !BBox::new(0.0, 0.0, w, h).contains(&bbox) {
                    return Err(SchemaError::new(
                        id,
                        format!("gt[{i}]"),
                        format!(
                            "box ({}, {}, {}, {}) extends past the {}x{} image",
                            g.x0, g.y0, g.x1, g.y1, w, h
                        ),
                    ));
                }
                Ok(GroundTruthBox {
                    bbox,
                    class_id,
                    occluded: g.occluded,
                })
            })
            .collect::<Result<Vec<_>, SchemaError>>()?;
        Ok(Frame {
            frame_id: self.frame_id,
            image_path: self.image_path.clone(),
            radar,
            radar_to_camera,
            intrinsics,
            ground_truth,
        })
    }

    fn from_frame(frame: &Frame, default_camera: &CameraSpec) -> Self {
        let own = CameraSpec::new(frame.intrinsics, &frame.radar_to_camera);
        FrameRecord {
            frame_id: frame.frame_id,
            image_path: frame.image_path.clone(),
            camera: (own != *default_camera).then_some(own),
            radar: frame
                .radar
                .iter()
                .map(|r| RadarRecord {
                    x: r.point.x,
                    y: r.point.y,
                    z: r.point.z,
                    v: r.point.radial_velocity,
                    is_clutter: r.is_clutter,
                })
                .collect(),
            gt: frame
                .ground_truth
                .iter()
                .map(|g| GtRecord {
                    x0: g.bbox.x0,
                    y0: g.bbox.y0,
                    x1: g.bbox.x1,
                    y1: g.bbox.y1,
                    class: g.class_id.as_str().to_string(),
                    occluded: g.occluded,
                })
                .collect(),
        }
    }
}

/// Parses and validates a sequence document.
pub fn frames_from_value(doc: Value) -> Result<Vec<Frame>, SchemaError> {
    let Value::Object(mut top) = doc else {
        return Err(SchemaError::new(None, ".", "top level must be an object"));
    };
    let camera_value = top
        .remove("camera")
        .ok_or_else(|| SchemaError::new(None, "camera", "missing field `camera`"))?;
    let camera: CameraSpec = typed(camera_value, None, "camera")?;
    let default_camera = camera.resolve(None, "camera.")?;
    let frames_value = top
        .remove("frames")
        .ok_or_else(|| SchemaError::new(None, "frames", "missing field `frames`"))?;
    let Value::Array(items) = frames_value else {
        return Err(SchemaError::new(None, "frames", "must be an array"));
    };
    let mut seen = HashSet::new();
    let mut frames = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let frame_id = item.get("frame_id").and_then(Value::as_u64);
        let record: FrameRecord = typed(item, frame_id, "").map_err(|e| match frame_id {
            Some(_) => e,
            None => SchemaError::new(None, format!("frames[{i}].{}", e.field), e.message),
        })?;
        if !seen.insert(record.frame_id) {
            return Err(SchemaError::new(frame_id, "frame_id", "duplicate frame_id"));
        }
        frames.push(record.to_frame(&default_camera)?);
    }
    Ok(frames)
}

/// Builds the document for `frames`. The first frame's calibration becomes
/// the sequence default. An empty sequence needs an explicit camera.
pub fn to_sequence_file(frames: &[Frame], camera: Option<&CameraSpec>) -> Result<SequenceFile> {
    let camera = match (camera, frames.first()) {
        (Some(c), _) => c.clone(),
        (None, Some(f)) => CameraSpec::new(f.intrinsics, &f.radar_to_camera),
        (None, None) => {
            return Err(Error::Config(
                "cannot infer camera for an empty sequence".into(),
            ))
        }
    };
    Ok(SequenceFile {
        frames: frames
            .iter()
            .map(|f| FrameRecord::from_frame(f, &camera))
            .collect(),
        camera,
    })
}

pub fn to_json(frames: &[Frame], camera: Option<&CameraSpec>) -> Result<String> {
    let doc = to_sequence_file(frames, camera)?;
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Report(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str, path: &Path) -> Result<Vec<Frame>> {
    let doc: Value = serde_json::from_str(text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(frames_from_value(doc)?)
}

pub fn save_frames(frames: &[Frame], path: &Path) -> Result<()> {
    save_frames_with_camera(frames, None, path)
}

pub fn save_frames_with_camera(
    frames: &[Frame],
    camera: Option<&CameraSpec>,
    path: &Path,
) -> Result<()> {
    let text = to_json(frames, camera)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_frames(path: &Path) -> Result<Vec<Frame>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text, path)
}

/// Outcome of [`convert_records`].
#[derive(Debug, Clone, PartialEq)]
pub struct Conversion {
    pub frames: Vec<Frame>,
    /// Ground-truth entries whose label had no mapping and were left out.
    pub dropped_labels: BTreeMap<String, usize>,
}

/// Assembles a sequence from per-frame records exported elsewhere (one JSON
/// object per line, same frame schema as the sequence file). Labels are
/// looked up in `class_map` first, then as evaluation class names; anything
/// else is dropped and counted.
pub fn convert_records(
    camera: &CameraSpec,
    records: &Path,
    class_map: &BTreeMap<String, String>,
) -> Result<Conversion> {
    let file = fs::File::open(records).map_err(|e| Error::io(records, e))?;
    let mut items = Vec::new();
    let mut dropped: BTreeMap<String, usize> = BTreeMap::new();
    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(records, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value = serde_json::from_str(&line).map_err(|e| {
            Error::Config(format!("{} line {}: {e}", records.display(), line_no + 1))
        })?;
        if let Some(Value::Array(gts)) = value.get_mut("gt") {
            gts.retain_mut(|g| {
                let Some(label) = g.get("class").and_then(Value::as_str).map(str::to_string) else {
                    return true;
                };
                let mapped = class_map
                    .get(&label)
                    .cloned()
                    .or_else(|| ClassId::from_label(&label).map(|c| c.as_str().to_string()));
                match mapped {
                    Some(name) => {
                        g["class"] = Value::String(name);
                        true
                    }
                    None => {
                        *dropped.entry(label).or_default() += 1;
                        false
                    }
                }
            });
        }
        items.push(value);
    }
    let doc = serde_json::json!({
        "camera": serde_json::to_value(camera).map_err(|e| Error::Report(e.to_string()))?,
        "frames": items,
    });
    Ok(Conversion {
        frames: frames_from_value(doc)?,
        dropped_labels: dropped,
    })
}
