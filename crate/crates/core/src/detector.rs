//! The detector contract, a deterministic synthetic detector and the
//! detector compute-cost catalog.
//!
//! A detector sees one *region* of a frame (the full image or a radar crop),
//! rescales it uniformly so its longer side equals the detector input size
//! (zero-padding the shorter side to a square), and reports boxes in that
//! input coordinate frame. [`crate::fusion::remap_to_frame`] maps them back.
//!
//! [`SyntheticDetector`] stands in for a neural network. It never looks at
//! pixels: each ground-truth object in the region is detected with a
//! probability that ramps linearly with the object's pixel area *after*
//! rescaling, which is what makes small objects easier to find inside an
//! upscaled crop than in a downscaled full frame.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::bbox::BBox;
use crate::frame::Frame;
use crate::proposals::RoiProposal;
use crate::rng::{hash_key, KeyedStream};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectorError {
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
    #[error("invalid detector profile: {0}")]
    InvalidProfile(&'static str),
    #[error("invalid detector catalog: {0}")]
    InvalidCatalog(String),
    #[error("detector backend failed: {0}")]
    Backend(String),
}

/// Evaluation classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ClassId {
    Car,
    Truck,
    Bus,
    Pedestrian,
    Bicycle,
    Motorcycle,
}

impl ClassId {
    pub const ALL: [ClassId; 6] = [
        ClassId::Car,
        ClassId::Truck,
        ClassId::Bus,
        ClassId::Pedestrian,
        ClassId::Bicycle,
        ClassId::Motorcycle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassId::Car => "car",
            ClassId::Truck => "truck",
            ClassId::Bus => "bus",
            ClassId::Pedestrian => "pedestrian",
            ClassId::Bicycle => "bicycle",
            ClassId::Motorcycle => "motorcycle",
        }
    }

    /// Canonical names plus the COCO label `person`. Case-insensitive.
    pub fn from_label(label: &str) -> Option<ClassId> {
        let l = label.trim();
        if l.eq_ignore_ascii_case("person") {
            return Some(ClassId::Pedestrian);
        }
        Self::ALL
            .into_iter()
            .find(|c| l.eq_ignore_ascii_case(c.as_str()))
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    pub class_id: ClassId,
    pub score: f64,
}

impl Detection {
    pub fn new(bbox: BBox, class_id: ClassId, score: f64) -> Self {
        Self {
            bbox,
            class_id,
            score,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.bbox.is_valid() && (0.0..=1.0).contains(&self.score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionKind {
    FullImage,
    Roi,
}

/// The part of a frame handed to a detector, in full-image integer pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub kind: RegionKind,
}

impl Region {
    pub fn full_image((width, height): (u32, u32)) -> Self {
        Self {
            x0: 0,
            y0: 0,
            x1: width,
            y1: height,
            kind: RegionKind::FullImage,
        }
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    /// Side of the zero-padded square the region is scaled from.
    pub fn side(&self) -> u32 {
        self.width().max(self.height())
    }

    /// Uniform factor mapping region pixels to detector-input pixels.
    pub fn scale_to_input(&self, input_size: u32) -> f64 {
        input_size as f64 / self.side() as f64
    }

    /// Extent of the real (unpadded) content in detector-input pixels.
    pub fn input_content_extent(&self, input_size: u32) -> (f64, f64) {
        let s = self.scale_to_input(input_size);
        (self.width() as f64 * s, self.height() as f64 * s)
    }

    pub fn bbox(&self) -> BBox {
        BBox::new(
            self.x0 as f64,
            self.y0 as f64,
            self.x1 as f64,
            self.y1 as f64,
        )
    }

    /// Stream key component. Depends only on the bounds and kind, never on the
    /// position of the region in a proposal list.
    pub fn key(&self) -> u64 {
        let kind = match self.kind {
            RegionKind::FullImage => 0,
            RegionKind::Roi => 1,
        };
        hash_key(&[
            kind,
            self.x0 as u64,
            self.y0 as u64,
            self.x1 as u64,
            self.y1 as u64,
        ])
    }

    pub fn is_valid_in(&self, (width, height): (u32, u32)) -> bool {
        self.x0 < self.x1 && self.y0 < self.y1 && self.x1 <= width && self.y1 <= height
    }
}

impl From<&RoiProposal> for Region {
    fn from(r: &RoiProposal) -> Self {
        Self {
            x0: r.x0,
            y0: r.y0,
            x1: r.x1,
            y1: r.y1,
            kind: RegionKind::Roi,
        }
    }
}

/// Anything that turns a frame region into detections.
///
/// Implementations must be callable from several threads at once. Backends
/// that cannot actually run concurrently (a single accelerator context, an
/// external process) report [`Detector::exclusive`] and the pipeline
/// serializes their calls.
pub trait Detector: Send + Sync {
    fn name(&self) -> &str;

    /// Side of the square network input.
    fn input_size(&self) -> u32;

    fn exclusive(&self) -> bool {
        false
    }

    /// Detections for `region` of `frame`, in detector-input coordinates.
    fn detect(&self, frame: &Frame, region: &Region) -> Result<Vec<Detection>, DetectorError>;
}

/// Behavioral parameters of [`SyntheticDetector`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DetectorProfile {
    pub input_size: u32,
    pub p_max: f64,
    /// Effective area (px², after rescaling) at which detection starts.
    pub area_lo: f64,
    /// Effective area at which detection probability reaches `p_max`.
    pub area_hi: f64,
    /// Objects with a smaller visible fraction inside the region are missed.
    pub visibility_min: f64,
    /// Per-axis localization noise as a fraction of the box dimension.
    pub loc_noise_frac: f64,
    /// Expected number of spurious boxes per region.
    pub false_positive_rate: f64,
    pub seed: u64,
}

impl Default for DetectorProfile {
    fn default() -> Self {
        Self {
            input_size: 300,
            p_max: 0.98,
            area_lo: 400.0,
            area_hi: 4000.0,
            visibility_min: 0.25,
            loc_noise_frac: 0.03,
            false_positive_rate: 0.0,
            seed: 0,
        }
    }
}

impl DetectorProfile {
    pub fn new(input_size: u32, seed: u64) -> Self {
        Self {
            input_size,
            seed,
            ..Self::default()
        }
    }

    /// Same profile with localization noise and false positives switched off.
    pub fn noise_free(self) -> Self {
        Self {
            loc_noise_frac: 0.0,
            false_positive_rate: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), DetectorError> {
        let finite = [
            self.p_max,
            self.area_lo,
            self.area_hi,
            self.visibility_min,
            self.loc_noise_frac,
            self.false_positive_rate,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(DetectorError::InvalidProfile("non-finite parameter"));
        }
        if self.input_size == 0 {
            return Err(DetectorError::InvalidProfile("input_size must be positive"));
        }
        if !(0.0 < self.area_lo && self.area_lo < self.area_hi) {
            return Err(DetectorError::InvalidProfile("need 0 < area_lo < area_hi"));
        }
        if !(0.0..=1.0).contains(&self.p_max) {
            return Err(DetectorError::InvalidProfile("p_max must be in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.visibility_min) {
            return Err(DetectorError::InvalidProfile(
                "visibility_min must be in [0, 1]",
            ));
        }
        if self.loc_noise_frac < 0.0 || self.false_positive_rate < 0.0 {
            return Err(DetectorError::InvalidProfile(
                "noise parameters must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Probability that an object is detected when `region` is rescaled to
/// `input_size`.
///
/// With `v` the visible fraction of the object inside the region, the result
/// is 0 for `v < visibility_min`, otherwise
/// `p_max · clamp((a_eff − area_lo) / (area_hi − area_lo), 0, 1)` where
/// `a_eff` is the visible area after rescaling.
pub fn detection_probability(
    gt: &BBox,
    region: &Region,
    input_size: u32,
    profile: &DetectorProfile,
) -> f64 {
    let area = gt.area();
    if area <= 0.0 {
        return 0.0;
    }
    let visible = gt.intersection_area(&region.bbox());
    let visibility = visible / area;
    if visibility <= 0.0 || visibility < profile.visibility_min {
        return 0.0;
    }
    let s = region.scale_to_input(input_size);
    let a_eff = visible * s * s;
    let ramp = ((a_eff - profile.area_lo) / (profile.area_hi - profile.area_lo)).clamp(0.0, 1.0);
    profile.p_max * ramp
}

/// Score floor for synthetic detections; keeps NMS ordering meaningful.
pub const MIN_SYNTHETIC_SCORE: f64 = 0.05;

const FALSE_POSITIVE_STREAM: u64 = u64::MAX;

/// Pixel-free stand-in for a neural detector. Deterministic for a fixed
/// (seed, frame id, region bounds) and safe to call concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDetector {
    name: String,
    profile: DetectorProfile,
}

impl SyntheticDetector {
    pub fn new(name: impl Into<String>, profile: DetectorProfile) -> Result<Self, DetectorError> {
        profile.validate()?;
        Ok(Self {
            name: name.into(),
            profile,
        })
    }

    pub fn profile(&self) -> &DetectorProfile {
        &self.profile
    }

    /// The random stream used for ground-truth object `object_index`.
    pub fn object_stream(
        &self,
        frame_id: u64,
        region: &Region,
        object_index: usize,
    ) -> KeyedStream {
        KeyedStream::new(&[
            self.profile.seed,
            frame_id,
            region.key(),
            object_index as u64,
        ])
    }

    fn false_positives(&self, frame_id: u64, region: &Region, out: &mut Vec<Detection>) {
        let rate = self.profile.false_positive_rate;
        if rate <= 0.0 {
            return;
        }
        let mut s = KeyedStream::new(&[
            self.profile.seed,
            frame_id,
            region.key(),
            FALSE_POSITIVE_STREAM,
        ]);
        let whole = libm::floor(rate);
        let extra = if s.next_f64() < rate - whole { 1 } else { 0 };
        let count = whole as u64 + extra;
        let (w, h) = region.input_content_extent(self.profile.input_size);
        for _ in 0..count {
            let bw = w * (0.05 + 0.25 * s.next_f64());
            let bh = h * (0.05 + 0.25 * s.next_f64());
            let x0 = (w - bw) * s.next_f64();
            let y0 = (h - bh) * s.next_f64();
            let class_id = ClassId::ALL[s.next_below(ClassId::ALL.len() as u64) as usize];
            let score = MIN_SYNTHETIC_SCORE + 0.45 * s.next_f64();
            out.push(Detection::new(
                BBox::new(x0, y0, x0 + bw, y0 + bh),
                class_id,
                score,
            ));
        }
    }
}

impl Detector for SyntheticDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn input_size(&self) -> u32 {
        self.profile.input_size
    }

    fn detect(&self, frame: &Frame, region: &Region) -> Result<Vec<Detection>, DetectorError> {
        if !region.is_valid_in(frame.image_size()) {
            return Err(DetectorError::Backend(
                "region outside the frame".to_string(),
            ));
        }
        let input = self.profile.input_size;
        let scale = region.scale_to_input(input);
        let (content_w, content_h) = region.input_content_extent(input);
        let region_box = region.bbox();
        let mut out = Vec::new();
        for (idx, gt) in frame.ground_truth.iter().enumerate() {
            let p = detection_probability(&gt.bbox, region, input, &self.profile);
            if p <= 0.0 {
                continue;
            }
            let mut stream = self.object_stream(frame.frame_id, region, idx);
            if stream.next_f64() >= p {
                continue;
            }
            let Some(visible) = gt.bbox.intersect(&region_box) else {
                continue;
            };
            let mut b = BBox::new(
                (visible.x0 - region_box.x0) * scale,
                (visible.y0 - region_box.y0) * scale,
                (visible.x1 - region_box.x0) * scale,
                (visible.y1 - region_box.y0) * scale,
            );
            let frac = self.profile.loc_noise_frac;
            if frac > 0.0 {
                let (sx, sy) = (frac * b.width(), frac * b.height());
                b.x0 += sx * stream.next_gaussian();
                b.x1 += sx * stream.next_gaussian();
                b.y0 += sy * stream.next_gaussian();
                b.y1 += sy * stream.next_gaussian();
                b = BBox::new(
                    b.x0.min(b.x1),
                    b.y0.min(b.y1),
                    b.x0.max(b.x1),
                    b.y0.max(b.y1),
                );
            }
            let b = b.clip(content_w, content_h);
            if !b.is_valid() {
                continue;
            }
            out.push(Detection::new(
                b,
                gt.class_id,
                p.clamp(MIN_SYNTHETIC_SCORE, 1.0),
            ));
        }
        self.false_positives(frame.frame_id, region, &mut out);
        Ok(out)
    }
}

/// One `(detector, input size, GFLOPs)` anchor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatalogEntry {
    pub name: String,
    pub input_size: u32,
    pub gflops: f64,
}

/// Per-inference cost anchors for the supported detectors.
pub const BUILTIN_ANCHORS: &[(&str, u32, f64)] = &[
    ("yolov3-spp", 416, 66.4),
    ("yolov3-spp", 640, 157.0),
    ("yolov3-spp", 1080, 447.0),
    ("yolov3-spp", 1900, 1384.6),
    ("tiny-yolov3", 200, 1.3),
    ("tiny-yolov3", 300, 2.9),
    ("tiny-yolov3", 400, 5.2),
    ("tiny-yolov3", 600, 14.1),
    ("ssdlite", 200, 0.20),
    ("ssdlite", 300, 0.43),
    ("ssdlite", 400, 0.74),
];

/// Compute cost per inference, interpolated quadratically in input size from
/// the nearest anchor: `g(s) = g(s₀)·(s/s₀)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlopsCatalog {
    entries: Vec<CatalogEntry>,
}

impl FlopsCatalog {
    pub fn builtin() -> Self {
        Self {
            entries: BUILTIN_ANCHORS
                .iter()
                .map(|&(name, input_size, gflops)| CatalogEntry {
                    name: name.to_string(),
                    input_size,
                    gflops,
                })
                .collect(),
        }
    }

    pub fn from_entries(entries: Vec<CatalogEntry>) -> Result<Self, DetectorError> {
        for (i, e) in entries.iter().enumerate() {
            if e.name.trim().is_empty() {
                return Err(DetectorError::InvalidCatalog(alloc::format!(
                    "entry {i}: empty name"
                )));
            }
            if e.input_size == 0 || !(e.gflops.is_finite() && e.gflops > 0.0) {
                return Err(DetectorError::InvalidCatalog(alloc::format!(
                    "entry {i} ({}): input_size and gflops must be positive",
                    e.name
                )));
            }
            let dup = entries[..i]
                .iter()
                .any(|o| o.name.eq_ignore_ascii_case(&e.name) && o.input_size == e.input_size);
            if dup {
                return Err(DetectorError::InvalidCatalog(alloc::format!(
                    "duplicate anchor {}@{}",
                    e.name,
                    e.input_size
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries
            .iter()
            .any(|e| e.name.eq_ignore_ascii_case(name))
    }

    /// GFLOPs for one inference of `name` at `input_size`. Ties between two
    /// equally near anchors go to the smaller one.
    pub fn flops_for(&self, name: &str, input_size: u32) -> Result<f64, DetectorError> {
        let nearest = self
            .entries
            .iter()
            .filter(|e| e.name.eq_ignore_ascii_case(name))
            .min_by_key(|e| (e.input_size.abs_diff(input_size), e.input_size))
            .ok_or_else(|| DetectorError::UnknownDetector(name.to_string()))?;
        if nearest.input_size == input_size {
            return Ok(nearest.gflops);
        }
        let ratio = input_size as f64 / nearest.input_size as f64;
        Ok(nearest.gflops * ratio * ratio)
    }
}

impl Default for FlopsCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

/// [`FlopsCatalog::flops_for`] on the built-in catalog.
pub fn flops_for(detector_name: &str, input_size: u32) -> Result<f64, DetectorError> {
    FlopsCatalog::builtin().flops_for(detector_name, input_size)
}
