//! Primary + secondary detection fusion.
//!
//! The primary detector sees the whole frame; the secondary detector sees one
//! radar-centered crop at a time. Secondary boxes are mapped back to frame
//! coordinates, everything below the score floor is dropped, and the union is
//! filtered with greedy class-aware NMS.

use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::bbox::BBox;
use crate::detector::{Detection, Detector, DetectorError, Region};
use crate::frame::Frame;
use crate::proposals::{make_proposals_indexed, ProposalConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuseError {
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("{role} detector `{name}` has input size {actual}, configuration expects {expected}")]
    InputSizeMismatch {
        role: &'static str,
        name: alloc::string::String,
        actual: u32,
        expected: u32,
    },
    #[error("invalid fusion configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum NmsMode {
    /// Boxes only suppress boxes of the same class.
    #[default]
    ClassAware,
    ClassAgnostic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FusionConfig {
    pub primary_input_size: u32,
    pub secondary_input_size: u32,
    pub roi_size: u32,
    pub nms_iou: f64,
    pub score_floor: f64,
    pub nms_mode: NmsMode,
    pub max_proposals: usize,
    pub dedup_iou: Option<f64>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            primary_input_size: 416,
            secondary_input_size: 300,
            roi_size: 240,
            nms_iou: 0.45,
            score_floor: 0.05,
            nms_mode: NmsMode::ClassAware,
            max_proposals: 64,
            dedup_iou: None,
        }
    }
}

impl FusionConfig {
    pub fn proposal_config(&self) -> ProposalConfig {
        ProposalConfig {
            roi_size: self.roi_size,
            max_proposals: self.max_proposals,
            dedup_iou: self.dedup_iou,
        }
    }

    pub fn validate(&self) -> Result<(), FuseError> {
        if self.primary_input_size == 0 || self.secondary_input_size == 0 {
            return Err(FuseError::InvalidConfig("input sizes must be positive"));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(FuseError::InvalidConfig("nms_iou must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.score_floor) {
            return Err(FuseError::InvalidConfig("score_floor must be in [0, 1]"));
        }
        self.proposal_config()
            .validate()
            .map_err(FuseError::InvalidConfig)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedFrameResult {
    pub frame_id: u64,
    /// Final detections in full-image coordinates.
    pub detections: Vec<Detection>,
    pub n_rois: usize,
    /// Primary detections that survived remapping and the score floor.
    pub primary_count: usize,
    /// Secondary detections that survived remapping and the score floor.
    pub secondary_count: usize,
    /// Boxes removed by NMS.
    pub suppressed_count: usize,
}

/// Maps a detection from the detector-input frame of `region` back to
/// full-image coordinates and clips it to the image. Returns `None` when
/// nothing with positive area is left.
pub fn remap_to_frame(
    det: &Detection,
    region: &Region,
    input_size: u32,
    (width, height): (u32, u32),
) -> Option<Detection> {
    let inv = region.side() as f64 / input_size as f64;
    let (ox, oy) = (region.x0 as f64, region.y0 as f64);
    let b = BBox::new(
        det.bbox.x0 * inv + ox,
        det.bbox.y0 * inv + oy,
        det.bbox.x1 * inv + ox,
        det.bbox.y1 * inv + oy,
    )
    .clip(width as f64, height as f64);
    b.is_valid()
        .then_some(Detection::new(b, det.class_id, det.score))
}

/// Inverse of [`remap_to_frame`] without clipping: full-image coordinates to
/// the detector-input frame of `region`.
pub fn scale_into_region(det: &Detection, region: &Region, input_size: u32) -> Detection {
    let s = region.scale_to_input(input_size);
    let (ox, oy) = (region.x0 as f64, region.y0 as f64);
    Detection::new(
        BBox::new(
            (det.bbox.x0 - ox) * s,
            (det.bbox.y0 - oy) * s,
            (det.bbox.x1 - ox) * s,
            (det.bbox.y1 - oy) * s,
        ),
        det.class_id,
        det.score,
    )
}

/// Total order used by NMS: score desc, area desc, then coordinates and class
/// ascending so that the result never depends on input order.
pub fn nms_order(a: &Detection, b: &Detection) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.bbox.area().total_cmp(&a.bbox.area()))
        .then_with(|| a.bbox.x0.total_cmp(&b.bbox.x0))
        .then_with(|| a.bbox.y0.total_cmp(&b.bbox.y0))
        .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
        .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
        .then_with(|| a.class_id.cmp(&b.class_id))
}

/// Greedy class-aware NMS. Output is in kept order.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    nms_with_mode(dets, iou_threshold, NmsMode::ClassAware)
}

pub fn nms_with_mode(dets: &[Detection], iou_threshold: f64, mode: NmsMode) -> Vec<Detection> {
    let mut sorted: Vec<Detection> = dets.to_vec();
    sorted.sort_by(nms_order);
    let mut kept: Vec<Detection> = Vec::with_capacity(sorted.len());
    for d in sorted {
        let suppressed = kept.iter().any(|k| {
            (mode == NmsMode::ClassAgnostic || k.class_id == d.class_id)
                && k.bbox.iou(&d.bbox) >= iou_threshold
        });
        if !suppressed {
            kept.push(d);
        }
    }
    kept
}

/// Proposal regions for a frame: radar points projected, filtered to the
/// image, turned into fixed-size crops.
pub fn roi_regions(frame: &Frame, cfg: &FusionConfig) -> Vec<Region> {
    make_proposals_indexed(
        frame.projected_radar(),
        frame.image_size(),
        &cfg.proposal_config(),
    )
    .iter()
    .map(Region::from)
    .collect()
}

/// Remaps raw detector outputs, applies the score floor and runs NMS. This is
/// the sequential barrier of the pipeline; `secondary` may come from any
/// evaluation order.
pub fn aggregate(
    frame_id: u64,
    image_size: (u32, u32),
    primary: &[Detection],
    secondary: &[(Region, Vec<Detection>)],
    cfg: &FusionConfig,
) -> FusedFrameResult {
    let keep = |d: &Detection| d.score >= cfg.score_floor;
    let full = Region::full_image(image_size);
    let mut pool: Vec<Detection> = primary
        .iter()
        .filter_map(|d| remap_to_frame(d, &full, cfg.primary_input_size, image_size))
        .filter(keep)
        .collect();
    let primary_count = pool.len();
    for (region, dets) in secondary {
        pool.extend(
            dets.iter()
                .filter_map(|d| remap_to_frame(d, region, cfg.secondary_input_size, image_size))
                .filter(keep),
        );
    }
    let secondary_count = pool.len() - primary_count;
    let detections = nms_with_mode(&pool, cfg.nms_iou, cfg.nms_mode);
    FusedFrameResult {
        frame_id,
        suppressed_count: pool.len() - detections.len(),
        detections,
        n_rois: secondary.len(),
        primary_count,
        secondary_count,
    }
}

pub(crate) fn check_input_size(
    role: &'static str,
    det: &dyn Detector,
    expected: u32,
) -> Result<(), FuseError> {
    if det.input_size() != expected {
        return Err(FuseError::InputSizeMismatch {
            role,
            name: det.name().into(),
            actual: det.input_size(),
            expected,
        });
    }
    Ok(())
}

/// Validates the configuration and that both detectors run at the configured
/// input sizes.
pub fn check_detectors(
    primary: &dyn Detector,
    secondary: Option<&dyn Detector>,
    cfg: &FusionConfig,
) -> Result<(), FuseError> {
    cfg.validate()?;
    check_input_size("primary", primary, cfg.primary_input_size)?;
    if let Some(s) = secondary {
        check_input_size("secondary", s, cfg.secondary_input_size)?;
    }
    Ok(())
}

/// Runs the full fusion pipeline on one frame, sequentially.
pub fn fuse_frame(
    frame: &Frame,
    primary: &dyn Detector,
    secondary: &dyn Detector,
    cfg: &FusionConfig,
) -> Result<FusedFrameResult, FuseError> {
    check_detectors(primary, Some(secondary), cfg)?;
    let size = frame.image_size();
    let primary_dets = primary.detect(frame, &Region::full_image(size))?;
    let secondary_dets = roi_regions(frame, cfg)
        .into_iter()
        .map(|r| secondary.detect(frame, &r).map(|d| (r, d)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(
        frame.frame_id,
        size,
        &primary_dets,
        &secondary_dets,
        cfg,
    ))
}

/// Baseline: the primary detector alone, with the same score floor and NMS.
pub fn primary_only_frame(
    frame: &Frame,
    primary: &dyn Detector,
    cfg: &FusionConfig,
) -> Result<FusedFrameResult, FuseError> {
    check_detectors(primary, None, cfg)?;
    let size = frame.image_size();
    let dets = primary.detect(frame, &Region::full_image(size))?;
    Ok(aggregate(frame.frame_id, size, &dets, &[], cfg))
}
