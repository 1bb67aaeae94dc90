//! Radar-driven region proposals.
//!
//! Each projected radar point inside the image becomes one square region of a
//! fixed size centered on the point. Regions that would cross the image border
//! are shifted back inside rather than clipped, so every crop keeps the same
//! size (and therefore the same rescale factor) unless the image itself is
//! smaller than the region.

use alloc::vec::Vec;

use crate::bbox::BBox;
use crate::geometry::PixelPoint;

/// Square crop in full-image integer pixel coordinates, `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoiProposal {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    /// Index of the radar point that produced this region.
    pub source_point_index: usize,
}

impl RoiProposal {
    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn bbox(&self) -> BBox {
        BBox::new(
            self.x0 as f64,
            self.y0 as f64,
            self.x1 as f64,
            self.y1 as f64,
        )
    }

    pub fn iou(&self, other: &RoiProposal) -> f64 {
        self.bbox().iou(&other.bbox())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProposalConfig {
    pub roi_size: u32,
    pub max_proposals: usize,
    /// When set, proposals overlapping an earlier one at or above this IoU are dropped.
    pub dedup_iou: Option<f64>,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            roi_size: 240,
            max_proposals: 64,
            dedup_iou: None,
        }
    }
}

impl ProposalConfig {
    pub const MIN_ROI_SIZE: u32 = 16;

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.roi_size < Self::MIN_ROI_SIZE {
            return Err("roi_size must be at least 16");
        }
        if self.max_proposals == 0 {
            return Err("max_proposals must be at least 1");
        }
        if let Some(t) = self.dedup_iou {
            if !(t > 0.0 && t <= 1.0) {
                return Err("dedup_iou must be in (0, 1]");
            }
        }
        Ok(())
    }
}

/// Places a `size`-long interval centered at `center` inside `[0, extent)`.
fn place(center: i64, size: u32, extent: u32) -> (u32, u32) {
    if size >= extent {
        return (0, extent);
    }
    let lo = (center - (size / 2) as i64).clamp(0, (extent - size) as i64) as u32;
    (lo, lo + size)
}

fn in_image(p: &PixelPoint, width: u32, height: u32) -> bool {
    p.cx.is_finite()
        && p.cy.is_finite()
        && p.cx >= 0.0
        && p.cy >= 0.0
        && p.cx < width as f64
        && p.cy < height as f64
}

/// One proposal per in-image point, in input order. The source index of each
/// proposal is the point's position in `points`.
pub fn make_proposals(
    points: &[PixelPoint],
    image_size: (u32, u32),
    cfg: &ProposalConfig,
) -> Vec<RoiProposal> {
    make_proposals_indexed(points.iter().copied().enumerate(), image_size, cfg)
}

/// Like [`make_proposals`], with caller-supplied source indices (used when
/// some radar points were already dropped, e.g. behind the camera).
pub fn make_proposals_indexed<I>(
    points: I,
    (width, height): (u32, u32),
    cfg: &ProposalConfig,
) -> Vec<RoiProposal>
where
    I: IntoIterator<Item = (usize, PixelPoint)>,
{
    let mut out: Vec<RoiProposal> = points
        .into_iter()
        .filter(|(_, p)| in_image(p, width, height))
        .map(|(idx, p)| {
            // round-half-away-from-zero
            let (cx, cy) = (libm::round(p.cx) as i64, libm::round(p.cy) as i64);
            let (x0, x1) = place(cx, cfg.roi_size, width);
            let (y0, y1) = place(cy, cfg.roi_size, height);
            RoiProposal {
                x0,
                y0,
                x1,
                y1,
                source_point_index: idx,
            }
        })
        .collect();
    if let Some(t) = cfg.dedup_iou {
        out = dedup_proposals(&out, t);
    }
    out.truncate(cfg.max_proposals);
    out
}

/// Greedy, order-preserving removal of proposals that overlap an already
/// retained one with IoU ≥ `iou_threshold`.
pub fn dedup_proposals(proposals: &[RoiProposal], iou_threshold: f64) -> Vec<RoiProposal> {
    let mut kept: Vec<RoiProposal> = Vec::with_capacity(proposals.len());
    for p in proposals {
        if kept.iter().all(|k| k.iou(p) < iou_threshold) {
            kept.push(*p);
        }
    }
    kept
}
