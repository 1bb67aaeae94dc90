//! Ground-truth matching and recall/precision accounting.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::bbox::BBox;
use crate::detector::{ClassId, Detection};
use crate::fusion::FusedFrameResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub bbox: BBox,
    pub class_id: ClassId,
    /// Heavily occluded objects are excluded from evaluation entirely.
    pub occluded: bool,
}

impl GroundTruthBox {
    pub fn new(bbox: BBox, class_id: ClassId) -> Self {
        Self {
            bbox,
            class_id,
            occluded: false,
        }
    }
}

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    a.iou(b)
}

/// Greedy matching of detections to ground truth.
///
/// Detections are visited by descending score (ties: lower index first); each
/// takes the unmatched, non-occluded, same-class ground truth with the highest
/// IoU at or above `iou_threshold` (ties: lower ground-truth index). The
/// result has one entry per detection, in detection index order.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
) -> Vec<(usize, Option<usize>)> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score).then(a.cmp(&b)));
    let mut taken = vec![false; gts.len()];
    let mut assignment = vec![None; dets.len()];
    for di in order {
        let d = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if taken[gi] || g.occluded || g.class_id != d.class_id {
                continue;
            }
            let v = d.bbox.iou(&g.bbox);
            if v >= iou_threshold && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
            assignment[di] = Some(gi);
        }
    }
    assignment.into_iter().enumerate().collect()
}

/// Object area below which a ground truth counts as small (px²).
pub const SMALL_OBJECT_AREA: f64 = 1000.0;

/// Log-spaced area histogram with explicit under/overflow counters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AreaHistogram {
    /// `counts.len() + 1` ascending edges in px².
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub below: u64,
    pub above: u64,
}

impl AreaHistogram {
    /// Edges `10^1.5 … 10^5` in eight log-uniform steps.
    pub fn standard() -> Self {
        let (lo, hi, n) = (1.5_f64, 5.0_f64, 8usize);
        let edges = (0..=n)
            .map(|i| libm::pow(10.0, lo + (hi - lo) * i as f64 / n as f64))
            .collect();
        Self {
            edges,
            counts: vec![0; n],
            below: 0,
            above: 0,
        }
    }

    pub fn add(&mut self, area: f64) {
        let n = self.counts.len();
        if area < self.edges[0] {
            self.below += 1;
        } else if area >= self.edges[n] {
            self.above += 1;
        } else {
            let i = self.edges[1..].partition_point(|&e| e <= area);
            self.counts[i] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.below + self.above + self.counts.iter().sum::<u64>()
    }

    /// Count of entries with area at or above `edges[k]`.
    pub fn at_or_above_edge(&self, k: usize) -> u64 {
        self.counts[k.min(self.counts.len())..].iter().sum::<u64>() + self.above
    }
}

/// Counts split at [`SMALL_OBJECT_AREA`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SizeSplit {
    pub small: u64,
    pub large: u64,
}

impl SizeSplit {
    fn add(&mut self, area: f64) {
        if area < SMALL_OBJECT_AREA {
            self.small += 1;
        } else {
            self.large += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrameMetrics {
    pub frame_id: u64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// `None` when the frame has no evaluable ground truth.
    pub recall: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub iou_threshold: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    /// `TP / (TP + FN)`, 0 when there is no evaluable ground truth.
    pub recall: f64,
    /// `TP / (TP + FP)`, 0 when there are no detections.
    pub precision: f64,
    pub per_frame: Vec<FrameMetrics>,
    /// Matched ground truths by ground-truth box area.
    pub tp_by_area_bucket: AreaHistogram,
    /// All evaluable ground truths by area.
    pub gt_by_area_bucket: AreaHistogram,
    pub tp_by_size: SizeSplit,
    pub gt_by_size: SizeSplit,
}

impl MetricsReport {
    pub fn per_frame_recall(&self) -> Vec<Option<f64>> {
        self.per_frame.iter().map(|f| f.recall).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("{results} result frames but {truths} ground-truth frames")]
    LengthMismatch { results: usize, truths: usize },
    #[error("frame {index}: result for frame_id {result_id} paired with ground truth for frame_id {truth_id}")]
    FrameMismatch {
        index: usize,
        result_id: u64,
        truth_id: u64,
    },
    #[error("iou threshold must be in (0, 1]")]
    InvalidThreshold,
}

/// Ground truth of one frame, borrowed.
#[derive(Debug, Clone, Copy)]
pub struct FrameTruth<'a> {
    pub frame_id: u64,
    pub boxes: &'a [GroundTruthBox],
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Aggregates matching over a sequence. `results[i]` and `truth[i]` must
/// describe the same frame.
pub fn evaluate(
    results: &[FusedFrameResult],
    truth: &[FrameTruth<'_>],
    iou_threshold: f64,
) -> Result<MetricsReport, MetricsError> {
    if !(iou_threshold > 0.0 && iou_threshold <= 1.0) {
        return Err(MetricsError::InvalidThreshold);
    }
    if results.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            results: results.len(),
            truths: truth.len(),
        });
    }
    let mut report = MetricsReport {
        iou_threshold,
        true_positives: 0,
        false_positives: 0,
        false_negatives: 0,
        recall: 0.0,
        precision: 0.0,
        per_frame: Vec::with_capacity(results.len()),
        tp_by_area_bucket: AreaHistogram::standard(),
        gt_by_area_bucket: AreaHistogram::standard(),
        tp_by_size: SizeSplit::default(),
        gt_by_size: SizeSplit::default(),
    };
    for (index, (res, gt)) in results.iter().zip(truth).enumerate() {
        if res.frame_id != gt.frame_id {
            return Err(MetricsError::FrameMismatch {
                index,
                result_id: res.frame_id,
                truth_id: gt.frame_id,
            });
        }
        let matches = match_detections(&res.detections, gt.boxes, iou_threshold);
        let mut matched = vec![false; gt.boxes.len()];
        let mut tp = 0u64;
        for (_, g) in &matches {
            if let Some(g) = g {
                matched[*g] = true;
                tp += 1;
            }
        }
        let fp = res.detections.len() as u64 - tp;
        let mut evaluable = 0u64;
        for (g, hit) in gt.boxes.iter().zip(&matched) {
            if g.occluded {
                continue;
            }
            evaluable += 1;
            let area = g.bbox.area();
            report.gt_by_area_bucket.add(area);
            report.gt_by_size.add(area);
            if *hit {
                report.tp_by_area_bucket.add(area);
                report.tp_by_size.add(area);
            }
        }
        let fn_ = evaluable - tp;
        report.true_positives += tp;
        report.false_positives += fp;
        report.false_negatives += fn_;
        report.per_frame.push(FrameMetrics {
            frame_id: res.frame_id,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            recall: (evaluable > 0).then(|| tp as f64 / evaluable as f64),
        });
    }
    report.recall = ratio(
        report.true_positives,
        report.true_positives + report.false_negatives,
    );
    report.precision = ratio(
        report.true_positives,
        report.true_positives + report.false_positives,
    );
    Ok(report)
}
