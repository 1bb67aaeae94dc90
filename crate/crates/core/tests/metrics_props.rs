mod support;

use proptest::prelude::*;
use roifuse_core::fusion::FusedFrameResult;
use roifuse_core::metrics::FrameTruth;
use roifuse_core::{evaluate, match_detections, BBox, Detection, GroundTruthBox};
use support::oracles::{class_from, match_oracle, recount};

fn boxes() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.0f64..60.0, 0.0f64..60.0, 4.0f64..30.0, 4.0f64..30.0)
}

fn dets(n: usize) -> impl Strategy<Value = Vec<Detection>> {
    prop::collection::vec(
        (boxes(), 0u32..2, 0u32..10).prop_map(|((x, y, w, h), c, s)| {
            Detection::new(
                BBox::new(x, y, x + w, y + h),
                class_from(c),
                s as f64 / 10.0,
            )
        }),
        0..=n,
    )
}

fn gts(n: usize) -> impl Strategy<Value = Vec<GroundTruthBox>> {
    prop::collection::vec(
        (boxes(), 0u32..2, prop::bool::weighted(0.15)).prop_map(|((x, y, w, h), c, occ)| {
            GroundTruthBox {
                bbox: BBox::new(x, y, x + w, y + h),
                class_id: class_from(c),
                occluded: occ,
            }
        }),
        0..=n,
    )
}

fn result(frame_id: u64, detections: Vec<Detection>) -> FusedFrameResult {
    FusedFrameResult {
        frame_id,
        detections,
        n_rois: 0,
        primary_count: 0,
        secondary_count: 0,
        suppressed_count: 0,
    }
}

proptest! {
    #[test]
    fn matching_equals_stepwise_oracle(d in dets(8), g in gts(6), t in 0.05f64..0.9) {
        prop_assert_eq!(match_detections(&d, &g, t), match_oracle(&d, &g, t));
    }

    #[test]
    fn tp_plus_fn_is_evaluable_gt(frames in prop::collection::vec((dets(8), gts(6)), 1..6), t in 0.05f64..0.9) {
        let results: Vec<_> = frames.iter().enumerate().map(|(i, (d, _))| result(i as u64, d.clone())).collect();
        let truth: Vec<_> = frames.iter().enumerate().map(|(i, (_, g))| FrameTruth { frame_id: i as u64, boxes: g }).collect();
        let r = evaluate(&results, &truth, t).unwrap();
        let evaluable: u64 = frames.iter().map(|(_, g)| g.iter().filter(|b| !b.occluded).count() as u64).sum();
        prop_assert_eq!(r.true_positives + r.false_negatives, evaluable);
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (d, g) in &frames {
            let (a, b, c) = recount(&match_oracle(d, g, t), g);
            tp += a; fp += b; fn_ += c;
        }
        prop_assert_eq!((r.true_positives, r.false_positives, r.false_negatives), (tp, fp, fn_));
        if tp + fn_ > 0 {
            prop_assert!((r.recall - tp as f64 / (tp + fn_) as f64).abs() < 1e-15);
        }
        prop_assert_eq!(r.tp_by_area_bucket.total(), tp);
    }

    #[test]
    fn raising_threshold_never_adds_tp(d in dets(8), g in gts(6), t in 0.05f64..0.8, dt in 0.0f64..0.2) {
        let truth = [FrameTruth { frame_id: 0, boxes: &g }];
        let lo = evaluate(&[result(0, d.clone())], &truth, t).unwrap();
        let hi = evaluate(&[result(0, d)], &truth, t + dt).unwrap();
        prop_assert!(hi.true_positives <= lo.true_positives);
    }

    #[test]
    fn frame_permutation_invariance(frames in prop::collection::vec((dets(6), gts(5)), 2..6), t in 0.1f64..0.7) {
        let build = |order: &[usize]| {
            let results: Vec<_> = order.iter().map(|&i| result(i as u64, frames[i].0.clone())).collect();
            let truth: Vec<_> = order.iter().map(|&i| FrameTruth { frame_id: i as u64, boxes: &frames[i].1 }).collect();
            evaluate(&results, &truth, t).unwrap()
        };
        let fwd: Vec<usize> = (0..frames.len()).collect();
        let rev: Vec<usize> = fwd.iter().rev().copied().collect();
        let (a, b) = (build(&fwd), build(&rev));
        prop_assert_eq!(a.recall, b.recall);
        prop_assert_eq!(a.precision, b.precision);
        let mut ra = a.per_frame_recall();
        ra.reverse();
        prop_assert_eq!(ra, b.per_frame_recall());
    }
}
