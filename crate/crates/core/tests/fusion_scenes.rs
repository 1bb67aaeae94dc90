mod support;

use roifuse_core::fusion::{aggregate, primary_only_frame, roi_regions};
use roifuse_core::geometry::{CameraIntrinsics, Pose3};
use roifuse_core::metrics::FrameTruth;
use roifuse_core::{
    evaluate, fuse_frame, BBox, ClassId, Detector, DetectorProfile, Frame, FusionConfig,
    GroundTruthBox, RadarPoint, RadarReturn, Region, SyntheticDetector,
};
use support::oracles::nms_oracle;

const F: f64 = 1266.0;

fn intrinsics() -> CameraIntrinsics {
    CameraIntrinsics::new(F, F, 800.0, 450.0, 1600, 900).unwrap()
}

/// Radar return on the camera-frame point that projects to `(u, v)` at `depth`.
fn radar_at(u: f64, v: f64, depth: f64) -> RadarReturn {
    let p = intrinsics().back_project(roifuse_core::PixelPoint { cx: u, cy: v }, depth);
    RadarPoint::new(p[0], p[1], p[2], None).unwrap().into()
}

fn frame(gts: Vec<GroundTruthBox>, radar: Vec<RadarReturn>) -> Frame {
    Frame {
        frame_id: 1,
        image_path: None,
        radar,
        radar_to_camera: Pose3::IDENTITY,
        intrinsics: intrinsics(),
        ground_truth: gts,
    }
}

fn detectors() -> (SyntheticDetector, SyntheticDetector) {
    let sure = |input, seed| {
        DetectorProfile {
            p_max: 1.0,
            ..DetectorProfile::new(input, seed)
        }
        .noise_free()
    };
    (
        SyntheticDetector::new("yolov3-spp", sure(416, 1)).unwrap(),
        SyntheticDetector::new("ssdlite", sure(300, 2)).unwrap(),
    )
}

fn recall(f: &Frame, r: &roifuse_core::FusedFrameResult) -> f64 {
    let truth = [FrameTruth {
        frame_id: f.frame_id,
        boxes: &f.ground_truth,
    }];
    evaluate(std::slice::from_ref(r), &truth, 0.4)
        .unwrap()
        .recall
}

#[test]
fn no_radar_degenerates_to_primary_only() {
    let (p, s) = detectors();
    let gts = vec![GroundTruthBox::new(
        BBox::new(300.0, 300.0, 700.0, 600.0),
        ClassId::Bus,
    )];
    let f = frame(gts, vec![]);
    let cfg = FusionConfig::default();
    let fused = fuse_frame(&f, &p, &s, &cfg).unwrap();
    let base = primary_only_frame(&f, &p, &cfg).unwrap();
    assert_eq!(fused, base);
    assert_eq!(fused.n_rois, 0);
    assert_eq!(fused.detections.len(), 1);
}

#[test]
fn distant_object_recovered_only_through_roi() {
    let (p, s) = detectors();
    // 60×60 px: 3600·(416/1600)² ≈ 243 < area_lo at primary scale,
    // 3600·(300/240)² = 5625 ≥ area_hi inside a 240-px crop
    let obj = BBox::new(1100.0, 400.0, 1160.0, 460.0);
    let a_primary = obj.area() * (416.0f64 / 1600.0).powi(2);
    let a_secondary = obj.area() * (300.0f64 / 240.0).powi(2);
    assert!(a_primary < 400.0 && a_secondary >= 4000.0);
    let f = frame(
        vec![GroundTruthBox::new(obj, ClassId::Car)],
        vec![radar_at(1130.0, 430.0, 60.0)],
    );
    let cfg = FusionConfig::default();
    let base = primary_only_frame(&f, &p, &cfg).unwrap();
    let fused = fuse_frame(&f, &p, &s, &cfg).unwrap();
    assert!(base.detections.is_empty());
    assert_eq!(fused.n_rois, 1);
    assert_eq!(fused.detections.len(), 1);
    assert!(fused.detections[0].bbox.iou(&obj) > 0.999);
    assert_eq!((recall(&f, &base), recall(&f, &fused)), (0.0, 1.0));
}

#[test]
fn object_seen_by_both_detectors_survives_once() {
    let (p, s) = detectors();
    let obj = BBox::new(600.0, 300.0, 1000.0, 600.0);
    let f = frame(
        vec![GroundTruthBox::new(obj, ClassId::Truck)],
        vec![radar_at(800.0, 450.0, 20.0)],
    );
    let cfg = FusionConfig::default();
    let size = f.image_size();
    let primary = p.detect(&f, &Region::full_image(size)).unwrap();
    let secondary: Vec<_> = roi_regions(&f, &cfg)
        .into_iter()
        .map(|r| (r, s.detect(&f, &r).unwrap()))
        .collect();
    assert_eq!(primary.len(), 1);
    assert_eq!(secondary[0].1.len(), 1);
    let fused = aggregate(f.frame_id, size, &primary, &secondary, &cfg);
    assert_eq!(fused.detections.len(), 1);
    assert_eq!(fused.suppressed_count, 1);
    assert_eq!(fuse_frame(&f, &p, &s, &cfg).unwrap(), fused);

    // same answer from the brute-force NMS over the remapped pool
    let full = Region::full_image(size);
    let mut pool: Vec<_> = primary
        .iter()
        .filter_map(|d| roifuse_core::remap_to_frame(d, &full, 416, size))
        .collect();
    for (r, ds) in &secondary {
        pool.extend(
            ds.iter()
                .filter_map(|d| roifuse_core::remap_to_frame(d, r, 300, size)),
        );
    }
    assert_eq!(nms_oracle(&pool, cfg.nms_iou, false), fused.detections);
}

#[test]
fn roi_order_does_not_change_result() {
    let (p, s) = detectors();
    let gts: Vec<_> = (0..6)
        .map(|i| {
            let x = 200.0 + 200.0 * i as f64;
            GroundTruthBox::new(
                BBox::new(x, 420.0, x + 40.0 + 10.0 * i as f64, 470.0),
                ClassId::ALL[i],
            )
        })
        .collect();
    let radar: Vec<_> = gts
        .iter()
        .map(|g| {
            let (u, v) = g.bbox.center();
            radar_at(u + 7.0, v - 5.0, 50.0)
        })
        .collect();
    let f = frame(gts, radar);
    let cfg = FusionConfig::default();
    let size = f.image_size();
    let primary = p.detect(&f, &Region::full_image(size)).unwrap();
    let mut secondary: Vec<_> = roi_regions(&f, &cfg)
        .into_iter()
        .map(|r| (r, s.detect(&f, &r).unwrap()))
        .collect();
    let forward = aggregate(1, size, &primary, &secondary, &cfg);
    secondary.reverse();
    let backward = aggregate(1, size, &primary, &secondary, &cfg);
    assert_eq!(forward, backward);
    assert!(forward.secondary_count > 0);
}

#[test]
fn detector_input_size_must_match_config() {
    let (p, s) = detectors();
    let f = frame(vec![], vec![]);
    let cfg = FusionConfig {
        secondary_input_size: 200,
        ..Default::default()
    };
    assert!(matches!(
        fuse_frame(&f, &p, &s, &cfg),
        Err(roifuse_core::FuseError::InputSizeMismatch {
            role: "secondary",
            ..
        })
    ));
}
