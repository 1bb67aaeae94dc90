//! Radar-guided region-of-interest fusion for 2D object detection.
//!
//! Radar returns are projected into the camera image, each projected point
//! becomes a fixed-size square crop, a lightweight secondary detector runs on
//! every crop, and its detections are merged with those of a full-image
//! primary detector through class-aware non-maximum suppression. The crate
//! also carries the evaluation (greedy matching, recall, precision) and the
//! per-frame compute and energy accounting that go with the pipeline.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scene
//! generation and the command line driver live in the `roifuse` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bbox;
pub mod cost;
pub mod detector;
pub mod frame;
pub mod fusion;
pub mod geometry;
pub mod metrics;
pub mod proposals;
pub mod rng;

pub use bbox::BBox;
pub use cost::{frame_energy, frame_gflops, CostReport, EnergyMode, EnergyParams};
pub use detector::{
    detection_probability, flops_for, ClassId, Detection, Detector, DetectorError, DetectorProfile,
    FlopsCatalog, Region, SyntheticDetector,
};
pub use frame::{Frame, RadarReturn};
pub use fusion::{fuse_frame, nms, remap_to_frame, FuseError, FusedFrameResult, FusionConfig};
pub use geometry::{project, CameraIntrinsics, PixelPoint, Pose3, RadarPoint};
pub use metrics::{evaluate, iou, match_detections, GroundTruthBox, MetricsReport};
pub use proposals::{dedup_proposals, make_proposals, ProposalConfig, RoiProposal};
