//! One synchronized camera + radar sample.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geometry::{project, CameraIntrinsics, PixelPoint, Pose3, RadarPoint};
use crate::metrics::GroundTruthBox;

/// A radar return plus its optional generator label. The pipeline never
/// reads `is_clutter`; it exists so experiments can count wasted regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarReturn {
    pub point: RadarPoint,
    pub is_clutter: Option<bool>,
}

impl From<RadarPoint> for RadarReturn {
    fn from(point: RadarPoint) -> Self {
        Self {
            point,
            is_clutter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: u64,
    /// Absent for synthetic scenes; real-image detector backends read it.
    pub image_path: Option<String>,
    pub radar: Vec<RadarReturn>,
    pub radar_to_camera: Pose3,
    pub intrinsics: CameraIntrinsics,
    pub ground_truth: Vec<GroundTruthBox>,
}

impl Frame {
    pub fn image_size(&self) -> (u32, u32) {
        (self.intrinsics.width, self.intrinsics.height)
    }

    /// Pixel locations of all radar returns in front of the camera, keyed by
    /// their index in `radar`. Points outside the image are kept.
    pub fn projected_radar(&self) -> Vec<(usize, PixelPoint)> {
        self.radar
            .iter()
            .enumerate()
            .filter_map(|(i, r)| {
                project(&r.point, &self.radar_to_camera, &self.intrinsics)
                    .ok()
                    .map(|p| (i, p))
            })
            .collect()
    }
}
