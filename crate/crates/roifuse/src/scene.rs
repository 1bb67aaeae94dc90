//! Synthetic driving scenes with exact ground truth.
//!
//! Objects stand on a flat ground plane in front of a forward-looking camera.
//! Each object's box is the exact projection of its front face, so box area
//! falls off with the square of depth. A radar return is placed at each
//! object's centroid with probability `radar_hit_prob` and Gaussian position
//! noise; clutter returns are scattered uniformly through the view frustum.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use roifuse_core::geometry::{CameraIntrinsics, PixelPoint, Pose3, RadarPoint};
use roifuse_core::{BBox, ClassId, Frame, GroundTruthBox, RadarReturn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::CameraSpec;

/// Width × height of the visible face of each class, meters.
pub fn class_dimensions(class: ClassId) -> (f64, f64) {
    match class {
        ClassId::Car => (4.5, 1.8),
        ClassId::Truck => (8.0, 3.5),
        ClassId::Bus => (11.0, 3.2),
        ClassId::Pedestrian => (0.6, 1.7),
        ClassId::Bicycle => (1.8, 1.4),
        ClassId::Motorcycle => (2.0, 1.5),
    }
}

/// Camera calibration plus mounting height above the ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraRig {
    pub intrinsics: CameraIntrinsics,
    pub radar_to_camera: Pose3,
    pub height_m: f64,
}

impl Default for CameraRig {
    fn default() -> Self {
        SceneGenConfig::default()
            .rig()
            .expect("default rig is valid")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneGenConfig {
    pub n_frames: usize,
    /// Inclusive range of objects per frame.
    pub objects_per_frame: [usize; 2],
    /// Class sampling weights; must sum to 1.
    pub class_mix: BTreeMap<ClassId, f64>,
    /// Object depth range, meters along the optical axis.
    pub depth_range: [f64; 2],
    pub radar_hit_prob: f64,
    /// Per-axis standard deviation of object returns, meters.
    pub radar_pos_noise_m: f64,
    /// Mean number of clutter returns per frame.
    pub clutter_rate: f64,
    pub seed: u64,
    pub camera: CameraSpec,
    pub camera_height_m: f64,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            n_frames: 200,
            objects_per_frame: [2, 10],
            class_mix: BTreeMap::from([
                (ClassId::Car, 0.5),
                (ClassId::Truck, 0.1),
                (ClassId::Bus, 0.05),
                (ClassId::Pedestrian, 0.2),
                (ClassId::Bicycle, 0.08),
                (ClassId::Motorcycle, 0.07),
            ]),
            depth_range: [5.0, 120.0],
            radar_hit_prob: 0.9,
            radar_pos_noise_m: 0.5,
            clutter_rate: 3.0,
            seed: 42,
            camera: CameraSpec {
                intrinsics: CameraIntrinsics {
                    fx: 1266.0,
                    fy: 1266.0,
                    cx0: 800.0,
                    cy0: 450.0,
                    width: 1600,
                    height: 900,
                },
                radar_to_camera: crate::sequence::PoseSpec {
                    // radar x forward, y left, z up -> camera x right, y down, z forward
                    rotation: [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]],
                    translation: [0.0, 0.8, 1.5],
                },
            },
            camera_height_m: 1.5,
        }
    }
}

const MIX_TOL: f64 = 1e-9;

impl SceneGenConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let [lo, hi] = self.objects_per_frame;
        if lo > hi {
            return bad(format!("objects_per_frame: min {lo} exceeds max {hi}"));
        }
        if self.class_mix.values().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("class_mix: weights must be finite and non-negative".into());
        }
        let sum: f64 = self.class_mix.values().sum();
        if (sum - 1.0).abs() > MIX_TOL {
            return bad(format!("class_mix: weights sum to {sum}, expected 1"));
        }
        let [d0, d1] = self.depth_range;
        if !(d0.is_finite() && d1.is_finite() && 0.0 < d0 && d0 <= d1) {
            return bad(format!(
                "depth_range: need 0 < min <= max, got [{d0}, {d1}]"
            ));
        }
        if !(0.0..=1.0).contains(&self.radar_hit_prob) {
            return bad("radar_hit_prob must be in [0, 1]".into());
        }
        if !(self.radar_pos_noise_m.is_finite() && self.radar_pos_noise_m >= 0.0) {
            return bad("radar_pos_noise_m must be finite and non-negative".into());
        }
        if !(self.clutter_rate.is_finite() && self.clutter_rate >= 0.0) {
            return bad("clutter_rate must be finite and non-negative".into());
        }
        if !(self.camera_height_m.is_finite() && self.camera_height_m > 0.0) {
            return bad("camera_height_m must be positive".into());
        }
        let rig = self.rig()?;
        for (&class, &w) in &self.class_mix {
            if w > 0.0 && min_fit_depth(&rig, class) > d1 {
                return bad(format!(
                    "depth_range: a {class} cannot fit in the image at depth {d1} m or closer"
                ));
            }
        }
        Ok(())
    }

    pub fn rig(&self) -> Result<CameraRig> {
        let (intrinsics, radar_to_camera) = self.camera.resolve(None, "camera.")?;
        Ok(CameraRig {
            intrinsics,
            radar_to_camera,
            height_m: self.camera_height_m,
        })
    }
}

/// Smallest depth at which an object of `class` projects fully inside the image.
fn min_fit_depth(rig: &CameraRig, class: ClassId) -> f64 {
    let (w, h) = class_dimensions(class);
    let k = &rig.intrinsics;
    let horizontal = k.fx * w / k.width as f64;
    let below = if k.height as f64 > k.cy0 {
        k.fy * rig.height_m / (k.height as f64 - k.cy0)
    } else {
        f64::INFINITY
    };
    let above = if h > rig.height_m {
        k.fy * (h - rig.height_m) / k.cy0
    } else {
        0.0
    };
    horizontal.max(below).max(above) * (1.0 + 1e-9)
}

fn sample_class(rng: &mut ChaCha8Rng, mix: &BTreeMap<ClassId, f64>) -> ClassId {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = ClassId::Car;
    for (&class, &w) in mix {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = class;
        if u < acc {
            return class;
        }
    }
    last
}

/// The deterministic stream for frame `index` of a sequence seeded with `seed`.
fn frame_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Generates `cfg.n_frames` frames with ids `0..n_frames`. Frame `i` depends
/// only on `(cfg, i)`.
pub fn generate_scene(cfg: &SceneGenConfig) -> Result<Vec<Frame>> {
    cfg.validate()?;
    let rig = cfg.rig()?;
    Ok((0..cfg.n_frames as u64)
        .map(|i| generate_frame(cfg, &rig, i))
        .collect())
}

fn generate_frame(cfg: &SceneGenConfig, rig: &CameraRig, frame_id: u64) -> Frame {
    let mut rng = frame_rng(cfg.seed, frame_id);
    let k = rig.intrinsics;
    let (img_w, img_h) = (k.width as f64, k.height as f64);
    let camera_to_radar = rig.radar_to_camera.inverse();
    let noise = Normal::new(0.0, cfg.radar_pos_noise_m).expect("validated noise");
    let velocity = Normal::new(0.0, 3.0).expect("constant");
    let [n_lo, n_hi] = cfg.objects_per_frame;
    let n_objects = rng.random_range(n_lo..=n_hi);
    let [d_lo, d_hi] = cfg.depth_range;

    let mut ground_truth = Vec::with_capacity(n_objects);
    let mut radar = Vec::new();
    for _ in 0..n_objects {
        let class_id = sample_class(&mut rng, &cfg.class_mix);
        let (w, h) = class_dimensions(class_id);
        let d_min = d_lo.max(min_fit_depth(rig, class_id)).min(d_hi);
        let depth = rng.random_range(d_min..=d_hi);
        let half_w_px = k.fx * w / (2.0 * depth);
        let u = rng.random_range(half_w_px..=(img_w - half_w_px).max(half_w_px));
        let x_center = (u - k.cx0) * depth / k.fx;
        let y_bottom = rig.height_m;
        let y_top = rig.height_m - h;
        let bbox = BBox::new(
            k.cx0 + k.fx * (x_center - w / 2.0) / depth,
            k.cy0 + k.fy * y_top / depth,
            k.cx0 + k.fx * (x_center + w / 2.0) / depth,
            k.cy0 + k.fy * y_bottom / depth,
        )
        .clip(img_w, img_h);
        ground_truth.push(GroundTruthBox::new(bbox, class_id));

        if rng.random::<f64>() < cfg.radar_hit_prob {
            let centroid = [x_center, rig.height_m - h / 2.0, depth];
            let p = camera_to_radar.transform(&centroid);
            radar.push(RadarReturn {
                point: RadarPoint {
                    x: p[0] + noise.sample(&mut rng),
                    y: p[1] + noise.sample(&mut rng),
                    z: p[2] + noise.sample(&mut rng),
                    radial_velocity: Some(velocity.sample(&mut rng)),
                },
                is_clutter: Some(false),
            });
        }
    }

    let n_clutter = if cfg.clutter_rate > 0.0 {
        Poisson::new(cfg.clutter_rate)
            .expect("validated rate")
            .sample(&mut rng) as usize
    } else {
        0
    };
    for _ in 0..n_clutter {
        let depth = rng.random_range(d_lo..=d_hi);
        let pixel = PixelPoint {
            cx: rng.random_range(0.0..img_w),
            cy: rng.random_range(0.0..img_h),
        };
        let p = camera_to_radar.transform(&k.back_project(pixel, depth));
        radar.push(RadarReturn {
            point: RadarPoint {
                x: p[0],
                y: p[1],
                z: p[2],
                radial_velocity: Some(velocity.sample(&mut rng)),
            },
            is_clutter: Some(true),
        });
    }

    Frame {
        frame_id,
        image_path: None,
        radar,
        radar_to_camera: rig.radar_to_camera,
        intrinsics: k,
        ground_truth,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        SceneGenConfig::default().validate().unwrap();
        let rig = CameraRig::default();
        // bottom edge fits once 1266 * 1.5 / 450 <= d
        assert!((min_fit_depth(&rig, ClassId::Pedestrian) - 1266.0 * 1.5 / 450.0).abs() < 1e-6);
        // an 11 m bus needs 1266 * 11 / 1600
        assert!((min_fit_depth(&rig, ClassId::Bus) - 1266.0 * 11.0 / 1600.0).abs() < 1e-6);
    }

    #[test]
    fn class_mix_must_sum_to_one() {
        let mut cfg = SceneGenConfig::default();
        cfg.class_mix.insert(ClassId::Car, 0.6);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("class_mix"), "{err}");
    }

    #[test]
    fn too_short_depth_range_is_rejected() {
        let cfg = SceneGenConfig {
            depth_range: [1.0, 2.0],
            ..Default::default()
        };
        assert!(cfg
            .validate()
            .unwrap_err()
            .to_string()
            .contains("depth_range"));
    }

    #[test]
    fn frames_are_independent_of_sequence_length() {
        let short = generate_scene(&SceneGenConfig {
            n_frames: 3,
            ..Default::default()
        })
        .unwrap();
        let long = generate_scene(&SceneGenConfig {
            n_frames: 6,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(short[..], long[..3]);
    }
}
