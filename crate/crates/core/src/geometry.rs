//! Rigid transforms and the pinhole camera model.
//!
//! Camera coordinates follow the usual computer-vision convention: `x` to the
//! right, `y` down, `z` along the optical axis. The radar frame is whatever the
//! extrinsic [`Pose3`] says it is; the pipeline only ever needs the single
//! pre-composed radar-to-camera transform.

use thiserror::Error;

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOL: f64 = 1e-9;

/// Depth below which a point counts as behind the camera (meters).
pub const Z_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("rotation is not orthonormal (max |RᵀR - I| = {0:e})")]
    NotOrthonormal(f64),
    #[error("rotation is a reflection (det = {0})")]
    NotProperRotation(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("radar point at the sensor origin has no range")]
    ZeroRange,
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
}

/// A rigid-body transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    rotation: Mat3,
    translation: Vec3,
}

impl Pose3 {
    pub const IDENTITY: Pose3 = Pose3 {
        rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        translation: [0.0; 3],
    };

    /// Builds a pose, rejecting rotations that are not proper orthonormal
    /// matrices within [`ROTATION_TOL`].
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, GeometryError> {
        if rotation.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("rotation"));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        let rtr = mat_mul(&transpose(&rotation), &rotation);
        let mut worst = 0.0_f64;
        for (i, row) in rtr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - expected).abs());
            }
        }
        if worst > ROTATION_TOL {
            return Err(GeometryError::NotOrthonormal(worst));
        }
        let det = determinant(&rotation);
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::NotProperRotation(det));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn from_translation(translation: Vec3) -> Result<Self, GeometryError> {
        Self::new(Self::IDENTITY.rotation, translation)
    }

    /// Rotation of `angle` radians about a unit axis (Rodrigues), no translation.
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, GeometryError> {
        let norm = libm::sqrt(dot(&axis, &axis));
        if !(norm.is_finite() && norm > 0.0) || !angle.is_finite() {
            return Err(GeometryError::NonFinite("axis-angle"));
        }
        let [x, y, z] = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        let t = 1.0 - c;
        let rotation = [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ];
        Self::new(rotation, [0.0; 3])
    }

    pub fn rotation(&self) -> &Mat3 {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    /// Returns the same rotation with a different translation.
    pub fn with_translation(mut self, translation: Vec3) -> Result<Self, GeometryError> {
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite("translation"));
        }
        self.translation = translation;
        Ok(self)
    }

    pub fn transform(&self, p: &Vec3) -> Vec3 {
        let r = mat_vec(&self.rotation, p);
        [
            r[0] + self.translation[0],
            r[1] + self.translation[1],
            r[2] + self.translation[2],
        ]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rotation: mat_mul(&self.rotation, &other.rotation),
            translation: self.transform(&other.translation),
        }
    }

    pub fn inverse(&self) -> Pose3 {
        let rt = transpose(&self.rotation);
        let t = mat_vec(&rt, &self.translation);
        Pose3 {
            rotation: rt,
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    /// Largest absolute entry-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &Pose3) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.rotation[i][j] - other.rotation[i][j]).abs());
            }
            worst = worst.max((self.translation[i] - other.translation[i]).abs());
        }
        worst
    }
}

impl Default for Pose3 {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// `a` composed after `b`.
pub fn compose(a: &Pose3, b: &Pose3) -> Pose3 {
    a.compose(b)
}

pub(crate) fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

fn transpose(m: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn determinant(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Pinhole intrinsics of a rectified camera. No distortion model.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx0: f64,
    pub cy0: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx0: f64,
        cy0: f64,
        width: u32,
        height: u32,
    ) -> Result<Self, GeometryError> {
        let intr = Self {
            fx,
            fy,
            cx0,
            cy0,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if ![self.fx, self.fy, self.cx0, self.cy0]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(GeometryError::NonFinite("intrinsics"));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(GeometryError::InvalidIntrinsics(
                "focal lengths must be positive",
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeometryError::InvalidIntrinsics(
                "image size must be positive",
            ));
        }
        if self.cx0 < 0.0 || self.cx0 > self.width as f64 {
            return Err(GeometryError::InvalidIntrinsics("cx0 outside [0, width]"));
        }
        if self.cy0 < 0.0 || self.cy0 > self.height as f64 {
            return Err(GeometryError::InvalidIntrinsics("cy0 outside [0, height]"));
        }
        Ok(())
    }

    /// Camera-frame point at depth `depth` whose projection is `pixel`.
    pub fn back_project(&self, pixel: PixelPoint, depth: f64) -> Vec3 {
        [
            (pixel.cx - self.cx0) * depth / self.fx,
            (pixel.cy - self.cy0) * depth / self.fy,
            depth,
        ]
    }

    /// Projects a point already expressed in camera coordinates.
    pub fn project_camera(&self, p_cam: &Vec3) -> Result<PixelPoint, BehindCamera> {
        if p_cam[2].is_nan() || p_cam[2] <= Z_EPS {
            return Err(BehindCamera { depth: p_cam[2] });
        }
        Ok(PixelPoint {
            cx: self.fx * p_cam[0] / p_cam[2] + self.cx0,
            cy: self.fy * p_cam[1] / p_cam[2] + self.cy0,
        })
    }
}

/// A radar detection in the radar sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Carried through for completeness; proposals ignore it.
    pub radial_velocity: Option<f64>,
}

impl RadarPoint {
    pub fn new(
        x: f64,
        y: f64,
        z: f64,
        radial_velocity: Option<f64>,
    ) -> Result<Self, GeometryError> {
        let p = Self {
            x,
            y,
            z,
            radial_velocity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.x.is_finite() && self.y.is_finite() && self.z.is_finite()) {
            return Err(GeometryError::NonFinite("radar point"));
        }
        if matches!(self.radial_velocity, Some(v) if !v.is_finite()) {
            return Err(GeometryError::NonFinite("radial velocity"));
        }
        if self.range().is_nan() || self.range() <= 0.0 {
            return Err(GeometryError::ZeroRange);
        }
        Ok(())
    }

    pub fn position(&self) -> Vec3 {
        [self.x, self.y, self.z]
    }

    pub fn range(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelPoint {
    pub cx: f64,
    pub cy: f64,
}

/// The point lies at or behind the camera's image plane.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("point is behind the camera (depth {depth} m)")]
pub struct BehindCamera {
    pub depth: f64,
}

/// Projects a radar point into pixel coordinates. The result may fall outside
/// the image; callers filter.
pub fn project(
    point: &RadarPoint,
    radar_to_camera: &Pose3,
    intr: &CameraIntrinsics,
) -> Result<PixelPoint, BehindCamera> {
    intr.project_camera(&radar_to_camera.transform(&point.position()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn intr() -> CameraIntrinsics {
        CameraIntrinsics::new(1000.0, 1000.0, 800.0, 450.0, 1600, 900).unwrap()
    }

    #[test]
    fn identity_compose() {
        let id = Pose3::IDENTITY;
        assert_eq!(id.compose(&id), id);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose3::from_axis_angle([0.3, -1.0, 0.7], 1.1)
            .unwrap()
            .with_translation([1.5, -2.0, 0.25])
            .unwrap();
        assert!(p.compose(&p.inverse()).max_abs_diff(&Pose3::IDENTITY) < 1e-9);
        assert!(p.inverse().compose(&p).max_abs_diff(&Pose3::IDENTITY) < 1e-9);
    }

    #[test]
    fn compose_two_axis_rotations_matches_hand_product() {
        let rz = Pose3::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2).unwrap();
        let rx = Pose3::from_axis_angle([1.0, 0.0, 0.0], FRAC_PI_2).unwrap();
        // 90° about z first, then 90° about x: Rx·Rz.
        // Rz = [[0,-1,0],[1,0,0],[0,0,1]], Rx = [[1,0,0],[0,0,-1],[0,1,0]]
        // row-by-column by hand: [[0,-1,0],[0,0,-1],[1,0,0]]
        let expected = [[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]];
        let got = rx.compose(&rz);
        for (row, want) in got.rotation().iter().zip(&expected) {
            for (a, b) in row.iter().zip(want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_rotations() {
        let scaled = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            Pose3::new(scaled, [0.0; 3]),
            Err(GeometryError::NotOrthonormal(_))
        ));
        let mirror = [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(
            Pose3::new(mirror, [0.0; 3]),
            Err(GeometryError::NotProperRotation(_))
        ));
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let p = RadarPoint::new(0.0, 0.0, 10.0, None).unwrap();
        let px = project(&p, &Pose3::IDENTITY, &intr()).unwrap();
        assert_eq!(
            px,
            PixelPoint {
                cx: 800.0,
                cy: 450.0
            }
        );
    }

    #[test]
    fn behind_camera_is_signalled() {
        let p = RadarPoint::new(1.0, 0.0, -5.0, None).unwrap();
        assert_eq!(
            project(&p, &Pose3::IDENTITY, &intr()),
            Err(BehindCamera { depth: -5.0 })
        );
        let on_plane = RadarPoint::new(1.0, 0.0, 1e-7, None).unwrap();
        assert!(project(&on_plane, &Pose3::IDENTITY, &intr()).is_err());
    }

    #[test]
    fn pinhole_formula_by_hand() {
        let p = RadarPoint::new(2.0, 1.0, 10.0, Some(-3.0)).unwrap();
        let px = project(&p, &Pose3::IDENTITY, &intr()).unwrap();
        // 1000 * 2 / 10 + 800 = 1000, 1000 * 1 / 10 + 450 = 550
        let (u, v) = (1000.0 * 2.0 / 10.0 + 800.0, 1000.0 * 1.0 / 10.0 + 450.0);
        assert_eq!((u, v), (1000.0, 550.0));
        assert!((px.cx - u).abs() < 1e-12 && (px.cy - v).abs() < 1e-12);
    }

    #[test]
    fn intrinsics_validation() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 1.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 11.0, 1.0, 10, 10).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 1.0, 1.0, 0, 10).is_err());
        assert!(RadarPoint::new(0.0, 0.0, 0.0, None).is_err());
        assert!(RadarPoint::new(f64::NAN, 0.0, 1.0, None).is_err());
    }
}
