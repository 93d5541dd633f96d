//! Rigid-transform algebra and tilt-angle extraction.
//!
//! Poses are 3x3 rotation matrices paired with a translation in
//! millimetres. The tilt angles describe the misalignment of the
//! charger z-axis relative to the socket z-axis: `theta_x` is the angle
//! of the projection on the z-y plane (rotation about the socket
//! x-axis), `theta_y` the projection on the z-x plane (rotation about
//! the socket y-axis). Both are reported in degrees; radians appear
//! only inside trigonometric calls.

use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

/// Orthonormality defect above which composed rotations are re-orthonormalized.
const ORTHO_TOLERANCE: f64 = 1e-9;

/// Errors from pose operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoseError {
    /// The charger z-axis is perpendicular to or facing away from the
    /// socket z-axis (`r33 <= 0`); the tilt angles are undefined there.
    ZAxisOutOfRange,
    /// Requested tilt outside the supported (-45, 45) degree range.
    TiltOutOfRange,
}

impl fmt::Display for PoseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoseError::ZAxisOutOfRange => {
                write!(f, "charger z-axis outside the capture regime (r33 <= 0)")
            }
            PoseError::TiltOutOfRange => write!(f, "tilt angles must lie within (-45, 45) deg"),
        }
    }
}

/// A pair of tilt angles in degrees.
///
/// Whether the values are signed depends on where the pair came from:
/// [`Transform::tilt_angles`] yields non-negative magnitudes, while
/// [`Transform::signed_tilt_angles`], the simulator, and the controller
/// carry signed values.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TiltPair {
    /// Rotation about the socket x-axis, degrees.
    pub theta_x: f64,
    /// Rotation about the socket y-axis, degrees.
    pub theta_y: f64,
}

impl TiltPair {
    pub const ZERO: TiltPair = TiltPair {
        theta_x: 0.0,
        theta_y: 0.0,
    };

    pub fn new(theta_x: f64, theta_y: f64) -> Self {
        Self { theta_x, theta_y }
    }

    /// Euclidean magnitude of the pair, degrees.
    pub fn total(&self) -> f64 {
        self.theta_x.hypot(self.theta_y)
    }

    /// Component-wise absolute values.
    pub fn abs(&self) -> Self {
        Self {
            theta_x: self.theta_x.abs(),
            theta_y: self.theta_y.abs(),
        }
    }
}

/// A 3x3 rotation matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix {
    m: [[f64; 3]; 3],
}

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Builds a matrix from rows without validation. Callers are
    /// expected to hand in an orthonormal matrix; use
    /// [`orthonormality_defect`](Self::orthonormality_defect) to check.
    pub fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    /// Entry at `row`, `col` (zero-based).
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.m[row][col]
    }

    /// Rotation about the x-axis by `deg` degrees.
    pub fn about_x(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        }
    }

    /// Rotation about the y-axis by `deg` degrees.
    pub fn about_y(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    /// Rotation about the z-axis by `deg` degrees.
    pub fn about_z(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Self {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest absolute deviation of `R^T R` from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.transpose().mul(self);
        let mut worst = 0.0f64;
        for (i, row) in g.m.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }

    #[allow(clippy::needless_range_loop)]
    pub fn mul(&self, other: &RotationMatrix) -> RotationMatrix {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        RotationMatrix { m }
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    /// Nearest orthonormal matrix by Newton's iteration for the polar
    /// factor, `R <- (R + R^-T) / 2`. Converges quadratically for the
    /// small defects produced by long composition chains.
    #[allow(clippy::needless_range_loop)]
    pub fn re_orthonormalize(&self) -> RotationMatrix {
        let mut r = *self;
        for _ in 0..8 {
            let inv_t = match r.transpose().inverse() {
                Some(inv) => inv,
                None => break,
            };
            let mut m = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] = 0.5 * (r.m[i][j] + inv_t.m[i][j]);
                }
            }
            r = RotationMatrix { m };
            if r.orthonormality_defect() < 1e-15 {
                break;
            }
        }
        r
    }

    fn inverse(&self) -> Option<RotationMatrix> {
        let m = &self.m;
        let det = self.det();
        if det.abs() < 1e-12 {
            return None;
        }
        let inv_det = 1.0 / det;
        let mut c = [[0.0; 3]; 3];
        c[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv_det;
        c[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det;
        c[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det;
        c[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv_det;
        c[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det;
        c[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det;
        c[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv_det;
        c[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det;
        c[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det;
        Some(RotationMatrix { m: c })
    }

    /// Rotation that maps the z-axis onto the direction implied by a
    /// signed tilt pair, with no spin about the new z-axis.
    ///
    /// The target z-column is `(tan theta_y, -tan theta_x, 1)`
    /// normalized, chosen so [`Transform::tilt_angles`] recovers the
    /// requested magnitudes exactly for any pair in range (single-axis
    /// tilts reduce to the plain axis rotations).
    pub fn from_tilt(tilt: TiltPair) -> Result<RotationMatrix, PoseError> {
        if tilt.theta_x.abs() >= 45.0 || tilt.theta_y.abs() >= 45.0 {
            return Err(PoseError::TiltOutOfRange);
        }
        let tx = tilt.theta_x.to_radians().tan();
        let ty = tilt.theta_y.to_radians().tan();
        let norm = (ty * ty + tx * tx + 1.0).sqrt();
        let w = [ty / norm, -tx / norm, 1.0 / norm];
        // Rodrigues rotation about k = z x w through the angle between z and w.
        let kx = -w[1];
        let ky = w[0];
        let sin_phi = kx.hypot(ky);
        let cos_phi = w[2];
        if sin_phi < 1e-15 {
            return Ok(RotationMatrix::IDENTITY);
        }
        let (ux, uy) = (kx / sin_phi, ky / sin_phi);
        let one_c = 1.0 - cos_phi;
        let m = [
            [
                cos_phi + ux * ux * one_c,
                ux * uy * one_c,
                uy * sin_phi,
            ],
            [
                ux * uy * one_c,
                cos_phi + uy * uy * one_c,
                -ux * sin_phi,
            ],
            [-uy * sin_phi, ux * sin_phi, cos_phi],
        ];
        Ok(RotationMatrix { m })
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// A rigid transform: rotation plus translation in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Transform {
    pub rotation: RotationMatrix,
    /// Translation in millimetres.
    pub translation: [f64; 3],
}

impl Transform {
    pub const IDENTITY: Transform = Transform {
        rotation: RotationMatrix::IDENTITY,
        translation: [0.0, 0.0, 0.0],
    };

    pub fn new(rotation: RotationMatrix, translation: [f64; 3]) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: [f64; 3]) -> Self {
        Self {
            rotation: RotationMatrix::IDENTITY,
            translation,
        }
    }

    /// Composition `self * other`: apply `other` first, then `self`.
    /// The rotation part is re-orthonormalized when accumulated drift
    /// exceeds the 1e-9 tolerance, so arbitrarily long chains stay valid.
    pub fn compose(&self, other: &Transform) -> Transform {
        let mut rotation = self.rotation.mul(&other.rotation);
        if rotation.orthonormality_defect() > ORTHO_TOLERANCE {
            rotation = rotation.re_orthonormalize();
        }
        let rt = self.rotation.apply(other.translation);
        Transform {
            rotation,
            translation: [
                rt[0] + self.translation[0],
                rt[1] + self.translation[1],
                rt[2] + self.translation[2],
            ],
        }
    }

    pub fn invert(&self) -> Transform {
        let rt = self.rotation.transpose();
        let t = rt.apply(self.translation);
        Transform {
            rotation: rt,
            translation: [-t[0], -t[1], -t[2]],
        }
    }

    pub fn apply_point(&self, p: [f64; 3]) -> [f64; 3] {
        let r = self.rotation.apply(p);
        [
            r[0] + self.translation[0],
            r[1] + self.translation[1],
            r[2] + self.translation[2],
        ]
    }

    /// Unsigned tilt angles of the rotation part, degrees.
    ///
    /// `theta_x = arccos(r33 / sqrt(r23^2 + r33^2))` and
    /// `theta_y = arccos(r33 / sqrt(r13^2 + r33^2))`, evaluated as
    /// `atan2` for accuracy near zero. Requires `r33 > 0`.
    pub fn tilt_angles(&self) -> Result<TiltPair, PoseError> {
        let (r13, r23, r33) = self.z_column()?;
        Ok(TiltPair {
            theta_x: r23.abs().atan2(r33).to_degrees(),
            theta_y: r13.abs().atan2(r33).to_degrees(),
        })
    }

    /// Signed tilt angles: `theta_x` carries the sign of `-r23`,
    /// `theta_y` the sign of `r13`, matching the convention of
    /// [`RotationMatrix::from_tilt`] and the axis rotations.
    pub fn signed_tilt_angles(&self) -> Result<TiltPair, PoseError> {
        let (r13, r23, r33) = self.z_column()?;
        Ok(TiltPair {
            theta_x: (-r23).atan2(r33).to_degrees(),
            theta_y: r13.atan2(r33).to_degrees(),
        })
    }

    fn z_column(&self) -> Result<(f64, f64, f64), PoseError> {
        let r13 = self.rotation.entry(0, 2);
        let r23 = self.rotation.entry(1, 2);
        let r33 = self.rotation.entry(2, 2);
        if r33 <= 0.0 {
            return Err(PoseError::ZAxisOutOfRange);
        }
        Ok((r13, r23, r33))
    }
}

/// Chains the camera-calibration factors into the charger-in-socket
/// pose: socket<-camera, camera<-marker, marker<-charger.
pub fn charger_in_socket(
    socket_from_camera: &Transform,
    camera_from_marker: &Transform,
    marker_from_charger: &Transform,
) -> Transform {
    socket_from_camera
        .compose(camera_from_marker)
        .compose(marker_from_charger)
}
