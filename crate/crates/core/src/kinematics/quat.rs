//! Unit quaternions with a canonical sign.
//!
//! `q` and `-q` describe the same rotation. Every constructor here returns the
//! representative with `w >= 0` (and, when `w == 0`, the first nonzero of
//! `x, y, z` positive), so a rotation has exactly one stored form.

use std::ops::Mul;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::Vec3;

/// Unit-norm tolerance after [`Quaternion::normalize`].
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuatError {
    #[error("rotation axis must be nonzero and finite")]
    ZeroAxis,
    #[error("quaternion has zero or non-finite norm")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Quaternion::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Raw constructor; does not normalize.
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self, QuatError> {
        let n = axis.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QuatError::ZeroAxis);
        }
        let a = axis / n;
        let (s, c) = (angle * 0.5).sin_cos();
        Ok(Quaternion::new(c, a.x * s, a.y * s, a.z * s).canonical())
    }

    /// Shepperd's method; `m` must be a proper rotation matrix.
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Self {
        let trace = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
        let q = if trace > m[(0, 0)] && trace > m[(1, 1)] && trace > m[(2, 2)] {
            let s = (1.0 + trace).sqrt() * 2.0;
            Quaternion::new(
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            Quaternion::new(
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        q.normalize().unwrap_or(Quaternion::IDENTITY)
    }

    pub fn norm_squared(&self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit-length, sign-canonical copy.
    pub fn normalize(&self) -> Result<Self, QuatError> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(QuatError::Degenerate);
        }
        Ok(Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n).canonical())
    }

    /// Flip to the `w >= 0` hemisphere. Idempotent; does not change the rotation.
    pub fn canonical(&self) -> Self {
        let negate = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        let q = if negate { -*self } else { *self };
        // -0.0 would compare equal but print differently.
        Quaternion::new(q.w + 0.0, q.x + 0.0, q.y + 0.0, q.z + 0.0)
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical() == *self
    }

    pub fn conjugate(&self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Inverse of a unit quaternion, canonicalized.
    pub fn inverse(&self) -> Self {
        self.conjugate().canonical()
    }

    /// Hamilton product without renormalization.
    pub fn hamilton(&self, b: &Quaternion) -> Quaternion {
        let a = self;
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// Rotation "apply `b`, then `self`", normalized and canonical.
    pub fn compose(&self, b: &Quaternion) -> Quaternion {
        self.hamilton(b).normalize().unwrap_or(Quaternion::IDENTITY)
    }

    pub fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Rotate `v`. Assumes unit norm; see [`Quaternion::rotate_normalized`] otherwise.
    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        // v' = v + 2w (u x v) + 2 u x (u x v)
        let u = self.vector();
        let t = 2.0 * u.cross(v);
        v + self.w * t + u.cross(&t)
    }

    /// Rotate by `self / |self|`; used where the quaternion is an unconstrained unknown.
    pub fn rotate_normalized(&self, v: &Vec3) -> Vec3 {
        let n2 = self.norm_squared();
        if !(n2 > 0.0) {
            return *v;
        }
        let u = self.vector();
        let t = 2.0 * u.cross(v);
        v + (self.w * t + u.cross(&t)) / n2
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// `(axis, angle)` with `angle` in `[0, pi]`. The identity returns the x axis.
    pub fn to_axis_angle(&self) -> (Vec3, f64) {
        let q = self.canonical();
        let v = q.vector();
        let s = v.norm();
        if s == 0.0 {
            return (Vec3::x(), 0.0);
        }
        (v / s, 2.0 * s.atan2(q.w))
    }

    /// Rotation angle in `[0, pi]` of the relative rotation `self^-1 * other`.
    pub fn angle_to(&self, other: &Quaternion) -> f64 {
        let d = (self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z).abs();
        let v = self.conjugate().hamilton(other).vector().norm();
        2.0 * v.atan2(d)
    }
}

impl std::ops::Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, rhs: Quaternion) -> Quaternion {
        self.compose(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: &Quaternion, b: &Quaternion, tol: f64) -> bool {
        (a.w - b.w).abs() < tol
            && (a.x - b.x).abs() < tol
            && (a.y - b.y).abs() < tol
            && (a.z - b.z).abs() < tol
    }

    #[test]
    fn axis_angle_examples() {
        let z = Vec3::z();
        assert_eq!(Quaternion::from_axis_angle(z, 0.0).unwrap(), Quaternion::IDENTITY);
        let half = Quaternion::from_axis_angle(z, PI).unwrap();
        assert!(close(&half, &Quaternion::new(0.0, 0.0, 0.0, 1.0), 1e-15));
        let quarter = Quaternion::from_axis_angle(z, FRAC_PI_2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&quarter, &Quaternion::new(r, 0.0, 0.0, r), 1e-15));
    }

    #[test]
    fn zero_axis_is_an_error() {
        assert_eq!(
            Quaternion::from_axis_angle(Vec3::zeros(), 1.0),
            Err(QuatError::ZeroAxis)
        );
    }

    #[test]
    fn compose_laws() {
        let q90 = Quaternion::from_axis_angle(Vec3::z(), FRAC_PI_2).unwrap();
        let q180 = Quaternion::from_axis_angle(Vec3::z(), PI).unwrap();
        assert!(close(&(q90 * q90), &q180, 1e-15));
        let q = Quaternion::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 0.7).unwrap();
        assert!(close(&(q * Quaternion::IDENTITY), &q, 1e-15));
        assert!(close(&(q * q.inverse()), &Quaternion::IDENTITY, 1e-15));
    }

    #[test]
    fn rotate_examples() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(Quaternion::IDENTITY.rotate(&v), v);
        let q180 = Quaternion::from_axis_angle(Vec3::z(), PI).unwrap();
        assert!((q180.rotate(&Vec3::x()) - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        let q90 = Quaternion::from_axis_angle(Vec3::z(), FRAC_PI_2).unwrap();
        assert!((q90.rotate(&Vec3::x()) - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn canonical_handles_zero_w() {
        let q = Quaternion::new(0.0, -1.0, 0.0, 0.0).canonical();
        assert_eq!(q, Quaternion::new(0.0, 1.0, 0.0, 0.0));
        let q = Quaternion::new(-0.0, 0.0, 0.0, -1.0).canonical();
        assert_eq!(q, Quaternion::new(0.0, 0.0, 0.0, 1.0));
        assert!(q.w.is_sign_positive());
    }

    #[test]
    fn matrix_round_trip() {
        for (axis, angle) in [
            (Vec3::new(1.0, 0.0, 0.0), 3.0),
            (Vec3::new(0.3, -0.2, 0.9), PI),
            (Vec3::new(-1.0, 1.0, 1.0), 0.1),
        ] {
            let q = Quaternion::from_axis_angle(axis, angle).unwrap();
            let back = Quaternion::from_rotation_matrix(&q.to_rotation_matrix());
            assert!(close(&q, &back, 1e-12), "{q:?} vs {back:?}");
        }
    }

    #[test]
    fn rotate_normalized_ignores_scale() {
        let q = Quaternion::from_axis_angle(Vec3::new(0.2, 0.4, 1.0), 1.1).unwrap();
        let s = Quaternion::new(q.w * 3.0, q.x * 3.0, q.y * 3.0, q.z * 3.0);
        let v = Vec3::new(1.0, -4.0, 2.5);
        assert!((s.rotate_normalized(&v) - q.rotate(&v)).norm() < 1e-13);
    }
}
