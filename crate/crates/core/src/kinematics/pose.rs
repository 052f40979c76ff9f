use serde::{Deserialize, Serialize};

use super::{Quaternion, Vec3};

/// Rigid placement: `world = orientation * local + position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Quaternion,
}

impl Default for Pose {
    fn default() -> Self {
        Pose::IDENTITY
    }
}

impl Pose {
    pub const IDENTITY: Pose = Pose {
        position: Vec3::new(0.0, 0.0, 0.0),
        orientation: Quaternion::IDENTITY,
    };

    pub fn new(position: Vec3, orientation: Quaternion) -> Self {
        Pose {
            position,
            orientation,
        }
    }

    pub fn from_translation(position: Vec3) -> Self {
        Pose::new(position, Quaternion::IDENTITY)
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.orientation.rotate(p) + self.position
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.orientation.rotate(v)
    }

    /// `self * other`: apply `other`, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.transform_point(&other.position),
            self.orientation.compose(&other.orientation),
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-inv.rotate(&self.position), inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_with_inverse_is_identity() {
        let p = Pose::new(
            Vec3::new(1.0, -2.0, 3.0),
            Quaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.8).unwrap(),
        );
        let id = p.compose(&p.inverse());
        assert!(id.position.norm() < 1e-14);
        assert!(id.orientation.angle_to(&Quaternion::IDENTITY) < 1e-14);
    }
}
