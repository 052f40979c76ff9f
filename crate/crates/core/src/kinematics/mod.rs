//! Pose algebra and box geometry.
//!
//! Part-local frames are centered at the box centroid with axes along the box
//! edges. Faces and edges have a fixed enumeration order that every other
//! module (solver equations, visual ids, renderer) relies on.

mod geometry;
mod pose;
mod quat;

pub use geometry::{edge_endpoints, face_corner_loop, face_frame, prism_corners, EdgeId, FaceFrame, FaceId};
pub use pose::Pose;
pub use quat::{QuatError, Quaternion, UNIT_TOLERANCE};

pub type Vec3 = nalgebra::Vector3<f64>;

pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad.to_degrees()
}
