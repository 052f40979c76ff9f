use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Pose, Vec3};
use crate::ir::Part;

/// One of the six faces of a box, in enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaceId {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [
        FaceId::PosX,
        FaceId::NegX,
        FaceId::PosY,
        FaceId::NegY,
        FaceId::PosZ,
        FaceId::NegZ,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// 0, 1, 2 for x, y, z.
    pub fn axis(self) -> usize {
        self.index() / 2
    }

    pub fn sign(self) -> f64 {
        if self.index() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn opposite(self) -> FaceId {
        FaceId::ALL[self.index() ^ 1]
    }

    pub fn normal(self) -> Vec3 {
        let mut n = Vec3::zeros();
        n[self.axis()] = self.sign();
        n
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaceId::PosX => "+x",
            FaceId::NegX => "-x",
            FaceId::PosY => "+y",
            FaceId::NegY => "-y",
            FaceId::PosZ => "+z",
            FaceId::NegZ => "-z",
        }
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaceId {
    type Err = String;

    /// Accepts `+x`, `PosX`, `pos_x` and the like, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != ' ')
            .flat_map(char::to_lowercase)
            .collect();
        let face = match key.as_str() {
            "+x" | "posx" | "px" => FaceId::PosX,
            "-x" | "negx" | "nx" => FaceId::NegX,
            "+y" | "posy" | "py" => FaceId::PosY,
            "-y" | "negy" | "ny" => FaceId::NegY,
            "+z" | "posz" | "pz" => FaceId::PosZ,
            "-z" | "negz" | "nz" => FaceId::NegZ,
            _ => return Err(format!("unknown face \"{s}\" (expected one of +x, -x, +y, -y, +z, -z)")),
        };
        Ok(face)
    }
}

impl Serialize for FaceId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for FaceId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An edge as the ordered pair of its two adjacent faces (`first < second`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(FaceId, FaceId);

impl EdgeId {
    /// The 12 edges sorted by `(first face, second face)`.
    pub const ALL: [EdgeId; 12] = [
        EdgeId(FaceId::PosX, FaceId::PosY),
        EdgeId(FaceId::PosX, FaceId::NegY),
        EdgeId(FaceId::PosX, FaceId::PosZ),
        EdgeId(FaceId::PosX, FaceId::NegZ),
        EdgeId(FaceId::NegX, FaceId::PosY),
        EdgeId(FaceId::NegX, FaceId::NegY),
        EdgeId(FaceId::NegX, FaceId::PosZ),
        EdgeId(FaceId::NegX, FaceId::NegZ),
        EdgeId(FaceId::PosY, FaceId::PosZ),
        EdgeId(FaceId::PosY, FaceId::NegZ),
        EdgeId(FaceId::NegY, FaceId::PosZ),
        EdgeId(FaceId::NegY, FaceId::NegZ),
    ];

    /// `None` unless the faces are on different axes.
    pub fn new(a: FaceId, b: FaceId) -> Option<EdgeId> {
        if a.axis() == b.axis() {
            return None;
        }
        Some(if a < b { EdgeId(a, b) } else { EdgeId(b, a) })
    }

    pub fn faces(self) -> (FaceId, FaceId) {
        (self.0, self.1)
    }

    pub fn index(self) -> usize {
        EdgeId::ALL.iter().position(|e| *e == self).expect("canonical edge")
    }

    pub fn touches(self, face: FaceId) -> bool {
        self.0 == face || self.1 == face
    }

    pub fn as_string(self) -> String {
        format!("{}{}", self.0, self.1)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.0, self.1)
    }
}

impl Serialize for EdgeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.as_string())
    }
}

/// A face's local frame: origin at the face center, outward normal, and
/// in-plane tangents with `u x v = n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub origin: Vec3,
    pub normal: Vec3,
    pub tangent_u: Vec3,
    pub tangent_v: Vec3,
}

/// `tangent_u` is the positive unit vector of the axis after the normal's axis
/// in the cycle x, y, z; `tangent_v = normal x tangent_u`.
pub fn face_frame(part: &Part, face: FaceId) -> FaceFrame {
    face_frame_for_dims(&part.dims, face)
}

pub(crate) fn face_frame_for_dims(dims: &[f64; 3], face: FaceId) -> FaceFrame {
    let k = face.axis();
    let normal = face.normal();
    let mut origin = Vec3::zeros();
    origin[k] = face.sign() * dims[k] * 0.5;
    let mut tangent_u = Vec3::zeros();
    tangent_u[(k + 1) % 3] = 1.0;
    let tangent_v = normal.cross(&tangent_u);
    FaceFrame {
        origin,
        normal,
        tangent_u,
        tangent_v,
    }
}

/// Corner `i` takes the `+` half-extent on x when bit 2 of `i` is set, on y
/// for bit 1 and on z for bit 0, so index 0 is `(-,-,-)` and 7 is `(+,+,+)`.
pub fn prism_corners(part: &Part, pose: &Pose) -> [Vec3; 8] {
    corners_for_dims(&part.dims, pose)
}

pub(crate) fn corners_for_dims(dims: &[f64; 3], pose: &Pose) -> [Vec3; 8] {
    let h = [dims[0] * 0.5, dims[1] * 0.5, dims[2] * 0.5];
    std::array::from_fn(|i| {
        let sx = if i & 4 != 0 { 1.0 } else { -1.0 };
        let sy = if i & 2 != 0 { 1.0 } else { -1.0 };
        let sz = if i & 1 != 0 { 1.0 } else { -1.0 };
        pose.transform_point(&Vec3::new(sx * h[0], sy * h[1], sz * h[2]))
    })
}

/// Indices into [`prism_corners`] of the two endpoints of `edge`.
pub fn edge_endpoints(edge: EdgeId) -> [usize; 2] {
    let (a, b) = edge.faces();
    let free = 3 - a.axis() - b.axis();
    let mut base = 0usize;
    for f in [a, b] {
        if f.sign() > 0.0 {
            base |= 4 >> f.axis();
        }
    }
    [base, base | (4 >> free)]
}

/// Corner indices of `face`, counter-clockwise seen from outside.
pub fn face_corner_loop(face: FaceId) -> [usize; 4] {
    match face {
        FaceId::PosX => [4, 6, 7, 5],
        FaceId::NegX => [0, 1, 3, 2],
        FaceId::PosY => [2, 3, 7, 6],
        FaceId::NegY => [0, 4, 5, 1],
        FaceId::PosZ => [1, 5, 7, 3],
        FaceId::NegZ => [0, 2, 6, 4],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Part;
    use crate::kinematics::Quaternion;

    fn part(dims: [f64; 3]) -> Part {
        Part::new("p", dims)
    }

    #[test]
    fn face_frame_examples() {
        let p = part([2.0, 4.0, 6.0]);
        let f = face_frame(&p, FaceId::PosX);
        assert_eq!(f.origin, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(f.normal, Vec3::new(1.0, 0.0, 0.0));
        let f = face_frame(&p, FaceId::NegZ);
        assert_eq!(f.origin, Vec3::new(0.0, 0.0, -3.0));
        assert_eq!(f.normal, Vec3::new(0.0, 0.0, -1.0));
        let f = face_frame(&part([1.0; 3]), FaceId::PosZ);
        assert_eq!(f.tangent_u, Vec3::x());
        assert_eq!(f.tangent_v, Vec3::y());
        assert_eq!(f.normal, Vec3::z());
    }

    #[test]
    fn frames_are_right_handed_and_opposites_cancel() {
        let p = part([3.0, 5.0, 7.0]);
        let mut sum = Vec3::zeros();
        for face in FaceId::ALL {
            let f = face_frame(&p, face);
            assert!((f.tangent_u.cross(&f.tangent_v) - f.normal).norm() < 1e-12);
            assert!(f.tangent_u.dot(&f.normal).abs() < 1e-12);
            assert_eq!(face_frame(&p, face.opposite()).normal, -f.normal);
            sum += f.origin;
        }
        assert!((sum / 6.0).norm() < 1e-15);
    }

    #[test]
    fn corners_examples() {
        let cube = part([1.0; 3]);
        let c = prism_corners(&cube, &Pose::IDENTITY);
        assert_eq!(c[0], Vec3::new(-0.5, -0.5, -0.5));
        assert_eq!(c[7], Vec3::new(0.5, 0.5, 0.5));
        for p in &c {
            assert!(p.iter().all(|v| v.abs() == 0.5));
        }
        let shifted = prism_corners(&cube, &Pose::from_translation(Vec3::new(1.0, 0.0, 0.0)));
        for (a, b) in c.iter().zip(&shifted) {
            assert_eq!(b - a, Vec3::new(1.0, 0.0, 0.0));
        }
        let q = Quaternion::from_axis_angle(Vec3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        let rotated = prism_corners(&cube, &Pose::new(Vec3::zeros(), q));
        assert!((rotated[7] - Vec3::new(-0.5, 0.5, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn edges_are_canonical_and_geometric() {
        let mut sorted = EdgeId::ALL;
        sorted.sort();
        assert_eq!(sorted, EdgeId::ALL);
        let cube = part([2.0, 2.0, 2.0]);
        let c = corners_for_dims(&cube.dims, &Pose::IDENTITY);
        for e in EdgeId::ALL {
            let (a, b) = e.faces();
            let [i, j] = edge_endpoints(e);
            for p in [c[i], c[j]] {
                assert_eq!(p[a.axis()], a.sign());
                assert_eq!(p[b.axis()], b.sign());
            }
            assert!(((c[i] - c[j]).norm() - 2.0).abs() < 1e-15);
        }
        assert_eq!(EdgeId::new(FaceId::PosX, FaceId::NegX), None);
        assert_eq!(EdgeId::new(FaceId::NegZ, FaceId::PosX), Some(EdgeId::ALL[3]));
    }

    #[test]
    fn face_loops_are_outward_ccw() {
        let c = corners_for_dims(&[1.0, 2.0, 3.0], &Pose::IDENTITY);
        for face in FaceId::ALL {
            let l = face_corner_loop(face);
            let n = (c[l[1]] - c[l[0]]).cross(&(c[l[2]] - c[l[1]]));
            assert!(n.normalize().dot(&face.normal()) > 0.999, "{face}");
            for i in l {
                assert_eq!(c[i][face.axis()].signum(), face.sign());
            }
        }
    }

    #[test]
    fn face_id_parsing() {
        assert_eq!("PosX".parse::<FaceId>().unwrap(), FaceId::PosX);
        assert_eq!("neg_z".parse::<FaceId>().unwrap(), FaceId::NegZ);
        assert_eq!("-y".parse::<FaceId>().unwrap(), FaceId::NegY);
        assert!("top".parse::<FaceId>().is_err());
    }
}
