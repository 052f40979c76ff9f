//! Oriented-box overlap by the separating-axis test.

use crate::diag::{Code, Diagnostic};
use crate::ir::AssemblyDef;
use crate::kinematics::{Pose, Vec3};

use super::system::PoseMap;

/// Overlap up to this depth (mm) is contact, not intersection.
pub const CONTACT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec3,
    /// Unit box axes in world space.
    pub axes: [Vec3; 3],
    pub half: [f64; 3],
}

impl Obb {
    pub fn new(dims: [f64; 3], pose: &Pose) -> Obb {
        let r = pose.orientation.to_rotation_matrix();
        Obb {
            center: pose.position,
            axes: [r.column(0).into(), r.column(1).into(), r.column(2).into()],
            half: [dims[0] / 2.0, dims[1] / 2.0, dims[2] / 2.0],
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let d = p - self.center;
        (0..3).all(|i| d.dot(&self.axes[i]).abs() <= self.half[i])
    }

    fn radius_along(&self, axis: &Vec3) -> f64 {
        (0..3).map(|i| self.half[i] * self.axes[i].dot(axis).abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// Unit axis of least overlap, pointing from the first box to the second.
    pub axis: Vec3,
}

/// Least overlap over the 15 candidate axes, or `None` if some axis separates
/// the boxes by more than [`CONTACT_TOLERANCE`] of overlap.
pub fn penetration(a: &Obb, b: &Obb) -> Option<Penetration> {
    let t = b.center - a.center;
    let mut candidates: Vec<Vec3> = Vec::with_capacity(15);
    candidates.extend_from_slice(&a.axes);
    candidates.extend_from_slice(&b.axes);
    for ea in &a.axes {
        for eb in &b.axes {
            let c = ea.cross(eb);
            let n = c.norm();
            // parallel edge pairs add nothing beyond the face axes
            if n > 1e-12 {
                candidates.push(c / n);
            }
        }
    }
    let mut best: Option<Penetration> = None;
    for axis in candidates {
        let dist = t.dot(&axis);
        let overlap = a.radius_along(&axis) + b.radius_along(&axis) - dist.abs();
        if overlap <= CONTACT_TOLERANCE {
            return None;
        }
        if best.map_or(true, |p| overlap < p.depth) {
            let signed = if dist < 0.0 { -axis } else { axis };
            best = Some(Penetration {
                depth: overlap,
                axis: signed,
            });
        }
    }
    best
}

/// One `Intersection` error per overlapping link pair, pairs in link order.
pub fn check_intersections(def: &AssemblyDef, poses: &PoseMap) -> Vec<Diagnostic> {
    let boxes: Vec<(&str, Obb)> = def
        .links
        .iter()
        .filter_map(|l| {
            let part = def.part(&l.part)?;
            let pose = poses.get(&l.name)?;
            Some((l.name.as_str(), Obb::new(part.dims, pose)))
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..boxes.len() {
        for j in i + 1..boxes.len() {
            let (na, a) = &boxes[i];
            let (nb, b) = &boxes[j];
            if let Some(p) = penetration(a, b) {
                out.push(
                    Diagnostic::error(
                        Code::Intersection,
                        format!(
                            "links \"{na}\" and \"{nb}\" overlap by {:.4} mm along ({:.3}, {:.3}, {:.3}); move one of them at least that far along this direction",
                            p.depth, p.axis.x, p.axis.y, p.axis.z
                        ),
                    )
                    .with_subjects([na.to_string(), nb.to_string()])
                    .with_data("depth", p.depth)
                    .with_data("axis_x", p.axis.x)
                    .with_data("axis_y", p.axis.y)
                    .with_data("axis_z", p.axis.z),
                );
            }
        }
    }
    out
}
