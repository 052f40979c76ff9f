use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::diag::{Code, Diagnostic};
use crate::ir::{AssemblyDef, JointKind};
use crate::kinematics::{face_frame, FaceFrame, Pose, Quaternion, Vec3};

pub type PoseMap = BTreeMap<String, Pose>;

/// Scalars per unknown link: position x, y, z then quaternion w, x, y, z.
pub const STATE_PER_LINK: usize = 7;

/// Central-difference step of [`jacobian`].
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    /// World-space anchor difference along x, y or z (mm).
    Coincidence(u8),
    /// Relative-rotation error component (rad).
    Orientation(u8),
    /// Tangential component of the normals' anti-alignment defect.
    AxisAlignment(u8),
    /// Revolute angle pinned to a value.
    Pin,
    /// Unit norm of a link's quaternion.
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    /// Joint name, or link name for [`EquationKind::Norm`].
    pub source: String,
    pub kind: EquationKind,
}

impl Equation {
    pub fn is_joint_equation(&self) -> bool {
        self.kind != EquationKind::Norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Slot {
    Unknown(usize),
    Grounded(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct CompiledJoint {
    pub name: String,
    pub kind: JointKind,
    pub a: Slot,
    pub b: Slot,
    pub frame_a: FaceFrame,
    pub frame_b: FaceFrame,
    /// `a`'s face center moved by the joint offset, in `a`'s local frame.
    pub anchor_a: Vec3,
    /// Rotation taking `[e1 e2 e3]` to `a`'s `[u v n]`.
    pub basis_a: Quaternion,
    /// Rotation taking `[e1 e2 e3]` to `b`'s flipped frame `[u -v -n]`.
    pub basis_b: Quaternion,
    pub limits_rad: Option<[f64; 2]>,
}

/// Joint equations compiled from an assembly, with grounded links as constants.
///
/// The unknowns are the poses of the non-grounded links, 7 scalars each.
/// Equations are ordered joint by joint in definition order, then one norm
/// equation per unknown link, then one equation per pinned revolute.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    pub(crate) def: AssemblyDef,
    pub(crate) unknown_links: Vec<String>,
    pub(crate) grounded: Vec<(String, Pose)>,
    pub(crate) joints: Vec<CompiledJoint>,
    pub(crate) pins: Vec<(usize, f64)>,
    equations: Vec<Equation>,
}

fn basis_quaternion(u: &Vec3, v: &Vec3, n: &Vec3) -> Quaternion {
    Quaternion::from_rotation_matrix(&Matrix3::from_columns(&[*u, *v, *n]))
}

pub fn build_constraints(def: &AssemblyDef) -> ConstraintSystem {
    let mut slots = HashMap::new();
    let mut unknown_links = Vec::new();
    let mut grounded = Vec::new();
    for l in &def.links {
        if l.grounded {
            slots.insert(l.name.clone(), Slot::Grounded(grounded.len()));
            grounded.push((l.name.clone(), Pose::IDENTITY));
        } else {
            slots.insert(l.name.clone(), Slot::Unknown(unknown_links.len()));
            unknown_links.push(l.name.clone());
        }
    }

    let mut joints = Vec::new();
    let mut equations = Vec::new();
    for j in &def.joints {
        let (Some(pa), Some(pb)) = (def.part_of(&j.a.link), def.part_of(&j.b.link)) else {
            continue;
        };
        let frame_a = face_frame(pa, j.a.face);
        let frame_b = face_frame(pb, j.b.face);
        let anchor_a =
            frame_a.origin + j.offset[0] * frame_a.tangent_u + j.offset[1] * frame_a.tangent_v;
        let kind_eqs: &[EquationKind] = match j.kind {
            JointKind::Fixed => &[
                EquationKind::Coincidence(0),
                EquationKind::Coincidence(1),
                EquationKind::Coincidence(2),
                EquationKind::Orientation(0),
                EquationKind::Orientation(1),
                EquationKind::Orientation(2),
            ],
            JointKind::Revolute => &[
                EquationKind::Coincidence(0),
                EquationKind::Coincidence(1),
                EquationKind::Coincidence(2),
                EquationKind::AxisAlignment(0),
                EquationKind::AxisAlignment(1),
            ],
        };
        equations.extend(kind_eqs.iter().map(|k| Equation {
            source: j.name.clone(),
            kind: *k,
        }));
        joints.push(CompiledJoint {
            name: j.name.clone(),
            kind: j.kind,
            a: slots[&j.a.link],
            b: slots[&j.b.link],
            basis_a: basis_quaternion(&frame_a.tangent_u, &frame_a.tangent_v, &frame_a.normal),
            basis_b: basis_quaternion(&frame_b.tangent_u, &(-frame_b.tangent_v), &(-frame_b.normal)),
            frame_a,
            frame_b,
            anchor_a,
            limits_rad: j.angle_limits.map(|[lo, hi]| [lo.to_radians(), hi.to_radians()]),
        });
    }
    for name in &unknown_links {
        equations.push(Equation {
            source: name.clone(),
            kind: EquationKind::Norm,
        });
    }

    ConstraintSystem {
        def: def.clone(),
        unknown_links,
        grounded,
        joints,
        pins: Vec::new(),
        equations,
    }
}

impl ConstraintSystem {
    pub fn def(&self) -> &AssemblyDef {
        &self.def
    }

    /// Names of the links whose poses are unknowns, in link order.
    pub fn unknown_links(&self) -> &[String] {
        &self.unknown_links
    }

    pub fn equations(&self) -> &[Equation] {
        &self.equations
    }

    pub fn state_len(&self) -> usize {
        self.unknown_links.len() * STATE_PER_LINK
    }

    pub fn joint_equation_count(&self) -> usize {
        self.equations.iter().filter(|e| e.is_joint_equation()).count()
    }

    /// Pinned revolute angles in radians, by joint name.
    pub fn pinned_angles(&self) -> BTreeMap<String, f64> {
        self.pins
            .iter()
            .map(|(j, a)| (self.joints[*j].name.clone(), *a))
            .collect()
    }

    pub(crate) fn pinned_angle(&self, joint: usize) -> Option<f64> {
        self.pins.iter().find(|(j, _)| *j == joint).map(|(_, a)| *a)
    }

    pub fn grounded_poses(&self) -> &[(String, Pose)] {
        &self.grounded
    }

    /// Copy with a grounded link's constant pose replaced; unknown names are ignored.
    pub fn with_grounded_pose(&self, link: &str, pose: Pose) -> ConstraintSystem {
        let mut sys = self.clone();
        for (name, p) in &mut sys.grounded {
            if name == link {
                *p = pose;
            }
        }
        sys
    }

    pub fn state_from_poses(&self, poses: &PoseMap) -> DVector<f64> {
        let mut x = DVector::zeros(self.state_len());
        for (i, name) in self.unknown_links.iter().enumerate() {
            let p = poses.get(name).copied().unwrap_or(Pose::IDENTITY);
            write_pose(&mut x, i, &p);
        }
        x
    }

    /// Poses of every link; unknown quaternions are normalized.
    pub fn poses_from_state(&self, state: &DVector<f64>) -> PoseMap {
        let mut out = PoseMap::new();
        for (name, p) in &self.grounded {
            out.insert(name.clone(), *p);
        }
        for (i, name) in self.unknown_links.iter().enumerate() {
            let (t, q) = read_raw(state, i);
            let q = q.normalize().unwrap_or(Quaternion::IDENTITY);
            out.insert(name.clone(), Pose::new(t, q));
        }
        out
    }

    fn raw_pose(&self, slot: Slot, state: &DVector<f64>) -> (Vec3, Quaternion) {
        match slot {
            Slot::Grounded(g) => {
                let p = self.grounded[g].1;
                (p.position, p.orientation)
            }
            Slot::Unknown(i) => read_raw(state, i),
        }
    }
}

pub(crate) fn write_pose(x: &mut DVector<f64>, i: usize, p: &Pose) {
    let o = i * STATE_PER_LINK;
    x[o] = p.position.x;
    x[o + 1] = p.position.y;
    x[o + 2] = p.position.z;
    x[o + 3] = p.orientation.w;
    x[o + 4] = p.orientation.x;
    x[o + 5] = p.orientation.y;
    x[o + 6] = p.orientation.z;
}

fn read_raw(x: &DVector<f64>, i: usize) -> (Vec3, Quaternion) {
    let o = i * STATE_PER_LINK;
    (
        Vec3::new(x[o], x[o + 1], x[o + 2]),
        Quaternion::new(x[o + 3], x[o + 4], x[o + 5], x[o + 6]),
    )
}

fn unit(q: &Quaternion) -> Quaternion {
    let n = q.norm();
    if n > 0.0 {
        Quaternion::new(q.w / n, q.x / n, q.y / n, q.z / n)
    } else {
        Quaternion::IDENTITY
    }
}

/// World-space quantities of one joint at a (not necessarily unit) state.
pub(crate) struct JointFrames {
    pub anchor_a: Vec3,
    pub anchor_b: Vec3,
    pub u_a: Vec3,
    pub v_a: Vec3,
    pub n_a: Vec3,
    pub u_b: Vec3,
    pub n_b: Vec3,
    pub frame_a: Quaternion,
    pub frame_b: Quaternion,
}

impl ConstraintSystem {
    pub(crate) fn joint_frames(&self, j: &CompiledJoint, state: &DVector<f64>) -> JointFrames {
        let (ta, qa) = self.raw_pose(j.a, state);
        let (tb, qb) = self.raw_pose(j.b, state);
        JointFrames {
            anchor_a: ta + qa.rotate_normalized(&j.anchor_a),
            anchor_b: tb + qb.rotate_normalized(&j.frame_b.origin),
            u_a: qa.rotate_normalized(&j.frame_a.tangent_u),
            v_a: qa.rotate_normalized(&j.frame_a.tangent_v),
            n_a: qa.rotate_normalized(&j.frame_a.normal),
            u_b: qb.rotate_normalized(&j.frame_b.tangent_u),
            n_b: qb.rotate_normalized(&j.frame_b.normal),
            frame_a: unit(&qa).hamilton(&j.basis_a),
            frame_b: unit(&qb).hamilton(&j.basis_b),
        }
    }
}

/// Residual vector in [`ConstraintSystem::equations`] order.
pub fn residual(sys: &ConstraintSystem, state: &DVector<f64>) -> DVector<f64> {
    let mut r = Vec::with_capacity(sys.equations.len());
    for j in &sys.joints {
        let f = sys.joint_frames(j, state);
        let d = f.anchor_b - f.anchor_a;
        r.extend_from_slice(&[d.x, d.y, d.z]);
        match j.kind {
            JointKind::Fixed => {
                let e = f.frame_a.conjugate().hamilton(&f.frame_b);
                r.extend_from_slice(&[2.0 * e.x, 2.0 * e.y, 2.0 * e.z]);
            }
            JointKind::Revolute => {
                let defect = f.n_a + f.n_b;
                r.push(defect.dot(&f.u_a));
                r.push(defect.dot(&f.v_a));
            }
        }
    }
    for i in 0..sys.unknown_links.len() {
        let (_, q) = read_raw(state, i);
        r.push(q.norm_squared() - 1.0);
    }
    for (ji, angle) in &sys.pins {
        let f = sys.joint_frames(&sys.joints[*ji], state);
        let target = angle.cos() * f.u_a + angle.sin() * f.v_a;
        r.push(f.u_b.dot(&f.n_a.cross(&target)));
    }
    DVector::from_vec(r)
}

/// Central finite differences with step [`FD_STEP`], columns in state order.
pub fn jacobian(sys: &ConstraintSystem, state: &DVector<f64>) -> DMatrix<f64> {
    let n = state.len();
    let m = sys.equations.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = state.clone();
    for c in 0..n {
        let x0 = state[c];
        probe[c] = x0 + FD_STEP;
        let plus = residual(sys, &probe);
        probe[c] = x0 - FD_STEP;
        let minus = residual(sys, &probe);
        probe[c] = x0;
        for r in 0..m {
            jac[(r, c)] = (plus[r] - minus[r]) / (2.0 * FD_STEP);
        }
    }
    jac
}

/// Signed revolute angle from `a`'s tangent u to `b`'s tangent u about `a`'s normal (rad).
pub fn revolute_angle(def: &AssemblyDef, joint: &str, poses: &PoseMap) -> Option<f64> {
    let j = def.joint(joint)?;
    let (pa, pb) = (def.part_of(&j.a.link)?, def.part_of(&j.b.link)?);
    let (qa, qb) = (poses.get(&j.a.link)?.orientation, poses.get(&j.b.link)?.orientation);
    let fa = face_frame(pa, j.a.face);
    let fb = face_frame(pb, j.b.face);
    let u_a = qa.rotate(&fa.tangent_u);
    let v_a = qa.rotate(&fa.tangent_v);
    let u_b = qb.rotate(&fb.tangent_u);
    Some(u_b.dot(&v_a).atan2(u_b.dot(&u_a)))
}

/// Copy of `sys` with revolute `joint` pinned at `angle` radians.
///
/// Pinning an already pinned joint replaces its angle.
pub fn pin_joint(sys: &ConstraintSystem, joint: &str, angle: f64) -> Result<ConstraintSystem, Diagnostic> {
    let Some(index) = sys.joints.iter().position(|j| j.name == joint) else {
        return Err(Diagnostic::error(
            Code::UnresolvedReference,
            format!("cannot pin joint \"{joint}\": no joint with that name"),
        )
        .with_subject(joint));
    };
    let j = &sys.joints[index];
    if j.kind != JointKind::Revolute {
        return Err(Diagnostic::error(
            Code::InvalidJoint,
            format!("cannot pin joint \"{joint}\": it is {}, only revolute joints have an angle", j.kind.as_str()),
        )
        .with_subject(joint));
    }
    if !angle.is_finite() {
        return Err(Diagnostic::error(
            Code::LimitViolation,
            format!("cannot pin joint \"{joint}\" at a non-finite angle"),
        )
        .with_subject(joint));
    }
    if let Some([lo, hi]) = j.limits_rad {
        if angle < lo - 1e-12 || angle > hi + 1e-12 {
            return Err(Diagnostic::error(
                Code::LimitViolation,
                format!(
                    "joint \"{joint}\" cannot be pinned at {:.3} deg: its limits are [{:.3}, {:.3}] deg",
                    angle.to_degrees(),
                    lo.to_degrees(),
                    hi.to_degrees()
                ),
            )
            .with_subject(joint)
            .with_data("angle_deg", angle.to_degrees())
            .with_data("lo_deg", lo.to_degrees())
            .with_data("hi_deg", hi.to_degrees()));
        }
    }
    let mut out = sys.clone();
    if let Some(p) = out.pins.iter_mut().find(|(j, _)| *j == index) {
        p.1 = angle;
    } else {
        out.pins.push((index, angle));
        out.equations.push(Equation {
            source: joint.to_string(),
            kind: EquationKind::Pin,
        });
    }
    Ok(out)
}
