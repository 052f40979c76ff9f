//! Damped Newton (Levenberg) iteration over quaternion-parameterized poses.
//!
//! Everything here is a fixed sequence of floating-point operations: the
//! start state comes from a breadth-first placement, the damping schedule is
//! constant, and there is no time or seed dependence, so identical inputs give
//! bit-identical outcomes.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::dof::{dof_analysis, numeric_rank};
use super::system::{
    jacobian, residual, revolute_angle, write_pose, ConstraintSystem, PoseMap, Slot, STATE_PER_LINK,
};
use crate::diag::{Code, Diagnostic};
use crate::ir::JointKind;
use crate::kinematics::{Pose, Quaternion};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub lambda_initial: f64,
    pub lambda_decrease: f64,
    pub lambda_increase: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Residual norm above which a stalled solve counts as inconsistent.
    pub inconsistency_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-9,
            max_iterations: 200,
            lambda_initial: 1e-3,
            lambda_decrease: 0.5,
            lambda_increase: 4.0,
            lambda_min: 1e-12,
            lambda_max: 1e4,
            inconsistency_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    /// Every link, converged or not.
    pub poses: PoseMap,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    pub dof: i64,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolveOutcome {
    pub fn has_errors(&self) -> bool {
        crate::diag::has_errors(&self.diagnostics)
    }
}

fn z_rotation(angle: f64) -> Quaternion {
    let (s, c) = (angle * 0.5).sin_cos();
    Quaternion::new(c, 0.0, 0.0, s)
}

/// Joint angle used for placement: the pin, else 0 clamped into the limits.
fn placement_angle(sys: &ConstraintSystem, joint: usize) -> f64 {
    let j = &sys.joints[joint];
    if j.kind == JointKind::Fixed {
        return 0.0;
    }
    if let Some(a) = sys.pinned_angle(joint) {
        return a;
    }
    match j.limits_rad {
        Some([lo, hi]) => 0.0f64.clamp(lo, hi),
        None => 0.0,
    }
}

/// Breadth-first placement from the grounded links (and any links given in
/// `seed`), walking joints in definition order. Links never reached stay at
/// the identity.
pub fn initial_state(sys: &ConstraintSystem, seed: Option<&PoseMap>) -> DVector<f64> {
    let n = sys.unknown_links.len();
    let mut poses: Vec<Option<Pose>> = vec![None; n];
    let mut queue: VecDeque<Slot> = VecDeque::new();
    for g in 0..sys.grounded.len() {
        queue.push_back(Slot::Grounded(g));
    }
    if let Some(seed) = seed {
        for (i, name) in sys.unknown_links.iter().enumerate() {
            if let Some(p) = seed.get(name) {
                let q = p.orientation.normalize().unwrap_or(Quaternion::IDENTITY);
                poses[i] = Some(Pose::new(p.position, q));
                queue.push_back(Slot::Unknown(i));
            }
        }
    }
    let pose_of = |slot: Slot, poses: &[Option<Pose>]| match slot {
        Slot::Grounded(g) => Some(sys.grounded[g].1),
        Slot::Unknown(i) => poses[i],
    };
    while let Some(current) = queue.pop_front() {
        for (ji, j) in sys.joints.iter().enumerate() {
            let rz = z_rotation(placement_angle(sys, ji));
            let (placed, other, forward) = if j.a == current {
                (j.a, j.b, true)
            } else if j.b == current {
                (j.b, j.a, false)
            } else {
                continue;
            };
            let Slot::Unknown(oi) = other else { continue };
            if poses[oi].is_some() {
                continue;
            }
            let Some(p) = pose_of(placed, &poses) else { continue };
            let new_pose = if forward {
                let q = p
                    .orientation
                    .hamilton(&j.basis_a)
                    .hamilton(&rz)
                    .hamilton(&j.basis_b.conjugate())
                    .normalize()
                    .unwrap_or(Quaternion::IDENTITY);
                let anchor = p.transform_point(&j.anchor_a);
                Pose::new(anchor - q.rotate(&j.frame_b.origin), q)
            } else {
                let q = p
                    .orientation
                    .hamilton(&j.basis_b)
                    .hamilton(&rz.conjugate())
                    .hamilton(&j.basis_a.conjugate())
                    .normalize()
                    .unwrap_or(Quaternion::IDENTITY);
                let anchor = p.transform_point(&j.frame_b.origin);
                Pose::new(anchor - q.rotate(&j.anchor_a), q)
            };
            poses[oi] = Some(new_pose);
            queue.push_back(other);
        }
    }
    let mut x = DVector::zeros(n * STATE_PER_LINK);
    for (i, p) in poses.iter().enumerate() {
        write_pose(&mut x, i, &p.unwrap_or(Pose::IDENTITY));
    }
    x
}

/// Renormalize and canonicalize every quaternion block in place.
fn normalize_state(x: &mut DVector<f64>) {
    for block in 0..x.len() / STATE_PER_LINK {
        let o = block * STATE_PER_LINK + 3;
        let q = Quaternion::new(x[o], x[o + 1], x[o + 2], x[o + 3])
            .normalize()
            .unwrap_or(Quaternion::IDENTITY);
        x[o] = q.w;
        x[o + 1] = q.x;
        x[o + 2] = q.y;
        x[o + 3] = q.z;
    }
}

fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let n = jac.ncols();
    let jt = jac.transpose();
    let mut a = &jt * jac;
    for i in 0..n {
        a[(i, i)] += lambda;
    }
    let g = -(&jt * r);
    if let Some(ch) = a.clone().cholesky() {
        return ch.solve(&g);
    }
    a.svd(true, true)
        .solve(&g, 1e-14)
        .unwrap_or_else(|_| DVector::zeros(n))
}

/// Solve with default settings. Grounded links present in `initial` take that
/// pose as their constant; other entries seed the start state.
pub fn solve(sys: &ConstraintSystem, initial: Option<&PoseMap>) -> SolveOutcome {
    solve_with(sys, initial, &SolverConfig::default())
}

pub fn solve_with(sys: &ConstraintSystem, initial: Option<&PoseMap>, cfg: &SolverConfig) -> SolveOutcome {
    let mut sys = sys.clone();
    if let Some(init) = initial {
        for (name, pose) in sys.grounded.iter_mut() {
            if let Some(p) = init.get(name) {
                let q = p.orientation.normalize().unwrap_or(Quaternion::IDENTITY);
                *pose = Pose::new(p.position, q);
            }
        }
    }

    let mut x = initial_state(&sys, initial);
    normalize_state(&mut x);
    let mut r = residual(&sys, &x);
    let mut norm = r.norm();
    let mut lambda = cfg.lambda_initial;
    let mut iterations = 0;
    let mut jac: Option<DMatrix<f64>> = None;

    while norm > cfg.tolerance && iterations < cfg.max_iterations && x.len() > 0 {
        iterations += 1;
        let j = jac.get_or_insert_with(|| jacobian(&sys, &x));
        let step = damped_step(j, &r, lambda);
        let mut candidate = &x + step;
        normalize_state(&mut candidate);
        let rc = residual(&sys, &candidate);
        let nc = rc.norm();
        if nc < norm {
            x = candidate;
            r = rc;
            norm = nc;
            jac = None;
            lambda = (lambda * cfg.lambda_decrease).max(cfg.lambda_min);
        } else {
            if lambda >= cfg.lambda_max {
                break;
            }
            lambda = (lambda * cfg.lambda_increase).min(cfg.lambda_max);
        }
    }

    let converged = norm <= cfg.tolerance;
    let poses = sys.poses_from_state(&x);
    let mut diagnostics = Vec::new();
    if !converged {
        diagnostics.push(classify_failure(&sys, &x, &r, norm, iterations, cfg));
    }
    let (dof, dof_diags) = dof_analysis(&sys, &x);
    if converged {
        diagnostics.extend(dof_diags);
    }
    diagnostics.extend(limit_violations(&sys, &poses));

    SolveOutcome {
        poses,
        converged,
        residual_norm: norm,
        iterations,
        dof,
        diagnostics,
    }
}

/// Residual norm contributed by each joint, in joint order.
fn joint_residuals(sys: &ConstraintSystem, r: &DVector<f64>) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = sys.joints.iter().map(|j| (j.name.clone(), 0.0)).collect();
    for (eq, value) in sys.equations().iter().zip(r.iter()) {
        if !eq.is_joint_equation() {
            continue;
        }
        if let Some(slot) = out.iter_mut().find(|(n, _)| *n == eq.source) {
            slot.1 += value * value;
        }
    }
    for slot in &mut out {
        slot.1 = slot.1.sqrt();
    }
    out
}

fn classify_failure(
    sys: &ConstraintSystem,
    x: &DVector<f64>,
    r: &DVector<f64>,
    norm: f64,
    iterations: usize,
    cfg: &SolverConfig,
) -> Diagnostic {
    let jac = jacobian(sys, x);
    let normal = jac.transpose() * &jac;
    let full_rank = numeric_rank(&normal, 1e-10) == jac.ncols();
    let gradient = (jac.transpose() * r).norm();
    let stationary = gradient <= 1e-6 * (1.0 + jac.norm()) * norm.max(1.0);
    let per_joint = joint_residuals(sys, r);

    if norm > cfg.inconsistency_threshold && (full_rank || stationary) {
        let culprits: Vec<&(String, f64)> = per_joint
            .iter()
            .filter(|(_, v)| *v > cfg.inconsistency_threshold)
            .collect();
        let names: Vec<String> = culprits.iter().map(|(n, _)| n.clone()).collect();
        let detail = culprits
            .iter()
            .map(|(n, v)| format!("\"{n}\" (residual {v:.6})"))
            .collect::<Vec<_>>()
            .join(", ");
        let mut d = Diagnostic::error(
            Code::InconsistentConstraints,
            format!(
                "constraints cannot all hold at once: the best compromise leaves residual norm {norm:.6}; conflicting joints: {detail}. Remove one of them or change its faces or offset so they agree"
            ),
        )
        .with_subjects(names)
        .with_data("residual_norm", norm)
        .with_data("iterations", iterations as f64);
        for (n, v) in culprits {
            d = d.with_data(&format!("residual.{n}"), *v);
        }
        d
    } else {
        let worst = per_joint
            .iter()
            .fold(None::<&(String, f64)>, |best, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            });
        let mut d = Diagnostic::error(
            Code::ConvergenceFailure,
            match worst {
                Some((n, v)) => format!(
                    "solver did not converge after {iterations} iterations (residual norm {norm:.3e}); the most violated joint is \"{n}\" (residual {v:.3e})"
                ),
                None => format!(
                    "solver did not converge after {iterations} iterations (residual norm {norm:.3e})"
                ),
            },
        )
        .with_data("residual_norm", norm)
        .with_data("iterations", iterations as f64);
        if let Some((n, v)) = worst {
            d = d.with_subject(n.clone()).with_data("worst_residual", *v);
        }
        d
    }
}

fn limit_violations(sys: &ConstraintSystem, poses: &PoseMap) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for j in &sys.joints {
        let Some([lo, hi]) = j.limits_rad else { continue };
        let Some(angle) = revolute_angle(&sys.def, &j.name, poses) else {
            continue;
        };
        if angle < lo - 1e-9 || angle > hi + 1e-9 {
            out.push(
                Diagnostic::error(
                    Code::LimitViolation,
                    format!(
                        "joint \"{}\" sits at {:.3} deg, outside its limits [{:.3}, {:.3}] deg",
                        j.name,
                        angle.to_degrees(),
                        lo.to_degrees(),
                        hi.to_degrees()
                    ),
                )
                .with_subject(j.name.clone())
                .with_data("angle_deg", angle.to_degrees()),
            );
        }
    }
    out
}

/// Rigid transform every pose by `g` (used by frame-invariance checks).
pub fn transform_poses(poses: &PoseMap, g: &Pose) -> PoseMap {
    poses.iter().map(|(k, p)| (k.clone(), g.compose(p))).collect()
}
