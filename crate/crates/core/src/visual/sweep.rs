use super::ids::{assign_visual_ids, VisualMap};
use super::svg::{render_view_with_banner, ViewSpec};
use crate::diag::{Code, Diagnostic};
use crate::ir::AssemblyDef;
use crate::solver::{build_constraints, check_intersections, pin_joint, solve, SolveOutcome};

/// Banner text for an outcome that did not produce a clean assembly.
pub fn failure_banner(outcome: &SolveOutcome) -> Option<String> {
    if let Some(d) = outcome.diagnostics.iter().find(|d| d.is_error()) {
        return Some(format!("{}: {}", d.code, d.message));
    }
    if !outcome.converged {
        return Some(format!(
            "{}: solver did not converge (residual norm {:.3e})",
            Code::ConvergenceFailure,
            outcome.residual_norm
        ));
    }
    None
}

/// Pin the view's joint overrides, solve, and append intersection checks.
pub fn solve_view(def: &AssemblyDef, view: &ViewSpec) -> Result<SolveOutcome, Diagnostic> {
    let mut sys = build_constraints(def);
    for (joint, deg) in &view.overrides {
        sys = pin_joint(&sys, joint, deg.to_radians())?;
    }
    let mut out = solve(&sys, None);
    out.diagnostics.extend(check_intersections(def, &out.poses));
    Ok(out)
}

/// Render an outcome, with a failure banner when it carries errors.
pub fn render_outcome(def: &AssemblyDef, outcome: &SolveOutcome, map: &VisualMap, view: &ViewSpec) -> String {
    let banner = failure_banner(outcome);
    render_view_with_banner(def, &outcome.poses, map, view, banner.as_deref())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFrame {
    pub angle_deg: f64,
    pub svg: String,
    pub outcome: SolveOutcome,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sweep {
    /// In input order, skipping rejected angles.
    pub frames: Vec<SweepFrame>,
    /// One per rejected angle.
    pub diagnostics: Vec<Diagnostic>,
}

/// Pin `joint` at each angle (degrees), solve and render.
///
/// The view's own overrides apply first; the swept joint's angle wins over an
/// override of the same joint.
pub fn render_sweep(def: &AssemblyDef, joint: &str, angles: &[f64], view: &ViewSpec) -> Sweep {
    let map = assign_visual_ids(def);
    let mut sweep = Sweep::default();
    for &deg in angles {
        let frame_view = view.clone().with_override(joint, deg);
        match solve_view(def, &frame_view) {
            Ok(outcome) => {
                let svg = render_outcome(def, &outcome, &map, &frame_view);
                sweep.frames.push(SweepFrame {
                    angle_deg: deg,
                    svg,
                    outcome,
                });
            }
            Err(d) => sweep.diagnostics.push(d.with_data("frame_angle_deg", deg)),
        }
    }
    sweep
}
