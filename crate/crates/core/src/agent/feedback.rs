//! Compile the sandbox and package the result for the model.

use std::fs;
use std::path::Path;

use super::client::{Attachment, Message, Role};
use super::sandbox::Sandbox;
use crate::diag::{has_errors, to_json_lines, Diagnostic};
use crate::ir::{validate_assembly, AssemblyDef};
use crate::solver::{build_constraints, check_intersections, solve, SolveOutcome};
use crate::visual::{assign_visual_ids, render_outcome, Camera, Entity, ViewSpec, VisualMap};

/// A render written to disk, path relative to the session root.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderRef {
    pub camera: Camera,
    pub path: String,
    pub svg: String,
}

impl RenderRef {
    pub fn attachment(&self) -> Attachment {
        Attachment::from_bytes(self.path.clone(), "image/svg+xml", self.svg.as_bytes())
    }
}

/// Everything one compile of the sandbox produced.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationCheck {
    /// Parse, validation, solver and intersection diagnostics, in that order.
    pub diagnostics: Vec<Diagnostic>,
    pub def: Option<AssemblyDef>,
    pub outcome: Option<SolveOutcome>,
    pub map: Option<VisualMap>,
    pub renders: Vec<RenderRef>,
}

impl IterationCheck {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }

    pub fn converged(&self) -> bool {
        self.outcome.as_ref().is_some_and(|o| o.converged)
    }

    /// Clean enough to show the judge.
    pub fn is_clean(&self) -> bool {
        self.converged() && !self.has_errors()
    }
}

/// Parse, validate, solve, check intersections and render every view into
/// `renders/iter<index>_<view>.svg`.
pub fn compile_sandbox(sandbox: &Sandbox, index: usize, views: &[ViewSpec]) -> IterationCheck {
    let def = match sandbox.load() {
        Ok(def) => def,
        Err(diagnostics) => {
            return IterationCheck {
                diagnostics,
                def: None,
                outcome: None,
                map: None,
                renders: Vec::new(),
            }
        }
    };
    let mut diagnostics = validate_assembly(&def);
    let map = assign_visual_ids(&def);
    diagnostics.extend(map.diagnostics().iter().cloned());
    if has_errors(&diagnostics) {
        return IterationCheck {
            diagnostics,
            def: Some(def),
            outcome: None,
            map: Some(map),
            renders: Vec::new(),
        };
    }
    let mut outcome = solve(&build_constraints(&def), None);
    outcome.diagnostics.extend(check_intersections(&def, &outcome.poses));
    diagnostics.extend(outcome.diagnostics.iter().cloned());

    let mut renders = Vec::new();
    for view in views {
        let svg = render_outcome(&def, &outcome, &map, view);
        let rel = format!("renders/iter{index}_{}.svg", view.camera.name());
        // an unwritable render is still attached from memory
        let _ = fs::write(sandbox.root().join(Path::new(&rel)), &svg);
        renders.push(RenderRef {
            camera: view.camera,
            path: rel,
            svg,
        });
    }
    IterationCheck {
        diagnostics,
        def: Some(def),
        outcome: Some(outcome),
        map: Some(map),
        renders,
    }
}

fn legend_text(map: &VisualMap) -> String {
    let mut s = String::new();
    for (link, label) in map.instance_labels() {
        s.push_str(&format!("{label} = link \"{link}\"\n"));
    }
    for row in map.legend() {
        let label = map.label(&row.link).unwrap_or(&row.link);
        let what = match row.entity {
            Entity::Face(f) => format!("face {f}"),
            Entity::Edge(e) => format!("edge {e}"),
        };
        s.push_str(&format!("{} {label} {what}\n", row.style.token));
    }
    s
}

/// Feedback bundle: diagnostics (JSON lines), DOF summary, legend, then the
/// renders as attachments. Renders are attached whether or not the solve
/// converged.
pub fn build_feedback(check: &IterationCheck) -> Vec<Message> {
    let mut text = String::from("## Diagnostics\n");
    if check.diagnostics.is_empty() {
        text.push_str("(none)\n");
    } else {
        text.push_str(&to_json_lines(&check.diagnostics));
    }
    text.push_str("\n## Degrees of freedom\n");
    match &check.outcome {
        Some(o) => text.push_str(&format!(
            "converged: {}, residual norm: {:.3e}, iterations: {}, remaining degrees of freedom: {}\n",
            o.converged, o.residual_norm, o.iterations, o.dof
        )),
        None => text.push_str("not solved (fix the errors above first)\n"),
    }
    text.push_str("\n## Visual legend\n");
    match &check.map {
        Some(map) => text.push_str(&legend_text(map)),
        None => text.push_str("(no assembly loaded)\n"),
    }
    text.push_str(&format!("\n## Renders\n{} attached\n", check.renders.len()));
    for r in &check.renders {
        text.push_str(&format!("{} view: {}\n", r.camera.name(), r.path));
    }
    let attachments = check.renders.iter().map(RenderRef::attachment).collect();
    vec![Message::new(Role::User, text).with_attachments(attachments)]
}
