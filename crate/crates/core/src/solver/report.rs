//! JSON solve report.
//!
//! Numbers are rounded (positions and quaternion components to 1e-9, the
//! residual norm to three significant digits) so that reports compare
//! byte-for-byte across machines whose last-ulp arithmetic differs.

use serde_json::{json, Map, Value};

use super::newton::SolveOutcome;
use crate::diag::Diagnostic;
use crate::ir::AssemblyDef;

/// Round to `decimals` places through the decimal string, so the printed
/// value is the short one.
pub(crate) fn round_dp(v: f64, decimals: usize) -> f64 {
    let r: f64 = format!("{v:.decimals$}").parse().unwrap_or(v);
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

pub(crate) fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() { 0.0 } else { v };
    }
    let mag = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - mag);
    let r = (v * scale).round() / scale;
    // reparse through the shortest decimal so 0.1 + 0.2 style noise disappears
    format!("{r:.*e}", (digits - 1).max(0) as usize).parse().unwrap_or(r)
}

fn diagnostic_value(d: &Diagnostic) -> Value {
    let data: Map<String, Value> = d
        .data
        .iter()
        .map(|(k, v)| (k.clone(), json!(round_sig(*v, 9))))
        .collect();
    json!({
        "code": d.code,
        "severity": d.severity,
        "message": d.message,
        "subjects": d.subjects,
        "data": data,
    })
}

/// Report with poses listed in link order.
pub fn solve_report(def: &AssemblyDef, outcome: &SolveOutcome) -> Value {
    let poses: Vec<Value> = def
        .links
        .iter()
        .filter_map(|l| {
            let p = outcome.poses.get(&l.name)?;
            let q = p.orientation;
            let position = [p.position.x, p.position.y, p.position.z].map(|v| round_dp(v, 9));
            let quaternion = [q.w, q.x, q.y, q.z].map(|v| round_dp(v, 9));
            Some(json!({
                "link": l.name,
                "position": position,
                "quaternion": quaternion,
            }))
        })
        .collect();
    json!({
        "converged": outcome.converged,
        "residual_norm": round_sig(outcome.residual_norm, 3),
        "iterations": outcome.iterations,
        "dof": outcome.dof,
        "poses": poses,
        "diagnostics": outcome.diagnostics.iter().map(diagnostic_value).collect::<Vec<_>>(),
    })
}

pub fn solve_report_json(def: &AssemblyDef, outcome: &SolveOutcome) -> String {
    let mut s = serde_json::to_string_pretty(&solve_report(def, outcome)).expect("report serializes");
    s.push('\n');
    s
}
