use nalgebra::{DMatrix, DVector};

use super::system::{jacobian, ConstraintSystem};
use crate::diag::{Code, Diagnostic};

/// Numerical rank from singular values, cutoff `rel_tol * max(sigma_max, 1)`.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let cutoff = rel_tol * sv.max().max(1.0);
    sv.iter().filter(|s| **s > cutoff).count()
}

pub const RANK_TOLERANCE: f64 = 1e-6;

/// Joint equation rows of the Jacobian (norm rows dropped), with each row's source.
fn joint_rows(sys: &ConstraintSystem, state: &DVector<f64>) -> (DMatrix<f64>, Vec<String>) {
    let jac = jacobian(sys, state);
    let picked: Vec<usize> = sys
        .equations()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_joint_equation())
        .map(|(i, _)| i)
        .collect();
    let sources = picked.iter().map(|&i| sys.equations()[i].source.clone()).collect();
    (jac.select_rows(picked.iter()), sources)
}

/// Mobility `6 * free_links - rank(J)` at `state`, plus a redundancy warning
/// naming the joints whose rows add less rank than they have equations.
///
/// The quaternion norm rows are left out: joint residuals do not vary along
/// the radial quaternion direction, so each link contributes at most six to
/// the rank and the count comes out in rigid-body degrees of freedom.
pub fn dof_analysis(sys: &ConstraintSystem, state: &DVector<f64>) -> (i64, Vec<Diagnostic>) {
    let free = sys.unknown_links().len() as i64;
    if free == 0 {
        return (0, Vec::new());
    }
    let (rows, sources) = joint_rows(sys, state);
    let rank = numeric_rank(&rows, RANK_TOLERANCE);
    let dof = 6 * free - rank as i64;

    let mut diags = Vec::new();
    if rank < rows.nrows() {
        let mut redundant: Vec<String> = Vec::new();
        let mut kept: Vec<usize> = Vec::new();
        let mut current_rank = 0;
        let mut start = 0;
        while start < sources.len() {
            let mut end = start;
            while end < sources.len() && sources[end] == sources[start] {
                end += 1;
            }
            let mut trial = kept.clone();
            trial.extend(start..end);
            let r = numeric_rank(&rows.select_rows(trial.iter()), RANK_TOLERANCE);
            if r < current_rank + (end - start) && !redundant.contains(&sources[start]) {
                redundant.push(sources[start].clone());
            }
            current_rank = r;
            kept = trial;
            start = end;
        }
        let list = redundant
            .iter()
            .map(|n| format!("\"{n}\""))
            .collect::<Vec<_>>()
            .join(", ");
        diags.push(
            Diagnostic::warning(
                Code::RedundantConstraints,
                format!(
                    "{} of {} joint equations are redundant; joints that repeat earlier constraints: {list}",
                    rows.nrows() - rank,
                    rows.nrows()
                ),
            )
            .with_subjects(redundant)
            .with_data("rank", rank as f64)
            .with_data("equations", rows.nrows() as f64),
        );
    }
    (dof, diags)
}
