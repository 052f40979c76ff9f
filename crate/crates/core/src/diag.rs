//! Agent-facing diagnostics shared by the parser, validator, solver and renderer.
//!
//! Every stage reports problems as [`Diagnostic`] values instead of failing.
//! The JSON-lines form produced by [`to_json_lines`] is what the agent reads
//! back, so field order and number formatting are fixed.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Code {
    ParseError,
    UnresolvedReference,
    DuplicateName,
    FloatingComponent,
    /// Joint whose own fields contradict each other (self-joint, bad limits, wrong free DOFs).
    InvalidJoint,
    InconsistentConstraints,
    /// Joint equations that are consistent but linearly dependent at the solution.
    RedundantConstraints,
    ConvergenceFailure,
    Intersection,
    LimitViolation,
    /// More styled entities than the visual palette can tell apart.
    CapacityExceeded,
}

impl Code {
    pub fn as_str(self) -> &'static str {
        match self {
            Code::ParseError => "ParseError",
            Code::UnresolvedReference => "UnresolvedReference",
            Code::DuplicateName => "DuplicateName",
            Code::FloatingComponent => "FloatingComponent",
            Code::InvalidJoint => "InvalidJoint",
            Code::InconsistentConstraints => "InconsistentConstraints",
            Code::RedundantConstraints => "RedundantConstraints",
            Code::ConvergenceFailure => "ConvergenceFailure",
            Code::Intersection => "Intersection",
            Code::LimitViolation => "LimitViolation",
            Code::CapacityExceeded => "CapacityExceeded",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// One problem report.
///
/// `subjects` lists the entity names the problem is about; `message` always
/// mentions each of them so an agent can act on the text alone. `data` holds
/// code-specific numbers (residual norms, overlap depths) keyed by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub message: String,
    pub subjects: Vec<String>,
    pub data: BTreeMap<String, f64>,
}

impl Diagnostic {
    pub fn error(code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            message: message.into(),
            subjects: Vec::new(),
            data: BTreeMap::new(),
        }
    }

    pub fn warning(code: Code, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, message)
        }
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subjects.push(subject.into());
        self
    }

    pub fn with_subjects<I, S>(mut self, subjects: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.subjects.extend(subjects.into_iter().map(Into::into));
        self
    }

    /// Non-finite values are dropped so the JSON form stays valid.
    pub fn with_data(mut self, key: &str, value: f64) -> Self {
        if value.is_finite() {
            self.data.insert(key.to_string(), value);
        }
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}

/// One JSON object per line, each line terminated by `\n`.
pub fn to_json_lines(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_json_line());
        out.push('\n');
    }
    out
}

pub fn from_json_lines(text: &str) -> Result<Vec<Diagnostic>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
