use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{json, parse_assembly, parse_part, AssemblyDef, Part};
use crate::diag::{Code, Diagnostic};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("{} diagnostic(s) while loading the assembly", .0.len())]
    Invalid(Vec<Diagnostic>),
}

impl LoadError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            LoadError::Invalid(d) => d,
            LoadError::Io { .. } => &[],
        }
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    let bytes = fs::read(path).map_err(|e| LoadError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    String::from_utf8(bytes).map_err(|e| {
        LoadError::Invalid(vec![Diagnostic::error(
            Code::ParseError,
            format!(
                "{} is not valid UTF-8 (byte offset {})",
                path.display(),
                e.utf8_error().valid_up_to()
            ),
        )])
    })
}

pub fn load_part_file(path: &Path) -> Result<Part, LoadError> {
    let text = read(path)?;
    parse_part(&text).map_err(|diags| LoadError::Invalid(prefix(diags, path)))
}

fn prefix(diags: Vec<Diagnostic>, path: &Path) -> Vec<Diagnostic> {
    diags
        .into_iter()
        .map(|mut d| {
            d.message = format!("{}: {}", path.display(), d.message);
            d
        })
        .collect()
}

/// Candidate files for a part given only by name.
fn bare_candidates(dir: &Path, name: &str) -> Vec<PathBuf> {
    let file = format!("{name}.part.json");
    [dir.join(&file), dir.join("parts").join(&file)]
        .into_iter()
        .filter(|p| p.is_file())
        .collect()
}

/// Load an assembly file and every part file it points to.
///
/// `file` pointers are relative to the assembly's directory. An entry with
/// only a `name` is looked up as `<name>.part.json` next to the assembly or
/// under `parts/`, and must match exactly one file.
///
/// Only a missing or unreadable assembly file is an [`LoadError::Io`];
/// problems with the part files are diagnostics.
pub fn load_assembly_file(path: &Path) -> Result<AssemblyDef, LoadError> {
    let text = read(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let parsed = json::parse(&text).map_err(|d| LoadError::Invalid(vec![d]))?;

    let mut diags = Vec::new();
    let mut catalog: Vec<Part> = Vec::new();
    let entries = parsed
        .value
        .get("parts")
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();
    for entry in &entries {
        let Some(obj) = entry.as_object() else { continue };
        if obj.contains_key("shape") || obj.contains_key("dims") {
            continue;
        }
        let Some(name) = obj.get("name").and_then(Value::as_str) else {
            continue;
        };
        let file = match obj.get("file") {
            Some(Value::String(f)) => {
                let p = dir.join(f);
                if !p.is_file() {
                    diags.push(
                        Diagnostic::error(
                            Code::UnresolvedReference,
                            format!("part \"{name}\": file \"{f}\" does not exist"),
                        )
                        .with_subjects([name.to_string(), f.clone()]),
                    );
                    continue;
                }
                p
            }
            Some(_) => continue,
            None => {
                let found = bare_candidates(dir, name);
                match found.len() {
                    0 => continue,
                    1 => found.into_iter().next().expect("one candidate"),
                    _ => {
                        diags.push(
                            Diagnostic::error(
                                Code::UnresolvedReference,
                                format!(
                                    "part \"{name}\" is ambiguous: both {name}.part.json and parts/{name}.part.json exist; add a \"file\" pointer"
                                ),
                            )
                            .with_subject(name.to_string()),
                        );
                        continue;
                    }
                }
            }
        };
        match load_part_file(&file) {
            Ok(part) if part.name == name => {
                if !catalog.iter().any(|p| p.name == part.name) {
                    catalog.push(part);
                }
            }
            Ok(part) => diags.push(
                Diagnostic::error(
                    Code::UnresolvedReference,
                    format!(
                        "part \"{name}\" points at {}, which defines part \"{}\" instead",
                        file.display(),
                        part.name
                    ),
                )
                .with_subject(name.to_string()),
            ),
            Err(LoadError::Invalid(d)) => diags.extend(d),
            Err(e @ LoadError::Io { .. }) => diags.push(
                Diagnostic::error(Code::UnresolvedReference, format!("part \"{name}\": {e}"))
                    .with_subject(name.to_string()),
            ),
        }
    }
    if !diags.is_empty() {
        return Err(LoadError::Invalid(diags));
    }
    parse_assembly(&text, &catalog).map_err(LoadError::Invalid)
}
