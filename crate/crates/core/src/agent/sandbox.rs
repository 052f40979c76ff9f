//! The session directory the agent writes into.
//!
//! ```text
//! <session>/assembly.asm.json
//! <session>/parts/*.part.json
//! <session>/renders/iter<k>_<view>.svg
//! <session>/transcript.jsonl
//! <session>/telemetry.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Component, Path, PathBuf};

use crate::diag::{Code, Diagnostic};
use crate::ir::{load_assembly_file, serialize_part, AssemblyDef, LoadError, Part};

pub const ASSEMBLY_FILE: &str = "assembly.asm.json";

#[derive(Debug, Clone)]
pub struct Sandbox {
    root: PathBuf,
}

/// Normalized relative path for an agent write, or the reason it is refused.
pub fn check_ir_path(path: &str) -> Result<PathBuf, String> {
    if !(path.ends_with(".part.json") || path.ends_with(".asm.json")) {
        return Err(format!("\"{path}\": only *.part.json and *.asm.json files may be written"));
    }
    let p = Path::new(path);
    if p.is_absolute() || path.starts_with('/') || path.starts_with('\\') {
        return Err(format!("\"{path}\": paths must be relative to the workspace"));
    }
    let mut clean = PathBuf::new();
    for c in p.components() {
        match c {
            Component::Normal(s) => clean.push(s),
            Component::CurDir => {}
            _ => return Err(format!("\"{path}\": paths may not leave the workspace")),
        }
    }
    if clean.as_os_str().is_empty() || path.contains('\\') {
        return Err(format!("\"{path}\": not a usable file path"));
    }
    Ok(clean)
}

impl Sandbox {
    pub fn create(root: impl Into<PathBuf>) -> io::Result<Sandbox> {
        let root = root.into();
        fs::create_dir_all(root.join("parts"))?;
        fs::create_dir_all(root.join("renders"))?;
        Ok(Sandbox { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn renders_dir(&self) -> PathBuf {
        self.root.join("renders")
    }

    /// Initial assembly: a single grounded base slab.
    pub fn init_base(&self) -> io::Result<()> {
        let base = Part::new("base", [100.0, 100.0, 10.0]);
        fs::write(self.root.join("parts/base.part.json"), serialize_part(&base))?;
        let asm = serde_json::json!({
            "parts": [{"name": "base", "file": "parts/base.part.json"}],
            "links": [{"name": "base", "part": "base", "grounded": true}],
            "joints": [],
        });
        let mut text = serde_json::to_string_pretty(&asm).expect("json");
        text.push('\n');
        fs::write(self.root.join(ASSEMBLY_FILE), text)
    }

    pub fn write_ir(&self, path: &str, content: &str) -> Result<(), String> {
        let rel = check_ir_path(path)?;
        let full = self.root.join(&rel);
        if let Some(dir) = full.parent() {
            fs::create_dir_all(dir).map_err(|e| format!("\"{path}\": {e}"))?;
        }
        fs::write(&full, content).map_err(|e| format!("\"{path}\": {e}"))
    }

    pub fn load(&self) -> Result<AssemblyDef, Vec<Diagnostic>> {
        let path = self.root.join(ASSEMBLY_FILE);
        if !path.is_file() {
            return Err(vec![Diagnostic::error(
                Code::ParseError,
                format!("{ASSEMBLY_FILE} does not exist; write it with write_file"),
            )]);
        }
        load_assembly_file(&path).map_err(|e| match e {
            LoadError::Invalid(d) => d,
            io @ LoadError::Io { .. } => vec![Diagnostic::error(Code::ParseError, io.to_string())],
        })
    }

    /// Every IR file by relative path.
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut stack = vec![self.root.clone()];
        while let Some(dir) = stack.pop() {
            let Ok(entries) = fs::read_dir(&dir) else { continue };
            for e in entries.flatten() {
                let p = e.path();
                if p.is_dir() {
                    if p != self.renders_dir() {
                        stack.push(p);
                    }
                    continue;
                }
                let Ok(rel) = p.strip_prefix(&self.root) else { continue };
                let rel = rel.to_string_lossy().replace('\\', "/");
                if check_ir_path(&rel).is_ok() {
                    if let Ok(text) = fs::read_to_string(&p) {
                        out.insert(rel, text);
                    }
                }
            }
        }
        out
    }

    /// Replace all IR files with `snapshot`.
    pub fn restore(&self, snapshot: &BTreeMap<String, String>) -> io::Result<()> {
        for rel in self.snapshot().keys() {
            fs::remove_file(self.root.join(rel))?;
        }
        for (rel, text) in snapshot {
            let full = self.root.join(rel);
            if let Some(dir) = full.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(full, text)?;
        }
        Ok(())
    }
}
