use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use serde_json::Value;

/// Append-only JSON-lines event log, mirrored in memory.
#[derive(Debug, Default)]
pub struct Transcript {
    lines: Vec<String>,
    file: Option<File>,
}

impl Transcript {
    pub fn in_memory() -> Transcript {
        Transcript::default()
    }

    /// Truncates `path`.
    pub fn to_file(path: &Path) -> io::Result<Transcript> {
        let file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        Ok(Transcript {
            lines: Vec::new(),
            file: Some(file),
        })
    }

    pub fn push(&mut self, event: Value) {
        let line = serde_json::to_string(&event).expect("event serializes");
        if let Some(f) = self.file.as_mut() {
            // a failed write loses the on-disk copy only; the session goes on
            let _ = writeln!(f, "{line}").and_then(|_| f.flush());
        }
        self.lines.push(line);
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        if !s.is_empty() {
            s.push('\n');
        }
        s
    }
}
