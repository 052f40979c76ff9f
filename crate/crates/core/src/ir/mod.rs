//! The JSON intermediate representation an agent writes.
//!
//! A *part file* (`*.part.json`) describes one box:
//!
//! ```json
//! {"name": "blade", "shape": "box", "dims": [140, 12, 2]}
//! ```
//!
//! An *assembly file* (`*.asm.json`) has exactly three sections. `parts`
//! points at part files (or inlines them), `links` instantiates parts, and
//! `joints` mates a face of one link to a face of another:
//!
//! ```json
//! {
//!   "parts": [{"name": "cube", "file": "parts/cube.part.json"}],
//!   "links": [{"name": "base", "part": "cube", "grounded": true},
//!             {"name": "top", "part": "cube"}],
//!   "joints": [{"name": "stack", "kind": "fixed",
//!               "a": {"link": "base", "face": "+z"},
//!               "b": {"link": "top", "face": "-z"}}]
//! }
//! ```
//!
//! A joint end may also be a visual token such as `"red-solid"`, resolved
//! through the assembly's [`VisualMap`](crate::visual::VisualMap).
//!
//! Lengths are millimeters. Angles are degrees here and radians everywhere
//! past the parser.

mod json;
mod load;
mod parse;
mod validate;

use serde::{Deserialize, Serialize};

pub use load::{load_assembly_file, load_part_file, LoadError};
pub use parse::{
    is_identifier, parse_assembly, parse_assembly_bytes, parse_part, parse_part_bytes,
};
pub use validate::validate_assembly;

use crate::kinematics::FaceId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Box,
}

/// A named box with full extents `dims` along local x, y, z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Part {
    pub name: String,
    pub shape: Shape,
    pub dims: [f64; 3],
}

impl Part {
    pub fn new(name: impl Into<String>, dims: [f64; 3]) -> Self {
        Part {
            name: name.into(),
            shape: Shape::Box,
            dims,
        }
    }

    pub fn half_extents(&self) -> [f64; 3] {
        [self.dims[0] * 0.5, self.dims[1] * 0.5, self.dims[2] * 0.5]
    }
}

/// One instance of a part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub part: String,
    pub grounded: bool,
}

impl Link {
    pub fn new(name: impl Into<String>, part: impl Into<String>, grounded: bool) -> Self {
        Link {
            name: name.into(),
            part: part.into(),
            grounded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaceRef {
    pub link: String,
    pub face: FaceId,
}

impl FaceRef {
    pub fn new(link: impl Into<String>, face: FaceId) -> Self {
        FaceRef {
            link: link.into(),
            face,
        }
    }
}

impl std::fmt::Display for FaceRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.link, self.face)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Fixed,
    Revolute,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Fixed => "fixed",
            JointKind::Revolute => "revolute",
        }
    }

    /// The free DOF list a joint of this kind must declare.
    pub fn free_dofs(self) -> Vec<Dof> {
        match self {
            JointKind::Fixed => Vec::new(),
            JointKind::Revolute => vec![Dof::RotZ],
        }
    }
}

/// Relative motion left free by a joint, in the joint's face frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    TransX,
    TransY,
    TransZ,
    RotX,
    RotY,
    RotZ,
}

impl Dof {
    pub fn parse(s: &str) -> Option<Dof> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        Some(match key.as_str() {
            "transx" => Dof::TransX,
            "transy" => Dof::TransY,
            "transz" => Dof::TransZ,
            "rotx" => Dof::RotX,
            "roty" => Dof::RotY,
            "rotz" => Dof::RotZ,
            _ => return None,
        })
    }
}

/// A mate between face `a` and face `b`.
///
/// The faces touch with outward normals anti-parallel. `b`'s face center sits
/// at `a`'s face center moved by `offset` along `a`'s face tangents. A
/// revolute leaves rotation about the shared normal free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub kind: JointKind,
    pub a: FaceRef,
    pub b: FaceRef,
    pub offset: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle_limits: Option<[f64; 2]>,
    pub free_dofs: Vec<Dof>,
}

impl Joint {
    pub fn fixed(name: impl Into<String>, a: FaceRef, b: FaceRef) -> Self {
        Joint {
            name: name.into(),
            kind: JointKind::Fixed,
            a,
            b,
            offset: [0.0, 0.0],
            angle_limits: None,
            free_dofs: Vec::new(),
        }
    }

    pub fn revolute(name: impl Into<String>, a: FaceRef, b: FaceRef) -> Self {
        Joint {
            kind: JointKind::Revolute,
            free_dofs: vec![Dof::RotZ],
            ..Joint::fixed(name, a, b)
        }
    }

    pub fn with_offset(mut self, u: f64, v: f64) -> Self {
        self.offset = [u, v];
        self
    }

    /// Limits in degrees.
    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.angle_limits = Some([lo, hi]);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssemblyDef {
    pub parts: Vec<Part>,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
}

impl AssemblyDef {
    pub fn part(&self, name: &str) -> Option<&Part> {
        self.parts.iter().find(|p| p.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&Link> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint(&self, name: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.name == name)
    }

    pub fn part_of(&self, link: &str) -> Option<&Part> {
        self.link(link).and_then(|l| self.part(&l.part))
    }
}

/// Canonical form: two-space indented JSON, fixed key order, parts inlined,
/// trailing newline. Byte-identical for structurally equal inputs.
pub fn serialize_assembly(def: &AssemblyDef) -> String {
    let mut s = serde_json::to_string_pretty(def).expect("assembly serializes");
    s.push('\n');
    s
}

pub fn serialize_part(part: &Part) -> String {
    let mut s = serde_json::to_string_pretty(part).expect("part serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_joints_serialize_as_empty_array() {
        let def = AssemblyDef {
            parts: vec![Part::new("p", [1.0, 1.0, 1.0])],
            links: vec![Link::new("p1", "p", true)],
            joints: vec![],
        };
        assert!(serialize_assembly(&def).contains("\"joints\": []"));
    }
}
