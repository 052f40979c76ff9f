//! ASCII STL and OBJ export, one named solid per link.

use std::fmt::Write as _;

use crate::ir::AssemblyDef;
use crate::kinematics::{face_corner_loop, prism_corners, FaceId, Vec3};
use crate::solver::PoseMap;

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn v3(v: &Vec3) -> String {
    format!("{} {} {}", num(v.x), num(v.y), num(v.z))
}

/// Links that have both a part and a pose, with their world corners.
fn solids<'a>(def: &'a AssemblyDef, poses: &'a PoseMap) -> impl Iterator<Item = (&'a str, [Vec3; 8], [Vec3; 6])> {
    def.links.iter().filter_map(move |l| {
        let part = def.part(&l.part)?;
        let pose = poses.get(&l.name)?;
        let normals = FaceId::ALL.map(|f| pose.orientation.rotate(&f.normal()));
        Some((l.name.as_str(), prism_corners(part, pose), normals))
    })
}

pub fn to_stl(def: &AssemblyDef, poses: &PoseMap) -> String {
    let mut s = String::new();
    for (name, corners, normals) in solids(def, poses) {
        let _ = writeln!(s, "solid {name}");
        for (fi, face) in FaceId::ALL.iter().enumerate() {
            let lp = face_corner_loop(*face);
            for tri in [[lp[0], lp[1], lp[2]], [lp[0], lp[2], lp[3]]] {
                let _ = writeln!(s, "  facet normal {}", v3(&normals[fi]));
                s.push_str("    outer loop\n");
                for i in tri {
                    let _ = writeln!(s, "      vertex {}", v3(&corners[i]));
                }
                s.push_str("    endloop\n  endfacet\n");
            }
        }
        let _ = writeln!(s, "endsolid {name}");
    }
    s
}

pub fn to_obj(def: &AssemblyDef, poses: &PoseMap) -> String {
    let mut s = String::new();
    let mut base = 1;
    for (name, corners, _) in solids(def, poses) {
        let _ = writeln!(s, "o {name}");
        for c in &corners {
            let _ = writeln!(s, "v {}", v3(c));
        }
        for face in FaceId::ALL {
            let lp = face_corner_loop(face).map(|i| i + base);
            let _ = writeln!(s, "f {} {} {} {}", lp[0], lp[1], lp[2], lp[3]);
        }
        base += 8;
    }
    s
}
