use std::collections::BTreeSet;
use std::path::Path;

use mateforge::ir::{load_assembly_file, AssemblyDef};
use mateforge::kinematics::{face_corner_loop, prism_corners, FaceId};
use mateforge::visual::*;

fn fixture(name: &str) -> AssemblyDef {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .join(format!("{name}.asm.json"));
    load_assembly_file(&p).unwrap()
}

fn attr<'a>(tag: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = tag.find(&key)? + key.len();
    let end = tag[start..].find('"')?;
    Some(&tag[start..start + end])
}

fn points(tag: &str) -> Vec<(f64, f64)> {
    attr(tag, "points")
        .unwrap()
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

fn elements<'a>(svg: &'a str, entity: &str) -> Vec<&'a str> {
    let key = format!("data-entity=\"{entity}\"");
    svg.lines().filter(|l| l.contains(&key)).collect()
}

fn face_polygon<'a>(svg: &'a str, link: &str, face: &str) -> &'a str {
    elements(svg, "face")
        .into_iter()
        .find(|t| attr(t, "data-link") == Some(link) && attr(t, "data-id") == Some(face))
        .unwrap_or_else(|| panic!("no polygon for {link} {face}"))
}

/// Direction of the longer side of a drawn rectangle, in radians.
fn long_axis(pts: &[(f64, f64)]) -> f64 {
    let side = |i: usize| {
        let (a, b) = (pts[i], pts[(i + 1) % 4]);
        (b.0 - a.0, b.1 - a.1)
    };
    let (s0, s1) = (side(0), side(1));
    let d = if s0.0.hypot(s0.1) > s1.0.hypot(s1.1) { s0 } else { s1 };
    d.1.atan2(d.0)
}

#[test]
fn top_view_shows_blades_sixty_degrees_apart() {
    let def = fixture("scissors");
    let view = ViewSpec::new(Camera::Top).with_override("hinge", 60.0);
    let out = solve_view(&def, &view).unwrap();
    assert!(out.converged);
    let svg = render_outcome(&def, &out, &assign_visual_ids(&def), &view);
    let a = long_axis(&points(face_polygon(&svg, "blade1", "+z")));
    let b = long_axis(&points(face_polygon(&svg, "blade2", "+z")));
    let mut rel = (b - a).abs() % std::f64::consts::PI;
    if rel > std::f64::consts::FRAC_PI_2 {
        rel = std::f64::consts::PI - rel;
    }
    assert!((rel - 60f64.to_radians()).abs() < 1e-4, "{}", rel.to_degrees());
}

#[test]
fn front_view_polygons_match_projected_corners() {
    let def = fixture("scissors");
    let view = ViewSpec::new(Camera::Front).with_override("hinge", 40.0);
    let out = solve_view(&def, &view).unwrap();
    let svg = render_outcome(&def, &out, &assign_visual_ids(&def), &view);
    let proj = Projection::fit(&def, &out.poses, &view);
    let polys = elements(&svg, "face");
    assert!(!polys.is_empty());
    for tag in polys {
        let link = attr(tag, "data-link").unwrap();
        let face: FaceId = attr(tag, "data-id").unwrap().parse().unwrap();
        let corners = prism_corners(def.part_of(link).unwrap(), &out.poses[link]);
        let expected: Vec<(f64, f64)> = face_corner_loop(face).iter().map(|&i| proj.project(&corners[i])).collect();
        let drawn = points(tag);
        for (d, e) in drawn.iter().zip(&expected) {
            assert!((d.0 - e.0).abs() <= 5e-4 && (d.1 - e.1).abs() <= 5e-4, "{link} {face}: {d:?} vs {e:?}");
        }
        // only faces turned toward the camera are drawn
        let normal = out.poses[link].transform_vector(&face.normal());
        assert!(normal.dot(&proj.toward) > 0.0, "{link} {face}");
    }
}

#[test]
fn ids_are_unique_within_each_render() {
    let def = fixture("scissors");
    for cam in Camera::ALL {
        let view = ViewSpec::new(cam);
        let out = solve_view(&def, &view).unwrap();
        let svg = render_outcome(&def, &out, &assign_visual_ids(&def), &view);
        for entity in ["face", "edge"] {
            let keys: Vec<(String, String)> = elements(&svg, entity)
                .iter()
                .map(|t| (attr(t, "data-link").unwrap().to_string(), attr(t, "data-id").unwrap().to_string()))
                .collect();
            let set: BTreeSet<_> = keys.iter().cloned().collect();
            assert_eq!(set.len(), keys.len(), "{} {entity}", cam.name());
        }
    }
}

#[test]
fn labels_follow_part_names() {
    let map = assign_visual_ids(&fixture("scissors"));
    let labels: Vec<&str> = map.instance_labels().iter().map(|(_, l)| l.as_str()).collect();
    assert_eq!(labels, ["Pivot1", "Blade1", "Handle1", "Blade2", "Handle2"]);
}

#[test]
fn sweep_frames_and_rejections() {
    let def = fixture("scissors");
    let sweep = render_sweep(&def, "hinge", &[0.0, 20.0, 40.0, 60.0, 61.0], &ViewSpec::new(Camera::Isometric));
    assert_eq!(sweep.frames.len(), 4);
    assert_eq!(sweep.diagnostics.len(), 1);
    assert_eq!(sweep.diagnostics[0].data["frame_angle_deg"], 61.0);
    let svgs: BTreeSet<&str> = sweep.frames.iter().map(|f| f.svg.as_str()).collect();
    assert_eq!(svgs.len(), 4, "every angle draws differently");
}

#[test]
fn failing_solve_renders_with_banner() {
    let def = fixture("conflict");
    let view = ViewSpec::new(Camera::Isometric);
    let out = solve_view(&def, &view).unwrap();
    assert!(!out.converged);
    let svg = render_outcome(&def, &out, &assign_visual_ids(&def), &view);
    assert!(svg.contains("id=\"failure-banner\""));
    assert!(svg.contains("InconsistentConstraints"));
    assert_eq!(elements(&svg, "face").len(), 2 * 3);
}

#[test]
fn meshes_cover_every_link() {
    let def = fixture("scissors");
    let out = solve_view(&def, &ViewSpec::new(Camera::Front)).unwrap();
    let stl = to_stl(&def, &out.poses);
    assert_eq!(stl.matches("facet normal").count(), 5 * 12);
    let obj = to_obj(&def, &out.poses);
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 5 * 8);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 5 * 6);
}
