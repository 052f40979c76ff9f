//! Orthographic SVG renderer.
//!
//! Faces are back-face culled per prism and drawn far to near by centroid
//! depth. An edge is drawn right after the last of its visible adjacent faces,
//! so nearer faces painted later still cover it. All coordinates are printed
//! with three decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::ids::{Entity, VisualMap};
use crate::ir::AssemblyDef;
use crate::kinematics::{edge_endpoints, face_corner_loop, prism_corners, EdgeId, FaceId, Vec3};
use crate::solver::PoseMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Camera {
    Front,
    Top,
    Right,
    Isometric,
}

impl Camera {
    pub const ALL: [Camera; 4] = [Camera::Front, Camera::Top, Camera::Right, Camera::Isometric];

    pub fn name(self) -> &'static str {
        match self {
            Camera::Front => "front",
            Camera::Top => "top",
            Camera::Right => "right",
            Camera::Isometric => "iso",
        }
    }

    pub fn parse(s: &str) -> Option<Camera> {
        match s.trim().to_ascii_lowercase().as_str() {
            "front" => Some(Camera::Front),
            "top" => Some(Camera::Top),
            "right" => Some(Camera::Right),
            "iso" | "isometric" => Some(Camera::Isometric),
            _ => None,
        }
    }

    /// `(right, up, toward)`: screen axes and the unit vector pointing at the viewer.
    pub fn basis(self) -> (Vec3, Vec3, Vec3) {
        match self {
            Camera::Front => (Vec3::x(), Vec3::z(), -Vec3::y()),
            Camera::Top => (Vec3::x(), Vec3::y(), Vec3::z()),
            Camera::Right => (Vec3::y(), Vec3::z(), Vec3::x()),
            Camera::Isometric => {
                let toward = Vec3::new(1.0, 1.0, 1.0).normalize();
                let right = Vec3::new(-1.0, 1.0, 0.0).normalize();
                (right, toward.cross(&right), toward)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSpec {
    pub camera: Camera,
    pub width: u32,
    pub height: u32,
    /// Revolute angles in degrees, applied by pinning before the solve.
    pub overrides: BTreeMap<String, f64>,
}

impl ViewSpec {
    pub fn new(camera: Camera) -> ViewSpec {
        ViewSpec {
            camera,
            width: 800,
            height: 600,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_size(mut self, width: u32, height: u32) -> ViewSpec {
        self.width = width.max(1);
        self.height = height.max(1);
        self
    }

    pub fn with_override(mut self, joint: impl Into<String>, degrees: f64) -> ViewSpec {
        self.overrides.insert(joint.into(), degrees);
        self
    }
}

pub const MARGIN: f64 = 24.0;
pub const FACE_OPACITY: f64 = 0.55;
pub const LABEL_CLEARANCE: f64 = 12.0;
const LEGEND_ROW: f64 = 12.0;
const LEGEND_COLUMN: f64 = 190.0;
const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653;

/// World (mm) to pixel mapping of one view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub right: Vec3,
    pub up: Vec3,
    pub toward: Vec3,
    pub scale: f64,
    pub offset_x: f64,
    pub offset_y: f64,
}

impl Projection {
    /// Fit every prism of the assembly into the drawing area with a margin.
    pub fn fit(def: &AssemblyDef, poses: &PoseMap, view: &ViewSpec) -> Projection {
        let (right, up, toward) = view.camera.basis();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for l in &def.links {
            let (Some(part), Some(pose)) = (def.part(&l.part), poses.get(&l.name)) else {
                continue;
            };
            for c in prism_corners(part, pose) {
                let s = [c.dot(&right), c.dot(&up)];
                for k in 0..2 {
                    lo[k] = lo[k].min(s[k]);
                    hi[k] = hi[k].max(s[k]);
                }
            }
        }
        if !lo[0].is_finite() {
            lo = [0.0; 2];
            hi = [0.0; 2];
        }
        let w = view.width as f64 - 2.0 * MARGIN;
        let h = view.height as f64 - 2.0 * MARGIN;
        let span = [(hi[0] - lo[0]).max(1e-9), (hi[1] - lo[1]).max(1e-9)];
        let scale = (w / span[0]).min(h / span[1]).max(1e-9);
        let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        Projection {
            right,
            up,
            toward,
            scale,
            offset_x: view.width as f64 / 2.0 - scale * mid[0],
            offset_y: view.height as f64 / 2.0 + scale * mid[1],
        }
    }

    /// Pixel coordinates; y grows downward.
    pub fn project(&self, p: &Vec3) -> (f64, f64) {
        (
            self.offset_x + self.scale * p.dot(&self.right),
            self.offset_y - self.scale * p.dot(&self.up),
        )
    }

    pub fn depth(&self, p: &Vec3) -> f64 {
        p.dot(&self.toward)
    }
}

/// Three decimals, never `-0.000`.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

pub(crate) fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c if (c as u32) < 0x20 && c != '\n' && c != '\t' => {}
            c => out.push(c),
        }
    }
    out
}

struct VisibleFace {
    link: usize,
    face: FaceId,
    depth: f64,
    points: [(f64, f64); 4],
}

fn points_attr(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(x, y)| format!("{},{}", fmt_num(*x), fmt_num(*y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn legend_height(map: &VisualMap, width: u32) -> f64 {
    let rows = map.legend().len();
    if rows == 0 {
        return 0.0;
    }
    let columns = ((width as f64 - 2.0 * MARGIN) / LEGEND_COLUMN).floor().max(1.0) as usize;
    let per_column = rows.div_ceil(columns);
    24.0 + LEGEND_ROW * per_column as f64
}

/// Render one view of the given poses. The legend is a strip below the
/// `width x height` drawing; the document grows by its height.
pub fn render_view(def: &AssemblyDef, poses: &PoseMap, map: &VisualMap, view: &ViewSpec) -> String {
    render_view_with_banner(def, poses, map, view, None)
}

/// [`render_view`] with an optional failure banner across the top.
pub fn render_view_with_banner(
    def: &AssemblyDef,
    poses: &PoseMap,
    map: &VisualMap,
    view: &ViewSpec,
    banner: Option<&str>,
) -> String {
    let proj = Projection::fit(def, poses, view);
    let legend_h = legend_height(map, view.width);
    let total_h = view.height as f64 + legend_h;

    let mut faces: Vec<VisibleFace> = Vec::new();
    let mut corners_2d: Vec<[(f64, f64); 8]> = Vec::new();
    for (li, l) in def.links.iter().enumerate() {
        let (Some(part), Some(pose)) = (def.part(&l.part), poses.get(&l.name)) else {
            corners_2d.push([(0.0, 0.0); 8]);
            continue;
        };
        let corners = prism_corners(part, pose);
        corners_2d.push(corners.map(|c| proj.project(&c)));
        for face in FaceId::ALL {
            let normal = pose.orientation.rotate(&face.normal());
            if normal.dot(&proj.toward) <= 1e-9 {
                continue;
            }
            let lp = face_corner_loop(face);
            let centroid = lp.iter().map(|&i| corners[i]).sum::<Vec3>() / 4.0;
            faces.push(VisibleFace {
                link: li,
                face,
                depth: proj.depth(&centroid),
                points: lp.map(|i| proj.project(&corners[i])),
            });
        }
    }
    faces.sort_by(|a, b| {
        a.depth
            .total_cmp(&b.depth)
            .then(a.link.cmp(&b.link))
            .then(a.face.index().cmp(&b.face.index()))
    });

    // an edge goes out with the last visible face that touches it
    let mut last_face: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (k, f) in faces.iter().enumerate() {
        for e in EdgeId::ALL.iter().filter(|e| e.touches(f.face)) {
            last_face.insert((f.link, e.index()), k);
        }
    }

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        view.width,
        fmt_num(total_h),
        view.width,
        fmt_num(total_h)
    );
    let _ = writeln!(s, "<title>{} view</title>", view.camera.name());
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
        view.width,
        fmt_num(total_h)
    );
    s.push_str("<g id=\"geometry\" stroke-linejoin=\"round\">\n");
    for (k, f) in faces.iter().enumerate() {
        let link = &def.links[f.link].name;
        let style = map.face_style(link, f.face);
        let fill = style.map_or("#cccccc".to_string(), |st| st.hex());
        let token = style.map_or(String::new(), |st| format!(" data-token=\"{}\"", st.token));
        let _ = writeln!(
            s,
            "<polygon data-entity=\"face\" data-link=\"{}\" data-id=\"{}\"{token} points=\"{}\" fill=\"{fill}\" fill-opacity=\"{FACE_OPACITY}\" stroke=\"none\"/>",
            escape(link),
            f.face,
            points_attr(&f.points),
        );
        if let Some(st) = style {
            // texture swatch: an inset outline in the face's own line style
            let cx = f.points.iter().map(|p| p.0).sum::<f64>() / 4.0;
            let cy = f.points.iter().map(|p| p.1).sum::<f64>() / 4.0;
            let inset = f.points.map(|(x, y)| (cx + 0.8 * (x - cx), cy + 0.8 * (y - cy)));
            let dash = st
                .texture
                .dasharray()
                .map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
            let _ = writeln!(
                s,
                "<polygon data-entity=\"face-texture\" data-link=\"{}\" data-id=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"{dash}/>",
                escape(link),
                f.face,
                points_attr(&inset),
                st.hex()
            );
        }
        for e in EdgeId::ALL.iter().filter(|e| e.touches(f.face)) {
            if last_face.get(&(f.link, e.index())) != Some(&k) {
                continue;
            }
            let [i, j] = edge_endpoints(*e);
            let (a, b) = (corners_2d[f.link][i], corners_2d[f.link][j]);
            let style = map.edge_style(link, *e);
            let stroke = style.map_or("#333333".to_string(), |st| st.hex());
            let token = style.map_or(String::new(), |st| format!(" data-token=\"{}\"", st.token));
            let dash = style
                .and_then(|st| st.texture.dasharray())
                .map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
            let _ = writeln!(
                s,
                "<line data-entity=\"edge\" data-link=\"{}\" data-id=\"{}\"{token} x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"2\"{dash}/>",
                escape(link),
                e,
                fmt_num(a.0),
                fmt_num(a.1),
                fmt_num(b.0),
                fmt_num(b.1)
            );
        }
    }
    s.push_str("</g>\n");

    s.push_str("<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">\n");
    let mut placed: Vec<(f64, f64)> = Vec::new();
    for l in &def.links {
        let Some(pose) = poses.get(&l.name) else { continue };
        let (x0, y0) = proj.project(&pose.position);
        let (mut x, mut y) = (x0, y0);
        let mut k = 0usize;
        while k < 500
            && placed
                .iter()
                .any(|(px, py)| ((px - x).powi(2) + (py - y).powi(2)).sqrt() < LABEL_CLEARANCE)
        {
            k += 1;
            let r = LABEL_CLEARANCE * (k as f64).sqrt();
            let a = k as f64 * GOLDEN_ANGLE;
            x = x0 + r * a.cos();
            y = y0 + r * a.sin();
        }
        placed.push((x, y));
        let label = map.label(&l.name).unwrap_or(&l.name);
        let _ = writeln!(
            s,
            "<text data-entity=\"label\" data-link=\"{}\" x=\"{}\" y=\"{}\" stroke=\"#ffffff\" stroke-width=\"3\" paint-order=\"stroke\" fill=\"#000000\">{}</text>",
            escape(&l.name),
            fmt_num(x),
            fmt_num(y),
            escape(label)
        );
    }
    s.push_str("</g>\n");

    if !map.legend().is_empty() {
        let top = view.height as f64;
        let columns = ((view.width as f64 - 2.0 * MARGIN) / LEGEND_COLUMN).floor().max(1.0) as usize;
        let per_column = map.legend().len().div_ceil(columns);
        let _ = writeln!(
            s,
            "<g id=\"legend\" font-family=\"monospace\" font-size=\"9\"><line x1=\"0\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-width=\"1\"/>",
            fmt_num(top),
            view.width,
            fmt_num(top)
        );
        for (i, row) in map.legend().iter().enumerate() {
            let x = MARGIN + LEGEND_COLUMN * (i / per_column) as f64;
            let y = top + 18.0 + LEGEND_ROW * (i % per_column) as f64;
            let dash = row
                .style
                .texture
                .dasharray()
                .map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
            let what = match row.entity {
                Entity::Face(f) => format!("face {f}"),
                Entity::Edge(e) => format!("edge {e}"),
            };
            let label = map.label(&row.link).unwrap_or(&row.link);
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"{dash}/><text x=\"{}\" y=\"{}\">{} {} {}</text>",
                fmt_num(x),
                fmt_num(y - 3.0),
                fmt_num(x + 22.0),
                fmt_num(y - 3.0),
                row.style.hex(),
                fmt_num(x + 28.0),
                fmt_num(y),
                escape(&row.style.token),
                escape(label),
                what
            );
        }
        s.push_str("</g>\n");
    }

    if let Some(msg) = banner {
        let _ = writeln!(
            s,
            "<g id=\"failure-banner\"><rect x=\"0\" y=\"0\" width=\"{}\" height=\"20\" fill=\"#b00020\"/><text x=\"6\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#ffffff\">{}</text></g>",
            view.width,
            escape(msg)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{Link, Part};
    use crate::kinematics::Pose;

    fn cube() -> (AssemblyDef, PoseMap) {
        let def = AssemblyDef {
            parts: vec![Part::new("cube", [1.0; 3])],
            links: vec![Link::new("c", "cube", true)],
            joints: vec![],
        };
        let mut poses = PoseMap::new();
        poses.insert("c".into(), Pose::IDENTITY);
        (def, poses)
    }

    #[test]
    fn iso_cube_shows_three_faces_nine_edges() {
        let (def, poses) = cube();
        let map = VisualMap::for_links(&def.links);
        let svg = render_view(&def, &poses, &map, &ViewSpec::new(Camera::Isometric));
        assert_eq!(svg.matches("data-entity=\"face\"").count(), 3);
        assert_eq!(svg.matches("data-entity=\"edge\"").count(), 9);
        assert_eq!(svg, render_view(&def, &poses, &map, &ViewSpec::new(Camera::Isometric)));
    }

    #[test]
    fn camera_bases_are_right_handed() {
        for c in Camera::ALL {
            let (r, u, t) = c.basis();
            assert!((r.cross(&u) - t).norm() < 1e-12, "{c:?}");
            assert_eq!(Camera::parse(c.name()), Some(c));
        }
    }

    #[test]
    fn numbers_have_three_decimals() {
        assert_eq!(fmt_num(-0.0001), "0.000");
        assert_eq!(fmt_num(1.23456), "1.235");
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
