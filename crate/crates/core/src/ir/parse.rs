use std::collections::HashSet;

use serde_json::{Map, Value};

use super::json;
use super::{AssemblyDef, Dof, FaceRef, Joint, JointKind, Link, Part, Shape};
use crate::diag::{Code, Diagnostic};
use crate::kinematics::FaceId;
use crate::visual::{TokenError, VisualMap};

/// `[A-Za-z][A-Za-z0-9_]*`
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

const PART_KEYS: &[&str] = &["name", "shape", "dims", "description"];
const ASSEMBLY_KEYS: &[&str] = &["parts", "links", "joints"];
const ENTRY_KEYS: &[&str] = &["name", "file", "shape", "dims", "description"];
const LINK_KEYS: &[&str] = &["name", "part", "grounded"];
const JOINT_KEYS: &[&str] = &[
    "name",
    "kind",
    "a",
    "b",
    "offset",
    "angle_limits",
    "free_dofs",
    "description",
];
const END_KEYS: &[&str] = &["link", "face"];

fn parse_error(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::error(Code::ParseError, msg)
}

fn show(v: &Value) -> String {
    let s = v.to_string();
    if s.chars().count() > 40 {
        let cut: String = s.chars().take(37).collect();
        format!("{cut}...")
    } else {
        s
    }
}

fn duplicate_key_diags(dups: &[(String, String)], what: &str) -> Vec<Diagnostic> {
    dups.iter()
        .map(|(path, key)| {
            let at = if path.is_empty() {
                format!("top level of the {what}")
            } else {
                format!("{path} of the {what}")
            };
            Diagnostic::error(
                Code::DuplicateName,
                format!("key \"{key}\" appears more than once at {at}"),
            )
            .with_subject(key.clone())
        })
        .collect()
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], ctx: &str, out: &mut Vec<Diagnostic>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            out.push(parse_error(format!(
                "{ctx}: unknown field \"{key}\" (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
}

fn identifier_field(
    obj: &Map<String, Value>,
    key: &str,
    ctx: &str,
    out: &mut Vec<Diagnostic>,
) -> Option<String> {
    match obj.get(key) {
        None => {
            out.push(parse_error(format!("{ctx}: missing required field \"{key}\"")));
            None
        }
        Some(Value::String(s)) if is_identifier(s) => Some(s.clone()),
        Some(Value::String(s)) => {
            out.push(parse_error(format!(
                "{ctx}: \"{key}\" value \"{s}\" is not an identifier (letter followed by letters, digits or '_')"
            )));
            None
        }
        Some(v) => {
            out.push(parse_error(format!(
                "{ctx}: \"{key}\" must be a string, found {}",
                show(v)
            )));
            None
        }
    }
}

fn number_array<const N: usize>(
    v: &Value,
    key: &str,
    ctx: &str,
    out: &mut Vec<Diagnostic>,
) -> Option<[f64; N]> {
    let arr = match v.as_array() {
        Some(a) if a.len() == N => a,
        _ => {
            out.push(parse_error(format!(
                "{ctx}: \"{key}\" must be an array of {N} numbers, found {}",
                show(v)
            )));
            return None;
        }
    };
    let mut res = [0.0; N];
    for (slot, item) in res.iter_mut().zip(arr) {
        match item.as_f64() {
            Some(x) if x.is_finite() => *slot = x,
            _ => {
                out.push(parse_error(format!(
                    "{ctx}: \"{key}\" entries must be finite numbers, found {}",
                    show(item)
                )));
                return None;
            }
        }
    }
    Some(res)
}

fn part_from_object(obj: &Map<String, Value>, ctx: &str, keys: &[&str], out: &mut Vec<Diagnostic>) -> Option<Part> {
    let before = out.len();
    check_keys(obj, keys, ctx, out);
    let name = identifier_field(obj, "name", ctx, out);
    let ctx = match &name {
        Some(n) => format!("{ctx} \"{n}\""),
        None => ctx.to_string(),
    };
    let shape = match obj.get("shape") {
        None => {
            out.push(parse_error(format!("{ctx}: missing required field \"shape\"")));
            None
        }
        Some(Value::String(s)) if s.eq_ignore_ascii_case("box") => Some(Shape::Box),
        Some(v) => {
            out.push(parse_error(format!(
                "{ctx}: shape {} is not supported; only \"box\" parts are available",
                show(v)
            )));
            None
        }
    };
    let dims = match obj.get("dims") {
        None => {
            out.push(parse_error(format!("{ctx}: missing required field \"dims\"")));
            None
        }
        Some(v) => number_array::<3>(v, "dims", &ctx, out).and_then(|d| {
            if d.iter().all(|x| *x > 0.0) {
                Some(d)
            } else {
                out.push(
                    parse_error(format!(
                        "{ctx}: dims must be strictly positive, found [{}, {}, {}]",
                        d[0], d[1], d[2]
                    ))
                    .with_subjects(name.clone()),
                );
                None
            }
        }),
    };
    if out.len() > before {
        return None;
    }
    Some(Part {
        name: name?,
        shape: shape?,
        dims: dims?,
    })
}

/// Parse one part file.
pub fn parse_part(text: &str) -> Result<Part, Vec<Diagnostic>> {
    let parsed = json::parse(text).map_err(|d| vec![d])?;
    let mut out = duplicate_key_diags(&parsed.duplicates, "part file");
    let part = match parsed.value.as_object() {
        Some(obj) => part_from_object(obj, "part", PART_KEYS, &mut out),
        None => {
            out.push(parse_error(format!(
                "part file must be a JSON object, found {}",
                show(&parsed.value)
            )));
            None
        }
    };
    match part {
        Some(p) if out.is_empty() => Ok(p),
        _ => Err(out),
    }
}

pub fn parse_part_bytes(bytes: &[u8]) -> Result<Part, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_part(text),
        Err(e) => Err(vec![utf8_error(e)]),
    }
}

fn utf8_error(e: std::str::Utf8Error) -> Diagnostic {
    parse_error(format!("input is not valid UTF-8 (byte offset {})", e.valid_up_to()))
        .with_data("offset", e.valid_up_to() as f64)
}

fn section<'a>(
    obj: &'a Map<String, Value>,
    key: &str,
    out: &mut Vec<Diagnostic>,
) -> &'a [Value] {
    match obj.get(key) {
        Some(Value::Array(items)) => items,
        Some(v) => {
            out.push(parse_error(format!(
                "assembly section \"{key}\" must be an array, found {}",
                show(v)
            )));
            &[]
        }
        None => {
            out.push(parse_error(format!(
                "assembly is missing the \"{key}\" section"
            )));
            &[]
        }
    }
}

/// Parse an assembly file against a catalog of already-valid parts.
///
/// Entries of the `parts` section that only carry a `name` (and optionally a
/// `file` pointer) are looked up in `catalog` by name; entries with `shape`
/// and `dims` are taken inline. Any diagnostic makes the whole parse fail.
pub fn parse_assembly(text: &str, catalog: &[Part]) -> Result<AssemblyDef, Vec<Diagnostic>> {
    let parsed = json::parse(text).map_err(|d| vec![d])?;
    let mut out = duplicate_key_diags(&parsed.duplicates, "assembly file");
    let Some(root) = parsed.value.as_object() else {
        out.push(parse_error(format!(
            "assembly file must be a JSON object, found {}",
            show(&parsed.value)
        )));
        return Err(out);
    };
    check_keys(root, ASSEMBLY_KEYS, "assembly", &mut out);

    let parts = parse_parts_section(section(root, "parts", &mut out), catalog, &mut out);
    let links = parse_links_section(section(root, "links", &mut out), &parts, &mut out);
    let joints = parse_joints_section(section(root, "joints", &mut out), &links, &mut out);

    if out.is_empty() {
        Ok(AssemblyDef {
            parts,
            links,
            joints,
        })
    } else {
        Err(out)
    }
}

pub fn parse_assembly_bytes(bytes: &[u8], catalog: &[Part]) -> Result<AssemblyDef, Vec<Diagnostic>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_assembly(text, catalog),
        Err(e) => Err(vec![utf8_error(e)]),
    }
}

fn parse_parts_section(items: &[Value], catalog: &[Part], out: &mut Vec<Diagnostic>) -> Vec<Part> {
    let mut parts: Vec<Part> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let ctx = format!("parts[{i}]");
        let Some(obj) = item.as_object() else {
            out.push(parse_error(format!("{ctx}: must be an object, found {}", show(item))));
            continue;
        };
        let inline = obj.contains_key("shape") || obj.contains_key("dims");
        let part = if inline {
            if obj.contains_key("file") {
                out.push(parse_error(format!(
                    "{ctx}: give either a \"file\" pointer or inline \"shape\"/\"dims\", not both"
                )));
                None
            } else {
                part_from_object(obj, &ctx, ENTRY_KEYS, out)
            }
        } else {
            check_keys(obj, ENTRY_KEYS, &ctx, out);
            if let Some(Value::String(_)) | None = obj.get("file") {
            } else {
                out.push(parse_error(format!("{ctx}: \"file\" must be a string path")));
            }
            identifier_field(obj, "name", &ctx, out).and_then(|name| {
                let found = catalog.iter().find(|p| p.name == name).cloned();
                if found.is_none() {
                    let mut msg = format!("part \"{name}\" has no definition");
                    if let Some(Value::String(f)) = obj.get("file") {
                        msg.push_str(&format!(" (looked for file \"{f}\")"));
                    }
                    out.push(Diagnostic::error(Code::UnresolvedReference, msg).with_subject(name));
                }
                found
            })
        };
        if let Some(p) = part {
            if parts.iter().any(|q| q.name == p.name) {
                out.push(
                    Diagnostic::error(
                        Code::DuplicateName,
                        format!("part \"{}\" is listed more than once", p.name),
                    )
                    .with_subject(p.name.clone()),
                );
            } else {
                parts.push(p);
            }
        }
    }
    parts
}

fn parse_links_section(items: &[Value], parts: &[Part], out: &mut Vec<Diagnostic>) -> Vec<Link> {
    let mut links: Vec<Link> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let ctx = format!("links[{i}]");
        let Some(obj) = item.as_object() else {
            out.push(parse_error(format!("{ctx}: must be an object, found {}", show(item))));
            continue;
        };
        let before = out.len();
        check_keys(obj, LINK_KEYS, &ctx, out);
        let name = identifier_field(obj, "name", &ctx, out);
        let part = identifier_field(obj, "part", &ctx, out);
        let grounded = match obj.get("grounded") {
            None => false,
            Some(Value::Bool(b)) => *b,
            Some(v) => {
                out.push(parse_error(format!(
                    "{ctx}: \"grounded\" must be true or false, found {}",
                    show(v)
                )));
                false
            }
        };
        if let (Some(name), Some(part)) = (&name, &part) {
            if !parts.iter().any(|p| &p.name == part) {
                out.push(
                    Diagnostic::error(
                        Code::UnresolvedReference,
                        format!("link \"{name}\" refers to unknown part \"{part}\""),
                    )
                    .with_subjects([name.clone(), part.clone()]),
                );
            }
        }
        if out.len() > before {
            continue;
        }
        let (Some(name), Some(part)) = (name, part) else { continue };
        if links.iter().any(|l| l.name == name) {
            out.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("link name \"{name}\" is used more than once"),
                )
                .with_subject(name),
            );
            continue;
        }
        links.push(Link {
            name,
            part,
            grounded,
        });
    }
    links
}

fn parse_joint_end(
    v: &Value,
    key: &str,
    ctx: &str,
    links: &[Link],
    visual: &mut Option<VisualMap>,
    out: &mut Vec<Diagnostic>,
) -> Option<FaceRef> {
    match v {
        Value::String(token) => {
            let map = visual.get_or_insert_with(|| VisualMap::for_links(links));
            match map.resolve_face_token(token) {
                Ok(r) => Some(r),
                Err(TokenError::Unknown) => {
                    out.push(
                        Diagnostic::error(
                            Code::UnresolvedReference,
                            format!(
                                "{ctx}: \"{key}\" visual token \"{token}\" does not name any face in this assembly"
                            ),
                        )
                        .with_subject(token.clone()),
                    );
                    None
                }
                Err(TokenError::NotAFace(kind)) => {
                    out.push(
                        Diagnostic::error(
                            Code::UnresolvedReference,
                            format!(
                                "{ctx}: \"{key}\" visual token \"{token}\" names an {kind}, but a joint needs a face"
                            ),
                        )
                        .with_subject(token.clone()),
                    );
                    None
                }
            }
        }
        Value::Object(obj) => {
            let before = out.len();
            let ctx = format!("{ctx}.{key}");
            check_keys(obj, END_KEYS, &ctx, out);
            let link = identifier_field(obj, "link", &ctx, out);
            let face = match obj.get("face") {
                Some(Value::String(s)) => match s.parse::<FaceId>() {
                    Ok(f) => Some(f),
                    Err(e) => {
                        out.push(parse_error(format!("{ctx}: {e}")));
                        None
                    }
                },
                Some(v) => {
                    out.push(parse_error(format!(
                        "{ctx}: \"face\" must be a string such as \"+z\", found {}",
                        show(v)
                    )));
                    None
                }
                None => {
                    out.push(parse_error(format!("{ctx}: missing required field \"face\"")));
                    None
                }
            };
            if let Some(l) = &link {
                if !links.iter().any(|x| &x.name == l) {
                    out.push(
                        Diagnostic::error(
                            Code::UnresolvedReference,
                            format!("{ctx}: unknown link \"{l}\""),
                        )
                        .with_subject(l.clone()),
                    );
                }
            }
            if out.len() > before {
                return None;
            }
            Some(FaceRef {
                link: link?,
                face: face?,
            })
        }
        other => {
            out.push(parse_error(format!(
                "{ctx}: \"{key}\" must be {{\"link\", \"face\"}} or a visual token string, found {}",
                show(other)
            )));
            None
        }
    }
}

fn parse_joints_section(items: &[Value], links: &[Link], out: &mut Vec<Diagnostic>) -> Vec<Joint> {
    let mut joints: Vec<Joint> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut visual: Option<VisualMap> = None;
    for (i, item) in items.iter().enumerate() {
        let ctx = format!("joints[{i}]");
        let Some(obj) = item.as_object() else {
            out.push(parse_error(format!("{ctx}: must be an object, found {}", show(item))));
            continue;
        };
        let before = out.len();
        check_keys(obj, JOINT_KEYS, &ctx, out);
        let name = identifier_field(obj, "name", &ctx, out);
        let ctx = match &name {
            Some(n) => format!("joint \"{n}\""),
            None => ctx,
        };
        let kind = match obj.get("kind") {
            Some(Value::String(s)) if s.eq_ignore_ascii_case("fixed") => Some(JointKind::Fixed),
            Some(Value::String(s)) if s.eq_ignore_ascii_case("revolute") => {
                Some(JointKind::Revolute)
            }
            Some(v) => {
                out.push(parse_error(format!(
                    "{ctx}: kind {} is not supported; use \"fixed\" or \"revolute\"",
                    show(v)
                )));
                None
            }
            None => {
                out.push(parse_error(format!("{ctx}: missing required field \"kind\"")));
                None
            }
        };
        let mut end = |key: &str, out: &mut Vec<Diagnostic>| match obj.get(key) {
            Some(v) => parse_joint_end(v, key, &ctx, links, &mut visual, out),
            None => {
                out.push(parse_error(format!("{ctx}: missing required field \"{key}\"")));
                None
            }
        };
        let a = end("a", out);
        let b = end("b", out);
        let offset = match obj.get("offset") {
            None => Some([0.0, 0.0]),
            Some(v) => number_array::<2>(v, "offset", &ctx, out),
        };
        let angle_limits = match obj.get("angle_limits") {
            None | Some(Value::Null) => Some(None),
            Some(v) => number_array::<2>(v, "angle_limits", &ctx, out).map(Some),
        };
        let free_dofs = match obj.get("free_dofs") {
            None => kind.map(JointKind::free_dofs),
            Some(Value::Array(tags)) => {
                let mut dofs = Vec::new();
                let mut ok = true;
                for t in tags {
                    match t.as_str().and_then(Dof::parse) {
                        Some(d) => dofs.push(d),
                        None => {
                            ok = false;
                            out.push(parse_error(format!(
                                "{ctx}: free_dofs entry {} is not one of trans_x, trans_y, trans_z, rot_x, rot_y, rot_z",
                                show(t)
                            )));
                        }
                    }
                }
                ok.then_some(dofs)
            }
            Some(v) => {
                out.push(parse_error(format!(
                    "{ctx}: \"free_dofs\" must be an array, found {}",
                    show(v)
                )));
                None
            }
        };
        if out.len() > before {
            continue;
        }
        let (Some(name), Some(kind), Some(a), Some(b), Some(offset), Some(angle_limits), Some(free_dofs)) =
            (name, kind, a, b, offset, angle_limits, free_dofs)
        else {
            continue;
        };
        if !seen.insert(name.clone()) {
            out.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("joint name \"{name}\" is used more than once"),
                )
                .with_subject(name),
            );
            continue;
        }
        joints.push(Joint {
            name,
            kind,
            a,
            b,
            offset,
            angle_limits,
            free_dofs,
        });
    }
    joints
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identifiers() {
        assert!(is_identifier("Blade_2"));
        assert!(!is_identifier("2blade"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("bl-ade"));
    }

    #[test]
    fn part_examples() {
        let p = parse_part(r#"{"name":"blade","shape":"box","dims":[140,12,2]}"#).unwrap();
        assert_eq!(p, Part::new("blade", [140.0, 12.0, 2.0]));
        let p = parse_part(r#"{"name":"p","shape":"box","dims":[1,1,1]}"#).unwrap();
        assert_eq!(p.dims, [1.0; 3]);
        let e = parse_part(r#"{"name":"p","shape":"box","dims":[0,1,1]}"#).unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, Code::ParseError);
        assert!(e[0].message.contains("dims must be strictly positive"));
    }

    #[test]
    fn part_errors_are_listed_individually() {
        let e = parse_part(r#"{"name":"9p","shape":"sphere","dims":[1,1]}"#).unwrap_err();
        assert_eq!(e.len(), 3, "{e:#?}");
        let e = parse_part(r#"{"name":"p","name":"q","shape":"box","dims":[1,1,1]}"#).unwrap_err();
        assert_eq!(e[0].code, Code::DuplicateName);
        assert_eq!(e[0].subjects, vec!["name"]);
        assert!(parse_part("[1,2]").is_err());
        assert!(parse_part_bytes(&[0xff, 0xfe]).is_err());
    }

    fn cube_catalog() -> Vec<Part> {
        vec![Part::new("cube", [1.0; 3])]
    }

    #[test]
    fn unknown_part_reference() {
        let text = r#"{"parts":[{"name":"cube"}],
            "links":[{"name":"c1","part":"cube","grounded":true},{"name":"w","part":"axle"}],
            "joints":[]}"#;
        let e = parse_assembly(text, &cube_catalog()).unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, Code::UnresolvedReference);
        assert!(e[0].message.contains("axle"));
        assert!(e[0].subjects.contains(&"axle".to_string()));
    }

    #[test]
    fn duplicate_joint_names() {
        let text = r#"{"parts":[{"name":"cube"}],
            "links":[{"name":"c1","part":"cube","grounded":true},{"name":"c2","part":"cube"}],
            "joints":[
              {"name":"hinge","kind":"revolute","a":{"link":"c1","face":"+z"},"b":{"link":"c2","face":"-z"}},
              {"name":"hinge","kind":"fixed","a":{"link":"c1","face":"+x"},"b":{"link":"c2","face":"-x"}}]}"#;
        let e = parse_assembly(text, &cube_catalog()).unwrap_err();
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].code, Code::DuplicateName);
        assert_eq!(e[0].subjects, vec!["hinge"]);
    }

    #[test]
    fn inline_parts_and_defaults() {
        let text = r#"{"parts":[{"name":"cube","shape":"box","dims":[2,2,2]}],
            "links":[{"name":"c1","part":"cube","grounded":true},{"name":"c2","part":"cube"}],
            "joints":[{"name":"j","kind":"Revolute","a":{"link":"c1","face":"PosZ"},"b":{"link":"c2","face":"-z"},
                       "angle_limits":[0,90]}]}"#;
        let def = parse_assembly(text, &[]).unwrap();
        assert_eq!(def.parts[0].dims, [2.0; 3]);
        assert!(!def.links[1].grounded);
        let j = &def.joints[0];
        assert_eq!(j.free_dofs, vec![Dof::RotZ]);
        assert_eq!(j.offset, [0.0, 0.0]);
        assert_eq!(j.angle_limits, Some([0.0, 90.0]));
    }

    #[test]
    fn visual_tokens_resolve_to_faces() {
        let text = r#"{"parts":[{"name":"cube","shape":"box","dims":[1,1,1]}],
            "links":[{"name":"c1","part":"cube","grounded":true},{"name":"c2","part":"cube"}],
            "joints":[{"name":"j","kind":"fixed","a":"red-solid","b":{"link":"c2","face":"-x"}}]}"#;
        let def = parse_assembly(text, &[]).unwrap();
        assert_eq!(def.joints[0].a, FaceRef::new("c1", FaceId::PosX));

        let bad = text.replace("red-solid", "chartreuse-dotted");
        let e = parse_assembly(&bad, &[]).unwrap_err();
        assert_eq!(e[0].code, Code::UnresolvedReference);
        assert!(e[0].message.contains("chartreuse-dotted"));
    }

    #[test]
    fn missing_sections_and_wrong_types() {
        let e = parse_assembly(r#"{"parts":[],"links":{}}"#, &[]).unwrap_err();
        assert_eq!(e.len(), 2, "{e:#?}");
        let e = parse_assembly(r#"{"parts":[],"links":[],"joints":[], "extra":1}"#, &[]).unwrap_err();
        assert!(e[0].message.contains("extra"));
    }
}
