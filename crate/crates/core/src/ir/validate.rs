use std::collections::{HashSet, VecDeque};

use super::{is_identifier, AssemblyDef, JointKind};
use crate::diag::{Code, Diagnostic};

/// Structural checks run before solving. Empty iff the assembly is well formed.
///
/// Order: parts, links, joints, then connectivity to ground.
pub fn validate_assembly(def: &AssemblyDef) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let mut part_names = HashSet::new();
    for p in &def.parts {
        if !is_identifier(&p.name) {
            out.push(Diagnostic::error(
                Code::ParseError,
                format!("part name \"{}\" is not an identifier", p.name),
            ));
        }
        if !p.dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            out.push(
                Diagnostic::error(
                    Code::ParseError,
                    format!("part \"{}\": dims must be strictly positive and finite", p.name),
                )
                .with_subject(p.name.clone()),
            );
        }
        if !part_names.insert(p.name.as_str()) {
            out.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("part \"{}\" is defined more than once", p.name),
                )
                .with_subject(p.name.clone()),
            );
        }
    }

    let mut link_names = HashSet::new();
    for l in &def.links {
        if !is_identifier(&l.name) {
            out.push(Diagnostic::error(
                Code::ParseError,
                format!("link name \"{}\" is not an identifier", l.name),
            ));
        }
        if !link_names.insert(l.name.as_str()) {
            out.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("link name \"{}\" is used more than once", l.name),
                )
                .with_subject(l.name.clone()),
            );
        }
        if !part_names.contains(l.part.as_str()) {
            out.push(
                Diagnostic::error(
                    Code::UnresolvedReference,
                    format!("link \"{}\" refers to unknown part \"{}\"", l.name, l.part),
                )
                .with_subjects([l.name.clone(), l.part.clone()]),
            );
        }
    }

    let mut joint_names = HashSet::new();
    for j in &def.joints {
        let name = &j.name;
        if !joint_names.insert(name.as_str()) {
            out.push(
                Diagnostic::error(
                    Code::DuplicateName,
                    format!("joint name \"{name}\" is used more than once"),
                )
                .with_subject(name.clone()),
            );
        }
        for end in [&j.a, &j.b] {
            if !link_names.contains(end.link.as_str()) {
                out.push(
                    Diagnostic::error(
                        Code::UnresolvedReference,
                        format!("joint \"{name}\" refers to unknown link \"{}\"", end.link),
                    )
                    .with_subjects([name.clone(), end.link.clone()]),
                );
            }
        }
        if j.a.link == j.b.link {
            out.push(
                Diagnostic::error(
                    Code::InvalidJoint,
                    format!(
                        "joint \"{name}\" connects link \"{}\" to itself; a joint needs two different links",
                        j.a.link
                    ),
                )
                .with_subjects([name.clone(), j.a.link.clone()]),
            );
        }
        if j.free_dofs != j.kind.free_dofs() {
            let expected = match j.kind {
                JointKind::Fixed => "no free DOFs",
                JointKind::Revolute => "exactly [\"rot_z\"] (rotation about the shared face normal)",
            };
            out.push(
                Diagnostic::error(
                    Code::InvalidJoint,
                    format!(
                        "joint \"{name}\" is {} and must declare {expected}",
                        j.kind.as_str()
                    ),
                )
                .with_subject(name.clone()),
            );
        }
        if !j.offset.iter().all(|x| x.is_finite()) {
            out.push(
                Diagnostic::error(Code::InvalidJoint, format!("joint \"{name}\": offset must be finite"))
                    .with_subject(name.clone()),
            );
        }
        if let Some([lo, hi]) = j.angle_limits {
            if j.kind != JointKind::Revolute {
                out.push(
                    Diagnostic::error(
                        Code::InvalidJoint,
                        format!("joint \"{name}\": angle limits are only allowed on revolute joints"),
                    )
                    .with_subject(name.clone()),
                );
            }
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                out.push(
                    Diagnostic::error(
                        Code::InvalidJoint,
                        format!("joint \"{name}\": angle limits [{lo}, {hi}] must satisfy limits lo < hi"),
                    )
                    .with_subject(name.clone())
                    .with_data("lo", lo)
                    .with_data("hi", hi),
                );
            }
        }
    }

    let unreachable = floating_links(def);
    if !unreachable.is_empty() {
        let grounded_any = def.links.iter().any(|l| l.grounded);
        let reason = if grounded_any {
            "not connected through joints to any grounded link"
        } else {
            "floating because no link is grounded (set \"grounded\": true on one link)"
        };
        let list = unreachable
            .iter()
            .map(|n| format!("\"{n}\""))
            .collect::<Vec<_>>()
            .join(", ");
        out.push(
            Diagnostic::error(Code::FloatingComponent, format!("links {list} are {reason}"))
                .with_subjects(unreachable),
        );
    }
    out
}

/// Links not reachable from a grounded link over the joint graph, in link order.
pub(crate) fn floating_links(def: &AssemblyDef) -> Vec<String> {
    let n = def.links.len();
    let mut reached = vec![false; n];
    let mut queue = VecDeque::new();
    for (i, l) in def.links.iter().enumerate() {
        if l.grounded && !reached[i] {
            reached[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let name = &def.links[i].name;
        for j in &def.joints {
            let other = if &j.a.link == name {
                &j.b.link
            } else if &j.b.link == name {
                &j.a.link
            } else {
                continue;
            };
            if let Some(k) = def.link_index(other) {
                if !reached[k] {
                    reached[k] = true;
                    queue.push_back(k);
                }
            }
        }
    }
    def.links
        .iter()
        .zip(reached)
        .filter(|(_, r)| !r)
        .map(|(l, _)| l.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{FaceRef, Joint, Link, Part};
    use crate::kinematics::FaceId;

    fn two_links(joints: Vec<Joint>) -> AssemblyDef {
        AssemblyDef {
            parts: vec![Part::new("cube", [1.0; 3])],
            links: vec![Link::new("base", "cube", true), Link::new("top", "cube", false)],
            joints,
        }
    }

    #[test]
    fn floating_link_without_joints() {
        let d = validate_assembly(&two_links(vec![]));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, Code::FloatingComponent);
        assert_eq!(d[0].subjects, vec!["top"]);
        assert!(d[0].message.contains("top"));
    }

    #[test]
    fn inverted_limits() {
        let j = Joint::revolute(
            "hinge",
            FaceRef::new("base", FaceId::PosZ),
            FaceRef::new("top", FaceId::NegZ),
        )
        .with_limits(30.0, 10.0);
        let d = validate_assembly(&two_links(vec![j]));
        assert_eq!(d.len(), 1);
        assert!(d[0].is_error());
        assert!(d[0].message.contains("limits lo < hi"));
    }

    #[test]
    fn no_ground_at_all() {
        let mut def = two_links(vec![Joint::fixed(
            "j",
            FaceRef::new("base", FaceId::PosZ),
            FaceRef::new("top", FaceId::NegZ),
        )]);
        def.links[0].grounded = false;
        let d = validate_assembly(&def);
        assert_eq!(d[0].subjects, vec!["base", "top"]);
    }

    #[test]
    fn self_joint_and_dof_mismatch() {
        let mut j = Joint::fixed(
            "j",
            FaceRef::new("base", FaceId::PosZ),
            FaceRef::new("base", FaceId::NegZ),
        );
        j.free_dofs = vec![crate::ir::Dof::RotZ];
        let d = validate_assembly(&two_links(vec![j]));
        let codes: Vec<_> = d.iter().map(|d| d.code).collect();
        assert_eq!(
            codes,
            vec![Code::InvalidJoint, Code::InvalidJoint, Code::FloatingComponent]
        );
    }
}
