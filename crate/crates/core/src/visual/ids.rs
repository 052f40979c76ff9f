use std::collections::HashMap;

use serde::Serialize;

use super::palette::{Style, CAPACITY};
use crate::diag::{Code, Diagnostic};
use crate::ir::{AssemblyDef, FaceRef, Link};
use crate::kinematics::{EdgeId, FaceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Face,
    Edge,
}

impl EntityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Face => "face",
            EntityKind::Edge => "edge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Entity {
    Face(FaceId),
    Edge(EdgeId),
}

impl Entity {
    pub fn kind(self) -> EntityKind {
        match self {
            Entity::Face(_) => EntityKind::Face,
            Entity::Edge(_) => EntityKind::Edge,
        }
    }

    pub fn id_string(self) -> String {
        match self {
            Entity::Face(f) => f.to_string(),
            Entity::Edge(e) => e.to_string(),
        }
    }
}

/// One legend row.
#[derive(Debug, Clone, PartialEq)]
pub struct StyledEntity {
    pub link: String,
    pub entity: Entity,
    pub style: Style,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenError {
    Unknown,
    /// The token exists but names an entity of this kind.
    NotAFace(&'static str),
}

/// Styles and labels for every instance, face and edge of an assembly.
///
/// Palette entries are handed out in one pass: the six faces of each link in
/// link order, then the twelve edges of each link in link order. Faces come
/// first so that joint faces stay referable in large assemblies; entities past
/// the palette capacity are drawn unstyled and reported once.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualMap {
    instance_labels: Vec<(String, String)>,
    legend: Vec<StyledEntity>,
    by_entity: HashMap<(String, Entity), usize>,
    by_token: HashMap<String, usize>,
    diagnostics: Vec<Diagnostic>,
}

/// `"blade"` -> `"Blade"`.
pub fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn assign_visual_ids(def: &AssemblyDef) -> VisualMap {
    VisualMap::for_links(&def.links)
}

impl VisualMap {
    pub fn for_links(links: &[Link]) -> VisualMap {
        let mut counters: HashMap<&str, usize> = HashMap::new();
        let instance_labels = links
            .iter()
            .map(|l| {
                let k = counters.entry(l.part.as_str()).or_insert(0);
                *k += 1;
                (l.name.clone(), format!("{}{}", capitalize(&l.part), k))
            })
            .collect();

        let order = links
            .iter()
            .flat_map(|l| FaceId::ALL.iter().map(move |f| (l, Entity::Face(*f))))
            .chain(
                links
                    .iter()
                    .flat_map(|l| EdgeId::ALL.iter().map(move |e| (l, Entity::Edge(*e)))),
            );
        let mut legend = Vec::new();
        let mut by_entity = HashMap::new();
        let mut by_token = HashMap::new();
        let mut unstyled = 0usize;
        for (i, (link, entity)) in order.enumerate() {
            match Style::palette(i) {
                Some(style) => {
                    by_entity.insert((link.name.clone(), entity), legend.len());
                    by_token.insert(style.token.clone(), legend.len());
                    legend.push(StyledEntity {
                        link: link.name.clone(),
                        entity,
                        style,
                    });
                }
                None => unstyled += 1,
            }
        }
        let mut diagnostics = Vec::new();
        if unstyled > 0 {
            let first_unstyled = legend.len();
            let total = first_unstyled + unstyled;
            diagnostics.push(
                Diagnostic::warning(
                    Code::CapacityExceeded,
                    format!(
                        "the assembly has {total} faces and edges but only {CAPACITY} visual styles exist; {unstyled} entities are drawn unstyled and cannot be referenced by token"
                    ),
                )
                .with_data("entities", total as f64)
                .with_data("capacity", CAPACITY as f64),
            );
        }
        VisualMap {
            instance_labels,
            legend,
            by_entity,
            by_token,
            diagnostics,
        }
    }

    pub fn label(&self, link: &str) -> Option<&str> {
        self.instance_labels
            .iter()
            .find(|(l, _)| l == link)
            .map(|(_, s)| s.as_str())
    }

    pub fn instance_labels(&self) -> &[(String, String)] {
        &self.instance_labels
    }

    pub fn legend(&self) -> &[StyledEntity] {
        &self.legend
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn face_style(&self, link: &str, face: FaceId) -> Option<&Style> {
        self.style_of(link, Entity::Face(face))
    }

    pub fn edge_style(&self, link: &str, edge: EdgeId) -> Option<&Style> {
        self.style_of(link, Entity::Edge(edge))
    }

    fn style_of(&self, link: &str, entity: Entity) -> Option<&Style> {
        self.by_entity
            .get(&(link.to_string(), entity))
            .map(|&i| &self.legend[i].style)
    }

    pub fn lookup_token(&self, token: &str) -> Option<&StyledEntity> {
        self.by_token.get(token).map(|&i| &self.legend[i])
    }

    pub fn resolve_face_token(&self, token: &str) -> Result<FaceRef, TokenError> {
        match self.lookup_token(token) {
            None => Err(TokenError::Unknown),
            Some(StyledEntity {
                link,
                entity: Entity::Face(face),
                ..
            }) => Ok(FaceRef::new(link.clone(), *face)),
            Some(StyledEntity { entity, .. }) => Err(TokenError::NotAFace(entity.kind().as_str())),
        }
    }

    /// Legend as a JSON array, one object per styled entity in legend order.
    pub fn legend_json(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            token: &'a str,
            link: &'a str,
            label: &'a str,
            kind: EntityKind,
            id: String,
            rgb: [u8; 3],
            texture: super::Texture,
        }
        let rows: Vec<Row> = self
            .legend
            .iter()
            .map(|e| Row {
                token: &e.style.token,
                link: &e.link,
                label: self.label(&e.link).unwrap_or(""),
                kind: e.entity.kind(),
                id: e.entity.id_string(),
                rgb: e.style.color,
                texture: e.style.texture,
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&rows).expect("legend serializes");
        s.push('\n');
        s
    }
}

/// Resolve a joint given as two face tokens.
pub fn resolve_visual_joint_ref(
    map: &VisualMap,
    token_a: &str,
    token_b: &str,
) -> Result<(FaceRef, FaceRef), Diagnostic> {
    let one = |token: &str| {
        map.resolve_face_token(token).map_err(|e| match e {
            TokenError::Unknown => Diagnostic::error(
                Code::UnresolvedReference,
                format!("visual token \"{token}\" is not in the legend"),
            )
            .with_subject(token),
            TokenError::NotAFace(kind) => Diagnostic::error(
                Code::UnresolvedReference,
                format!("visual token \"{token}\" names an {kind}; expected a face"),
            )
            .with_subject(token),
        })
    };
    Ok((one(token_a)?, one(token_b)?))
}
