//! The fixed style palette: 24 named colors times 4 line textures.
//!
//! Colors are a high-contrast categorical set (distinct under common color
//! vision deficiencies for the first entries). Palette entry `k` is color
//! `k % 24` with texture `k / 24`, so the first 24 entities are all solid and
//! differ by color alone.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Texture {
    Solid,
    Dashed,
    Dotted,
    DashDot,
}

impl Texture {
    pub const ALL: [Texture; 4] = [Texture::Solid, Texture::Dashed, Texture::Dotted, Texture::DashDot];

    pub fn name(self) -> &'static str {
        match self {
            Texture::Solid => "solid",
            Texture::Dashed => "dashed",
            Texture::Dotted => "dotted",
            Texture::DashDot => "dashdot",
        }
    }

    /// SVG `stroke-dasharray`, or `None` for a solid line.
    pub fn dasharray(self) -> Option<&'static str> {
        match self {
            Texture::Solid => None,
            Texture::Dashed => Some("8 4"),
            Texture::Dotted => Some("1.5 3"),
            Texture::DashDot => Some("8 3 1.5 3"),
        }
    }
}

pub const COLORS: [(&str, [u8; 3]); 24] = [
    ("red", [230, 25, 75]),
    ("green", [60, 180, 75]),
    ("yellow", [255, 225, 25]),
    ("blue", [0, 130, 200]),
    ("orange", [245, 130, 48]),
    ("purple", [145, 30, 180]),
    ("cyan", [70, 240, 240]),
    ("magenta", [240, 50, 230]),
    ("lime", [210, 245, 60]),
    ("pink", [250, 190, 212]),
    ("teal", [0, 128, 128]),
    ("lavender", [220, 190, 255]),
    ("brown", [170, 110, 40]),
    ("beige", [255, 250, 200]),
    ("maroon", [128, 0, 0]),
    ("mint", [170, 255, 195]),
    ("olive", [128, 128, 0]),
    ("apricot", [255, 215, 180]),
    ("navy", [0, 0, 128]),
    ("grey", [128, 128, 128]),
    ("black", [0, 0, 0]),
    ("coral", [255, 127, 80]),
    ("indigo", [75, 0, 130]),
    ("gold", [184, 134, 11]),
];

pub const CAPACITY: usize = COLORS.len() * Texture::ALL.len();

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Style {
    pub color: [u8; 3],
    pub texture: Texture,
    /// `"<color>-<texture>"`, e.g. `"red-solid"`.
    pub token: String,
}

impl Style {
    /// Palette entry `index`, or `None` past [`CAPACITY`].
    pub fn palette(index: usize) -> Option<Style> {
        if index >= CAPACITY {
            return None;
        }
        let (name, rgb) = COLORS[index % COLORS.len()];
        let texture = Texture::ALL[index / COLORS.len()];
        Some(Style {
            color: rgb,
            texture,
            token: format!("{name}-{}", texture.name()),
        })
    }

    /// Inverse of the token format, for any palette token.
    pub fn from_token(token: &str) -> Option<Style> {
        let (color, texture) = token.rsplit_once('-')?;
        let ci = COLORS.iter().position(|(n, _)| *n == color)?;
        let ti = Texture::ALL.iter().position(|t| t.name() == texture)?;
        Style::palette(ti * COLORS.len() + ci)
    }

    pub fn hex(&self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.color[0], self.color[1], self.color[2])
    }
}
