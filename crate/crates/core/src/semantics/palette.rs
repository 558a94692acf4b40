//! Color palette for color-coded semantic maps.
//!
//! Palettes load from a JSON list of `{"color": "#RRGGBB", "class": n,
//! "name": "..."}` entries. Colors must be unique; decoding fails on any
//! color the palette does not define.

use super::{ClassId, SemanticsError};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub color: String,
    pub class: u8,
    pub name: String,
}

/// Injective map from 24-bit RGB color to class id, plus its inverse for
/// re-encoding. When several classes share the inverse direction the first
/// listed color wins per class (colors themselves stay unique).
#[derive(Debug, Clone)]
pub struct Palette {
    by_color: HashMap<u32, ClassId>,
    by_class: HashMap<ClassId, u32>,
}

impl Palette {
    pub fn from_entries(entries: &[PaletteEntry]) -> Result<Self, SemanticsError> {
        let mut by_color = HashMap::new();
        let mut by_class = HashMap::new();
        for e in entries {
            let color = parse_color(&e.color)?;
            let class = ClassId::new(e.class)?;
            if by_color.insert(color, class).is_some() {
                return Err(SemanticsError::DuplicateColor { color });
            }
            by_class.entry(class).or_insert(color);
        }
        Ok(Palette { by_color, by_class })
    }

    pub fn from_json(json: &str) -> Result<Self, SemanticsError> {
        let entries: Vec<PaletteEntry> = serde_json::from_str(json)?;
        Palette::from_entries(&entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, SemanticsError> {
        let json = std::fs::read_to_string(path).map_err(|source| SemanticsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Palette::from_json(&json)
    }

    pub fn class_of(&self, color: u32) -> Option<ClassId> {
        self.by_color.get(&color).copied()
    }

    pub fn color_of(&self, class: ClassId) -> Result<u32, SemanticsError> {
        self.by_class
            .get(&class)
            .copied()
            .ok_or(SemanticsError::MissingClassColor { class })
    }

    pub fn len(&self) -> usize {
        self.by_color.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_color.is_empty()
    }
}

fn parse_color(s: &str) -> Result<u32, SemanticsError> {
    let hex = s.strip_prefix('#').unwrap_or(s);
    u32::from_str_radix(hex, 16)
        .ok()
        .filter(|_| hex.len() == 6)
        .ok_or_else(|| serde_color_error(s))
}

fn serde_color_error(s: &str) -> SemanticsError {
    SemanticsError::PaletteParse(serde_json::Error::io(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("bad color literal {s:?}, expected #RRGGBB"),
    )))
}
