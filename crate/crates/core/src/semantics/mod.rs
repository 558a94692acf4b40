//! Semantic map decoding and mask post-processing.
//!
//! Everything downstream (risk factors, distance estimation, the attention
//! layers) consumes the types in this module: a dense per-pixel class map,
//! binary class layers extracted from it, connected pixel blobs, and
//! real-valued layers produced by resizing.

mod blobs;
mod palette;
mod resize;

pub use blobs::{bottom_border_neighbors, connected_components, PixelBlob};
pub use palette::{Palette, PaletteEntry};
pub use resize::bilinear_resize;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use thiserror::Error;

/// Number of semantic classes in the canonical table.
pub const NUM_CLASSES: u8 = 28;

/// Identifier of one semantic class, always `< NUM_CLASSES`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(u8);

impl ClassId {
    pub const UNLABELED: ClassId = ClassId(0);
    pub const PEDESTRIAN: ClassId = ClassId(4);
    pub const ROAD_MARKING: ClassId = ClassId(6);
    pub const ROAD: ClassId = ClassId(7);
    pub const SIDEWALK: ClassId = ClassId(8);
    pub const VEHICLE: ClassId = ClassId(10);
    pub const ZEBRA_CROSSING: ClassId = ClassId(27);

    pub fn new(id: u8) -> Result<Self, SemanticsError> {
        if id < NUM_CLASSES {
            Ok(ClassId(id))
        } else {
            Err(SemanticsError::ClassOutOfRange { id })
        }
    }

    pub fn id(self) -> u8 {
        self.0
    }

    /// Canonical class name, mirroring `CLASS_NAMES`.
    pub fn name(self) -> &'static str {
        CLASS_NAMES[self.0 as usize]
    }

    /// True for surfaces a pedestrian blob counts as standing on the
    /// roadway for: the road itself, lane markings, and the crossing.
    pub fn is_road_surface(self) -> bool {
        matches!(
            self,
            ClassId::ROAD | ClassId::ROAD_MARKING | ClassId::ZEBRA_CROSSING
        )
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.0)
    }
}

/// Canonical 28-entry class table, indexed by class id.
pub const CLASS_NAMES: [&str; NUM_CLASSES as usize] = [
    "unlabeled",      // 0
    "building",       // 1
    "fence",          // 2
    "other",          // 3
    "pedestrian",     // 4
    "pole",           // 5
    "road_marking",   // 6
    "road",           // 7
    "sidewalk",       // 8
    "vegetation",     // 9
    "vehicle",        // 10
    "wall",           // 11
    "traffic_sign",   // 12
    "sky",            // 13
    "ground",         // 14
    "bridge",         // 15
    "rail_track",     // 16
    "guard_rail",     // 17
    "traffic_light",  // 18
    "static",         // 19
    "dynamic",        // 20
    "water",          // 21
    "terrain",        // 22
    "truck",          // 23
    "bus",            // 24
    "motorcycle",     // 25
    "bicycle",        // 26
    "zebra_crossing", // 27
];

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("class id {id} out of range (must be < {NUM_CLASSES})")]
    ClassOutOfRange { id: u8 },
    #[error("unknown palette color #{color:06x} at pixel ({x}, {y})")]
    UnknownColor { color: u32, x: u32, y: u32 },
    #[error("palette maps color #{color:06x} to more than one class")]
    DuplicateColor { color: u32 },
    #[error("palette has no color for class {class}")]
    MissingClassColor { class: ClassId },
    #[error("dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("map size {width}x{height} does not match {len} cells")]
    BadCellCount {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("zero-sized map ({width}x{height})")]
    EmptyMap { width: usize, height: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("image error on {path}: {source}")]
    Image {
        path: String,
        source: image::ImageError,
    },
    #[error("palette parse error: {0}")]
    PaletteParse(#[from] serde_json::Error),
}

/// Dense per-pixel class map, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    cells: Vec<ClassId>,
}

impl SemanticMap {
    pub fn new(width: usize, height: usize, cells: Vec<ClassId>) -> Result<Self, SemanticsError> {
        if width == 0 || height == 0 {
            return Err(SemanticsError::EmptyMap { width, height });
        }
        if cells.len() != width * height {
            return Err(SemanticsError::BadCellCount {
                width,
                height,
                len: cells.len(),
            });
        }
        Ok(SemanticMap {
            width,
            height,
            cells,
        })
    }

    /// Map filled with a single class.
    pub fn filled(width: usize, height: usize, class: ClassId) -> Self {
        SemanticMap::new(width, height, vec![class; width * height]).expect("nonzero dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> ClassId {
        debug_assert!(row < self.height && col < self.width);
        self.cells[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, class: ClassId) {
        debug_assert!(row < self.height && col < self.width);
        self.cells[row * self.width + col] = class;
    }

    pub fn cells(&self) -> &[ClassId] {
        &self.cells
    }

    /// One full row of cells; the renderer writes spans through this.
    pub fn row_mut(&mut self, row: usize) -> &mut [ClassId] {
        let start = row * self.width;
        &mut self.cells[start..start + self.width]
    }

    /// Number of pixels carrying `class`.
    pub fn class_count(&self, class: ClassId) -> usize {
        self.cells.iter().filter(|&&c| c == class).count()
    }

    /// Loads an 8-bit single-channel PNG or PGM of class indices.
    pub fn from_index_file(path: &Path) -> Result<Self, SemanticsError> {
        let img = image::open(path)
            .map_err(|source| SemanticsError::Image {
                path: path.display().to_string(),
                source,
            })?
            .into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let mut cells = Vec::with_capacity(w * h);
        for px in img.pixels() {
            cells.push(ClassId::new(px.0[0])?);
        }
        SemanticMap::new(w, h, cells)
    }

    /// Writes the map as an 8-bit single-channel PNG of class indices.
    pub fn to_index_png(&self, path: &Path) -> Result<(), SemanticsError> {
        let mut img = image::GrayImage::new(self.width as u32, self.height as u32);
        for (i, px) in img.pixels_mut().enumerate() {
            px.0[0] = self.cells[i].id();
        }
        img.save(path).map_err(|source| SemanticsError::Image {
            path: path.display().to_string(),
            source,
        })
    }

    /// Loads a color-coded PNG and decodes it through `palette`.
    pub fn from_color_file(path: &Path, palette: &Palette) -> Result<Self, SemanticsError> {
        let img = image::open(path)
            .map_err(|source| SemanticsError::Image {
                path: path.display().to_string(),
                source,
            })?
            .into_rgb8();
        decode_palette_image(&img, palette)
    }
}

/// Decodes a color-coded raster into a class map. Fails on the first color
/// the palette does not define, reporting its position.
pub fn decode_palette_image(
    img: &image::RgbImage,
    palette: &Palette,
) -> Result<SemanticMap, SemanticsError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let mut cells = Vec::with_capacity(w * h);
    for (x, y, px) in img.enumerate_pixels() {
        let color = ((px.0[0] as u32) << 16) | ((px.0[1] as u32) << 8) | px.0[2] as u32;
        match palette.class_of(color) {
            Some(class) => cells.push(class),
            None => return Err(SemanticsError::UnknownColor { color, x, y }),
        }
    }
    SemanticMap::new(w, h, cells)
}

/// Re-encodes a class map as a color raster using the palette inverse.
pub fn encode_palette_image(
    map: &SemanticMap,
    palette: &Palette,
) -> Result<image::RgbImage, SemanticsError> {
    let mut img = image::RgbImage::new(map.width() as u32, map.height() as u32);
    for (i, px) in img.pixels_mut().enumerate() {
        let color = palette.color_of(map.cells[i])?;
        px.0 = [(color >> 16) as u8, (color >> 8) as u8, color as u8];
    }
    Ok(img)
}

/// Binary mask of one class over a map's geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryLayer {
    width: usize,
    height: usize,
    class: ClassId,
    mask: Vec<bool>,
}

impl BinaryLayer {
    pub fn new(
        width: usize,
        height: usize,
        class: ClassId,
        mask: Vec<bool>,
    ) -> Result<Self, SemanticsError> {
        if mask.len() != width * height {
            return Err(SemanticsError::BadCellCount {
                width,
                height,
                len: mask.len(),
            });
        }
        Ok(BinaryLayer {
            width,
            height,
            class,
            mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.mask[row * self.width + col]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count_set(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Extracts the binary mask of `class`. The layer keeps the source
/// geometry, so layers from the same map partition its pixels.
pub fn extract_layer(map: &SemanticMap, class: ClassId) -> BinaryLayer {
    let mask = map.cells.iter().map(|&c| c == class).collect();
    BinaryLayer {
        width: map.width,
        height: map.height,
        class,
        mask,
    }
}

/// Real-valued single-channel layer, values in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLayer {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl RealLayer {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, SemanticsError> {
        if values.len() != width * height {
            return Err(SemanticsError::BadCellCount {
                width,
                height,
                len: values.len(),
            });
        }
        Ok(RealLayer {
            width,
            height,
            values,
        })
    }

    /// Layer of a constant value, used by tests as an all-ones mask.
    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        RealLayer {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
