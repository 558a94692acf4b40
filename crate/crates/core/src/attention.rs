//! Spatial attention over encoder feature cubes.
//!
//! Each semantic layer (pedestrian, crossing, vehicle), resized to the
//! cube's spatial grid, re-weights every channel of the cube elementwise
//! under its class weight. The fused output adds the re-weighted
//! intermediates back onto the original cube, so zero layers pass the
//! cube through unchanged and all-ones layers scale it by 1 + the weight
//! sum.

use crate::semantics::{bilinear_resize, extract_layer, ClassId, RealLayer, SemanticMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense feature tensor, row-major over (channel, row, col).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCube {
    channels: usize,
    height: usize,
    width: usize,
    values: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum AttentionError {
    #[error("cube is {cube_h}x{cube_w} but layer is {layer_h}x{layer_w}")]
    LayerMismatch {
        cube_h: usize,
        cube_w: usize,
        layer_h: usize,
        layer_w: usize,
    },
    #[error("cube shapes differ: {0}x{1}x{2} vs {3}x{4}x{5}")]
    CubeMismatch(usize, usize, usize, usize, usize, usize),
    #[error("cube of {channels}x{height}x{width} needs {expected} values, got {got}")]
    BadValueCount {
        channels: usize,
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },
}

impl FeatureCube {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FeatureCube {
            channels,
            height,
            width,
            values: vec![0.0; channels * height * width],
        }
    }

    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f64>,
    ) -> Result<Self, AttentionError> {
        if values.len() != channels * height * width {
            return Err(AttentionError::BadValueCount {
                channels,
                height,
                width,
                expected: channels * height * width,
                got: values.len(),
            });
        }
        Ok(FeatureCube {
            channels,
            height,
            width,
            values,
        })
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut values = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    values.push(f(c, y, x));
                }
            }
        }
        FeatureCube {
            channels,
            height,
            width,
            values,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.values[(c * self.height + y) * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Class weights for the three attention layers.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttentionWeights {
    pub ped: f64,
    pub cross: f64,
    pub veh: f64,
}

impl Default for AttentionWeights {
    fn default() -> Self {
        AttentionWeights {
            ped: 1.0,
            cross: 0.75,
            veh: 0.50,
        }
    }
}

/// The three semantic layers, already on the cube's spatial grid.
#[derive(Debug, Clone)]
pub struct SemanticLayerSet {
    pub ped: RealLayer,
    pub cross: RealLayer,
    pub veh: RealLayer,
}

/// Extracts pedestrian / crossing / vehicle masks from a map and resizes
/// them to the cube grid.
pub fn build_layers(
    map: &SemanticMap,
    grid_h: usize,
    grid_w: usize,
) -> Result<SemanticLayerSet, crate::semantics::SemanticsError> {
    let resize = |class: ClassId| bilinear_resize(&extract_layer(map, class), grid_w, grid_h);
    Ok(SemanticLayerSet {
        ped: resize(ClassId::PEDESTRIAN)?,
        cross: resize(ClassId::ZEBRA_CROSSING)?,
        veh: resize(ClassId::VEHICLE)?,
    })
}

/// Re-weights every channel of the cube by `weight * layer`, broadcasting
/// the single-channel layer across channels.
pub fn apply_layer_attention(
    cube: &FeatureCube,
    layer: &RealLayer,
    weight: f64,
) -> Result<FeatureCube, AttentionError> {
    if layer.height() != cube.height || layer.width() != cube.width {
        return Err(AttentionError::LayerMismatch {
            cube_h: cube.height,
            cube_w: cube.width,
            layer_h: layer.height(),
            layer_w: layer.width(),
        });
    }
    let plane = cube.height * cube.width;
    let mut values = Vec::with_capacity(cube.values.len());
    for c in 0..cube.channels {
        let slice = &cube.values[c * plane..(c + 1) * plane];
        for (v, l) in slice.iter().zip(layer.values()) {
            values.push(weight * l * v);
        }
    }
    Ok(FeatureCube {
        channels: cube.channels,
        height: cube.height,
        width: cube.width,
        values,
    })
}

/// Elementwise sum of the base cube and all intermediates.
pub fn fuse(base: &FeatureCube, intermediates: &[FeatureCube]) -> Result<FeatureCube, AttentionError> {
    let mut out = base.clone();
    for cube in intermediates {
        if cube.dims() != base.dims() {
            let (c, h, w) = base.dims();
            let (c2, h2, w2) = cube.dims();
            return Err(AttentionError::CubeMismatch(c, h, w, c2, h2, w2));
        }
        for (o, v) in out.values.iter_mut().zip(&cube.values) {
            *o += v;
        }
    }
    Ok(out)
}

/// Full attention pass: three per-layer re-weightings fused back onto the
/// input cube.
pub fn spatial_attention(
    cube: &FeatureCube,
    layers: &SemanticLayerSet,
    w: &AttentionWeights,
) -> Result<FeatureCube, AttentionError> {
    let ped = apply_layer_attention(cube, &layers.ped, w.ped)?;
    let cross = apply_layer_attention(cube, &layers.cross, w.cross)?;
    let veh = apply_layer_attention(cube, &layers.veh, w.veh)?;
    fuse(cube, &[ped, cross, veh])
}
