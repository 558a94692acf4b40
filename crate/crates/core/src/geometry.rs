//! Monocular distance estimation from pedestrian blob height.
//!
//! A pinhole camera maps an object of real height H at distance D to an
//! image height of h = H * f / D pixels, so D = H * f / h. Pedestrians are
//! assumed to stand at a configurable average height.

use crate::semantics::PixelBlob;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pinhole parameters used for distance recovery.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraIntrinsics {
    /// Focal length in pixels.
    pub focal_length_px: f64,
    /// Assumed real pedestrian height in meters.
    pub pedestrian_height_m: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            focal_length_px: 250.0,
            pedestrian_height_m: 1.70,
        }
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("cannot estimate distance for an empty blob")]
    DegenerateBlob,
    #[error("camera parameters must be positive (f={focal}, H={height})")]
    BadIntrinsics { focal: f64, height: f64 },
}

/// Distance recovered for one pedestrian blob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub distance_m: f64,
    /// Bounding-box height the estimate was derived from.
    pub pixel_height: usize,
}

/// Estimates the distance to one blob from its bounding-box height.
pub fn estimate_distance(
    blob: &PixelBlob,
    cam: &CameraIntrinsics,
) -> Result<DistanceEstimate, GeometryError> {
    if cam.focal_length_px <= 0.0 || cam.pedestrian_height_m <= 0.0 {
        return Err(GeometryError::BadIntrinsics {
            focal: cam.focal_length_px,
            height: cam.pedestrian_height_m,
        });
    }
    if blob.pixels.is_empty() {
        return Err(GeometryError::DegenerateBlob);
    }
    let pixel_height = blob.bbox_height();
    Ok(DistanceEstimate {
        distance_m: cam.pedestrian_height_m * cam.focal_length_px / pixel_height as f64,
        pixel_height,
    })
}

/// Distance to the nearest pedestrian: the tallest blob wins (taller means
/// closer under the pinhole model). None when no blobs are in view.
pub fn nearest_pedestrian_distance(blobs: &[PixelBlob], cam: &CameraIntrinsics) -> Option<f64> {
    blobs
        .iter()
        .filter_map(|b| estimate_distance(b, cam).ok())
        .map(|e| e.distance_m)
        .min_by(|a, b| a.total_cmp(b))
}
