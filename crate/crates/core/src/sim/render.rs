//! Semantic renderer for simulator states.
//!
//! A forward-facing pinhole camera sits at the ego position, lane center,
//! at a fixed height. The ground plane fills by row (each image row below
//! the horizon sees one ground depth), then pedestrians and the parked
//! occluder paint back-to-front as vertical billboards, so nearer objects
//! mask farther ones pixel by pixel. Pedestrian billboard heights follow
//! the same pinhole model the distance estimator inverts.

use super::{
    occluder_box, PedPhase, ScenarioConfig, SimState, EGO_LANE_CENTER, PED_HALF_WIDTH, PED_HEIGHT,
    ROAD_HALF_WIDTH, SIDEWALK_WIDTH,
};
use crate::geometry::CameraIntrinsics;
use crate::semantics::{ClassId, SemanticMap};
use serde::{Deserialize, Serialize};

/// Camera height above the road in meters.
pub const CAMERA_HEIGHT: f64 = 1.4;

/// Crossing band half-depth along the road, meters.
const CROSSING_HALF_DEPTH: f64 = 1.2;
/// Zebra stripe layout across the road: stripe period and painted width.
const STRIPE_PERIOD: f64 = 0.8;
const STRIPE_WIDTH: f64 = 0.45;
/// Billboards closer than this are behind the bumper and skipped.
const MIN_RENDER_DEPTH: f64 = 0.3;
/// Vertical slices used to draw the parked occluder so it keeps masking
/// the crossing while the ego drives alongside it.
const OCCLUDER_SLABS: usize = 4;

/// Raster parameters for the semantic camera.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub width: usize,
    pub height: usize,
    /// Image row of the horizon; ground rows lie below it.
    pub horizon_row: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            width: 224,
            height: 224,
            horizon_row: 60.0,
        }
    }
}

/// Renders the scene into a per-pixel class map.
pub fn render_semantic(
    state: &SimState,
    scenario: &ScenarioConfig,
    cam: &CameraIntrinsics,
    rc: &RenderConfig,
) -> SemanticMap {
    let mut map = SemanticMap::filled(rc.width, rc.height, ClassId::UNLABELED);
    let f = cam.focal_length_px;
    let cx = (rc.width as f64 - 1.0) / 2.0;
    let col_of = |y_world: f64, depth: f64| cx + f * (y_world - EGO_LANE_CENTER) / depth;

    // Ground plane, one depth per row below the horizon.
    let first_ground_row = (rc.horizon_row.floor() as usize + 1).min(rc.height);
    for v in first_ground_row..rc.height {
        let dv = v as f64 - rc.horizon_row;
        let depth = f * CAMERA_HEIGHT / dv;
        let world_x = state.ego_x + depth;
        let row = map.row_mut(v);
        let mut fill = |y0: f64, y1: f64, class: ClassId| {
            let lo = col_of(y0, depth).round().max(0.0) as usize;
            let hi = (col_of(y1, depth).round().max(0.0) as usize).min(rc.width);
            if lo < hi {
                row[lo..hi].fill(class);
            }
        };
        fill(-ROAD_HALF_WIDTH - SIDEWALK_WIDTH, -ROAD_HALF_WIDTH, ClassId::SIDEWALK);
        fill(-ROAD_HALF_WIDTH, ROAD_HALF_WIDTH, ClassId::ROAD);
        fill(ROAD_HALF_WIDTH, ROAD_HALF_WIDTH + SIDEWALK_WIDTH, ClassId::SIDEWALK);
        let in_crossing = (world_x - scenario.crossing_position).abs() <= CROSSING_HALF_DEPTH;
        if in_crossing {
            // Stripes across the road, leaving asphalt gaps between them.
            let mut y = -ROAD_HALF_WIDTH;
            while y < ROAD_HALF_WIDTH {
                fill(y, (y + STRIPE_WIDTH).min(ROAD_HALF_WIDTH), ClassId::ZEBRA_CROSSING);
                y += STRIPE_PERIOD;
            }
        }
    }

    // Billboards, farthest first so nearer ones overwrite.
    struct Billboard {
        depth: f64,
        y0: f64,
        y1: f64,
        h: f64,
        class: ClassId,
    }
    let mut boards: Vec<Billboard> = Vec::new();
    for ped in &state.pedestrians {
        if ped.phase == PedPhase::Done {
            continue;
        }
        let depth = scenario.crossing_position - state.ego_x;
        if depth >= MIN_RENDER_DEPTH {
            boards.push(Billboard {
                depth,
                y0: ped.lateral_y - PED_HALF_WIDTH,
                y1: ped.lateral_y + PED_HALF_WIDTH,
                h: PED_HEIGHT,
                class: ClassId::PEDESTRIAN,
            });
        }
    }
    if let Some((x0, x1, y0, y1, h)) = occluder_box(scenario) {
        for k in 0..OCCLUDER_SLABS {
            let x = x0 + (x1 - x0) * k as f64 / (OCCLUDER_SLABS - 1) as f64;
            let depth = x - state.ego_x;
            if depth >= MIN_RENDER_DEPTH {
                boards.push(Billboard {
                    depth,
                    y0,
                    y1,
                    h,
                    class: ClassId::VEHICLE,
                });
            }
        }
    }
    boards.sort_by(|a, b| b.depth.total_cmp(&a.depth));
    for b in boards {
        let v_bottom = (rc.horizon_row + f * CAMERA_HEIGHT / b.depth).round();
        let v_top = (rc.horizon_row + f * (CAMERA_HEIGHT - b.h) / b.depth).round();
        let rows = (v_top.max(0.0) as usize).min(rc.height)..(v_bottom.max(0.0) as usize).min(rc.height);
        let lo = (col_of(b.y0, b.depth).round().max(0.0) as usize).min(rc.width);
        let hi = (col_of(b.y1, b.depth).round().max(0.0) as usize).min(rc.width);
        for v in rows {
            if lo < hi {
                map.row_mut(v)[lo..hi].fill(b.class);
            }
        }
    }
    map
}
