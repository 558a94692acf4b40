//! Desk-scale 1-D crossing simulator.
//!
//! The ego vehicle drives a straight road toward a goal, passing a zebra
//! crossing that pedestrians cross laterally. Longitudinal motion is the
//! only ego degree of freedom; pedestrians follow a per-episode schedule
//! drawn from the density preset and the episode seed. Every pedestrian
//! crosses on whichever of two triggers fires first: a yield trigger (the
//! ego is near and nearly stopped, as a cautious pedestrian would wait
//! for) and a dart trigger (the ego closes within a sampled radius, the
//! sudden-crossing case). Unexpected pedestrians have only the dart
//! trigger.

mod episode;
mod policies;
mod render;

pub use episode::{
    collect_episodes, run_episode, save_episode, EpisodeIoError, EpisodeLog, EpisodeManifest,
    Outcome, SimFrame, EPISODE_SCHEMA_VERSION,
};
pub use policies::{LongitudinalPolicy, ScriptedKind, ScriptedPolicy, ACTION_LEVELS};
pub use render::{render_semantic, RenderConfig};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Pedestrian traffic presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrafficDensity {
    Low,
    Medium,
    High,
}

impl TrafficDensity {
    pub fn as_str(self) -> &'static str {
        match self {
            TrafficDensity::Low => "low",
            TrafficDensity::Medium => "medium",
            TrafficDensity::High => "high",
        }
    }
}

/// Parked-vehicle occlusion presets for the crossing approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OcclusionPreset {
    None,
    Partial,
    Full,
}

impl OcclusionPreset {
    pub fn as_str(self) -> &'static str {
        match self {
            OcclusionPreset::None => "none",
            OcclusionPreset::Partial => "partial",
            OcclusionPreset::Full => "full",
        }
    }
}

/// Scenario layout and kinematic limits.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Total road length in meters.
    pub road_length: f64,
    /// Longitudinal position of the zebra crossing.
    pub crossing_position: f64,
    /// Ego goal position; reaching it ends the episode successfully.
    pub goal_position: f64,
    pub density: TrafficDensity,
    pub occlusion: OcclusionPreset,
    /// Speed limit in m/s.
    pub v_max: f64,
    /// Full-throttle/full-brake acceleration magnitude in m/s^2.
    pub a_max: f64,
    /// Step period in seconds.
    pub dt: f64,
    /// Episode wall-clock limit in seconds.
    pub timeout: f64,
    /// Episode seed; drives the pedestrian schedule.
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            road_length: 100.0,
            crossing_position: 60.0,
            goal_position: 100.0,
            density: TrafficDensity::Low,
            occlusion: OcclusionPreset::Full,
            v_max: 8.33,
            a_max: 3.0,
            dt: 0.1,
            timeout: 60.0,
            seed: 0,
        }
    }
}

// Fixed lane geometry shared by the dynamics, the collision test, and the
// renderer. The road spans two 3 m lanes; the ego drives the near lane
// centered at y = +1.5 and pedestrians cross from the near (right)
// sidewalk toward the far side.
pub const ROAD_HALF_WIDTH: f64 = 3.0;
pub const SIDEWALK_WIDTH: f64 = 1.8;
pub const EGO_LANE_CENTER: f64 = 1.5;
/// Ego lane band: a crossing pedestrian inside [0, 3] shares the lane.
pub const EGO_LANE_MIN: f64 = 0.0;
pub const EGO_LANE_MAX: f64 = ROAD_HALF_WIDTH;
/// Longitudinal tolerance for occupying the crossing.
pub const COLLISION_ZONE: f64 = 0.5;
/// Pedestrians start on the near sidewalk around here and despawn just
/// past the ego lane edge, the same line at which they stop blocking
/// traffic. Tracking ends exactly when the conflict ends: once the last
/// pedestrian leaves the lane the tracked distance reads empty, so a
/// resume after a yield is observed with no pedestrian around rather
/// than aliasing with an approach toward one still being tracked.
pub const PED_SPAWN_Y: f64 = 4.0;
pub const PED_EXIT_Y: f64 = -0.5;
pub const PED_HEIGHT: f64 = 1.7;
pub const PED_HALF_WIDTH: f64 = 0.3;
/// Yield trigger: ego within this range of the crossing at most this fast.
pub const YIELD_RADIUS: f64 = 25.0;
pub const YIELD_SPEED: f64 = 0.5;
/// Dart trigger radii are sampled uniformly from this range.
pub const DART_RADIUS_MIN: f64 = 8.0;
pub const DART_RADIUS_MAX: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PedPhase {
    Waiting,
    Crossing,
    Done,
}

/// One scheduled pedestrian.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Pedestrian {
    /// Lateral position; decreases while crossing.
    pub lateral_y: f64,
    pub phase: PedPhase,
    /// Walking speed in m/s.
    pub speed: f64,
    /// Simulation time at which crossing began, if it has.
    pub start_time: Option<f64>,
    /// Crosses only on the dart trigger, never on yield.
    pub unexpected: bool,
    /// Ego distance to the crossing below which the pedestrian darts.
    pub dart_radius: f64,
    /// Fully masked by the parked occluder from the current ego pose.
    pub hidden_behind_occluder: bool,
}

/// Full simulator state between steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub ego_x: f64,
    pub ego_v: f64,
    /// Realized acceleration of the step that produced this state.
    pub ego_accel: f64,
    pub pedestrians: Vec<Pedestrian>,
}

impl SimState {
    /// Initial state for the scenario: ego at rest at x = 0, pedestrians
    /// scheduled from the seed.
    pub fn init(cfg: &ScenarioConfig) -> SimState {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (count, p_unexpected, p_run, base_walk) = match cfg.density {
            TrafficDensity::Low => (1, 0.0, 0.0, 1.4),
            TrafficDensity::Medium => (2, 0.2, 0.2, 1.4),
            TrafficDensity::High => (3, 0.3, 0.4, 1.5),
        };
        let run_speed = 1.67; // 6 km/h
        let mut pedestrians = Vec::with_capacity(count);
        for i in 0..count {
            // Sampling order is part of the determinism contract.
            let runner = rng.gen_bool(p_run);
            let jitter: f64 = rng.gen_range(-0.08..0.08);
            let dart_radius = rng.gen_range(DART_RADIUS_MIN..DART_RADIUS_MAX);
            let unexpected = rng.gen_bool(p_unexpected);
            let speed = if runner { run_speed } else { base_walk } + jitter;
            pedestrians.push(Pedestrian {
                lateral_y: PED_SPAWN_Y + 0.3 * i as f64,
                phase: PedPhase::Waiting,
                speed,
                start_time: None,
                unexpected,
                dart_radius,
                hidden_behind_occluder: false,
            });
        }
        let mut state = SimState {
            t: 0.0,
            ego_x: 0.0,
            ego_v: 0.0,
            ego_accel: 0.0,
            pedestrians,
        };
        update_hidden_flags(&mut state, cfg);
        state
    }
}

/// Advances the state by one step under a normalized action in [-1, 1].
/// Speed clamps to [0, v_max]; position integrates the new speed.
pub fn step(state: &SimState, action: f64, cfg: &ScenarioConfig) -> SimState {
    let action = action.clamp(-1.0, 1.0);
    let v_new = (state.ego_v + action * cfg.a_max * cfg.dt).clamp(0.0, cfg.v_max);
    let realized_accel = (v_new - state.ego_v) / cfg.dt;
    let x_new = state.ego_x + v_new * cfg.dt;
    let t_new = state.t + cfg.dt;

    let dist_to_crossing = cfg.crossing_position - x_new;
    let mut pedestrians = state.pedestrians.clone();
    for ped in pedestrians.iter_mut() {
        match ped.phase {
            PedPhase::Waiting => {
                // Triggers are evaluated on the post-move ego pose. Once
                // the ego is essentially on the crossing nobody steps out.
                if dist_to_crossing >= 1.0 {
                    let dart = dist_to_crossing <= ped.dart_radius;
                    let yielded = !ped.unexpected
                        && dist_to_crossing <= YIELD_RADIUS
                        && v_new <= YIELD_SPEED;
                    if dart || yielded {
                        ped.phase = PedPhase::Crossing;
                        ped.start_time = Some(t_new);
                    }
                }
            }
            PedPhase::Crossing => {
                ped.lateral_y -= ped.speed * cfg.dt;
                if ped.lateral_y <= PED_EXIT_Y {
                    ped.phase = PedPhase::Done;
                }
            }
            PedPhase::Done => {}
        }
    }

    let mut next = SimState {
        t: t_new,
        ego_x: x_new,
        ego_v: v_new,
        ego_accel: realized_accel,
        pedestrians,
    };
    update_hidden_flags(&mut next, cfg);
    next
}

/// Occluder box in world coordinates: (x0, x1, y0, y1, height).
pub fn occluder_box(cfg: &ScenarioConfig) -> Option<(f64, f64, f64, f64, f64)> {
    let c = cfg.crossing_position;
    match cfg.occlusion {
        OcclusionPreset::None => None,
        // Parked car: long enough to matter, shorter than a pedestrian.
        OcclusionPreset::Partial => Some((c - 6.0, c - 2.0, 2.8, 4.6, 1.45)),
        // Parked van: taller than a pedestrian and spanning the approach.
        OcclusionPreset::Full => Some((c - 8.5, c - 2.0, 2.8, 5.6, 2.4)),
    }
}

fn update_hidden_flags(state: &mut SimState, cfg: &ScenarioConfig) {
    let ego = (state.ego_x, EGO_LANE_CENTER);
    let occ = occluder_box(cfg);
    for ped in state.pedestrians.iter_mut() {
        ped.hidden_behind_occluder = match occ {
            Some(rect) => {
                ped.phase != PedPhase::Done
                    && fully_occluded(ego, (cfg.crossing_position, ped.lateral_y), rect)
            }
            None => false,
        };
    }
}

/// True when the ground line of sight passes through the occluder box and
/// the box is tall enough to cover the pedestrian's head from the camera
/// height used by the renderer.
fn fully_occluded(
    ego: (f64, f64),
    ped: (f64, f64),
    (x0, x1, y0, y1, h): (f64, f64, f64, f64, f64),
) -> bool {
    let (ex, ey) = ego;
    let (px, py) = ped;
    if px <= ex {
        return false;
    }
    // Lateral coordinate of the sight line at the box faces.
    let mut blocked = false;
    for face in [x0, x1] {
        if face > ex && face < px {
            let t = (face - ex) / (px - ex);
            let y = ey + t * (py - ey);
            if y >= y0 && y <= y1 {
                blocked = true;
            }
        }
    }
    if !blocked {
        return false;
    }
    // Vertical cover: the camera sits at render::CAMERA_HEIGHT; the box top
    // must subtend at least the pedestrian top from the nearer face.
    let cam_h = render::CAMERA_HEIGHT;
    let d_box = (x0.max(ex + 0.1)) - ex;
    let d_ped = px - ex;
    (h - cam_h) / d_box >= (PED_HEIGHT - cam_h) / d_ped
}

/// Terminal conditions present in a state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventFlags {
    pub collision: bool,
    pub success: bool,
    pub timeout: bool,
}

impl EventFlags {
    pub fn any(self) -> bool {
        self.collision || self.success || self.timeout
    }
}

/// Checks the three terminal conditions: collision (ego occupies the
/// crossing zone while a crossing pedestrian is inside the ego lane),
/// success (goal reached), timeout.
pub fn detect_events(state: &SimState, cfg: &ScenarioConfig) -> EventFlags {
    let in_zone = (state.ego_x - cfg.crossing_position).abs() <= COLLISION_ZONE;
    let collision = in_zone
        && state.pedestrians.iter().any(|p| {
            p.phase == PedPhase::Crossing
                && p.lateral_y >= EGO_LANE_MIN
                && p.lateral_y <= EGO_LANE_MAX
        });
    EventFlags {
        collision,
        success: state.ego_x >= cfg.goal_position,
        timeout: state.t >= cfg.timeout - 1e-9,
    }
}

/// Euclidean ground distance from the ego to the nearest pedestrian that
/// has not finished crossing, matching the forward camera's field of view:
/// a pedestrian behind the ego cannot be measured, so once the ego has
/// passed the crossing this returns None, exactly like the pinhole
/// estimator it stands in for. Also None once all pedestrians are done.
pub fn ground_truth_distance(state: &SimState, cfg: &ScenarioConfig) -> Option<f64> {
    let dx = cfg.crossing_position - state.ego_x;
    if dx <= 0.0 {
        return None;
    }
    state
        .pedestrians
        .iter()
        .filter(|p| p.phase != PedPhase::Done)
        .map(|p| {
            let dy = p.lateral_y - EGO_LANE_CENTER;
            (dx * dx + dy * dy).sqrt()
        })
        .min_by(|a, b| a.total_cmp(b))
}
