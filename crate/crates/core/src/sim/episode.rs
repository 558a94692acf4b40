//! Episode rollout, collection, and on-disk layout.
//!
//! An episode steps the simulator under a policy until a terminal event,
//! rendering the camera frame the policy (and later the labeling
//! pipeline) observes at every step. Saved episodes are fully
//! reproducible from the scenario config alone, and the files contain no
//! wall-clock state, so re-running a collection produces byte-identical
//! output.

use super::policies::LongitudinalPolicy;
use super::render::{render_semantic, RenderConfig};
use super::{
    detect_events, ground_truth_distance, step, EventFlags, ScenarioConfig, SimState,
};
use crate::geometry::CameraIntrinsics;
use crate::semantics::{SemanticMap, SemanticsError};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;
use thiserror::Error;

/// How an episode ended. Collision dominates if several flags coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Collision,
    Success,
    Timeout,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Collision => "collision",
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
        }
    }

    fn from_events(e: EventFlags) -> Outcome {
        if e.collision {
            Outcome::Collision
        } else if e.success {
            Outcome::Success
        } else {
            Outcome::Timeout
        }
    }
}

/// One observed step: the camera frame plus the kinematic scalars the
/// labeling pipeline needs.
#[derive(Debug, Clone)]
pub struct SimFrame {
    pub t: f64,
    pub map: SemanticMap,
    /// Ego speed in this state.
    pub speed: f64,
    /// Realized acceleration of the step that produced this state.
    pub accel: f64,
    /// Action chosen in this state (zero on the terminal frame).
    pub action: f64,
    /// Straight-line distance to the nearest active pedestrian.
    pub ground_truth_distance: Option<f64>,
    pub events: EventFlags,
}

/// A complete rollout.
#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub scenario: ScenarioConfig,
    pub frames: Vec<SimFrame>,
    pub outcome: Outcome,
    /// Distance from the first full stop (after having moved) to the
    /// crossing; positive means the ego stopped short of it.
    pub stopping_distance: Option<f64>,
}

/// Rolls out one episode. The policy is reset with `policy_seed` first;
/// the pedestrian schedule comes from `cfg.seed`.
pub fn run_episode(
    cfg: &ScenarioConfig,
    cam: &CameraIntrinsics,
    rc: &RenderConfig,
    policy: &mut dyn LongitudinalPolicy,
    policy_seed: u64,
) -> EpisodeLog {
    policy.reset(policy_seed);
    let mut state = SimState::init(cfg);
    let mut frames = Vec::new();
    let mut has_moved = false;
    let mut stopping_distance = None;
    let frame_cap = (cfg.timeout / cfg.dt).ceil() as usize + 2;
    loop {
        let map = render_semantic(&state, cfg, cam, rc);
        let events = detect_events(&state, cfg);
        let action = if events.any() {
            0.0
        } else {
            policy.action(&state, &map, cfg).clamp(-1.0, 1.0)
        };
        has_moved |= state.ego_v >= 0.5;
        if has_moved && state.ego_v < 0.05 && stopping_distance.is_none() {
            stopping_distance = Some(cfg.crossing_position - state.ego_x);
        }
        frames.push(SimFrame {
            t: state.t,
            map,
            speed: state.ego_v,
            accel: state.ego_accel,
            action,
            ground_truth_distance: ground_truth_distance(&state, cfg),
            events,
        });
        if events.any() || frames.len() >= frame_cap {
            break;
        }
        state = step(&state, action, cfg);
    }
    let outcome = Outcome::from_events(frames.last().expect("at least one frame").events);
    EpisodeLog {
        scenario: cfg.clone(),
        frames,
        outcome,
        stopping_distance,
    }
}

/// Rolls out `count` episodes with per-episode seeds `cfg.seed + i`,
/// handing each log to the sink as it finishes so callers never hold more
/// than one episode's frames in memory.
pub fn collect_episodes<F: FnMut(usize, EpisodeLog)>(
    cfg: &ScenarioConfig,
    cam: &CameraIntrinsics,
    rc: &RenderConfig,
    policy: &mut dyn LongitudinalPolicy,
    count: usize,
    mut sink: F,
) {
    for i in 0..count {
        let episode_cfg = ScenarioConfig {
            seed: cfg.seed + i as u64,
            ..cfg.clone()
        };
        let log = run_episode(&episode_cfg, cam, rc, policy, episode_cfg.seed);
        sink(i, log);
    }
}

#[derive(Debug, Error)]
pub enum EpisodeIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Frame(#[from] SemanticsError),
    #[error("manifest serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("kinematics log failed: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path, source: std::io::Error) -> EpisodeIoError {
    EpisodeIoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serialized episode header written next to the frames.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeManifest {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub outcome: Outcome,
    pub stopping_distance: Option<f64>,
    pub frame_count: usize,
}

pub const EPISODE_SCHEMA_VERSION: u32 = 1;

/// Writes an episode directory:
///
/// ```text
/// dir/
///   manifest.json        scenario, outcome, frame count
///   kinematics.csv       t,v,a,action,ground_truth_distance,event
///   frames/0000.png ...  8-bit class-index frames
/// ```
pub fn save_episode(log: &EpisodeLog, dir: &Path) -> Result<(), EpisodeIoError> {
    let frames_dir = dir.join("frames");
    fs::create_dir_all(&frames_dir).map_err(|e| io_err(&frames_dir, e))?;

    let manifest = EpisodeManifest {
        schema_version: EPISODE_SCHEMA_VERSION,
        scenario: log.scenario.clone(),
        outcome: log.outcome,
        stopping_distance: log.stopping_distance,
        frame_count: log.frames.len(),
    };
    let manifest_path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    fs::write(&manifest_path, body).map_err(|e| io_err(&manifest_path, e))?;

    let csv_path = dir.join("kinematics.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["t", "v", "a", "action", "ground_truth_distance", "event"])?;
    for f in &log.frames {
        let event = if f.events.collision {
            "collision"
        } else if f.events.success {
            "success"
        } else if f.events.timeout {
            "timeout"
        } else {
            ""
        };
        w.write_record([
            format!("{:.3}", f.t),
            format!("{:.6}", f.speed),
            format!("{:.6}", f.accel),
            format!("{:.3}", f.action),
            f.ground_truth_distance
                .map(|d| format!("{d:.6}"))
                .unwrap_or_default(),
            event.to_string(),
        ])?;
    }
    w.flush().map_err(|e| io_err(&csv_path, e))?;

    for (i, f) in log.frames.iter().enumerate() {
        f.map.to_index_png(&frames_dir.join(format!("{i:04}.png")))?;
    }
    Ok(())
}
