//! Longitudinal driving policies.
//!
//! The trait is the single interface the episode runner knows about; the
//! scripted implementations here generate training data with distinct
//! speed profiles, and the learned table policy plugs in through the same
//! trait at evaluation time. Scripted policies read the ground-truth
//! simulator state and ignore the camera frame.

use super::{PedPhase, ScenarioConfig, SimState, COLLISION_ZONE};
use crate::semantics::SemanticMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

/// Discrete throttle/brake levels shared by the scripted random policy
/// and the learned policy's action space.
pub const ACTION_LEVELS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// A controller mapping the current observation to a normalized
/// longitudinal action in [-1, 1].
pub trait LongitudinalPolicy {
    /// Re-seeds any internal randomness for a fresh episode.
    fn reset(&mut self, seed: u64);
    /// Picks the action to apply for the step leaving `state`.
    fn action(&mut self, state: &SimState, frame: &SemanticMap, cfg: &ScenarioConfig) -> f64;
}

/// The four scripted data-collection profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScriptedKind {
    /// Brakes on a comfortable envelope to a mark short of the crossing,
    /// waits for pedestrians to clear, then proceeds.
    Behavioral,
    /// Uniform random choice over the discrete action levels.
    Random,
    /// Full throttle regardless of traffic.
    Aggressive,
    /// Like behavioral with a wider margin and a hard speed cap near the
    /// crossing.
    Conservative,
}

impl ScriptedKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScriptedKind::Behavioral => "behavioral",
            ScriptedKind::Random => "random",
            ScriptedKind::Aggressive => "aggressive",
            ScriptedKind::Conservative => "conservative",
        }
    }

    pub const ALL: [ScriptedKind; 4] = [
        ScriptedKind::Behavioral,
        ScriptedKind::Random,
        ScriptedKind::Aggressive,
        ScriptedKind::Conservative,
    ];
}

impl FromStr for ScriptedKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "behavioral" => Ok(ScriptedKind::Behavioral),
            "random" => Ok(ScriptedKind::Random),
            "aggressive" => Ok(ScriptedKind::Aggressive),
            "conservative" => Ok(ScriptedKind::Conservative),
            other => Err(format!(
                "unknown policy '{other}', expected one of behavioral|random|aggressive|conservative"
            )),
        }
    }
}

/// Scripted policy instance. Only the random profile consumes the seed.
#[derive(Debug, Clone)]
pub struct ScriptedPolicy {
    kind: ScriptedKind,
    rng: ChaCha8Rng,
}

impl ScriptedPolicy {
    pub fn new(kind: ScriptedKind) -> Self {
        ScriptedPolicy {
            kind,
            rng: ChaCha8Rng::seed_from_u64(0),
        }
    }

    pub fn kind(&self) -> ScriptedKind {
        self.kind
    }
}

/// Normalized action that moves the current speed toward a target within
/// the actuator limits.
fn track_speed(current: f64, target: f64, cfg: &ScenarioConfig) -> f64 {
    ((target - current) / (cfg.a_max * cfg.dt)).clamp(-1.0, 1.0)
}

/// A pedestrian still blocks the crossing until it either despawns or is
/// below the ego lane and walking away.
fn crossing_blocked(state: &SimState) -> bool {
    state.pedestrians.iter().any(|p| match p.phase {
        PedPhase::Done => false,
        PedPhase::Waiting => true,
        PedPhase::Crossing => p.lateral_y >= -0.5,
    })
}

/// Speed permitted by a constant-deceleration envelope that reaches zero
/// after `dist` meters.
fn envelope_speed(dist: f64, decel: f64) -> f64 {
    if dist <= 0.0 {
        0.0
    } else {
        (2.0 * decel * dist).sqrt()
    }
}

impl LongitudinalPolicy for ScriptedPolicy {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn action(&mut self, state: &SimState, _frame: &SemanticMap, cfg: &ScenarioConfig) -> f64 {
        match self.kind {
            ScriptedKind::Aggressive => 1.0,
            ScriptedKind::Random => {
                let i = self.rng.gen_range(0..ACTION_LEVELS.len());
                ACTION_LEVELS[i]
            }
            ScriptedKind::Behavioral => yielding_action(state, cfg, 5.0, 0.35, None),
            ScriptedKind::Conservative => {
                // Decelerate early enough to hold 2 m/s from 30 m out.
                yielding_action(state, cfg, 7.0, 0.30, Some((2.0, 30.0)))
            }
        }
    }
}

/// Shared behavioral/conservative control law: hold a braking envelope
/// into a stop mark `margin` meters short of the crossing while anyone
/// still blocks it, wait at the mark, and otherwise track the limit. An
/// optional `(speed, from_dist)` cap layers a second envelope that brings
/// the ego down to `speed` by `from_dist` meters before the crossing.
fn yielding_action(
    state: &SimState,
    cfg: &ScenarioConfig,
    margin: f64,
    comfort: f64,
    cap: Option<(f64, f64)>,
) -> f64 {
    let passed = state.ego_x > cfg.crossing_position + COLLISION_ZONE + 1.0;
    if passed || !crossing_blocked(state) {
        return track_speed(state.ego_v, cfg.v_max, cfg);
    }
    let decel = comfort * cfg.a_max;
    let dist_to_mark = (cfg.crossing_position - margin) - state.ego_x;
    let mut allowed = envelope_speed(dist_to_mark, decel);
    if let Some((cap_speed, from_dist)) = cap {
        let dist_to_cap = (cfg.crossing_position - from_dist) - state.ego_x;
        let cap_allowed = (cap_speed * cap_speed + 2.0 * decel * dist_to_cap.max(0.0)).sqrt();
        allowed = allowed.min(cap_allowed);
    }
    track_speed(state.ego_v, allowed.min(cfg.v_max), cfg)
}
