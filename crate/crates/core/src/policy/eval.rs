//! Closing the loop: driving the simulator with a fitted table and
//! scoring the outcomes.

use super::{QTable, StateFeatures};
use crate::config::DistanceSource;
use crate::geometry::CameraIntrinsics;
use crate::pipeline::FrameAnalyzer;
use crate::semantics::SemanticMap;
use crate::sim::{
    collect_episodes, ground_truth_distance, LongitudinalPolicy, Outcome, RenderConfig,
    ScenarioConfig, SimState,
};
use serde::{Deserialize, Serialize};

/// Greedy controller over a fitted table. Each frame runs through the
/// same perception stack that labeled the training data, so the flag and
/// the distance the table sees at drive time match what it was fit on.
pub struct QTablePolicy {
    table: QTable,
    analyzer: FrameAnalyzer,
    source: DistanceSource,
}

impl QTablePolicy {
    pub fn new(table: QTable, analyzer: FrameAnalyzer, source: DistanceSource) -> Self {
        QTablePolicy {
            table,
            analyzer,
            source,
        }
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }
}

impl LongitudinalPolicy for QTablePolicy {
    fn reset(&mut self, _seed: u64) {
        self.analyzer.reset();
    }

    fn action(&mut self, state: &SimState, frame: &SemanticMap, cfg: &ScenarioConfig) -> f64 {
        let analysis = self.analyzer.analyze(frame);
        // The simulator always knows true distances, so `Auto` resolves
        // to ground truth here.
        let distance = match self.source.resolve(true) {
            DistanceSource::Pinhole => analysis.pinhole_distance,
            _ => ground_truth_distance(state, cfg),
        };
        let features = StateFeatures {
            pedestrian_distance: distance,
            speed: state.ego_v,
            safety_flag: analysis.assessment.c_t,
        };
        self.table.greedy_action(&features)
    }
}

/// Outcome tallies over an evaluation batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub episodes: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub success_pct: f64,
    pub collision_pct: f64,
    pub timeout_pct: f64,
    /// Mean stop-short distance over the episodes that recorded a full
    /// stop after having moved.
    pub mean_stopping_distance: Option<f64>,
}

/// Rolls out `episodes` rollouts (scenario seeds `cfg.seed`, `cfg.seed +
/// 1`, ...) and tallies the outcomes.
pub fn evaluate_policy(
    policy: &mut dyn LongitudinalPolicy,
    cfg: &ScenarioConfig,
    cam: &CameraIntrinsics,
    rc: &RenderConfig,
    episodes: usize,
) -> CollisionReport {
    let mut successes = 0;
    let mut collisions = 0;
    let mut timeouts = 0;
    let mut stop_sum = 0.0;
    let mut stop_count = 0usize;
    collect_episodes(cfg, cam, rc, policy, episodes, |_, log| {
        match log.outcome {
            Outcome::Success => successes += 1,
            Outcome::Collision => collisions += 1,
            Outcome::Timeout => timeouts += 1,
        }
        if let Some(sd) = log.stopping_distance {
            stop_sum += sd;
            stop_count += 1;
        }
    });
    let pct = |n: usize| {
        if episodes == 0 {
            0.0
        } else {
            n as f64 / episodes as f64 * 100.0
        }
    };
    CollisionReport {
        episodes,
        successes,
        collisions,
        timeouts,
        success_pct: pct(successes),
        collision_pct: pct(collisions),
        timeout_pct: pct(timeouts),
        mean_stopping_distance: (stop_count > 0).then(|| stop_sum / stop_count as f64),
    }
}
