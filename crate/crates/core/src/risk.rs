//! Per-frame risk factors and the binary safety flag `c_t`.
//!
//! Three factors are read off a semantic map each frame: pedestrian
//! presence (road vs sidewalk), zebra-crossing occlusion, and a short
//! memory of pedestrians that recently vanished from view. Their sum runs
//! through a scaled sigmoid; the flag trips when the resulting probability
//! strictly exceeds the decision threshold.

use crate::semantics::{
    bottom_border_neighbors, connected_components, extract_layer, ClassId, PixelBlob, SemanticMap,
};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

/// Tuning for the risk factors and the sigmoid gate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    /// Factor value for a pedestrian on the road surface.
    pub high: f64,
    /// Factor value for an occluded crossing or a recent disappearance.
    pub medium: f64,
    /// Factor value for low-grade signals (pedestrian on sidewalk,
    /// unobstructed crossing in view).
    pub low: f64,
    /// Sigmoid gain k in sigma(k * (total - center)).
    pub sigmoid_gain: f64,
    /// Sigmoid center b; the total risk at which probability crosses 0.5.
    pub sigmoid_center: f64,
    /// Decision threshold psi; the flag trips when probability > psi.
    pub threshold: f64,
    /// Fraction of the frame that must be vehicle pixels before a visible
    /// crossing counts as occluded.
    pub vehicle_occlusion_fraction: f64,
    /// Slots in the pedestrian disappearance memory.
    pub memory_length: usize,
    /// When set, the disappearance factor fires only on the literal
    /// one-step pattern (seen last frame, gone now). Default is the
    /// extended rule: gone now, seen anywhere in the memory window.
    pub strict_history: bool,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            high: 1.0,
            medium: 0.5,
            low: 0.1,
            sigmoid_gain: 5.0,
            sigmoid_center: 0.6,
            threshold: 0.75,
            vehicle_occlusion_fraction: 0.05,
            memory_length: 10,
            strict_history: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum RiskConfigError {
    #[error("risk levels must satisfy 0 < low < medium <= high (got {low}, {medium}, {high})")]
    BadLevels { low: f64, medium: f64, high: f64 },
    #[error("threshold must lie strictly inside (0, 1), got {0}")]
    BadThreshold(f64),
    #[error("sigmoid gain must be positive, got {0}")]
    BadGain(f64),
    #[error("vehicle occlusion fraction must lie in (0, 1), got {0}")]
    BadOcclusionFraction(f64),
    #[error("memory length must be at least 1")]
    BadMemoryLength,
}

impl RiskConfig {
    pub fn validate(&self) -> Result<(), RiskConfigError> {
        if !(self.low > 0.0 && self.low < self.medium && self.medium <= self.high) {
            return Err(RiskConfigError::BadLevels {
                low: self.low,
                medium: self.medium,
                high: self.high,
            });
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(RiskConfigError::BadThreshold(self.threshold));
        }
        if self.sigmoid_gain <= 0.0 {
            return Err(RiskConfigError::BadGain(self.sigmoid_gain));
        }
        if !(self.vehicle_occlusion_fraction > 0.0 && self.vehicle_occlusion_fraction < 1.0) {
            return Err(RiskConfigError::BadOcclusionFraction(
                self.vehicle_occlusion_fraction,
            ));
        }
        if self.memory_length == 0 {
            return Err(RiskConfigError::BadMemoryLength);
        }
        Ok(())
    }
}

/// Mask post-processing knobs shared by the risk assessors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticsConfig {
    /// Components smaller than this many pixels are treated as noise.
    pub min_blob_area: usize,
    /// Pixels sampled under a blob to classify its supporting surface.
    pub border_neighbors: usize,
}

impl Default for SemanticsConfig {
    fn default() -> Self {
        SemanticsConfig {
            min_blob_area: 20,
            border_neighbors: 10,
        }
    }
}

/// Pedestrian-presence factor for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PedestrianPresence {
    pub risk: f64,
    pub detected: bool,
    pub on_road: bool,
}

/// Crossing-occlusion factor for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingStatus {
    pub risk: f64,
    pub detected: bool,
    pub occluded: bool,
}

/// Fixed-length shift register of recent pedestrian detections.
/// Slot 0 holds the current frame; older frames sit behind it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PedMemory {
    slots: VecDeque<bool>,
}

impl PedMemory {
    /// All-clear memory of `length` slots.
    pub fn new(length: usize) -> Self {
        assert!(length >= 1, "memory needs at least one slot");
        PedMemory {
            slots: VecDeque::from(vec![false; length]),
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slot(&self, i: usize) -> bool {
        self.slots[i]
    }

    /// Shifts the register (oldest slot falls out, `detected` becomes slot
    /// 0) and returns the disappearance factor for the new state: medium
    /// when the pedestrian is gone now but was seen within the window
    /// (or exactly one frame ago under `strict_history`).
    pub fn update(&mut self, detected: bool, cfg: &RiskConfig) -> f64 {
        self.slots.pop_back();
        self.slots.push_front(detected);
        let vanished = if cfg.strict_history {
            !self.slots[0] && self.len() > 1 && self.slots[1]
        } else {
            !self.slots[0] && self.slots.iter().skip(1).any(|&s| s)
        };
        if vanished {
            cfg.medium
        } else {
            0.0
        }
    }
}

/// Everything the gate derived from one frame, in audit-ready form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskAssessment {
    /// Pedestrian-presence factor.
    pub f_p: f64,
    /// Crossing-occlusion factor.
    pub f_c: f64,
    /// Disappearance-memory factor.
    pub f_h: f64,
    /// Factor sum fed to the sigmoid.
    pub f_t: f64,
    /// Sigmoid output in (0, 1).
    pub probability: f64,
    /// The safety flag: true gates the reward into caution mode.
    pub c_t: bool,
    pub pedestrian_detected: bool,
    pub pedestrian_on_road: bool,
    pub crossing_detected: bool,
    pub crossing_occluded: bool,
}

/// Sigmoid of the total risk: sigma(gain * (total - center)).
pub fn safety_probability(total: f64, cfg: &RiskConfig) -> f64 {
    let z = cfg.sigmoid_gain * (total - cfg.sigmoid_center);
    1.0 / (1.0 + (-z).exp())
}

/// Combines the three factor values into the gate decision. The flag is
/// strict: probability exactly at the threshold stays safe.
pub fn aggregate(f_p: f64, f_c: f64, f_h: f64, cfg: &RiskConfig) -> (f64, f64, bool) {
    let total = f_p + f_c + f_h;
    let probability = safety_probability(total, cfg);
    (total, probability, probability > cfg.threshold)
}

/// Classifies pedestrian blobs into road/sidewalk and returns the
/// presence factor: `high` if any blob stands on the road, `low` if
/// pedestrians are visible only off the road, 0 with none in view.
pub fn assess_pedestrian_presence(
    map: &SemanticMap,
    cfg: &RiskConfig,
    sem: &SemanticsConfig,
) -> PedestrianPresence {
    let blobs = pedestrian_blobs(map, sem);
    presence_from_blobs(&blobs, map, cfg, sem)
}

/// Pedestrian components of at least the configured blob area.
pub fn pedestrian_blobs(map: &SemanticMap, sem: &SemanticsConfig) -> Vec<PixelBlob> {
    let layer = extract_layer(map, ClassId::PEDESTRIAN);
    connected_components(&layer, sem.min_blob_area)
}

/// Presence factor from precomputed blobs (the pipeline reuses the blobs
/// for distance estimation).
pub fn presence_from_blobs(
    blobs: &[PixelBlob],
    map: &SemanticMap,
    cfg: &RiskConfig,
    sem: &SemanticsConfig,
) -> PedestrianPresence {
    let mut detected = false;
    let mut on_road = false;
    for blob in blobs {
        detected = true;
        let border = bottom_border_neighbors(blob, map, sem.border_neighbors);
        let road = border.iter().filter(|c| c.is_road_surface()).count();
        let sidewalk = border.iter().filter(|&&c| c == ClassId::SIDEWALK).count();
        // Majority vote; ties (including an empty or uninformative border,
        // e.g. a blob cut off by the frame edge or standing over another
        // object) fall on the risky side.
        if road >= sidewalk {
            on_road = true;
            break;
        }
    }
    let risk = if on_road {
        cfg.high
    } else if detected {
        cfg.low
    } else {
        0.0
    };
    PedestrianPresence {
        risk,
        detected,
        on_road,
    }
}

/// Crossing factor: `medium` when a zebra crossing is in view and vehicle
/// pixels exceed the occlusion fraction of the frame, `low` when the
/// crossing is in view unobstructed, 0 with no crossing at all.
pub fn assess_crossing_occlusion(map: &SemanticMap, cfg: &RiskConfig) -> CrossingStatus {
    let mut zebra = 0usize;
    let mut vehicle = 0usize;
    for &c in map.cells() {
        if c == ClassId::ZEBRA_CROSSING {
            zebra += 1;
        } else if c == ClassId::VEHICLE {
            vehicle += 1;
        }
    }
    let detected = zebra > 0;
    let total = map.width() * map.height();
    let occluded = detected && (vehicle as f64) > cfg.vehicle_occlusion_fraction * total as f64;
    let risk = if occluded {
        cfg.medium
    } else if detected {
        cfg.low
    } else {
        0.0
    };
    CrossingStatus {
        risk,
        detected,
        occluded,
    }
}

/// Full per-frame assessment: factors, sigmoid, flag. Advances `memory`
/// by one frame as a side effect, so frames must be fed in order.
pub fn assess_frame(
    map: &SemanticMap,
    memory: &mut PedMemory,
    cfg: &RiskConfig,
    sem: &SemanticsConfig,
) -> RiskAssessment {
    let blobs = pedestrian_blobs(map, sem);
    assess_frame_with_blobs(&blobs, map, memory, cfg, sem)
}

/// Same as `assess_frame` but reuses already-extracted pedestrian blobs.
pub fn assess_frame_with_blobs(
    blobs: &[PixelBlob],
    map: &SemanticMap,
    memory: &mut PedMemory,
    cfg: &RiskConfig,
    sem: &SemanticsConfig,
) -> RiskAssessment {
    let presence = presence_from_blobs(blobs, map, cfg, sem);
    let crossing = assess_crossing_occlusion(map, cfg);
    let f_h = memory.update(presence.detected, cfg);
    let (f_t, probability, c_t) = aggregate(presence.risk, crossing.risk, f_h, cfg);
    RiskAssessment {
        f_p: presence.risk,
        f_c: crossing.risk,
        f_h,
        f_t,
        probability,
        c_t,
        pedestrian_detected: presence.detected,
        pedestrian_on_road: presence.on_road,
        crossing_detected: crossing.detected,
        crossing_occluded: crossing.occluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> RiskConfig {
        RiskConfig::default()
    }

    #[test]
    fn default_config_validates() {
        cfg().validate().unwrap();
    }

    #[test]
    fn pedestrian_on_road_plus_occluded_crossing_trips_flag() {
        // sigma(5 * (1.5 - 0.6)) = sigma(4.5) = 0.98901...
        let (total, p, flag) = aggregate(1.0, 0.5, 0.0, &cfg());
        assert_eq!(total, 1.5);
        assert!((p - 0.989013).abs() < 1e-5);
        assert!(flag);
    }

    #[test]
    fn single_medium_factor_stays_safe() {
        // sigma(5 * (0.5 - 0.6)) = sigma(-0.5) = 0.37754...
        let (_, p, flag) = aggregate(0.0, 0.5, 0.0, &cfg());
        assert!((p - 0.377541).abs() < 1e-5);
        assert!(!flag);
    }

    #[test]
    fn three_low_factors_stay_safe() {
        // sigma(5 * (0.3 - 0.6)) = sigma(-1.5) = 0.18243...
        let (_, p, flag) = aggregate(0.1, 0.1, 0.1, &cfg());
        assert!((p - 0.182426).abs() < 1e-5);
        assert!(!flag);
    }

    #[test]
    fn all_clear_probability_is_small_but_positive() {
        // sigma(-3.0) = 0.047426...
        let (_, p, flag) = aggregate(0.0, 0.0, 0.0, &cfg());
        assert!((p - 0.047426).abs() < 1e-5);
        assert!(p > 0.0);
        assert!(!flag);
    }

    #[test]
    fn threshold_comparison_is_strict() {
        // With the total sitting exactly on the sigmoid center the
        // probability is exactly 0.5; a threshold of exactly 0.5 must not
        // trip the flag.
        let mut c = cfg();
        c.threshold = 0.5;
        let (_, p, flag) = aggregate(0.3, 0.3, 0.0, &c);
        assert_eq!(p, 0.5);
        assert!(!flag);
    }

    #[test]
    fn memory_shift_register_and_disappearance_rule() {
        let c = cfg();
        let mut m = PedMemory::new(c.memory_length);
        // Seen this frame: no disappearance.
        assert_eq!(m.update(true, &c), 0.0);
        // Gone now, seen one frame ago: fires in both modes.
        assert_eq!(m.update(false, &c), c.medium);
        // Gone now, seen two frames ago: extended rule still fires.
        assert_eq!(m.update(false, &c), c.medium);
        // Strict mode only honors the one-step pattern.
        let mut strict = cfg();
        strict.strict_history = true;
        let mut m = PedMemory::new(strict.memory_length);
        m.update(true, &strict);
        assert_eq!(m.update(false, &strict), strict.medium);
        assert_eq!(m.update(false, &strict), 0.0);
    }

    #[test]
    fn memory_expires_after_its_window() {
        let c = cfg();
        let mut m = PedMemory::new(3);
        m.update(true, &c);
        assert_eq!(m.update(false, &c), c.medium);
        assert_eq!(m.update(false, &c), c.medium);
        // Detection has now fallen off the 3-slot register.
        assert_eq!(m.update(false, &c), 0.0);
    }

    #[test]
    fn empty_frame_produces_zero_factors() {
        let map = SemanticMap::filled(32, 32, ClassId::ROAD);
        let mut memory = PedMemory::new(10);
        let a = assess_frame(&map, &mut memory, &cfg(), &SemanticsConfig::default());
        assert_eq!((a.f_p, a.f_c, a.f_h), (0.0, 0.0, 0.0));
        assert!(!a.c_t);
        assert!(!a.pedestrian_detected && !a.crossing_detected);
    }

    #[test]
    fn sidewalk_pedestrian_scores_low_road_pedestrian_high() {
        let sem = SemanticsConfig {
            min_blob_area: 1,
            border_neighbors: 10,
        };
        let mut map = SemanticMap::filled(8, 8, ClassId::ROAD);
        for col in 0..8 {
            map.set(7, col, ClassId::SIDEWALK);
        }
        // Pedestrian whose feet sit one row above the sidewalk strip.
        for row in 4..7 {
            map.set(row, 2, ClassId::PEDESTRIAN);
        }
        let p = assess_pedestrian_presence(&map, &cfg(), &sem);
        assert!(p.detected && !p.on_road);
        assert_eq!(p.risk, cfg().low);

        // Same blob over road pixels instead.
        let mut map = SemanticMap::filled(8, 8, ClassId::ROAD);
        for row in 4..7 {
            map.set(row, 2, ClassId::PEDESTRIAN);
        }
        let p = assess_pedestrian_presence(&map, &cfg(), &sem);
        assert!(p.detected && p.on_road);
        assert_eq!(p.risk, cfg().high);
    }

    #[test]
    fn small_blobs_are_noise() {
        let sem = SemanticsConfig::default();
        let mut map = SemanticMap::filled(32, 32, ClassId::ROAD);
        // 4 pixels, below the 20-pixel default area.
        for row in 10..14 {
            map.set(row, 5, ClassId::PEDESTRIAN);
        }
        let p = assess_pedestrian_presence(&map, &cfg(), &sem);
        assert!(!p.detected);
        assert_eq!(p.risk, 0.0);
    }

    #[test]
    fn crossing_occlusion_threshold_is_strict_fraction() {
        let c = cfg();
        let mut map = SemanticMap::filled(20, 20, ClassId::ROAD);
        map.set(0, 0, ClassId::ZEBRA_CROSSING);
        // Exactly 5% of 400 = 20 vehicle pixels: not occluded (strictly
        // greater required).
        for i in 0..20 {
            map.set(10, i, ClassId::VEHICLE);
        }
        let s = assess_crossing_occlusion(&map, &c);
        assert!(s.detected && !s.occluded);
        assert_eq!(s.risk, c.low);
        // One more pixel tips it.
        map.set(11, 0, ClassId::VEHICLE);
        let s = assess_crossing_occlusion(&map, &c);
        assert!(s.occluded);
        assert_eq!(s.risk, c.medium);
    }

    #[test]
    fn vehicles_without_crossing_contribute_nothing() {
        let mut map = SemanticMap::filled(10, 10, ClassId::ROAD);
        for i in 0..50 {
            map.set(i / 10, i % 10, ClassId::VEHICLE);
        }
        let s = assess_crossing_occlusion(&map, &cfg());
        assert!(!s.detected && !s.occluded);
        assert_eq!(s.risk, 0.0);
    }

    proptest! {
        #[test]
        fn probability_is_monotone_in_each_factor(
            f_p in 0.0f64..1.0,
            f_c in 0.0f64..1.0,
            f_h in 0.0f64..1.0,
            bump in 0.0f64..1.0,
        ) {
            let c = cfg();
            let (_, p0, _) = aggregate(f_p, f_c, f_h, &c);
            prop_assert!(aggregate(f_p + bump, f_c, f_h, &c).1 >= p0);
            prop_assert!(aggregate(f_p, f_c + bump, f_h, &c).1 >= p0);
            prop_assert!(aggregate(f_p, f_c, f_h + bump, &c).1 >= p0);
            prop_assert!(p0 > 0.0 && p0 < 1.0);
        }

        #[test]
        fn memory_update_is_deterministic(
            detections in proptest::collection::vec(any::<bool>(), 1..40),
        ) {
            let c = cfg();
            let mut a = PedMemory::new(c.memory_length);
            let mut b = PedMemory::new(c.memory_length);
            for &d in &detections {
                prop_assert_eq!(a.update(d, &c), b.update(d, &c));
            }
            prop_assert_eq!(a, b);
        }
    }
}
