//! Reward terms for one frame transition.
//!
//! The label is an unclamped sum of three terms gated by the safety flag:
//! a safety penalty (speed over proximity, plus a collision penalty) that
//! is active only while the flag is up, an efficiency term (speed bonus)
//! active only while it is down, and an always-on smoothness penalty on
//! acceleration.

use crate::risk::RiskAssessment;
use serde::{Deserialize, Serialize};

/// Coefficients for the three reward terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardParams {
    /// Speed-proximity penalty scale (zeta).
    pub zeta: f64,
    /// Proximity softener in the denominator (epsilon), keeps the term
    /// finite at zero distance.
    pub epsilon: f64,
    /// Collision penalty (eta).
    pub eta: f64,
    /// Efficiency bonus per m/s (mu).
    pub mu: f64,
    /// Smoothness penalty scale (xi).
    pub xi: f64,
    /// Frame period in seconds.
    pub dt: f64,
    /// Distances at or below this count as collision contact; it also
    /// stands in for the unknown distance when the flag is up with no
    /// pedestrian measurement (occlusion-triggered caution).
    pub collision_distance: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            zeta: 0.02,
            epsilon: 0.5,
            eta: 1.0,
            mu: 0.1,
            xi: 0.5,
            dt: 0.1,
            collision_distance: 0.5,
        }
    }
}

/// Per-frame motion readings the labeler consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameKinematics {
    /// Speed in m/s.
    pub speed: f64,
    /// Acceleration in m/s^2.
    pub accel: f64,
    /// True when the recording marks this frame as a collision.
    pub collided: bool,
}

/// Individual terms plus their sum, for audit output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub safe: f64,
    pub efficient: f64,
    pub smooth: f64,
    pub total: f64,
}

/// Safety term. Zero while the flag is down; otherwise a negative penalty
/// growing with speed squared over pedestrian proximity, plus `eta` on
/// collision contact. A missing distance uses `collision_distance` as the
/// worst-case proximity for the speed term only; it does not by itself
/// count as contact.
pub fn g_safe(kin: &FrameKinematics, distance: Option<f64>, c_t: bool, p: &RewardParams) -> f64 {
    if !c_t {
        return 0.0;
    }
    let d = distance.unwrap_or(p.collision_distance);
    let contact = kin.collided || distance.is_some_and(|d| d <= p.collision_distance);
    let collision_term = if contact { p.eta } else { 0.0 };
    -(p.zeta * kin.speed * kin.speed / (d + p.epsilon) + collision_term)
}

/// Efficiency term: speed bonus, paid only while the flag is down.
pub fn g_efficient(kin: &FrameKinematics, c_t: bool, p: &RewardParams) -> f64 {
    if c_t {
        0.0
    } else {
        p.mu * kin.speed
    }
}

/// Smoothness term: always-on penalty on the per-frame speed change.
pub fn g_smooth(kin: &FrameKinematics, p: &RewardParams) -> f64 {
    let dv = kin.accel * p.dt;
    -(p.xi * dv * dv)
}

/// Full label for one frame: the unclamped sum of the three terms.
pub fn reward(
    kin: &FrameKinematics,
    risk: &RiskAssessment,
    distance: Option<f64>,
    p: &RewardParams,
) -> RewardBreakdown {
    let safe = g_safe(kin, distance, risk.c_t, p);
    let efficient = g_efficient(kin, risk.c_t, p);
    let smooth = g_smooth(kin, p);
    RewardBreakdown {
        safe,
        efficient,
        smooth,
        total: safe + efficient + smooth,
    }
}

/// Zero labels for `n` transitions (the uniform zero-reward baseline).
pub fn label_uds(n: usize) -> Vec<f64> {
    vec![0.0; n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> RewardParams {
        RewardParams::default()
    }

    fn kin(speed: f64, accel: f64, collided: bool) -> FrameKinematics {
        FrameKinematics {
            speed,
            accel,
            collided,
        }
    }

    #[test]
    fn safety_term_worked_example() {
        // -(0.02 * 25 / (4.5 + 0.5)) = -0.1
        let g = g_safe(&kin(5.0, 0.0, false), Some(4.5), true, &params());
        assert!((g - (-0.1)).abs() < 1e-12);
    }

    #[test]
    fn collision_adds_eta_on_top_of_proximity() {
        // -(0.02 * 25 / 0.8 + 1.0) = -1.625
        let g = g_safe(&kin(5.0, 0.0, true), Some(0.3), true, &params());
        assert!((g - (-1.625)).abs() < 1e-12);
    }

    #[test]
    fn contact_also_triggers_on_distance_alone() {
        // d = 0.5 sits exactly at the contact threshold.
        let g = g_safe(&kin(1.0, 0.0, false), Some(0.5), true, &params());
        let expected = -(0.02 * 1.0 / 1.0 + 1.0);
        assert!((g - expected).abs() < 1e-12);
    }

    #[test]
    fn missing_distance_uses_worst_case_without_contact() {
        let g = g_safe(&kin(5.0, 0.0, false), None, true, &params());
        // Speed term over collision_distance, no eta.
        let expected = -(0.02 * 25.0 / (0.5 + 0.5));
        assert!((g - expected).abs() < 1e-12);
    }

    #[test]
    fn safety_term_is_zero_while_flag_is_down() {
        assert_eq!(g_safe(&kin(30.0, 0.0, true), Some(0.1), false, &params()), 0.0);
    }

    #[test]
    fn efficiency_worked_example_and_gating() {
        let p = params();
        let g = g_efficient(&kin(8.33, 0.0, false), false, &p);
        assert!((g - 0.833).abs() < 1e-12);
        assert_eq!(g_efficient(&kin(8.33, 0.0, false), true, &p), 0.0);
    }

    #[test]
    fn smoothness_worked_example() {
        // -(0.5 * (3.0 * 0.1)^2) = -0.045
        let g = g_smooth(&kin(0.0, 3.0, false), &params());
        assert!((g - (-0.045)).abs() < 1e-12);
    }

    #[test]
    fn total_is_the_plain_sum() {
        let risk_up = crate::risk::RiskAssessment {
            f_p: 1.0,
            f_c: 0.5,
            f_h: 0.0,
            f_t: 1.5,
            probability: 0.99,
            c_t: true,
            pedestrian_detected: true,
            pedestrian_on_road: true,
            crossing_detected: true,
            crossing_occluded: true,
        };
        let k = kin(5.0, 3.0, false);
        let b = reward(&k, &risk_up, Some(4.5), &params());
        assert!((b.total - (b.safe + b.efficient + b.smooth)).abs() < 1e-15);
        assert!((b.total - (-0.1 + 0.0 - 0.045)).abs() < 1e-12);
    }

    #[test]
    fn cruising_label_lands_in_expected_band() {
        // Flag down, speed limit, zero acceleration: the label is the
        // efficiency bonus alone and sits inside (0.5, 0.9).
        let risk_down = crate::risk::RiskAssessment {
            f_p: 0.0,
            f_c: 0.0,
            f_h: 0.0,
            f_t: 0.0,
            probability: 0.05,
            c_t: false,
            pedestrian_detected: false,
            pedestrian_on_road: false,
            crossing_detected: false,
            crossing_occluded: false,
        };
        let b = reward(&kin(8.33, 0.0, false), &risk_down, None, &params());
        assert!(b.total > 0.5 && b.total < 0.9);
    }

    #[test]
    fn uds_labels_are_exactly_zero() {
        let labels = label_uds(1000);
        assert_eq!(labels.len(), 1000);
        assert!(labels.iter().all(|&r| r == 0.0));
    }

    proptest! {
        #[test]
        fn gating_is_exclusive_and_smooth_is_nonpositive(
            v in 0.0f64..40.0,
            a in -10.0f64..10.0,
            d in proptest::option::of(0.0f64..100.0),
            c_t in any::<bool>(),
            collided in any::<bool>(),
        ) {
            let p = params();
            let k = kin(v, a, collided);
            let safe = g_safe(&k, d, c_t, &p);
            let eff = g_efficient(&k, c_t, &p);
            prop_assert!(safe <= 0.0);
            prop_assert!(eff >= 0.0);
            // Exactly one of the gated terms can be nonzero.
            if c_t {
                prop_assert_eq!(eff, 0.0);
            } else {
                prop_assert_eq!(safe, 0.0);
            }
            prop_assert!(g_smooth(&k, &p) <= 0.0);
        }
    }
}
