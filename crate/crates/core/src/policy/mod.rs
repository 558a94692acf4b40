//! Tabular offline Q-learning over coarse state cells.
//!
//! States are (pedestrian distance bucket, speed bucket, safety flag)
//! triples; actions are the discrete throttle levels the simulator
//! policies share. Training is a fitted sweep: each observed
//! state-action cell is repeatedly set to the mean one-step backup of
//! its samples, which is exactly value iteration on the empirical MDP
//! those samples induce. Everything iterates in key order so a rerun on
//! the same dataset reproduces the table bit for bit.

mod eval;

pub use eval::{evaluate_policy, CollisionReport, QTablePolicy};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

pub use crate::sim::ACTION_LEVELS;

/// Fitted-sweep hyperparameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Discount factor per simulator step.
    pub gamma: f64,
    /// Maximum number of full sweeps over the cells.
    pub sweeps: usize,
    /// Early-stop threshold on the largest cell update.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.95,
            sweeps: 200,
            tolerance: 1e-8,
        }
    }
}

/// Continuous observation the discretizer buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFeatures {
    /// Distance to the nearest tracked pedestrian, if any.
    pub pedestrian_distance: Option<f64>,
    /// Ego speed in m/s.
    pub speed: f64,
    /// Risk-gate flag for the frame.
    pub safety_flag: bool,
}

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("bucket edges must be finite and strictly increasing: {0}")]
    BadEdges(String),
    #[error("sample action {action} cannot be snapped onto the table's action levels")]
    UnknownAction { action: f64 },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("q-table file {path}: {detail}")]
    BadTableFile { path: String, detail: String },
}

/// Maps state features onto dense cell indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDiscretizer {
    distance_edges: Vec<f64>,
    speed_edges: Vec<f64>,
}

impl Default for StateDiscretizer {
    fn default() -> Self {
        // Distance edges bracket the range where crossing pedestrians
        // appear; speeds split creep, urban pace, and the limit.
        StateDiscretizer {
            distance_edges: vec![2.5, 5.0, 8.0, 12.0, 16.0, 20.0, 25.0, 35.0, 50.0],
            speed_edges: vec![0.1, 0.75, 1.5, 2.5, 4.0, 6.0, 7.5],
        }
    }
}

fn check_edges(edges: &[f64]) -> Result<(), PolicyError> {
    if edges.is_empty() {
        return Err(PolicyError::BadEdges("empty edge list".into()));
    }
    for pair in edges.windows(2) {
        if !(pair[0] < pair[1]) || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(PolicyError::BadEdges(format!("{edges:?}")));
        }
    }
    Ok(())
}

impl StateDiscretizer {
    pub fn new(distance_edges: Vec<f64>, speed_edges: Vec<f64>) -> Result<Self, PolicyError> {
        check_edges(&distance_edges)?;
        check_edges(&speed_edges)?;
        Ok(StateDiscretizer {
            distance_edges,
            speed_edges,
        })
    }

    /// Finite distance buckets plus one for "no pedestrian tracked".
    pub fn num_distance_buckets(&self) -> usize {
        self.distance_edges.len() + 2
    }

    pub fn num_speed_buckets(&self) -> usize {
        self.speed_edges.len() + 1
    }

    pub fn num_states(&self) -> usize {
        self.num_distance_buckets() * self.num_speed_buckets() * 2
    }

    /// Bucket of a distance reading; `None` lands in the dedicated last
    /// bucket so "nobody around" never aliases with "far away".
    pub fn distance_bucket(&self, d: Option<f64>) -> usize {
        match d {
            Some(v) => self.distance_edges.partition_point(|e| *e <= v),
            None => self.num_distance_buckets() - 1,
        }
    }

    pub fn speed_bucket(&self, v: f64) -> usize {
        self.speed_edges.partition_point(|e| *e <= v)
    }

    pub fn index(&self, s: &StateFeatures) -> usize {
        let d = self.distance_bucket(s.pedestrian_distance);
        let v = self.speed_bucket(s.speed);
        (d * self.num_speed_buckets() + v) * 2 + s.safety_flag as usize
    }

    /// Human-readable cell label for table dumps.
    pub fn describe(&self, index: usize) -> String {
        let flag = index % 2;
        let rest = index / 2;
        let v = rest % self.num_speed_buckets();
        let d = rest / self.num_speed_buckets();
        let span = |edges: &[f64], b: usize| -> String {
            if b == 0 {
                format!("<{}", edges[0])
            } else if b == edges.len() {
                format!(">={}", edges[b - 1])
            } else {
                format!("[{},{})", edges[b - 1], edges[b])
            }
        };
        let d_label = if d == self.num_distance_buckets() - 1 {
            "none".to_string()
        } else {
            span(&self.distance_edges, d)
        };
        format!("d={} v={} flag={}", d_label, span(&self.speed_edges, v), flag)
    }
}

/// One training transition. `next` is `None` when the episode ended in
/// the successor state, in which case the backup is the reward alone.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub state: StateFeatures,
    pub action: f64,
    pub reward: f64,
    pub next: Option<StateFeatures>,
}

/// Sparse action-value table over discretized cells. Only observed
/// state-action pairs carry entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    discretizer: StateDiscretizer,
    actions: Vec<f64>,
    q: BTreeMap<(usize, usize), f64>,
    samples: BTreeMap<(usize, usize), usize>,
}

impl QTable {
    pub fn new(discretizer: StateDiscretizer, actions: Vec<f64>) -> Self {
        QTable {
            discretizer,
            actions,
            q: BTreeMap::new(),
            samples: BTreeMap::new(),
        }
    }

    pub fn discretizer(&self) -> &StateDiscretizer {
        &self.discretizer
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn num_entries(&self) -> usize {
        self.q.len()
    }

    pub fn entry(&self, state_index: usize, action_index: usize) -> Option<f64> {
        self.q.get(&(state_index, action_index)).copied()
    }

    /// Greatest value among observed actions in the cell.
    pub fn state_value(&self, state_index: usize) -> Option<f64> {
        self.q
            .range((state_index, 0)..(state_index, self.actions.len()))
            .map(|(_, &v)| v)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Greedy action over the observed entries of the cell; coasts (0.0)
    /// in cells the data never visited. Ties break toward the lowest
    /// action level, i.e. toward braking.
    pub fn greedy_action(&self, s: &StateFeatures) -> f64 {
        let si = self.discretizer.index(s);
        let mut best: Option<(f64, usize)> = None;
        for (&(_, ai), &v) in self.q.range((si, 0)..(si, self.actions.len())) {
            match best {
                Some((bv, _)) if v <= bv => {}
                _ => best = Some((v, ai)),
            }
        }
        best.map(|(_, ai)| self.actions[ai]).unwrap_or(0.0)
    }

    /// Writes the table as CSV with `#` metadata lines carrying the
    /// discretizer and action set.
    pub fn save_csv(&self, path: &Path) -> Result<(), PolicyError> {
        self.save_csv_with_comments(path, &[])
    }

    /// `save_csv` plus caller-supplied comment lines (written as
    /// `# key: value`) after the schema line. The loader ignores comment
    /// keys it does not recognize, so callers can stamp provenance such
    /// as the effective config into the file.
    pub fn save_csv_with_comments(
        &self,
        path: &Path,
        comments: &[(String, String)],
    ) -> Result<(), PolicyError> {
        let mut out = String::new();
        out.push_str("# q-table schema 1\n");
        for (key, value) in comments {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out.push_str(&format!(
            "# actions: {}\n",
            serde_json::to_string(&self.actions).expect("plain floats")
        ));
        out.push_str(&format!(
            "# distance_edges: {}\n",
            serde_json::to_string(&self.discretizer.distance_edges).expect("plain floats")
        ));
        out.push_str(&format!(
            "# speed_edges: {}\n",
            serde_json::to_string(&self.discretizer.speed_edges).expect("plain floats")
        ));
        out.push_str("state_index,action_index,action,q,samples,cell\n");
        for (&(si, ai), &v) in &self.q {
            let n = self.samples.get(&(si, ai)).copied().unwrap_or(0);
            out.push_str(&format!(
                "{si},{ai},{},{},{n},\"{}\"\n",
                self.actions[ai],
                v,
                self.discretizer.describe(si)
            ));
        }
        fs::write(path, out).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load_csv(path: &Path) -> Result<Self, PolicyError> {
        let body = fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let bad = |detail: String| PolicyError::BadTableFile {
            path: path.display().to_string(),
            detail,
        };
        let mut actions: Option<Vec<f64>> = None;
        let mut distance_edges: Option<Vec<f64>> = None;
        let mut speed_edges: Option<Vec<f64>> = None;
        let mut q = BTreeMap::new();
        let mut samples = BTreeMap::new();
        for (lineno, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("state_index,") {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                for (key, slot) in [
                    ("actions:", &mut actions),
                    ("distance_edges:", &mut distance_edges),
                    ("speed_edges:", &mut speed_edges),
                ] {
                    if let Some(payload) = rest.strip_prefix(key) {
                        *slot = Some(
                            serde_json::from_str(payload.trim())
                                .map_err(|e| bad(format!("line {}: {e}", lineno + 1)))?,
                        );
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.splitn(6, ',').collect();
            if fields.len() < 5 {
                return Err(bad(format!("line {}: too few fields", lineno + 1)));
            }
            let parse = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|e| bad(format!("line {}: bad {what}: {e}", lineno + 1)))
            };
            let si = parse(fields[0], "state index")? as usize;
            let ai = parse(fields[1], "action index")? as usize;
            q.insert((si, ai), parse(fields[3], "q value")?);
            samples.insert((si, ai), parse(fields[4], "sample count")? as usize);
        }
        let actions = actions.ok_or_else(|| bad("missing actions metadata".into()))?;
        let discretizer = StateDiscretizer::new(
            distance_edges.ok_or_else(|| bad("missing distance_edges metadata".into()))?,
            speed_edges.ok_or_else(|| bad("missing speed_edges metadata".into()))?,
        )?;
        Ok(QTable {
            discretizer,
            actions,
            q,
            samples,
        })
    }
}

/// Index of the level closest to a logged action; ties go to the lower
/// (more braking) level. Scripted controllers log continuous actions,
/// so training snaps each one onto the table's discrete axis.
fn nearest_action(actions: &[f64], action: f64) -> Result<usize, PolicyError> {
    if actions.is_empty() || !action.is_finite() {
        return Err(PolicyError::UnknownAction { action });
    }
    let mut best = 0;
    for (i, a) in actions.iter().enumerate().skip(1) {
        if (a - action).abs() < (actions[best] - action).abs() {
            best = i;
        }
    }
    Ok(best)
}

/// Fits the table to the samples by synchronous mean backups until the
/// largest update drops under the tolerance or the sweep budget runs out.
pub fn fit_q(
    samples: &[Sample],
    discretizer: StateDiscretizer,
    actions: &[f64],
    cfg: &TrainConfig,
) -> Result<QTable, PolicyError> {
    // Group transitions by cell, resolving indices once.
    let mut groups: BTreeMap<(usize, usize), Vec<(f64, Option<usize>)>> = BTreeMap::new();
    for s in samples {
        let ai = nearest_action(actions, s.action)?;
        let si = discretizer.index(&s.state);
        let ni = s.next.as_ref().map(|n| discretizer.index(n));
        groups.entry((si, ai)).or_default().push((s.reward, ni));
    }

    let mut q: BTreeMap<(usize, usize), f64> = groups.keys().map(|&k| (k, 0.0)).collect();
    let mut values: BTreeMap<usize, f64> = BTreeMap::new();
    for _ in 0..cfg.sweeps {
        // State values from the previous iterate (synchronous update).
        values.clear();
        for (&(si, _), &v) in &q {
            values
                .entry(si)
                .and_modify(|best| *best = best.max(v))
                .or_insert(v);
        }
        let mut delta: f64 = 0.0;
        for (key, trans) in &groups {
            let sum: f64 = trans
                .iter()
                .map(|&(r, ni)| {
                    // Never-observed successors back up as zero value.
                    let v_next = ni.and_then(|i| values.get(&i)).copied().unwrap_or(0.0);
                    r + cfg.gamma * v_next
                })
                .sum();
            let target = sum / trans.len() as f64;
            let slot = q.get_mut(key).expect("group key present");
            delta = delta.max((target - *slot).abs());
            *slot = target;
        }
        if delta < cfg.tolerance {
            break;
        }
    }

    let samples_per = groups.iter().map(|(&k, v)| (k, v.len())).collect();
    Ok(QTable {
        discretizer,
        actions: actions.to_vec(),
        q,
        samples: samples_per,
    })
}

/// Converts dataset rows into fit inputs. Done transitions drop their
/// successor so nothing bootstraps past an episode end.
pub fn samples_from_transitions(transitions: &[crate::pipeline::Transition]) -> Vec<Sample> {
    transitions
        .iter()
        .map(|t| Sample {
            state: t.state,
            action: t.action,
            reward: t.reward,
            next: (!t.done).then_some(t.next_state),
        })
        .collect()
}

/// Builds fit inputs straight from consecutive labeled frames. The
/// reward of a transition is the one observed on arrival, i.e. the next
/// frame's label; terminal frames start no transition of their own.
pub fn samples_from_records(records: &[crate::pipeline::FrameRecord]) -> Vec<Sample> {
    samples_from_transitions(&crate::pipeline::transitions_from_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::FrameRecord;
    use crate::reward::RewardBreakdown;
    use crate::risk::RiskAssessment;

    fn feat(d: Option<f64>, v: f64, flag: bool) -> StateFeatures {
        StateFeatures {
            pedestrian_distance: d,
            speed: v,
            safety_flag: flag,
        }
    }

    fn record(
        episode_id: usize,
        frame_index: usize,
        speed: f64,
        action: f64,
        total: f64,
        terminal: bool,
        flag: bool,
    ) -> FrameRecord {
        FrameRecord {
            episode_id,
            frame_index,
            t: frame_index as f64 * 0.1,
            speed,
            accel: 0.0,
            action,
            collided: false,
            terminal,
            distance: Some(30.0),
            ground_truth_distance: Some(30.0),
            blob_count: 0,
            risk: RiskAssessment {
                f_p: 0.0,
                f_c: 0.0,
                f_h: 0.0,
                f_t: 0.0,
                probability: 0.0,
                c_t: flag,
                pedestrian_detected: false,
                pedestrian_on_road: false,
                crossing_detected: false,
                crossing_occluded: false,
            },
            reward: RewardBreakdown {
                safe: 0.0,
                efficient: total,
                smooth: 0.0,
                total,
            },
        }
    }

    #[test]
    fn distance_buckets_cover_the_line_and_reserve_none() {
        let d = StateDiscretizer::default();
        assert_eq!(d.num_distance_buckets(), 11);
        assert_eq!(d.num_speed_buckets(), 8);
        assert_eq!(d.num_states(), 176);
        assert_eq!(d.distance_bucket(Some(0.0)), 0);
        assert_eq!(d.distance_bucket(Some(2.4999)), 0);
        // Edges belong to the upper bucket.
        assert_eq!(d.distance_bucket(Some(2.5)), 1);
        assert_eq!(d.distance_bucket(Some(49.99)), 8);
        assert_eq!(d.distance_bucket(Some(50.0)), 9);
        assert_eq!(d.distance_bucket(Some(500.0)), 9);
        assert_eq!(d.distance_bucket(None), 10);
        assert_eq!(d.speed_bucket(0.0), 0);
        assert_eq!(d.speed_bucket(0.1), 1);
        assert_eq!(d.speed_bucket(8.33), 7);
    }

    #[test]
    fn state_indices_are_a_bijection() {
        let d = StateDiscretizer::default();
        let mut seen = vec![false; d.num_states()];
        let dists: Vec<Option<f64>> = std::iter::once(None)
            .chain([1.0, 3.0, 6.0, 10.0, 14.0, 18.0, 22.0, 30.0, 40.0, 60.0].map(Some))
            .collect();
        for dist in dists {
            for v in [0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 8.0] {
                for flag in [false, true] {
                    let i = d.index(&feat(dist, v, flag));
                    assert!(i < d.num_states());
                    assert!(!seen[i], "index {i} hit twice");
                    seen[i] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn rejects_unsorted_edges() {
        assert!(StateDiscretizer::new(vec![1.0, 1.0], vec![1.0]).is_err());
        assert!(StateDiscretizer::new(vec![2.0, 1.0], vec![1.0]).is_err());
        assert!(StateDiscretizer::new(vec![], vec![1.0]).is_err());
    }

    #[test]
    fn record_windows_become_arrival_rewarded_transitions() {
        // Episode 3: three frames; episode 4: two frames. Rewards are
        // distinct so the arrival attribution is visible.
        let records = vec![
            record(3, 0, 1.0, 1.0, 10.0, false, false),
            record(3, 1, 2.0, 0.5, 20.0, false, true),
            record(3, 2, 3.0, 0.0, 30.0, true, false),
            record(4, 0, 4.0, -1.0, 40.0, false, false),
            record(4, 1, 5.0, 0.0, 50.0, true, false),
        ];
        let samples = samples_from_records(&records);
        assert_eq!(samples.len(), 3);

        // First transition carries the second frame's reward and state.
        assert_eq!(samples[0].action, 1.0);
        assert_eq!(samples[0].reward, 20.0);
        assert_eq!(samples[0].state, feat(Some(30.0), 1.0, false));
        assert_eq!(samples[0].next, Some(feat(Some(30.0), 2.0, true)));

        // Second transition arrives at a terminal frame: no bootstrap.
        assert_eq!(samples[1].reward, 30.0);
        assert_eq!(samples[1].next, None);

        // The episode boundary emits nothing; episode 4 contributes its
        // own single transition.
        assert_eq!(samples[2].action, -1.0);
        assert_eq!(samples[2].reward, 50.0);
        assert_eq!(samples[2].next, None);
    }

    #[test]
    fn fit_matches_a_hand_solved_two_state_chain() {
        // s0 --(+0.0)--> s1 --(+1.0)--> terminal, single action 0.0.
        // Q(s1) = 1, Q(s0) = gamma * 1.
        let d = StateDiscretizer::default();
        let s0 = feat(None, 0.0, false);
        let s1 = feat(None, 1.0, false);
        let samples = vec![
            Sample {
                state: s0,
                action: 0.0,
                reward: 0.0,
                next: Some(s1),
            },
            Sample {
                state: s1,
                action: 0.0,
                reward: 1.0,
                next: None,
            },
        ];
        let cfg = TrainConfig {
            gamma: 0.5,
            ..TrainConfig::default()
        };
        let table = fit_q(&samples, d.clone(), &ACTION_LEVELS, &cfg).unwrap();
        let q0 = table.entry(d.index(&s0), 2).unwrap();
        let q1 = table.entry(d.index(&s1), 2).unwrap();
        assert!((q1 - 1.0).abs() < 1e-12);
        assert!((q0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_backup_averages_mixed_outcomes() {
        // One cell with two terminal samples: rewards 1 and 3 -> Q = 2.
        let d = StateDiscretizer::default();
        let s = feat(Some(10.0), 2.0, true);
        let samples = vec![
            Sample {
                state: s,
                action: -1.0,
                reward: 1.0,
                next: None,
            },
            Sample {
                state: s,
                action: -1.0,
                reward: 3.0,
                next: None,
            },
        ];
        let table = fit_q(&samples, d.clone(), &ACTION_LEVELS, &TrainConfig::default()).unwrap();
        assert!((table.entry(d.index(&s), 0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_breaks_ties_toward_braking_and_defaults_to_coast() {
        let d = StateDiscretizer::default();
        let s = feat(Some(10.0), 2.0, true);
        let samples = vec![
            Sample {
                state: s,
                action: 0.5,
                reward: 4.0,
                next: None,
            },
            Sample {
                state: s,
                action: -0.5,
                reward: 4.0,
                next: None,
            },
        ];
        let table = fit_q(&samples, d, &ACTION_LEVELS, &TrainConfig::default()).unwrap();
        assert_eq!(table.greedy_action(&s), -0.5);
        // A cell no sample touched coasts.
        assert_eq!(table.greedy_action(&feat(Some(3.0), 7.0, false)), 0.0);
    }

    #[test]
    fn off_level_actions_snap_to_the_nearest_level() {
        let s = feat(Some(10.0), 3.0, false);
        let one = |action: f64, reward: f64| Sample {
            state: s,
            action,
            reward,
            next: None,
        };
        // 0.3 is nearest 0.5; 0.25 ties between 0.0 and 0.5 and takes
        // the lower; -0.8 is nearest -1.
        let samples = vec![one(0.3, 1.0), one(0.25, 2.0), one(-0.8, 3.0)];
        let table = fit_q(
            &samples,
            StateDiscretizer::default(),
            &ACTION_LEVELS,
            &TrainConfig::default(),
        )
        .unwrap();
        let si = table.discretizer().index(&s);
        assert_eq!(table.entry(si, 3), Some(1.0)); // 0.5
        assert_eq!(table.entry(si, 2), Some(2.0)); // 0.0
        assert_eq!(table.entry(si, 0), Some(3.0)); // -1.0
        assert_eq!(table.num_entries(), 3);
    }

    #[test]
    fn non_finite_actions_are_rejected() {
        let samples = vec![Sample {
            state: feat(None, 0.0, false),
            action: f64::NAN,
            reward: 0.0,
            next: None,
        }];
        let err = fit_q(
            &samples,
            StateDiscretizer::default(),
            &ACTION_LEVELS,
            &TrainConfig::default(),
        );
        assert!(matches!(err, Err(PolicyError::UnknownAction { .. })));
    }

    #[test]
    fn fitting_is_deterministic() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut samples = Vec::new();
        for _ in 0..500 {
            let state = feat(
                if rng.gen_bool(0.2) {
                    None
                } else {
                    Some(rng.gen_range(0.0..60.0))
                },
                rng.gen_range(0.0..8.33),
                rng.gen_bool(0.3),
            );
            let next = if rng.gen_bool(0.1) {
                None
            } else {
                Some(feat(
                    Some(rng.gen_range(0.0..60.0)),
                    rng.gen_range(0.0..8.33),
                    rng.gen_bool(0.3),
                ))
            };
            samples.push(Sample {
                state,
                action: ACTION_LEVELS[rng.gen_range(0..5)],
                reward: rng.gen_range(-2.0..2.0),
                next,
            });
        }
        let cfg = TrainConfig::default();
        let a = fit_q(&samples, StateDiscretizer::default(), &ACTION_LEVELS, &cfg).unwrap();
        let b = fit_q(&samples, StateDiscretizer::default(), &ACTION_LEVELS, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip_preserves_the_table() {
        let d = StateDiscretizer::default();
        let samples = vec![
            Sample {
                state: feat(Some(7.0), 1.0, true),
                action: -1.0,
                reward: -0.25,
                next: Some(feat(Some(6.5), 0.7, true)),
            },
            Sample {
                state: feat(Some(6.5), 0.7, true),
                action: -1.0,
                reward: 0.125,
                next: None,
            },
            Sample {
                state: feat(None, 4.0, false),
                action: 1.0,
                reward: 0.4,
                next: None,
            },
        ];
        let table = fit_q(&samples, d, &ACTION_LEVELS, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        table.save_csv(&path).unwrap();
        let loaded = QTable::load_csv(&path).unwrap();
        assert_eq!(loaded, table);
    }

    #[test]
    fn load_rejects_files_without_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "state_index,action_index,action,q,samples,cell\n0,0,-1.0,0.5,3,\"x\"\n").unwrap();
        assert!(matches!(
            QTable::load_csv(&path),
            Err(PolicyError::BadTableFile { .. })
        ));
    }
}
