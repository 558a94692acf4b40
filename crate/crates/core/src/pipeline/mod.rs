//! Batch labeling: semantic frames plus kinematics in, reward-annotated
//! records out.
//!
//! The analyzer owns the pedestrian memory, so frames must be fed in
//! episode order; `label_frames` resets it at each episode boundary.
//! Labeled records serialize to JSON lines with a typed header so a
//! relabeling run can be diffed byte for byte against an earlier one.

mod ingest;

pub use ingest::{detect_layout, load_a2d2_dir, load_episode_dir, DatasetLayout, LoadedEpisode};

use crate::config::{DistanceSource, PipelineConfig};
use crate::geometry::{nearest_pedestrian_distance, CameraIntrinsics};
use crate::policy::StateFeatures;
use crate::reward::{reward, FrameKinematics, RewardBreakdown, RewardParams};
use crate::risk::{
    assess_frame_with_blobs, pedestrian_blobs, PedMemory, RiskAssessment, RiskConfig,
    SemanticsConfig,
};
use crate::semantics::{SemanticMap, SemanticsError};
use crate::sim::SimFrame;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    BadLine {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("{path}: {detail}")]
    BadFile { path: String, detail: String },
    #[error("label sets differ in length: model has {model}, human has {human}")]
    LengthMismatch { model: usize, human: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

fn io_err(path: &Path, source: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Per-frame output of the perception stage.
#[derive(Debug, Clone, Copy)]
pub struct FrameAnalysis {
    pub assessment: RiskAssessment,
    /// Pinhole distance to the nearest accepted pedestrian blob.
    pub pinhole_distance: Option<f64>,
    pub blob_count: usize,
}

/// Stateful frame scorer: blob extraction, risk factors, and pinhole
/// ranging against one shared pedestrian memory.
#[derive(Debug, Clone)]
pub struct FrameAnalyzer {
    risk: RiskConfig,
    sem: SemanticsConfig,
    cam: CameraIntrinsics,
    memory: PedMemory,
}

impl FrameAnalyzer {
    pub fn new(risk: RiskConfig, sem: SemanticsConfig, cam: CameraIntrinsics) -> Self {
        let memory = PedMemory::new(risk.memory_length);
        FrameAnalyzer {
            risk,
            sem,
            cam,
            memory,
        }
    }

    pub fn from_config(cfg: &PipelineConfig) -> Self {
        FrameAnalyzer::new(
            cfg.risk.clone(),
            cfg.semantics.clone(),
            cfg.camera.intrinsics(),
        )
    }

    /// Clears the pedestrian memory. Call between episodes.
    pub fn reset(&mut self) {
        self.memory = PedMemory::new(self.risk.memory_length);
    }

    pub fn analyze(&mut self, map: &SemanticMap) -> FrameAnalysis {
        let blobs = pedestrian_blobs(map, &self.sem);
        let assessment =
            assess_frame_with_blobs(&blobs, map, &mut self.memory, &self.risk, &self.sem);
        let pinhole_distance = nearest_pedestrian_distance(&blobs, &self.cam);
        FrameAnalysis {
            assessment,
            pinhole_distance,
            blob_count: blobs.len(),
        }
    }
}

/// One fully labeled frame: kinematics, risk verdict, and reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub episode_id: usize,
    pub frame_index: usize,
    pub t: f64,
    pub speed: f64,
    pub accel: f64,
    pub action: f64,
    pub collided: bool,
    /// Last frame of its episode; no transition leaves it.
    pub terminal: bool,
    /// Distance fed to the reward (source recorded in the run manifest).
    pub distance: Option<f64>,
    pub ground_truth_distance: Option<f64>,
    pub blob_count: usize,
    pub risk: RiskAssessment,
    pub reward: RewardBreakdown,
}

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Labels one episode's frames in order. `source` picks the distance the
/// reward sees; `Auto` resolves to ground truth when the frames carry it
/// (simulator rollouts) and the pinhole estimate otherwise (ingested
/// logs).
pub fn label_frames(
    frames: &[SimFrame],
    analyzer: &mut FrameAnalyzer,
    params: &RewardParams,
    source: DistanceSource,
    episode_id: usize,
) -> Vec<FrameRecord> {
    analyzer.reset();
    let has_gt = frames.iter().any(|f| f.ground_truth_distance.is_some());
    let source = source.resolve(has_gt);
    let last = frames.len().saturating_sub(1);
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let analysis = analyzer.analyze(&frame.map);
            let distance = match source {
                DistanceSource::Pinhole => analysis.pinhole_distance,
                _ => frame.ground_truth_distance,
            };
            let kin = FrameKinematics {
                speed: frame.speed,
                accel: frame.accel,
                collided: frame.events.collision,
            };
            FrameRecord {
                episode_id,
                frame_index: i,
                t: frame.t,
                speed: frame.speed,
                accel: frame.accel,
                action: frame.action,
                collided: frame.events.collision,
                terminal: frame.events.any() || i == last,
                distance,
                ground_truth_distance: frame.ground_truth_distance,
                blob_count: analysis.blob_count,
                risk: analysis.assessment,
                reward: reward(&kin, &analysis.assessment, distance, params),
            }
        })
        .collect()
}

/// One dataset row: an (s, a, r, s') tuple with episode bookkeeping.
/// The reward is the one labeled on the arrival frame; `done` marks
/// arrivals that end their episode, which the learner must not
/// bootstrap past.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub episode_id: usize,
    pub state_ref: usize,
    pub next_state_ref: usize,
    pub action: f64,
    pub reward: f64,
    pub done: bool,
    pub state: StateFeatures,
    pub next_state: StateFeatures,
}

/// Pairs consecutive records of each episode into transitions. Terminal
/// frames start no transition, so an n-frame episode yields n - 1 rows.
pub fn transitions_from_records(records: &[FrameRecord]) -> Vec<Transition> {
    let features = |r: &FrameRecord| StateFeatures {
        pedestrian_distance: r.distance,
        speed: r.speed,
        safety_flag: r.risk.c_t,
    };
    records
        .windows(2)
        .filter(|w| w[0].episode_id == w[1].episode_id && !w[0].terminal)
        .map(|w| Transition {
            episode_id: w[0].episode_id,
            state_ref: w[0].frame_index,
            next_state_ref: w[1].frame_index,
            action: w[0].action,
            reward: w[1].reward.total,
            done: w[1].terminal,
            state: features(&w[0]),
            next_state: features(&w[1]),
        })
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct StreamHeader {
    kind: String,
    schema_version: u32,
}

const RECORDS_KIND: &str = "frame_records";
const TRANSITIONS_KIND: &str = "transitions";
const AUDIT_KIND: &str = "risk_audit";

/// Writes items as JSON lines under a typed header. Identical inputs
/// produce identical bytes; nothing run-dependent is written.
fn export_jsonl<T: Serialize>(path: &Path, kind: &str, items: &[T]) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let header = StreamHeader {
        kind: kind.to_string(),
        schema_version: DATASET_SCHEMA_VERSION,
    };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header")).map_err(|e| io_err(path, e))?;
    for item in items {
        writeln!(w, "{}", serde_json::to_string(item).expect("row")).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn import_jsonl<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut items = Vec::new();
    let mut saw_header = false;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |detail: String| PipelineError::BadLine {
            path: path.display().to_string(),
            line: i + 1,
            detail,
        };
        if !saw_header {
            let header: StreamHeader =
                serde_json::from_str(&line).map_err(|e| bad(format!("bad header: {e}")))?;
            if header.kind != kind {
                return Err(bad(format!(
                    "expected kind '{kind}', got '{}'",
                    header.kind
                )));
            }
            if header.schema_version != DATASET_SCHEMA_VERSION {
                return Err(bad(format!(
                    "unsupported schema version {}",
                    header.schema_version
                )));
            }
            saw_header = true;
            continue;
        }
        items.push(serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?);
    }
    if !saw_header {
        return Err(PipelineError::BadFile {
            path: path.display().to_string(),
            detail: "empty file, expected a header line".to_string(),
        });
    }
    Ok(items)
}

/// Reads just the header kind of a JSONL artifact, for format dispatch.
pub fn peek_kind(path: &Path) -> Result<String, PipelineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let header: StreamHeader =
            serde_json::from_str(&line).map_err(|e| PipelineError::BadLine {
                path: path.display().to_string(),
                line: i + 1,
                detail: format!("bad header: {e}"),
            })?;
        return Ok(header.kind);
    }
    Err(PipelineError::BadFile {
        path: path.display().to_string(),
        detail: "empty file, expected a header line".to_string(),
    })
}

pub fn export_records(path: &Path, records: &[FrameRecord]) -> Result<(), PipelineError> {
    export_jsonl(path, RECORDS_KIND, records)
}

pub fn import_records(path: &Path) -> Result<Vec<FrameRecord>, PipelineError> {
    import_jsonl(path, RECORDS_KIND)
}

pub fn export_transitions(path: &Path, transitions: &[Transition]) -> Result<(), PipelineError> {
    export_jsonl(path, TRANSITIONS_KIND, transitions)
}

pub fn import_transitions(path: &Path) -> Result<Vec<Transition>, PipelineError> {
    import_jsonl(path, TRANSITIONS_KIND)
}

/// Risk-only view of a record, exported for manual review of the safety
/// verdicts without the reward columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub episode_id: usize,
    pub frame_index: usize,
    pub t: f64,
    pub f_p: f64,
    pub f_c: f64,
    pub f_h: f64,
    pub f_t: f64,
    pub probability: f64,
    pub c_t: bool,
    pub pedestrian_detected: bool,
    pub pedestrian_on_road: bool,
    pub crossing_detected: bool,
    pub crossing_occluded: bool,
    pub distance: Option<f64>,
}

impl AuditRecord {
    pub fn from_record(r: &FrameRecord) -> AuditRecord {
        AuditRecord {
            episode_id: r.episode_id,
            frame_index: r.frame_index,
            t: r.t,
            f_p: r.risk.f_p,
            f_c: r.risk.f_c,
            f_h: r.risk.f_h,
            f_t: r.risk.f_t,
            probability: r.risk.probability,
            c_t: r.risk.c_t,
            pedestrian_detected: r.risk.pedestrian_detected,
            pedestrian_on_road: r.risk.pedestrian_on_road,
            crossing_detected: r.risk.crossing_detected,
            crossing_occluded: r.risk.crossing_occluded,
            distance: r.distance,
        }
    }
}

pub fn export_audit(path: &Path, records: &[FrameRecord]) -> Result<(), PipelineError> {
    let audits: Vec<AuditRecord> = records.iter().map(AuditRecord::from_record).collect();
    export_jsonl(path, AUDIT_KIND, &audits)
}

pub fn import_audit(path: &Path) -> Result<Vec<AuditRecord>, PipelineError> {
    import_jsonl(path, AUDIT_KIND)
}

/// Agreement between model safety flags and a human reference, scored on
/// the frames the human marked unsafe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub frames: usize,
    pub human_unsafe: usize,
    pub model_unsafe: usize,
    pub matching_unsafe: usize,
    /// Share of human-unsafe frames the model also flagged, in percent.
    /// Reads 100 when the human marked nothing unsafe.
    pub agreement_pct: f64,
}

pub fn compare_safety_labels(
    model: &[bool],
    human: &[bool],
) -> Result<ComparisonReport, PipelineError> {
    if model.len() != human.len() {
        return Err(PipelineError::LengthMismatch {
            model: model.len(),
            human: human.len(),
        });
    }
    let human_unsafe = human.iter().filter(|b| **b).count();
    let model_unsafe = model.iter().filter(|b| **b).count();
    let matching_unsafe = model
        .iter()
        .zip(human)
        .filter(|(m, h)| **m && **h)
        .count();
    let agreement_pct = if human_unsafe == 0 {
        100.0
    } else {
        matching_unsafe as f64 / human_unsafe as f64 * 100.0
    };
    Ok(ComparisonReport {
        frames: model.len(),
        human_unsafe,
        model_unsafe,
        matching_unsafe,
        agreement_pct,
    })
}
