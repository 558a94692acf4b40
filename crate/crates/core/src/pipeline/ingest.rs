//! Dataset ingestion: reading frame sequences back off disk.
//!
//! Two layouts exist. Simulator episodes are what `save_episode` wrote
//! (manifest, kinematics CSV, class-index frames). Recorded drives carry
//! a bus-signal CSV, color-coded frames, and the palette that decodes
//! them; they have no ground-truth distances, and the action that the
//! learner needs is reconstructed from measured acceleration.

use super::{io_err, PipelineError};
use crate::semantics::{Palette, SemanticMap};
use crate::sim::{EpisodeManifest, EventFlags, SimFrame};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

/// How a dataset directory is organized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetLayout {
    /// Simulator episode: `manifest.json` + `kinematics.csv` + index PNGs.
    Sim,
    /// Recorded drive: `bus_signals.csv` + `palette.json` + color PNGs.
    A2d2,
}

pub fn detect_layout(dir: &Path) -> Result<DatasetLayout, PipelineError> {
    if dir.join("manifest.json").is_file() {
        Ok(DatasetLayout::Sim)
    } else if dir.join("bus_signals.csv").is_file() {
        Ok(DatasetLayout::A2d2)
    } else {
        Err(PipelineError::BadFile {
            path: dir.display().to_string(),
            detail: "no manifest.json or bus_signals.csv found".to_string(),
        })
    }
}

/// An episode read back from disk, ready for labeling.
#[derive(Debug, Clone)]
pub struct LoadedEpisode {
    pub frames: Vec<SimFrame>,
    /// Present for simulator episodes, absent for recorded drives.
    pub manifest: Option<EpisodeManifest>,
}

fn bad_line(path: &Path, line: usize, detail: String) -> PipelineError {
    PipelineError::BadLine {
        path: path.display().to_string(),
        line,
        detail,
    }
}

fn parse_f64(field: &str, name: &str, path: &Path, line: usize) -> Result<f64, PipelineError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| bad_line(path, line, format!("bad {name} value '{field}': {e}")))
}

/// Reads an episode directory produced by `save_episode`.
pub fn load_episode_dir(dir: &Path) -> Result<LoadedEpisode, PipelineError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_body =
        std::fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: EpisodeManifest =
        serde_json::from_str(&manifest_body).map_err(|e| PipelineError::BadFile {
            path: manifest_path.display().to_string(),
            detail: e.to_string(),
        })?;

    let csv_path = dir.join("kinematics.csv");
    let mut reader = csv::Reader::from_path(&csv_path).map_err(|e| PipelineError::BadFile {
        path: csv_path.display().to_string(),
        detail: e.to_string(),
    })?;
    let expected = ["t", "v", "a", "action", "ground_truth_distance", "event"];
    let headers = reader.headers().map_err(|e| PipelineError::BadFile {
        path: csv_path.display().to_string(),
        detail: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(PipelineError::BadFile {
            path: csv_path.display().to_string(),
            detail: format!("unexpected columns {headers:?}"),
        });
    }

    let mut frames = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| bad_line(&csv_path, line, e.to_string()))?;
        if row.len() != expected.len() {
            return Err(bad_line(
                &csv_path,
                line,
                format!("expected {} fields, got {}", expected.len(), row.len()),
            ));
        }
        let gt_field = row[4].trim();
        let ground_truth_distance = if gt_field.is_empty() {
            None
        } else {
            Some(parse_f64(gt_field, "ground_truth_distance", &csv_path, line)?)
        };
        let mut events = EventFlags::default();
        match row[5].trim() {
            "" => {}
            "collision" => events.collision = true,
            "success" => events.success = true,
            "timeout" => events.timeout = true,
            other => {
                return Err(bad_line(&csv_path, line, format!("unknown event '{other}'")));
            }
        }

        let frame_path = dir.join("frames").join(format!("{i:04}.png"));
        let map = SemanticMap::from_index_file(&frame_path)?;
        frames.push(SimFrame {
            t: parse_f64(&row[0], "t", &csv_path, line)?,
            map,
            speed: parse_f64(&row[1], "v", &csv_path, line)?,
            accel: parse_f64(&row[2], "a", &csv_path, line)?,
            action: parse_f64(&row[3], "action", &csv_path, line)?,
            ground_truth_distance,
            events,
        });
    }

    if frames.len() != manifest.frame_count {
        return Err(PipelineError::BadFile {
            path: dir.display().to_string(),
            detail: format!(
                "manifest says {} frames, kinematics.csv has {}",
                manifest.frame_count,
                frames.len()
            ),
        });
    }

    Ok(LoadedEpisode {
        frames,
        manifest: Some(manifest),
    })
}

/// Reads a recorded drive:
///
/// ```text
/// dir/
///   bus_signals.csv      timestamp,speed_mps,accel_mps2
///   palette.json         color to class mapping for the frames
///   frames/*.png         color-coded semantic maps, sorted by name
/// ```
///
/// Frames pair with CSV rows in filename order; the counts must match.
/// Timestamps are rebased so the first frame sits at t = 0, and the
/// action is measured acceleration normalized by `a_max` and clamped to
/// the [-1, 1] command range.
pub fn load_a2d2_dir(dir: &Path, a_max: f64) -> Result<LoadedEpisode, PipelineError> {
    let csv_path = dir.join("bus_signals.csv");
    let file = File::open(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(&csv_path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 {
            if line != "timestamp,speed_mps,accel_mps2" {
                return Err(PipelineError::BadFile {
                    path: csv_path.display().to_string(),
                    detail: format!("unexpected header '{line}'"),
                });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(bad_line(
                &csv_path,
                i + 1,
                format!("expected 3 fields, got {}", fields.len()),
            ));
        }
        rows.push((
            parse_f64(fields[0], "timestamp", &csv_path, i + 1)?,
            parse_f64(fields[1], "speed_mps", &csv_path, i + 1)?,
            parse_f64(fields[2], "accel_mps2", &csv_path, i + 1)?,
        ));
    }

    let palette = Palette::from_file(&dir.join("palette.json"))?;

    let frames_dir = dir.join("frames");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&frames_dir)
        .map_err(|e| io_err(&frames_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "png"))
        .collect();
    paths.sort();

    if paths.len() != rows.len() {
        return Err(PipelineError::BadFile {
            path: dir.display().to_string(),
            detail: format!(
                "bus_signals.csv has {} rows but frames/ has {} images",
                rows.len(),
                paths.len()
            ),
        });
    }

    let t0 = rows.first().map(|r| r.0).unwrap_or(0.0);
    let mut frames = Vec::with_capacity(rows.len());
    for (path, (ts, speed, accel)) in paths.iter().zip(rows) {
        let map = SemanticMap::from_color_file(path, &palette)?;
        frames.push(SimFrame {
            t: ts - t0,
            map,
            speed,
            accel,
            action: (accel / a_max).clamp(-1.0, 1.0),
            ground_truth_distance: None,
            events: EventFlags::default(),
        });
    }

    Ok(LoadedEpisode {
        frames,
        manifest: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CameraIntrinsics;
    use crate::semantics::ClassId;
    use crate::sim::{
        run_episode, save_episode, Outcome, RenderConfig, ScenarioConfig, ScriptedKind,
        ScriptedPolicy,
    };

    #[test]
    fn saved_episode_loads_back_exactly() {
        let cfg = ScenarioConfig {
            timeout: 3.0,
            ..ScenarioConfig::default()
        };
        let cam = CameraIntrinsics::default();
        let rc = RenderConfig::default();
        let mut policy = ScriptedPolicy::new(ScriptedKind::Aggressive);
        let log = run_episode(&cfg, &cam, &rc, &mut policy, 0);
        assert_eq!(log.outcome, Outcome::Timeout);

        let dir = tempfile::tempdir().unwrap();
        save_episode(&log, dir.path()).unwrap();
        assert_eq!(detect_layout(dir.path()).unwrap(), DatasetLayout::Sim);

        let loaded = load_episode_dir(dir.path()).unwrap();
        assert_eq!(loaded.frames.len(), log.frames.len());
        let manifest = loaded.manifest.expect("manifest");
        assert_eq!(manifest.outcome, Outcome::Timeout);
        assert_eq!(manifest.frame_count, log.frames.len());

        for (got, want) in loaded.frames.iter().zip(&log.frames) {
            assert_eq!(got.map, want.map);
            assert_eq!(got.events, want.events);
            // Kinematics columns round through fixed-precision text.
            assert!((got.t - want.t).abs() < 1e-3);
            assert!((got.speed - want.speed).abs() < 1e-5);
            assert!((got.accel - want.accel).abs() < 1e-5);
            assert!((got.action - want.action).abs() < 1e-3);
            match (got.ground_truth_distance, want.ground_truth_distance) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-5),
                other => panic!("ground truth mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn frame_count_mismatch_is_an_error() {
        let cfg = ScenarioConfig {
            timeout: 1.0,
            ..ScenarioConfig::default()
        };
        let mut policy = ScriptedPolicy::new(ScriptedKind::Aggressive);
        let log = run_episode(
            &cfg,
            &CameraIntrinsics::default(),
            &RenderConfig::default(),
            &mut policy,
            0,
        );
        let dir = tempfile::tempdir().unwrap();
        save_episode(&log, dir.path()).unwrap();
        // Drop the last frame image; the CSV row now has no image, which
        // surfaces as a load failure rather than a silently short episode.
        let last = dir
            .path()
            .join("frames")
            .join(format!("{:04}.png", log.frames.len() - 1));
        std::fs::remove_file(last).unwrap();
        assert!(load_episode_dir(dir.path()).is_err());
    }

    const PALETTE_JSON: &str = r##"[
        {"color": "#804080", "class": 7, "name": "road"},
        {"color": "#F423E8", "class": 8, "name": "sidewalk"},
        {"color": "#DC143C", "class": 4, "name": "pedestrian"}
    ]"##;

    fn write_a2d2_fixture(dir: &Path, rows: &[(f64, f64, f64)], frame_count: usize) {
        let mut csv = String::from("timestamp,speed_mps,accel_mps2\n");
        for (ts, v, a) in rows {
            csv.push_str(&format!("{ts},{v},{a}\n"));
        }
        std::fs::write(dir.join("bus_signals.csv"), csv).unwrap();
        std::fs::write(dir.join("palette.json"), PALETTE_JSON).unwrap();
        let frames = dir.join("frames");
        std::fs::create_dir_all(&frames).unwrap();
        for i in 0..frame_count {
            // 4x4 all-road color image.
            let img = image::RgbImage::from_pixel(4, 4, image::Rgb([0x80, 0x40, 0x80]));
            img.save(frames.join(format!("{i:06}.png"))).unwrap();
        }
    }

    #[test]
    fn recorded_drive_loads_with_rebased_time_and_derived_actions() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [
            (1000.0, 5.0, 0.0),
            (1000.1, 5.2, 2.0),
            (1000.2, 5.1, -9.0),
        ];
        write_a2d2_fixture(dir.path(), &rows, 3);
        assert_eq!(detect_layout(dir.path()).unwrap(), DatasetLayout::A2d2);

        let loaded = load_a2d2_dir(dir.path(), 3.0).unwrap();
        assert!(loaded.manifest.is_none());
        assert_eq!(loaded.frames.len(), 3);
        assert!((loaded.frames[0].t - 0.0).abs() < 1e-9);
        assert!((loaded.frames[1].t - 0.1).abs() < 1e-9);
        assert!((loaded.frames[2].t - 0.2).abs() < 1e-9);
        assert_eq!(loaded.frames[0].action, 0.0);
        assert!((loaded.frames[1].action - 2.0 / 3.0).abs() < 1e-12);
        // Hard braking saturates at the command floor.
        assert_eq!(loaded.frames[2].action, -1.0);
        assert_eq!(loaded.frames[0].ground_truth_distance, None);
        assert_eq!(loaded.frames[0].map.get(0, 0), ClassId::ROAD);
        assert_eq!(loaded.frames[0].map.get(3, 3), ClassId::ROAD);
    }

    #[test]
    fn recorded_drive_row_and_frame_counts_must_match() {
        let dir = tempfile::tempdir().unwrap();
        write_a2d2_fixture(dir.path(), &[(0.0, 1.0, 0.0), (0.1, 1.0, 0.0)], 3);
        assert!(load_a2d2_dir(dir.path(), 3.0).is_err());
    }

    #[test]
    fn unrecognized_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(detect_layout(dir.path()).is_err());
    }
}
