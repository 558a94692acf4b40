//! Command-line front end: simulation, labeling, training, evaluation,
//! episode inspection, and label comparison behind one binary.
//!
//! Configuration precedence is file, then `--set` overrides, then
//! dedicated flags. Every command that writes a directory drops a
//! `run.json` there echoing the effective configuration, so outputs
//! always record what produced them. Exit codes: 0 ok, 1 runtime
//! failure, 2 usage error.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pedcross::config::{DistanceSource, PipelineConfig};
use pedcross::pipeline::{
    compare_safety_labels, detect_layout, export_audit, export_transitions, import_audit,
    import_records, import_transitions, label_frames, peek_kind, transitions_from_records,
    DatasetLayout, FrameAnalyzer, FrameRecord, LoadedEpisode,
};
use pedcross::policy::{
    evaluate_policy, fit_q, samples_from_records, samples_from_transitions, CollisionReport,
    QTable, QTablePolicy, StateDiscretizer, ACTION_LEVELS,
};
use pedcross::reward::label_uds;
use pedcross::sim::{
    collect_episodes, save_episode, LongitudinalPolicy, OcclusionPreset, Outcome, ScriptedKind,
    ScriptedPolicy, TrafficDensity,
};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "pedcross",
    version,
    about = "Risk-gated reward labeling and tabular offline RL for occluded pedestrian crossings"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Dotted-path config override, e.g. --set risk.threshold=0.8.
    /// Repeatable; applies on top of the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE", value_parser = parse_key_val)]
    set: Vec<(String, String)>,

    /// Scenario seed; wins over the file and --set.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

fn parse_key_val(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))
}

#[derive(Subcommand)]
enum Command {
    /// Roll out a scripted policy and save episode directories.
    Simulate {
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long)]
        episodes: usize,
        #[arg(long, value_enum)]
        density: Option<DensityArg>,
        #[arg(long, value_enum)]
        occlusion: Option<OcclusionArg>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Label episode frames with risk-gated rewards into a dataset.
    Label {
        /// One episode directory, or a directory of episode directories.
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        /// Distance source for the speed penalty; defaults to the config.
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        /// gen = risk-gated rewards; uds = all-zero ablation labels.
        #[arg(long, value_enum, default_value_t = LabelerArg::Gen)]
        labeler: LabelerArg,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Fit the tabular policy to a labeled dataset.
    Train {
        /// dataset.jsonl from `label` (transitions or frame records).
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Drive a policy in the simulator and tally outcomes.
    Eval {
        #[arg(long, value_enum, default_value_t = EvalPolicyArg::Table)]
        policy: EvalPolicyArg,
        /// qtable.csv produced by `train`; required for --policy table.
        #[arg(long, value_name = "FILE", required_if_eq("policy", "table"))]
        table: Option<PathBuf>,
        #[arg(long)]
        episodes: usize,
        #[arg(long, value_enum)]
        density: Option<DensityArg>,
        #[arg(long, value_enum)]
        occlusion: Option<OcclusionArg>,
        /// Distance source the table policy perceives with.
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Re-analyze one episode and print its per-frame risk/reward trace.
    Inspect {
        #[arg(long = "in", value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_enum)]
        source: Option<SourceArg>,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score model safety flags against a human reference.
    Compare {
        /// audit.jsonl or a JSON array of 0/1 or booleans.
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Same formats as --model.
        #[arg(long, value_name = "FILE")]
        human: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Behavioral,
    Random,
    Aggressive,
    Conservative,
}

impl From<PolicyArg> for ScriptedKind {
    fn from(p: PolicyArg) -> ScriptedKind {
        match p {
            PolicyArg::Behavioral => ScriptedKind::Behavioral,
            PolicyArg::Random => ScriptedKind::Random,
            PolicyArg::Aggressive => ScriptedKind::Aggressive,
            PolicyArg::Conservative => ScriptedKind::Conservative,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum EvalPolicyArg {
    Table,
    Behavioral,
    Random,
    Aggressive,
    Conservative,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Low,
    Medium,
    High,
}

impl From<DensityArg> for TrafficDensity {
    fn from(d: DensityArg) -> TrafficDensity {
        match d {
            DensityArg::Low => TrafficDensity::Low,
            DensityArg::Medium => TrafficDensity::Medium,
            DensityArg::High => TrafficDensity::High,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OcclusionArg {
    None,
    Partial,
    Full,
}

impl From<OcclusionArg> for OcclusionPreset {
    fn from(o: OcclusionArg) -> OcclusionPreset {
        match o {
            OcclusionArg::None => OcclusionPreset::None,
            OcclusionArg::Partial => OcclusionPreset::Partial,
            OcclusionArg::Full => OcclusionPreset::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Auto,
    Pinhole,
    #[value(alias = "ground_truth")]
    GroundTruth,
}

impl From<SourceArg> for DistanceSource {
    fn from(s: SourceArg) -> DistanceSource {
        match s {
            SourceArg::Auto => DistanceSource::Auto,
            SourceArg::Pinhole => DistanceSource::Pinhole,
            SourceArg::GroundTruth => DistanceSource::GroundTruth,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum LabelerArg {
    Gen,
    Uds,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    cfg.apply_overrides(&cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }

    match cli.command {
        Command::Simulate {
            policy,
            episodes,
            density,
            occlusion,
            out,
        } => {
            apply_scenario_flags(&mut cfg, density, occlusion);
            cmd_simulate(&cfg, policy.into(), episodes, &out)
        }
        Command::Label {
            input,
            source,
            labeler,
            out,
        } => {
            let source = source.map(Into::into).unwrap_or(cfg.camera.distance_source);
            cmd_label(&cfg, &input, source, labeler, &out)
        }
        Command::Train { data, out } => cmd_train(&cfg, &data, &out),
        Command::Eval {
            policy,
            table,
            episodes,
            density,
            occlusion,
            source,
            out,
        } => {
            apply_scenario_flags(&mut cfg, density, occlusion);
            let source = source.map(Into::into).unwrap_or(cfg.camera.distance_source);
            cmd_eval(&cfg, policy, table.as_deref(), episodes, source, out.as_deref())
        }
        Command::Inspect { input, source, out } => {
            let source = source.map(Into::into).unwrap_or(cfg.camera.distance_source);
            cmd_inspect(&cfg, &input, source, out.as_deref())
        }
        Command::Compare { model, human, out } => cmd_compare(&cfg, &model, &human, out.as_deref()),
    }
}

fn apply_scenario_flags(
    cfg: &mut PipelineConfig,
    density: Option<DensityArg>,
    occlusion: Option<OcclusionArg>,
) {
    if let Some(d) = density {
        cfg.scenario.density = d.into();
    }
    if let Some(o) = occlusion {
        cfg.scenario.occlusion = o.into();
    }
}

fn write_run_manifest(dir: &Path, payload: serde_json::Value) -> Result<()> {
    let mut body = serde_json::to_string_pretty(&payload)?;
    body.push('\n');
    let path = dir.join("run.json");
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_simulate(
    cfg: &PipelineConfig,
    kind: ScriptedKind,
    episodes: usize,
    out: &Path,
) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cam = cfg.camera.intrinsics();
    let mut policy = ScriptedPolicy::new(kind);
    let mut outcomes: Vec<(String, Outcome)> = Vec::new();
    let mut save_error: Option<anyhow::Error> = None;
    collect_episodes(
        &cfg.scenario,
        &cam,
        &cfg.render,
        &mut policy,
        episodes,
        |i, log| {
            if save_error.is_some() {
                return;
            }
            let name = format!("ep{i:04}");
            let dir = out.join(&name);
            match save_episode(&log, &dir) {
                Ok(()) => {
                    println!("{name}: {} ({} frames)", log.outcome.as_str(), log.frames.len());
                    outcomes.push((name, log.outcome));
                }
                Err(e) => save_error = Some(e.into()),
            }
        },
    );
    if let Some(e) = save_error {
        return Err(e);
    }

    let tally = |o: Outcome| outcomes.iter().filter(|(_, x)| *x == o).count();
    write_run_manifest(
        out,
        serde_json::json!({
            "schema_version": 1,
            "command": "simulate",
            "policy": kind.as_str(),
            "episodes": episodes,
            "outcomes": {
                "successes": tally(Outcome::Success),
                "collisions": tally(Outcome::Collision),
                "timeouts": tally(Outcome::Timeout),
            },
            "config": cfg.snapshot(),
        }),
    )?;
    println!(
        "{} episodes: {} success / {} collision / {} timeout",
        episodes,
        tally(Outcome::Success),
        tally(Outcome::Collision),
        tally(Outcome::Timeout)
    );
    Ok(())
}

/// A directory is either one episode or a folder of episode directories.
fn episode_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    if detect_layout(input).is_ok() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("reading {}", input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && detect_layout(p).is_ok())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("no episodes found under {}", input.display());
    }
    Ok(dirs)
}

fn load_any_episode(cfg: &PipelineConfig, dir: &Path) -> Result<LoadedEpisode> {
    let episode = match detect_layout(dir)? {
        DatasetLayout::Sim => pedcross::pipeline::load_episode_dir(dir)?,
        DatasetLayout::A2d2 => pedcross::pipeline::load_a2d2_dir(dir, cfg.scenario.a_max)?,
    };
    Ok(episode)
}

fn cmd_label(
    cfg: &PipelineConfig,
    input: &Path,
    source: DistanceSource,
    labeler: LabelerArg,
    out: &Path,
) -> Result<()> {
    let dirs = episode_dirs(input)?;
    let mut analyzer = FrameAnalyzer::from_config(cfg);
    let mut records: Vec<FrameRecord> = Vec::new();
    for (id, dir) in dirs.iter().enumerate() {
        let episode =
            load_any_episode(cfg, dir).with_context(|| format!("loading {}", dir.display()))?;
        records.extend(label_frames(
            &episode.frames,
            &mut analyzer,
            &cfg.reward,
            source,
            id,
        ));
    }

    let mut transitions = transitions_from_records(&records);
    if labeler == LabelerArg::Uds {
        for (t, zero) in transitions.iter_mut().zip(label_uds(records.len())) {
            t.reward = zero;
        }
    }

    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    export_transitions(&out.join("dataset.jsonl"), &transitions)?;
    export_audit(&out.join("audit.jsonl"), &records)?;
    write_run_manifest(
        out,
        serde_json::json!({
            "schema_version": 1,
            "command": "label",
            "input": input.display().to_string(),
            "source": source.as_str(),
            "labeler": if labeler == LabelerArg::Uds { "uds" } else { "gen" },
            "episodes": dirs.len(),
            "frames": records.len(),
            "transitions": transitions.len(),
            "config": cfg.snapshot(),
        }),
    )?;
    println!(
        "labeled {} episodes: {} frames, {} transitions",
        dirs.len(),
        records.len(),
        transitions.len()
    );
    Ok(())
}

fn cmd_train(cfg: &PipelineConfig, data: &Path, out: &Path) -> Result<()> {
    let samples = match peek_kind(data)?.as_str() {
        "transitions" => samples_from_transitions(&import_transitions(data)?),
        "frame_records" => samples_from_records(&import_records(data)?),
        other => bail!("{}: cannot train on '{other}' artifacts", data.display()),
    };
    if samples.is_empty() {
        bail!("EmptyDataset: {} contains no transitions", data.display());
    }

    let table = fit_q(&samples, StateDiscretizer::default(), &ACTION_LEVELS, &cfg.train)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    table.save_csv_with_comments(
        &out.join("qtable.csv"),
        &[("config".to_string(), serde_json::to_string(&cfg.snapshot())?)],
    )?;
    write_run_manifest(
        out,
        serde_json::json!({
            "schema_version": 1,
            "command": "train",
            "data": data.display().to_string(),
            "samples": samples.len(),
            "table_entries": table.num_entries(),
            "config": cfg.snapshot(),
        }),
    )?;
    println!(
        "fitted {} cell entries from {} transitions",
        table.num_entries(),
        samples.len()
    );
    Ok(())
}

fn cmd_eval(
    cfg: &PipelineConfig,
    policy: EvalPolicyArg,
    table: Option<&Path>,
    episodes: usize,
    source: DistanceSource,
    out: Option<&Path>,
) -> Result<()> {
    let cam = cfg.camera.intrinsics();
    let mut policy_box: Box<dyn LongitudinalPolicy> = match policy {
        EvalPolicyArg::Table => {
            let path = table.expect("clap enforces --table for --policy table");
            let table = QTable::load_csv(path)
                .with_context(|| format!("loading table {}", path.display()))?;
            Box::new(QTablePolicy::new(table, FrameAnalyzer::from_config(cfg), source))
        }
        EvalPolicyArg::Behavioral => Box::new(ScriptedPolicy::new(ScriptedKind::Behavioral)),
        EvalPolicyArg::Random => Box::new(ScriptedPolicy::new(ScriptedKind::Random)),
        EvalPolicyArg::Aggressive => Box::new(ScriptedPolicy::new(ScriptedKind::Aggressive)),
        EvalPolicyArg::Conservative => Box::new(ScriptedPolicy::new(ScriptedKind::Conservative)),
    };

    let report = evaluate_policy(&mut *policy_box, &cfg.scenario, &cam, &cfg.render, episodes);
    print_report(&report);

    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut body = serde_json::to_string_pretty(&serde_json::json!({
            "schema_version": 1,
            "command": "eval",
            "report": report,
            "config": cfg.snapshot(),
        }))?;
        body.push('\n');
        fs::write(dir.join("report.json"), body)?;
        write_run_manifest(
            dir,
            serde_json::json!({
                "schema_version": 1,
                "command": "eval",
                "episodes": episodes,
                "config": cfg.snapshot(),
            }),
        )?;
    }
    Ok(())
}

fn print_report(report: &CollisionReport) {
    println!("episodes    {:>6}", report.episodes);
    println!(
        "successes   {:>6}  ({:.1}%)",
        report.successes, report.success_pct
    );
    println!(
        "collisions  {:>6}  ({:.1}%)",
        report.collisions, report.collision_pct
    );
    println!(
        "timeouts    {:>6}  ({:.1}%)",
        report.timeouts, report.timeout_pct
    );
    match report.mean_stopping_distance {
        Some(d) => println!("mean stopping distance  {d:.2} m"),
        None => println!("mean stopping distance  n/a (no full stops)"),
    }
}

fn cmd_inspect(
    cfg: &PipelineConfig,
    input: &Path,
    source: DistanceSource,
    out: Option<&Path>,
) -> Result<()> {
    let episode = load_any_episode(cfg, input)?;
    let mut analyzer = FrameAnalyzer::from_config(cfg);
    let records = label_frames(&episode.frames, &mut analyzer, &cfg.reward, source, 0);

    let mut csv = String::from("t,v,a,f_p,f_c,f_h,p,c_t,reward\n");
    for r in &records {
        csv.push_str(&format!(
            "{:.3},{:.6},{:.6},{:.2},{:.2},{:.2},{:.6},{},{:.6}\n",
            r.t,
            r.speed,
            r.accel,
            r.risk.f_p,
            r.risk.f_c,
            r.risk.f_h,
            r.risk.probability,
            r.risk.c_t as u8,
            r.reward.total,
        ));
    }
    match out {
        Some(path) => {
            fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {} frames to {}", records.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// Reads safety labels from an audit stream or a bare JSON array of
/// booleans / 0-1 integers.
fn read_labels(path: &Path) -> Result<Vec<bool>> {
    if peek_kind(path).map(|k| k == "risk_audit").unwrap_or(false) {
        return Ok(import_audit(path)?.iter().map(|a| a.c_t).collect());
    }
    let body =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values: Vec<serde_json::Value> = serde_json::from_str(&body)
        .with_context(|| format!("{}: expected audit.jsonl or a JSON array", path.display()))?;
    values
        .iter()
        .map(|v| match v {
            serde_json::Value::Bool(b) => Ok(*b),
            serde_json::Value::Number(n) => Ok(n.as_f64().unwrap_or(0.0) != 0.0),
            other => bail!("{}: label entries must be booleans or numbers, got {other}", path.display()),
        })
        .collect()
}

fn cmd_compare(cfg: &PipelineConfig, model: &Path, human: &Path, out: Option<&Path>) -> Result<()> {
    let model_labels = read_labels(model)?;
    let human_labels = read_labels(human)?;
    let report = compare_safety_labels(&model_labels, &human_labels)?;

    let payload = serde_json::json!({
        "schema_version": 1,
        "command": "compare",
        "report": report,
        "config": cfg.snapshot(),
    });
    println!("{}", serde_json::to_string_pretty(&serde_json::json!({ "report": report }))?);
    if let Some(path) = out {
        let mut body = serde_json::to_string_pretty(&payload)?;
        body.push('\n');
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
