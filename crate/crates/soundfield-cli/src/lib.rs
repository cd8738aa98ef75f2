//! Command definitions and dispatch for the `soundfield` binary.
//!
//! The binary wires the [`soundfield`] library end to end:
//!
//! * `map` — detection track + depth maps → trajectory file,
//! * `render` — mono WAV + trajectory + impulse-response manifest → binaural WAV,
//! * `build-dataset` — corpus of mono WAVs → reproducible rendered dataset,
//! * `eval` — estimated trajectory and/or rendered audio vs. a reference,
//! * `hrir` — inspect or synthesize impulse-response sets.
//!
//! Contract shared by every command: exit code 0 on success, 2 on a usage
//! error (bad flags, unparseable values), 1 on a runtime error. Runtime
//! errors print a single machine-readable `error: ...` line on standard
//! error. Logging goes to standard error only; the declared output files
//! (plus the documented path/report lines on standard output) are the only
//! things a command writes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use soundfield::dataset::{build_dataset, DatasetSpec, MANIFEST_FILE};
use soundfield::geometry::{
    spherical_to_cartesian, FrameSpec, GridScheme, Point3, SoundFieldConfig, Trajectory3D,
    DEFAULT_FPS, DEFAULT_S_Y_M,
};
use soundfield::hrir::{
    frontal_grid_directions, load_hrir_set, save_hrir_set, synth_spherical_head, SynthHeadSpec,
};
use soundfield::metrics::{
    estimate_cues, mae_azimuth, mae_elevation, side_consistency, AngleKind, AngleSeries, CueFlag,
    DEFAULT_HOP_S, DEFAULT_MAX_LAG_S, DEFAULT_WINDOW_S,
};
use soundfield::pipeline::{map_track_to_trajectory, resolve_label};
use soundfield::render::{render_moving_source, RenderOptions};
use soundfield::wav::{read_wav, write_stereo_f32};
use soundfield::{ingest::DepthDir, ingest::DetectionTrack, Scheme, DEFAULT_CLIP_SECONDS};

/// Environment variable consulted when `--hrir` (or `--manifest`) is absent.
pub const HRIR_MANIFEST_ENV: &str = "SOUNDFIELD_HRIR_MANIFEST";

/// Map tracked on-screen objects into a 3D sound field, render them
/// binaurally, and evaluate the result.
#[derive(Debug, Parser)]
#[command(name = "soundfield", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Map a detection track plus per-frame depth maps to a trajectory file.
    Map(MapArgs),
    /// Render a mono WAV along a trajectory into a binaural WAV.
    Render(RenderArgs),
    /// Render every clip of a mono corpus into a reproducible dataset.
    BuildDataset(BuildDatasetArgs),
    /// Score an estimated trajectory and/or rendered audio against a reference.
    Eval(EvalArgs),
    /// Inspect or synthesize impulse-response sets.
    Hrir(HrirArgs),
}

/// Position scheme: continuous per-frame positions or per-second grid cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// One position per video frame, rendered with dense crossfade segments.
    Fine,
    /// One grid-quantized position per second.
    Coarse,
}

impl From<SchemeArg> for Scheme {
    fn from(value: SchemeArg) -> Scheme {
        match value {
            SchemeArg::Fine => Scheme::Fine,
            SchemeArg::Coarse => Scheme::Coarse,
        }
    }
}

/// Explicit switch for flags whose default is not simply "off".
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

impl OnOff {
    pub fn is_on(self) -> bool {
        matches!(self, OnOff::On)
    }
}

/// Segment count used for rendering: the `--M` value when given, otherwise
/// the scheme default (200 fine, 8 coarse).
pub fn effective_segments(scheme: Scheme, requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| scheme.default_segments())
}

#[derive(Debug, Args)]
pub struct MapArgs {
    /// Detection-track JSON file.
    #[arg(long, value_name = "FILE")]
    pub track: PathBuf,
    /// Directory of per-frame depth planes (`000001.pgm`, or `000001.f32`
    /// with a `depth_meta.json` sidecar).
    #[arg(long, value_name = "DIR")]
    pub depth: PathBuf,
    /// Video frame width, pixels.
    #[arg(long, value_name = "PX")]
    pub width: u32,
    /// Video frame height, pixels.
    #[arg(long, value_name = "PX")]
    pub height: u32,
    /// Video frame rate, frames per second.
    #[arg(long, default_value_t = DEFAULT_FPS)]
    pub fps: f64,
    /// Position scheme.
    #[arg(long, value_enum, default_value_t = SchemeArg::Fine)]
    pub scheme: SchemeArg,
    /// Object label to follow [default: the track's most confident label].
    #[arg(long)]
    pub label: Option<String>,
    /// Sound-stage half-width along the interaural axis, meters.
    #[arg(long, value_name = "METERS", default_value_t = DEFAULT_S_Y_M)]
    pub s_y: f64,
    /// Depth scale, pixels [default: half the frame width].
    #[arg(long, value_name = "PX")]
    pub gamma: Option<f64>,
    /// Output trajectory file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input mono WAV (16-bit PCM or 32-bit float).
    #[arg(long, value_name = "FILE")]
    pub mono: PathBuf,
    /// Trajectory file, as written by `map`.
    #[arg(long, value_name = "FILE")]
    pub trajectory: PathBuf,
    /// Impulse-response manifest.
    #[arg(long, value_name = "FILE", env = HRIR_MANIFEST_ENV)]
    pub hrir: PathBuf,
    /// Position scheme, which sets the default segment count.
    #[arg(long, value_enum, default_value_t = SchemeArg::Fine)]
    pub scheme: SchemeArg,
    /// Number of crossfade segments [default: 200 fine, 8 coarse].
    #[arg(long = "M", short = 'M', value_name = "COUNT")]
    pub segments: Option<usize>,
    /// Scale responses by reference-distance/source-distance.
    #[arg(long, value_enum, default_value_t = OnOff::On)]
    pub distance_gain: OnOff,
    /// Scale the output so the loudest sample is full-scale.
    #[arg(long, value_enum, default_value_t = OnOff::Off)]
    pub normalize: OnOff,
    /// Output binaural WAV (32-bit float).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Directory of mono WAV clips.
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Impulse-response manifest; repeat for several subjects, assigned
    /// round-robin over clips.
    #[arg(long = "hrir", value_name = "FILE", env = HRIR_MANIFEST_ENV, required = true)]
    pub hrir: Vec<PathBuf>,
    /// Position scheme for the random trajectories.
    #[arg(long, value_enum, default_value_t = SchemeArg::Fine)]
    pub scheme: SchemeArg,
    /// Clip duration, seconds; inputs are trimmed or zero-padded to it.
    #[arg(long, value_name = "SECONDS", default_value_t = DEFAULT_CLIP_SECONDS)]
    pub clip_seconds: f64,
    /// Number of crossfade segments per clip [default: 200 fine, 8 coarse].
    #[arg(long = "M", short = 'M', value_name = "COUNT")]
    pub segments: Option<usize>,
    /// Global seed; every clip derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fine-scheme trajectory rate, points per second.
    #[arg(long, default_value_t = DEFAULT_FPS)]
    pub fps: f64,
    /// Output dataset directory; the manifest path is printed on stdout.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(
    ArgGroup::new("estimate").required(true).multiple(true).args(["est", "audio"])
))]
pub struct EvalArgs {
    /// Estimated trajectory file to score against the reference.
    #[arg(long, value_name = "FILE")]
    pub est: Option<PathBuf>,
    /// Rendered binaural WAV to check against the reference trajectory.
    #[arg(long, value_name = "FILE")]
    pub audio: Option<PathBuf>,
    /// Reference: a trajectory file, or a per-second grid annotation
    /// (`{"cells": [[column, row, depth-bin], ...]}`, 1-based).
    #[arg(long, value_name = "FILE")]
    pub gt: PathBuf,
    /// Interaural-cue analysis window, seconds.
    #[arg(long, value_name = "SECONDS", default_value_t = DEFAULT_WINDOW_S)]
    pub window_s: f64,
    /// Hop between cue windows, seconds.
    #[arg(long, value_name = "SECONDS", default_value_t = DEFAULT_HOP_S)]
    pub hop_s: f64,
    /// Report file [default: print the report on stdout].
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HrirArgs {
    #[command(subcommand)]
    pub command: HrirCommand,
}

#[derive(Debug, Subcommand)]
pub enum HrirCommand {
    /// Print a manifest's subject, format, and direction list.
    Info(HrirInfoArgs),
    /// Synthesize a spherical-head set over a frontal direction grid.
    Synth(HrirSynthArgs),
}

#[derive(Debug, Args)]
pub struct HrirInfoArgs {
    /// Impulse-response manifest.
    #[arg(long, value_name = "FILE", env = HRIR_MANIFEST_ENV)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct HrirSynthArgs {
    /// Sample rate of the synthesized responses, Hz.
    #[arg(long, default_value_t = 44_100, value_parser = clap::value_parser!(u32).range(1..))]
    pub rate: u32,
    /// Azimuth grid step across the frontal arc, degrees.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=180))]
    pub az_step: u32,
    /// Elevation grid step, degrees.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=80))]
    pub el_step: u32,
    /// Subject identifier recorded in the manifest.
    #[arg(long, default_value = "synthetic-head")]
    pub subject: String,
    /// Output directory; the manifest path is printed on stdout.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Initializes logging to standard error, honoring `RUST_LOG` (default `info`).
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or("info"),
    )
    .format_timestamp(None)
    .try_init();
}

/// Runs a parsed command; errors map to exit code 1 in `main`.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Map(args) => cmd_map(args),
        Command::Render(args) => cmd_render(args),
        Command::BuildDataset(args) => cmd_build_dataset(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Hrir(args) => match &args.command {
            HrirCommand::Info(info) => cmd_hrir_info(info),
            HrirCommand::Synth(synth) => cmd_hrir_synth(synth),
        },
    }
}

fn cmd_map(args: &MapArgs) -> anyhow::Result<()> {
    let frame = FrameSpec::new(args.width, args.height, args.fps)?;
    let config = SoundFieldConfig {
        s_y_m: args.s_y,
        gamma_override_px: args.gamma,
        ..SoundFieldConfig::default()
    };
    config.validate()?;
    let track = DetectionTrack::load(&args.track)?;
    let depth = DepthDir::open(&args.depth)?;
    let label = resolve_label(&track, args.label.as_deref())?;
    log::info!("following label '{label}' across {} frames", track.last_frame_index());
    let trajectory = map_track_to_trajectory(
        &track,
        &depth,
        &label,
        &frame,
        &config,
        args.scheme.into(),
        &GridScheme::default(),
    )?;
    trajectory.save(&args.out)?;
    log::info!(
        "wrote {} points at {} Hz to {}",
        trajectory.len(),
        trajectory.rate_hz(),
        args.out.display()
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> anyhow::Result<()> {
    let mono = read_wav(&args.mono)?.into_mono()?;
    let trajectory = Trajectory3D::load(&args.trajectory)?;
    let set = load_hrir_set(&args.hrir)?;
    let segments = effective_segments(args.scheme.into(), args.segments);
    let options = RenderOptions {
        distance_gain: args.distance_gain.is_on(),
        normalize: args.normalize.is_on(),
        ..RenderOptions::default()
    };
    let out = render_moving_source(&mono, &trajectory, &set, segments, &options)?;
    write_stereo_f32(&args.out, &out)?;
    log::info!("rendered {segments} segments to {}", args.out.display());
    Ok(())
}

fn cmd_build_dataset(args: &BuildDatasetArgs) -> anyhow::Result<()> {
    let mut sets = Vec::with_capacity(args.hrir.len());
    for path in &args.hrir {
        sets.push(load_hrir_set(path)?);
    }
    let mut spec = DatasetSpec::new(args.scheme.into(), args.seed);
    spec.clip_seconds = args.clip_seconds;
    spec.fps = args.fps;
    if let Some(segments) = args.segments {
        spec.segments = segments;
    }
    let manifest = build_dataset(&args.corpus, &sets, &spec, &args.out)?;
    log::info!("built {} clips under {}", manifest.clips.len(), args.out.display());
    println!("{}", args.out.join(MANIFEST_FILE).display());
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let report = eval_report(args)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &report)
                .with_context(|| format!("writing report to {}", path.display()))?;
            log::info!("wrote report to {}", path.display());
        }
        None => print!("{report}"),
    }
    Ok(())
}

/// Builds the full evaluation report text (stable `key: value` lines).
pub fn eval_report(args: &EvalArgs) -> anyhow::Result<String> {
    let gt = load_reference(&args.gt)?;
    let mut report = String::new();
    let _ = writeln!(
        report,
        "reference: {} ({} points at {} Hz)",
        args.gt.display(),
        gt.len(),
        gt.rate_hz()
    );

    if let Some(est_path) = &args.est {
        let est = Trajectory3D::load(est_path)?;
        let aligned = Trajectory3D::new(align_to_reference(&est, &gt)?, gt.rate_hz())?;
        let mae_az = mae_azimuth(
            &AngleSeries::from_trajectory(&aligned, AngleKind::Azimuth)?,
            &AngleSeries::from_trajectory(&gt, AngleKind::Azimuth)?,
        )?;
        let mae_el = mae_elevation(
            &AngleSeries::from_trajectory(&aligned, AngleKind::Elevation)?,
            &AngleSeries::from_trajectory(&gt, AngleKind::Elevation)?,
        )?;
        let _ = writeln!(
            report,
            "estimate: {} ({} points at {} Hz)",
            est_path.display(),
            est.len(),
            est.rate_hz()
        );
        let _ = writeln!(report, "mae_azimuth_deg: {mae_az:.6}");
        let _ = writeln!(report, "mae_elevation_deg: {mae_el:.6}");
    }

    if let Some(audio_path) = &args.audio {
        let audio = read_wav(audio_path)?.into_stereo()?;
        let cues = estimate_cues(&audio, args.window_s, args.hop_s, DEFAULT_MAX_LAG_S)?;
        let _ = writeln!(
            report,
            "audio: {} ({} windows of {} s)",
            audio_path.display(),
            cues.len(),
            args.window_s
        );
        match side_consistency(&audio, &gt, args.window_s)? {
            Some(score) => {
                let _ = writeln!(report, "side_consistency: {score:.6}");
            }
            None => {
                let _ = writeln!(report, "side_consistency: undefined");
            }
        }
        let heard: Vec<usize> =
            (0..cues.len()).filter(|&i| cues.flags[i] != CueFlag::Silence).collect();
        if heard.is_empty() {
            let _ = writeln!(report, "ild_db: undefined (all windows silent)");
            let _ = writeln!(report, "itd_s: undefined (all windows silent)");
        } else {
            let stat = |values: &[f64]| {
                let picked: Vec<f64> = heard.iter().map(|&i| values[i]).collect();
                let mean = picked.iter().sum::<f64>() / picked.len() as f64;
                let min = picked.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = picked.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (mean, min, max)
            };
            let (mean, min, max) = stat(&cues.ild_db);
            let _ = writeln!(report, "ild_db: mean {mean:.6} min {min:.6} max {max:.6}");
            let (mean, min, max) = stat(&cues.itd_s);
            let _ = writeln!(report, "itd_s: mean {mean:.9} min {min:.9} max {max:.9}");
        }
        let count = |flag: CueFlag| cues.flags.iter().filter(|f| **f == flag).count();
        let _ = writeln!(
            report,
            "windows: ok {} silence {} low_confidence {}",
            count(CueFlag::Ok),
            count(CueFlag::Silence),
            count(CueFlag::LowConfidence)
        );
    }
    Ok(report)
}

/// Loads a reference file: a trajectory (`"points"`) or a per-second grid
/// annotation (`"cells"`), converted through the coarse position lookup.
pub fn load_reference(path: &Path) -> anyhow::Result<Trajectory3D> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .with_context(|| format!("parsing {} as JSON", path.display()))?;
    if value.get("points").is_some() {
        return Ok(Trajectory3D::from_json_str(&text)?);
    }
    if value.get("cells").is_some() {
        return annotation_to_trajectory(&text);
    }
    bail!(
        "{}: expected a trajectory (\"points\") or a grid annotation (\"cells\")",
        path.display()
    );
}

#[derive(Debug, serde::Deserialize)]
struct GridAnnotation {
    cells: Vec<[u32; 3]>,
}

/// Converts a per-second grid annotation into a 1 Hz trajectory through the
/// coarse position set. Cells are `[column, row, depth-bin]`, all 1-based.
pub fn annotation_to_trajectory(text: &str) -> anyhow::Result<Trajectory3D> {
    let annotation: GridAnnotation = serde_json::from_str(text)?;
    let grid = GridScheme::default();
    let mut points = Vec::with_capacity(annotation.cells.len());
    for (second, &[col, row, bin]) in annotation.cells.iter().enumerate() {
        if !(1..=grid.cols).contains(&col) || !(1..=grid.rows).contains(&row) {
            bail!(
                "annotation second {second}: cell ({col}, {row}) outside the {}x{} grid",
                grid.cols,
                grid.rows
            );
        }
        if bin == 0 || bin as usize > grid.depth_bins_m.len() {
            bail!(
                "annotation second {second}: depth bin {bin} outside 1..={}",
                grid.depth_bins_m.len()
            );
        }
        let radius = grid.depth_bins_m[bin as usize - 1];
        points.push(spherical_to_cartesian(&grid.cell_direction(col, row, radius)));
    }
    Ok(Trajectory3D::new(points, soundfield::COARSE_POSITIONS_PER_SECOND)?)
}

/// Pairs the estimate with the reference, index by index.
///
/// Equal rates require equal lengths. With differing rates the estimate is
/// sampled at each reference timestamp (nearest index, clamped), so a
/// 25 Hz fine estimate can be scored against a 1 Hz annotation.
pub fn align_to_reference(est: &Trajectory3D, gt: &Trajectory3D) -> anyhow::Result<Vec<Point3>> {
    if est.rate_hz() == gt.rate_hz() {
        if est.len() != gt.len() {
            bail!(
                "trajectory lengths differ at equal rates: estimate has {} points, reference {}",
                est.len(),
                gt.len()
            );
        }
        return Ok(est.points().to_vec());
    }
    let points = est.points();
    Ok((0..gt.len())
        .map(|k| {
            let t = k as f64 / gt.rate_hz();
            let index = ((t * est.rate_hz()).round() as usize).min(points.len() - 1);
            points[index]
        })
        .collect())
}

fn cmd_hrir_info(args: &HrirInfoArgs) -> anyhow::Result<()> {
    let set = load_hrir_set(&args.manifest)?;
    println!("subject: {}", set.subject_id);
    println!("sample_rate: {}", set.sample_rate);
    println!("ref_distance_m: {}", set.ref_distance_m);
    println!("impulse_len: {}", set.impulse_len());
    println!("directions: {}", set.entries().len());
    for entry in set.entries() {
        println!("  az {} el {}", entry.azimuth_deg, entry.elevation_deg);
    }
    Ok(())
}

fn cmd_hrir_synth(args: &HrirSynthArgs) -> anyhow::Result<()> {
    let directions = frontal_grid_directions(args.az_step, args.el_step);
    let mut set = synth_spherical_head(&directions, &SynthHeadSpec::new(args.rate))?;
    set.subject_id = args.subject.clone();
    let manifest = save_hrir_set(&set, &args.out)?;
    log::info!("synthesized {} directions at {} Hz", set.entries().len(), set.sample_rate);
    println!("{}", manifest.display());
    Ok(())
}
