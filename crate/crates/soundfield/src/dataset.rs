//! Seeded dataset synthesis.
//!
//! Builds training corpora of (binaural audio, trajectory, condition)
//! triples from a directory of mono WAV clips: every clip is trimmed or
//! zero-padded to a fixed duration, paired with a randomly drawn smooth
//! trajectory, rendered binaurally against a round-robin-assigned impulse
//! response set, and written out together with a condition file that stacks
//! the mono waveform with the sample-rate-upsampled trajectory.
//!
//! The whole build is a pure function of (corpus bytes, impulse-response
//! bytes, [`DatasetSpec`]): trajectories come from a counter-based generator
//! seeded per clip by hashing the global seed with the clip name, clips are
//! visited in sorted order, and every output format is byte-stable. Running
//! the same build twice produces byte-identical trees.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{GridScheme, Point3, Trajectory3D, DEFAULT_FPS, DEFAULT_MAX_DISTANCE_M, DEFAULT_S_Y_M};
use crate::hrir::{HrirSet, FINE_MAX_ELEVATION_DEG};
use crate::render::{render_moving_source, MonoAudio, RenderOptions};
use crate::wav::{read_wav, write_stereo_f32};
use crate::{Scheme, DEFAULT_CLIP_SECONDS};

/// Closest a random fine-scheme waypoint may sit to the listener plane,
/// meters. Keeps drawn sources clearly in front and their azimuths inside
/// the frontal half-space even at maximal |y|.
const FINE_MIN_X_M: f64 = 0.2;

/// Farthest forward coordinate of a random fine-scheme waypoint, meters
/// (the total distance is additionally capped at the 6 m validity bound).
const FINE_MAX_X_M: f64 = 5.5;

/// Fewest and most waypoints a random trajectory interpolates between.
const MIN_WAYPOINTS: usize = 2;
const MAX_WAYPOINTS: usize = 5;

/// Parameters of one dataset build.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSpec {
    /// Trajectory scheme (continuous positions vs the quantized grid).
    pub scheme: Scheme,
    /// Every clip is trimmed or zero-padded to this length, seconds.
    pub clip_seconds: f64,
    /// Number of rendering segments per clip.
    pub segments: usize,
    /// Global seed; per-clip seeds are derived from it and the clip name.
    pub seed: u64,
    /// Trajectory rate, points per second.
    pub fps: f64,
}

impl DatasetSpec {
    /// Spec with the standard defaults: 8-second clips, the scheme's
    /// default segment count, trajectories at 25 points per second.
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        DatasetSpec {
            scheme,
            clip_seconds: DEFAULT_CLIP_SECONDS,
            segments: scheme.default_segments(),
            seed,
            fps: DEFAULT_FPS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip_seconds > 0.0) || !self.clip_seconds.is_finite() {
            return Err(Error::InvalidParameter("clip_seconds must be positive".into()));
        }
        if self.segments == 0 {
            return Err(Error::InvalidParameter("segment count must be at least 1".into()));
        }
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::InvalidParameter("fps must be positive".into()));
        }
        Ok(())
    }
}

/// Derives the seed for one clip from the global seed and the clip name:
/// the first eight little-endian bytes of `SHA-256(seed_le || name)`.
/// Stable across platforms and corpus reordering.
pub fn derive_clip_seed(global_seed: u64, clip_name: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(global_seed.to_le_bytes());
    hasher.update(clip_name.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

/// Draws a random source trajectory of `duration_s · fps` points.
///
/// A seeded generator draws 2–5 waypoints uniformly inside the scheme's
/// admissible region and interpolates between them:
///
/// * **fine** — waypoints lie in the frontal box `x ∈ [0.2, 5.5]`,
///   `|y| ≤ 1.47`, `|z| ≤ tan(40°)·x`, redrawn while farther than 6 m; the
///   region is convex, so linearly interpolated points stay admissible.
/// * **coarse** — waypoints are drawn from the 75 quantized grid positions;
///   the interpolated path is re-quantized once per second and each
///   position is held for a second, so every output point is one of the 75.
///
/// The same seed always yields the same trajectory.
pub fn random_trajectory(seed: u64, duration_s: f64, fps: f64, scheme: Scheme) -> Result<Trajectory3D> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::InvalidParameter("duration must be positive".into()));
    }
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(Error::InvalidParameter("fps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = ((duration_s * fps).round() as usize).max(1);
    let waypoint_count = rng.random_range(MIN_WAYPOINTS..=MAX_WAYPOINTS);
    let points = match scheme {
        Scheme::Fine => {
            let waypoints: Vec<Point3> =
                (0..waypoint_count).map(|_| fine_waypoint(&mut rng)).collect();
            interpolate_waypoints(&waypoints, count)
        }
        Scheme::Coarse => {
            let grid = GridScheme::default();
            let positions = grid.coarse_positions();
            let waypoints: Vec<Point3> = (0..waypoint_count)
                .map(|_| positions[rng.random_range(0..positions.len())].1)
                .collect();
            coarse_points(&waypoints, &grid, duration_s, fps, count)
        }
    };
    Trajectory3D::new(points, fps)
}

fn fine_waypoint(rng: &mut impl Rng) -> Point3 {
    let max_slope = FINE_MAX_ELEVATION_DEG.to_radians().tan();
    loop {
        let x = rng.random_range(FINE_MIN_X_M..=FINE_MAX_X_M);
        let y = rng.random_range(-DEFAULT_S_Y_M..=DEFAULT_S_Y_M);
        let z = rng.random_range(-1.0..=1.0) * max_slope * x;
        let p = Point3::new(x, y, z);
        if p.norm() <= DEFAULT_MAX_DISTANCE_M {
            return p;
        }
    }
}

/// Linear interpolation through `waypoints`, sampled at `count` evenly
/// spaced parameters covering the full polyline.
fn interpolate_waypoints(waypoints: &[Point3], count: usize) -> Vec<Point3> {
    if count == 1 || waypoints.len() == 1 {
        return vec![waypoints[0]; count];
    }
    let spans = (waypoints.len() - 1) as f64;
    (0..count)
        .map(|k| {
            let u = k as f64 / (count - 1) as f64 * spans;
            let i = (u.floor() as usize).min(waypoints.len() - 2);
            waypoints[i].lerp(&waypoints[i + 1], u - i as f64)
        })
        .collect()
}

/// Coarse-scheme path: interpolate the waypoints at one sample per second,
/// snap every sample back onto the quantized grid, then hold each snapped
/// position for a second's worth of output points.
fn coarse_points(
    waypoints: &[Point3],
    grid: &GridScheme,
    duration_s: f64,
    fps: f64,
    count: usize,
) -> Vec<Point3> {
    let slots = (duration_s * crate::COARSE_POSITIONS_PER_SECOND).ceil().max(1.0) as usize;
    let snapped: Vec<Point3> = interpolate_waypoints(waypoints, slots)
        .iter()
        .map(|p| grid.nearest_position(p))
        .collect();
    let frames_per_slot = fps / crate::COARSE_POSITIONS_PER_SECOND;
    (0..count)
        .map(|k| {
            let slot = ((k as f64 / frames_per_slot).floor() as usize).min(slots - 1);
            snapped[slot]
        })
        .collect()
}

/// Conditioning input for a generative model: the mono waveform stacked
/// with the trajectory coordinates upsampled to sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRecord {
    /// Four equal-length channels: mono, x, y, z.
    pub channels: [Vec<f64>; 4],
    pub sample_rate: u32,
}

impl ConditionRecord {
    /// Samples per channel.
    pub fn samples(&self) -> usize {
        self.channels[0].len()
    }
}

/// Pairs a mono waveform with its trajectory: each trajectory point is held
/// (piecewise-constant) for `ceil(T / K)` samples, truncated so channels
/// 2–4 span exactly the `T` samples of channel 1.
pub fn assemble_condition(mono: &MonoAudio, trajectory: &Trajectory3D) -> ConditionRecord {
    let total = mono.samples.len();
    let hold = total.div_ceil(trajectory.len()).max(1);
    let mut xs = Vec::with_capacity(total);
    let mut ys = Vec::with_capacity(total);
    let mut zs = Vec::with_capacity(total);
    'fill: for p in trajectory.points() {
        for _ in 0..hold {
            if xs.len() == total {
                break 'fill;
            }
            xs.push(p.x);
            ys.push(p.y);
            zs.push(p.z);
        }
    }
    // ceil(T/K)·K ≥ T, so only truncation (never a shortfall) is possible;
    // a trajectory much longer than the audio simply drops its tail.
    while xs.len() < total {
        let last = *trajectory.points().last().expect("trajectory is non-empty");
        xs.push(last.x);
        ys.push(last.y);
        zs.push(last.z);
    }
    ConditionRecord {
        channels: [mono.samples.clone(), xs, ys, zs],
        sample_rate: mono.sample_rate,
    }
}

/// One-line JSON header at the top of a condition file.
#[derive(Debug, Serialize, Deserialize)]
struct ConditionHeader {
    channels: usize,
    samples: usize,
    sample_rate: u32,
    dtype: String,
    layout: String,
    order: Vec<String>,
}

const CONDITION_DTYPE: &str = "f32le";
const CONDITION_LAYOUT: &str = "channel-major";

/// Writes a condition record: one JSON header line, then the four channels
/// as raw little-endian 32-bit floats, channel after channel.
pub fn write_condition(path: impl AsRef<Path>, record: &ConditionRecord) -> Result<()> {
    let path = path.as_ref();
    let header = ConditionHeader {
        channels: record.channels.len(),
        samples: record.samples(),
        sample_rate: record.sample_rate,
        dtype: CONDITION_DTYPE.into(),
        layout: CONDITION_LAYOUT.into(),
        order: ["mono", "x", "y", "z"].map(String::from).to_vec(),
    };
    let mut bytes = serde_json::to_vec(&header)?;
    bytes.push(b'\n');
    for channel in &record.channels {
        for &sample in channel {
            bytes.extend_from_slice(&(sample as f32).to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a condition file written by [`write_condition`].
pub fn read_condition(path: impl AsRef<Path>) -> Result<ConditionRecord> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let newline = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::InvalidFormat {
        kind: "condition",
        detail: "missing header line".into(),
    })?;
    let header: ConditionHeader = serde_json::from_slice(&bytes[..newline])?;
    if header.channels != 4 || header.dtype != CONDITION_DTYPE || header.layout != CONDITION_LAYOUT {
        return Err(Error::InvalidFormat {
            kind: "condition",
            detail: format!(
                "unsupported header: {} channels, dtype {}, layout {}",
                header.channels, header.dtype, header.layout
            ),
        });
    }
    let body = &bytes[newline + 1..];
    if body.len() != 4 * header.samples * 4 {
        return Err(Error::InvalidFormat {
            kind: "condition",
            detail: format!("expected {} payload bytes, found {}", 4 * header.samples * 4, body.len()),
        });
    }
    let mut channels: [Vec<f64>; 4] = Default::default();
    for (c, channel) in channels.iter_mut().enumerate() {
        let start = c * header.samples * 4;
        *channel = body[start..start + header.samples * 4]
            .chunks_exact(4)
            .map(|b| f64::from(f32::from_le_bytes(b.try_into().expect("chunked by 4"))))
            .collect();
    }
    Ok(ConditionRecord { channels, sample_rate: header.sample_rate })
}

/// One built clip in the manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClipEntry {
    pub name: String,
    pub subject_id: String,
    pub sample_rate: u32,
    pub samples: usize,
    /// Paths relative to the dataset root.
    pub binaural: String,
    pub trajectory: String,
    pub condition: String,
}

/// Top-level description of a built dataset, also written as
/// `manifest.json` in the dataset root.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub scheme: String,
    pub clip_seconds: f64,
    pub segments: usize,
    pub seed: u64,
    pub fps: f64,
    pub clips: Vec<ClipEntry>,
}

/// Name of the manifest file inside the dataset root.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Builds a dataset from every `.wav` file in `corpus_dir`.
///
/// Clips are processed in sorted name order. Each clip is trimmed to the
/// leading `clip_seconds` window (or zero-padded at the end), given a
/// trajectory drawn from its derived seed, and rendered against one of
/// `sets` — restricted to the scheme's direction subset — assigned
/// round-robin in clip order. Per clip the output tree gains
/// `{name}/binaural.wav`, `{name}/trajectory.json`, and
/// `{name}/condition.bin`; the manifest is returned and written to
/// `manifest.json` in `out_dir`.
///
/// Clips that cannot be read or rendered are skipped with a logged warning;
/// it is an error if none survive.
pub fn build_dataset(
    corpus_dir: impl AsRef<Path>,
    sets: &[HrirSet],
    spec: &DatasetSpec,
    out_dir: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let corpus_dir = corpus_dir.as_ref();
    let out_dir = out_dir.as_ref();
    spec.validate()?;
    if sets.is_empty() {
        return Err(Error::InvalidParameter("at least one impulse response set is required".into()));
    }
    let grid = GridScheme::default();
    let subsets: Vec<HrirSet> = sets
        .iter()
        .map(|set| match spec.scheme {
            Scheme::Fine => set.fine_subset(),
            Scheme::Coarse => set.coarse_subset(&grid),
        })
        .collect::<Result<_>>()?;

    let mut clip_paths: Vec<PathBuf> = fs::read_dir(corpus_dir)
        .map_err(|e| Error::io(corpus_dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("wav")) && p.is_file()
        })
        .collect();
    clip_paths.sort_by_key(|p| p.file_name().map(|n| n.to_owned()));
    if clip_paths.is_empty() {
        return Err(Error::EmptyCorpus(format!("no .wav clips in {}", corpus_dir.display())));
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut clips = Vec::new();
    for path in &clip_paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        // Round-robin over subjects by position among *successful* clips,
        // so a skipped clip does not leave a hole in the assignment.
        let subset = &subsets[clips.len() % subsets.len()];
        match build_clip(path, &name, subset, spec, out_dir) {
            Ok(entry) => clips.push(entry),
            Err(err) => log::warn!("skipping clip {}: {err}", path.display()),
        }
    }
    if clips.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no clip in {} could be processed",
            corpus_dir.display()
        )));
    }

    let manifest = DatasetManifest {
        scheme: spec.scheme.to_string(),
        clip_seconds: spec.clip_seconds,
        segments: spec.segments,
        seed: spec.seed,
        fps: spec.fps,
        clips,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    fs::write(&manifest_path, body).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}

fn build_clip(
    path: &Path,
    name: &str,
    set: &HrirSet,
    spec: &DatasetSpec,
    out_dir: &Path,
) -> Result<ClipEntry> {
    let mut mono = read_wav(path)?.into_mono()?;
    let target = (spec.clip_seconds * f64::from(mono.sample_rate)).round() as usize;
    mono.samples.resize(target, 0.0);

    let clip_seed = derive_clip_seed(spec.seed, name);
    let trajectory = random_trajectory(clip_seed, spec.clip_seconds, spec.fps, spec.scheme)?;
    let audio =
        render_moving_source(&mono, &trajectory, set, spec.segments, &RenderOptions::default())?;
    let condition = assemble_condition(&mono, &trajectory);

    let clip_dir = out_dir.join(name);
    fs::create_dir_all(&clip_dir).map_err(|e| Error::io(&clip_dir, e))?;
    write_stereo_f32(clip_dir.join("binaural.wav"), &audio)?;
    trajectory.save(clip_dir.join("trajectory.json"))?;
    write_condition(clip_dir.join("condition.bin"), &condition)?;

    Ok(ClipEntry {
        name: name.to_owned(),
        subject_id: set.subject_id.clone(),
        sample_rate: mono.sample_rate,
        samples: target,
        binaural: format!("{name}/binaural.wav"),
        trajectory: format!("{name}/trajectory.json"),
        condition: format!("{name}/condition.bin"),
    })
}
