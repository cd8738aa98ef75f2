//! Head-related impulse response sets.
//!
//! An [`HrirSet`] is a bag of direction-labeled impulse response pairs
//! measured (or synthesized) at a single reference distance. This module
//! loads sets from a JSON manifest, selects entries by direction, rescales
//! them to other source distances, filters scheme-specific subsets, and can
//! synthesize a simple spherical-head set for testing and demos.
//!
//! # Manifest format
//!
//! ```json
//! {
//!   "subject_id": "pp87",
//!   "sample_rate": 44100,
//!   "ref_distance_m": 1.47,
//!   "entries": [
//!     { "azimuth_deg": 0.0, "elevation_deg": 0.0,
//!       "left_file": "ir_000_l.f32", "right_file": "ir_000_r.f32" }
//!   ]
//! }
//! ```
//!
//! Impulse files are raw little-endian 32-bit floats; paths are resolved
//! relative to the manifest's directory. All entries of a set must share one
//! impulse length and no two entries may claim the same direction.
//!
//! # Distance handling
//!
//! Sets are measured at `ref_distance_m`. Rendering at another distance `d`
//! time-stretches the response by `d / ref` (linear interpolation, length
//! rounded) so the onset delay scales with distance, and optionally applies
//! a spherical-spreading gain `ref / d`. The model is accepted for
//! `0 < d <= max_distance_m`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{azimuth_difference_deg, wrap_azimuth_deg, GridScheme};

/// Speed of sound used by the synthetic head model, meters per second.
pub const SPEED_OF_SOUND_M_S: f64 = 343.0;

/// Default head radius of the synthetic head model, meters.
pub const DEFAULT_HEAD_RADIUS_M: f64 = 0.0875;

/// Reference measurement distance shared by the bundled tooling, meters.
pub const DEFAULT_REF_DISTANCE_M: f64 = 1.47;

/// Angular tolerance when matching a requested direction against a set.
pub const COARSE_MATCH_TOLERANCE_DEG: f64 = 1.0;

/// Elevation magnitude bound of the fine rendering subset, degrees.
pub const FINE_MAX_ELEVATION_DEG: f64 = 40.0;

/// One direction's impulse response pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Hrir {
    /// Direction azimuth in `[0, 360)` degrees.
    pub azimuth_deg: f64,
    /// Direction elevation in `[-90, 90]` degrees.
    pub elevation_deg: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Hrir {
    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

/// A validated set of impulse responses sharing sample rate, length and
/// measurement distance.
#[derive(Debug, Clone, PartialEq)]
pub struct HrirSet {
    pub subject_id: String,
    pub sample_rate: u32,
    pub ref_distance_m: f64,
    entries: Vec<Hrir>,
}

impl HrirSet {
    /// Validates and assembles a set: at least one entry, equal left/right
    /// and cross-entry lengths, finite samples, unique directions.
    pub fn new(
        subject_id: impl Into<String>,
        sample_rate: u32,
        ref_distance_m: f64,
        entries: Vec<Hrir>,
    ) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidParameter("sample rate must be positive".into()));
        }
        if !ref_distance_m.is_finite() || ref_distance_m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "reference distance must be positive, got {ref_distance_m}"
            )));
        }
        if entries.is_empty() {
            return Err(Error::InvalidFormat { kind: "hrir set", detail: "no entries".into() });
        }
        let len = entries[0].left.len();
        if len == 0 {
            return Err(Error::InvalidFormat { kind: "hrir set", detail: "empty impulse".into() });
        }
        for (i, e) in entries.iter().enumerate() {
            if e.left.len() != len || e.right.len() != len {
                return Err(Error::LengthMismatch {
                    context: format!(
                        "entry {i}: left {} / right {} vs set length {len}",
                        e.left.len(),
                        e.right.len()
                    ),
                });
            }
            if e.left.iter().chain(&e.right).any(|v| !v.is_finite()) {
                return Err(Error::InvalidFormat {
                    kind: "hrir set",
                    detail: format!("entry {i} contains non-finite samples"),
                });
            }
            if !(-90.0..=90.0).contains(&e.elevation_deg) {
                return Err(Error::InvalidParameter(format!(
                    "entry {i}: elevation {} outside [-90, 90]",
                    e.elevation_deg
                )));
            }
        }
        for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let same_az = wrap_azimuth_deg(entries[i].azimuth_deg)
                    == wrap_azimuth_deg(entries[j].azimuth_deg);
                if same_az && entries[i].elevation_deg == entries[j].elevation_deg {
                    return Err(Error::DuplicateDirection {
                        azimuth_deg: entries[i].azimuth_deg,
                        elevation_deg: entries[i].elevation_deg,
                    });
                }
            }
        }
        let entries = entries
            .into_iter()
            .map(|mut e| {
                e.azimuth_deg = wrap_azimuth_deg(e.azimuth_deg);
                e
            })
            .collect();
        Ok(HrirSet { subject_id: subject_id.into(), sample_rate, ref_distance_m, entries })
    }

    pub fn entries(&self) -> &[Hrir] {
        &self.entries
    }

    /// Impulse length shared by every entry.
    pub fn impulse_len(&self) -> usize {
        self.entries[0].left.len()
    }

    /// Entry whose direction is closest to the target by great-circle
    /// distance; exact ties keep the earliest entry.
    pub fn select_direction(&self, azimuth_deg: f64, elevation_deg: f64) -> &Hrir {
        let mut best = &self.entries[0];
        let mut best_cos = direction_cosine(azimuth_deg, elevation_deg, best.azimuth_deg, best.elevation_deg);
        for e in &self.entries[1..] {
            let c = direction_cosine(azimuth_deg, elevation_deg, e.azimuth_deg, e.elevation_deg);
            // Larger cosine means smaller angle; strict improvement keeps the
            // earliest entry on exact ties.
            if c > best_cos {
                best = e;
                best_cos = c;
            }
        }
        best
    }

    /// Subset usable for fine-grained rendering: frontal hemisphere
    /// (azimuth in `[270, 360) + [0, 90]`) at elevations within
    /// [`FINE_MAX_ELEVATION_DEG`] of the horizon. Entry order is preserved.
    pub fn fine_subset(&self) -> Result<HrirSet> {
        let entries: Vec<Hrir> = self
            .entries
            .iter()
            .filter(|e| {
                let az = e.azimuth_deg;
                let frontal = az <= 90.0 || az >= 270.0;
                frontal && e.elevation_deg.abs() <= FINE_MAX_ELEVATION_DEG
            })
            .cloned()
            .collect();
        if entries.is_empty() {
            return Err(Error::NoDirectionsInRange);
        }
        HrirSet::new(self.subject_id.clone(), self.sample_rate, self.ref_distance_m, entries)
    }

    /// Subset used by the coarse grid scheme: one entry per grid cell
    /// direction, ordered column-major to match the grid enumeration. Each
    /// requested direction must be present within
    /// [`COARSE_MATCH_TOLERANCE_DEG`]; the nearest matching entry wins.
    pub fn coarse_subset(&self, scheme: &GridScheme) -> Result<HrirSet> {
        scheme.validate()?;
        let mut entries = Vec::new();
        for dir in scheme.cell_directions() {
            let e = self.select_direction(dir.azimuth_deg, dir.elevation_deg);
            let dist = great_circle_deg(dir.azimuth_deg, dir.elevation_deg, e.azimuth_deg, e.elevation_deg);
            if dist > COARSE_MATCH_TOLERANCE_DEG {
                return Err(Error::MissingDirection {
                    azimuth_deg: dir.azimuth_deg,
                    elevation_deg: dir.elevation_deg,
                    tolerance_deg: COARSE_MATCH_TOLERANCE_DEG,
                });
            }
            entries.push(e.clone());
        }
        HrirSet::new(self.subject_id.clone(), self.sample_rate, self.ref_distance_m, entries)
    }
}

/// Cosine of the great-circle angle between two directions. Azimuth
/// differences are wrapped in degrees before the radian conversion so that
/// mirrored direction pairs produce bitwise-identical values.
fn direction_cosine(az1: f64, el1: f64, az2: f64, el2: f64) -> f64 {
    let daz = azimuth_difference_deg(az1, az2).to_radians();
    let (e1, e2) = (el1.to_radians(), el2.to_radians());
    (e1.sin() * e2.sin() + e1.cos() * e2.cos() * daz.cos()).clamp(-1.0, 1.0)
}

/// Great-circle angle between two directions, degrees.
pub fn great_circle_deg(az1: f64, el1: f64, az2: f64, el2: f64) -> f64 {
    direction_cosine(az1, el1, az2, el2).acos().to_degrees()
}

/// Rescales an impulse response from the set's reference distance to another
/// source distance.
///
/// The response is time-stretched by `ratio = distance / ref` via linear
/// interpolation (output length `round(len * ratio)`), shifting the onset
/// delay proportionally. When `apply_gain` is set, a spherical-spreading
/// factor `ref / distance` scales the amplitude. `distance == ref` returns a
/// bit-identical copy. Distances outside `(0, max_distance_m]` are rejected.
pub fn resample_for_distance(
    h: &Hrir,
    distance_m: f64,
    ref_distance_m: f64,
    max_distance_m: f64,
    apply_gain: bool,
) -> Result<Hrir> {
    if !distance_m.is_finite() || distance_m <= 0.0 || distance_m > max_distance_m {
        return Err(Error::DistanceOutOfRange { distance_m, max_m: max_distance_m });
    }
    if !ref_distance_m.is_finite() || ref_distance_m <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reference distance must be positive, got {ref_distance_m}"
        )));
    }
    if distance_m == ref_distance_m {
        return Ok(h.clone());
    }
    let ratio = distance_m / ref_distance_m;
    let gain = if apply_gain { ref_distance_m / distance_m } else { 1.0 };
    let stretch = |input: &[f64]| -> Vec<f64> {
        let out_len = ((input.len() as f64) * ratio).round().max(1.0) as usize;
        (0..out_len)
            .map(|i| {
                let p = i as f64 / ratio;
                let lo = p.floor() as usize;
                let frac = p - lo as f64;
                let a = input.get(lo).copied().unwrap_or(0.0);
                let b = input.get(lo + 1).copied().unwrap_or(0.0);
                gain * (a + frac * (b - a))
            })
            .collect()
    };
    Ok(Hrir {
        azimuth_deg: h.azimuth_deg,
        elevation_deg: h.elevation_deg,
        left: stretch(&h.left),
        right: stretch(&h.right),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    azimuth_deg: f64,
    elevation_deg: f64,
    left_file: String,
    right_file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    subject_id: String,
    sample_rate: u32,
    ref_distance_m: f64,
    entries: Vec<ManifestEntry>,
}

fn read_f32_plane(path: &Path) -> Result<Vec<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::InvalidFormat {
            kind: "impulse file",
            detail: format!("{}: size {} not a multiple of 4", path.display(), bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect())
}

/// Loads an HRIR set from a JSON manifest; impulse file paths resolve
/// relative to the manifest's directory.
pub fn load_hrir_set(manifest_path: impl AsRef<Path>) -> Result<HrirSet> {
    let manifest_path = manifest_path.as_ref();
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        entries.push(Hrir {
            azimuth_deg: e.azimuth_deg,
            elevation_deg: e.elevation_deg,
            left: read_f32_plane(&base.join(&e.left_file))?,
            right: read_f32_plane(&base.join(&e.right_file))?,
        });
    }
    HrirSet::new(manifest.subject_id, manifest.sample_rate, manifest.ref_distance_m, entries)
}

/// Writes a set as `manifest.json` plus raw f32 impulse files into `dir`,
/// creating it if needed. Returns the manifest path.
pub fn save_hrir_set(set: &HrirSet, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest {
        subject_id: set.subject_id.clone(),
        sample_rate: set.sample_rate,
        ref_distance_m: set.ref_distance_m,
        entries: Vec::with_capacity(set.entries.len()),
    };
    for (i, e) in set.entries.iter().enumerate() {
        let left_file = format!("ir_{i:03}_l.f32");
        let right_file = format!("ir_{i:03}_r.f32");
        for (file, samples) in [(&left_file, &e.left), (&right_file, &e.right)] {
            let mut bytes = Vec::with_capacity(samples.len() * 4);
            for &s in samples.iter() {
                bytes.extend_from_slice(&(s as f32).to_le_bytes());
            }
            let path = dir.join(file);
            std::fs::write(&path, bytes).map_err(|err| Error::io(path, err))?;
        }
        manifest.entries.push(ManifestEntry {
            azimuth_deg: e.azimuth_deg,
            elevation_deg: e.elevation_deg,
            left_file,
            right_file,
        });
    }
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Parameters of the synthetic spherical-head generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthHeadSpec {
    pub sample_rate: u32,
    /// Head radius driving interaural delays, meters.
    pub head_radius_m: f64,
    /// Distance the set claims to be measured at, meters.
    pub ref_distance_m: f64,
    /// Delay of the earlier ear's impulse, seconds; keeps resampled onsets
    /// inside the buffer.
    pub base_delay_s: f64,
    /// Fraction of amplitude lost at the fully shadowed ear, in `[0, 1)`.
    pub shadow_depth: f64,
}

impl SynthHeadSpec {
    pub fn new(sample_rate: u32) -> Self {
        SynthHeadSpec {
            sample_rate,
            head_radius_m: DEFAULT_HEAD_RADIUS_M,
            ref_distance_m: DEFAULT_REF_DISTANCE_M,
            base_delay_s: 0.001,
            shadow_depth: 0.5,
        }
    }
}

/// Interaural time difference of a rigid spherical head for a lateral angle
/// `theta` (radians, positive toward the leading ear):
/// `(radius / c) * (theta + sin(theta))`.
pub fn spherical_head_itd_s(lateral_angle_rad: f64, head_radius_m: f64) -> f64 {
    (head_radius_m / SPEED_OF_SOUND_M_S) * (lateral_angle_rad + lateral_angle_rad.sin())
}

/// Synthesizes an impulse response set for a rigid spherical head.
///
/// Each direction gets a pair of single (fractionally placed) impulses:
/// the interaural delay follows the spherical-head formula split
/// antisymmetrically across the ears around `base_delay_s`, and a cosine law
/// sets the level of each ear from the angle between the source direction
/// and that ear's axis. Directions are `(azimuth, elevation)` pairs in
/// degrees.
///
/// Lateral geometry is computed from `|azimuth|` folded into the left half
/// plane, so mirrored directions produce exactly mirrored entries: the left
/// impulse of `(az, el)` equals the right impulse of `(360 - az, el)`
/// bit for bit.
pub fn synth_spherical_head(directions: &[(f64, f64)], spec: &SynthHeadSpec) -> Result<HrirSet> {
    if spec.sample_rate == 0 {
        return Err(Error::InvalidParameter("sample rate must be positive".into()));
    }
    if !(0.0..1.0).contains(&spec.shadow_depth) {
        return Err(Error::InvalidParameter(format!(
            "shadow depth {} outside [0, 1)",
            spec.shadow_depth
        )));
    }
    if directions.is_empty() {
        return Err(Error::InvalidFormat { kind: "hrir set", detail: "no directions".into() });
    }
    let rate = f64::from(spec.sample_rate);
    let max_half_itd = spherical_head_itd_s(std::f64::consts::FRAC_PI_2, spec.head_radius_m) / 2.0;
    let len = ((spec.base_delay_s + max_half_itd) * rate).ceil() as usize + 2;

    // Level of one ear given the cosine of the angle between the source
    // direction and that ear's axis: full amplitude on-axis, dipping by
    // shadow_depth on the far side.
    let ear_gain = |cos_angle: f64| 1.0 - spec.shadow_depth * (1.0 - cos_angle) / 2.0;

    let mut entries = Vec::with_capacity(directions.len());
    for &(azimuth_deg, elevation_deg) in directions {
        let az = wrap_azimuth_deg(azimuth_deg);
        let az_signed = if az > 180.0 { az - 360.0 } else { az };
        // Lateral sine from the magnitude only: mirrored azimuths share the
        // exact arithmetic and differ purely by which ear leads.
        let lateral_sine =
            (elevation_deg.to_radians().cos() * az_signed.abs().to_radians().sin()).clamp(0.0, 1.0);
        let lateral_angle = lateral_sine.asin();
        let itd = spherical_head_itd_s(lateral_angle, spec.head_radius_m);
        let near_delay = spec.base_delay_s - itd / 2.0;
        let far_delay = spec.base_delay_s + itd / 2.0;
        let near_gain = ear_gain(lateral_sine);
        let far_gain = ear_gain(-lateral_sine);

        let mut near = vec![0.0; len];
        let mut far = vec![0.0; len];
        place_impulse(&mut near, near_delay * rate, near_gain);
        place_impulse(&mut far, far_delay * rate, far_gain);

        // Sources left of the median plane (azimuth in (0, 180)) reach the
        // left ear first.
        let (left, right) = if az_signed > 0.0 { (near, far) } else { (far, near) };
        entries.push(Hrir { azimuth_deg: az, elevation_deg, left, right });
    }
    HrirSet::new("synthetic-head", spec.sample_rate, spec.ref_distance_m, entries)
}

/// Adds a unit impulse at a fractional sample position, splitting it
/// linearly across the two neighboring samples.
fn place_impulse(buf: &mut [f64], position: f64, gain: f64) {
    debug_assert!(position >= 0.0 && position < (buf.len() - 1) as f64);
    let lo = position.floor() as usize;
    let frac = position - lo as f64;
    buf[lo] += gain * (1.0 - frac);
    buf[lo + 1] += gain * frac;
}

/// Frontal-hemisphere direction grid for synthetic sets: azimuths from
/// -90 to +90 degrees (wrapped) and elevations from -40 to +40, at the given
/// steps. Yields `(azimuth, elevation)` pairs.
pub fn frontal_grid_directions(az_step_deg: u32, el_step_deg: u32) -> Vec<(f64, f64)> {
    assert!(az_step_deg > 0 && el_step_deg > 0, "steps must be positive");
    let mut out = Vec::new();
    let mut el = -(FINE_MAX_ELEVATION_DEG as i64);
    while el <= FINE_MAX_ELEVATION_DEG as i64 {
        let mut az = -90i64;
        while az <= 90 {
            out.push((wrap_azimuth_deg(az as f64), el as f64));
            az += i64::from(az_step_deg);
        }
        el += i64::from(el_step_deg);
    }
    out
}
