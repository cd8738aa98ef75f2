//! Crate-wide error type.
//!
//! Every fallible operation in this crate returns [`Error`]. Variants carry
//! enough context to print a one-line diagnostic; callers that need to react
//! programmatically can match on the variant instead of parsing messages.

use std::path::PathBuf;

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for geometry, ingest, HRIR handling, rendering,
/// dataset synthesis and metric evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument failed validation (non-finite, out of range, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Bounding box with no area after the rounding tolerance.
    #[error("degenerate box: ({x0}, {y0}, {x1}, {y1})")]
    DegenerateBox { x0: f64, y0: f64, x1: f64, y1: f64 },

    /// A pixel coordinate fell outside the frame or depth map.
    #[error("pixel ({w}, {h}) out of bounds for {width}x{height} map")]
    PixelOutOfBounds { w: i64, h: i64, width: u32, height: u32 },

    /// Depth map dimensions disagree with the video frame geometry.
    #[error("depth map is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DepthDimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },

    /// A detection track contained no usable detections.
    #[error("no detections")]
    NoDetections,

    /// Trajectory operations need at least two points.
    #[error("trajectory too short: {len} point(s), need at least {min}")]
    TrajectoryTooShort { len: usize, min: usize },

    /// Outlier removal discarded every frame; nothing left to interpolate.
    #[error("trajectory unrecoverable: outlier removal dropped all {len} frames")]
    TrajectoryUnrecoverable { len: usize },

    /// Requested playback distance outside the validity range of the
    /// distance-resampling model.
    #[error("distance out of range: {distance_m} m (valid: 0 < d <= {max_m} m)")]
    DistanceOutOfRange { distance_m: f64, max_m: f64 },

    /// A direction required by a scheme is absent from the HRIR set.
    #[error("missing direction: az {azimuth_deg} deg, el {elevation_deg} deg (tolerance {tolerance_deg} deg)")]
    MissingDirection { azimuth_deg: f64, elevation_deg: f64, tolerance_deg: f64 },

    /// Two HRIR entries claim the same direction.
    #[error("duplicate direction: az {azimuth_deg} deg, el {elevation_deg} deg")]
    DuplicateDirection { azimuth_deg: f64, elevation_deg: f64 },

    /// A direction filter selected nothing.
    #[error("no directions in range")]
    NoDirectionsInRange,

    /// Impulse responses within one set must share a single length.
    #[error("length mismatch: {context}")]
    LengthMismatch { context: String },

    /// Audio buffers that must share a sample rate do not.
    #[error("sample-rate mismatch: {got} Hz vs {want} Hz")]
    SampleRateMismatch { got: u32, want: u32 },

    /// Audio has fewer samples than requested segments.
    #[error("audio too short: {samples} sample(s) for {segments} segment(s)")]
    AudioTooShort { samples: usize, segments: usize },

    /// No usable input clips were found when building a dataset.
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    /// Analysis window exceeds the signal it should slide over.
    #[error("window longer than signal: {window} > {samples} samples")]
    WindowTooLong { window: usize, samples: usize },

    /// Angle series compared element-wise must have equal lengths.
    #[error("mismatched series lengths: {got} vs {want}")]
    SeriesLengthMismatch { got: usize, want: usize },

    /// Audio and trajectory describe differently sized time spans.
    #[error("duration mismatch: audio {audio_s:.3} s vs trajectory {trajectory_s:.3} s (tolerance {tolerance_pct}%)")]
    DurationMismatch { audio_s: f64, trajectory_s: f64, tolerance_pct: f64 },

    /// Structured input (manifest, track, header) that parses but makes no sense.
    #[error("invalid {kind}: {detail}")]
    InvalidFormat { kind: &'static str, detail: String },

    /// Filesystem failure with the offending path attached.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// WAV (de)serialization failure.
    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    /// Attaches a path to an I/O error; keeps call sites terse.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
