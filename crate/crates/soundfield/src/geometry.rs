//! Screen-to-sound-field geometry.
//!
//! This module turns planar observations of an on-screen object (pixel
//! coordinates plus a relative depth estimate) into listener-centered 3D
//! coordinates, cleans the resulting trajectories, and converts between
//! cartesian and spherical forms.
//!
//! # Coordinate frames
//!
//! Pixel space has its origin at the top-left corner of the video frame:
//! `w` grows to the right, `h` grows downward. The sound field is a
//! right-handed listener frame:
//!
//! * `+x` points away from the listener, into the screen (depth);
//! * `+y` points to the listener's right (screen right);
//! * `+z` points up.
//!
//! Azimuth is measured counterclockwise from `+x` when seen from above, in
//! `[0, 360)` degrees: the listener's left is 90 deg, the right is 270 deg.
//! Elevation is the angle above the horizontal plane in `[-90, 90]`.
//!
//! # Mapping
//!
//! A frame of width `W` pixels spans `2 * s_y` meters at the screen plane,
//! giving the meters-per-pixel factor `delta = 2 * s_y / W`. Relative depth
//! is min-max normalized per frame and scaled by `gamma` (pixels, `W / 2`
//! unless overridden) so that depth and the planar offsets live on comparable
//! scales before `delta` converts all three to meters:
//!
//! ```text
//! x = delta * normalized_depth
//! y = delta * (w - W / 2)
//! z = -delta * (h - H / 2)
//! ```
//!
//! With the default `gamma = W / 2` the depth axis spans `[0, s_y]` meters
//! and the lateral axis spans `[-s_y, +s_y]`.

use serde::Deserialize;

use crate::error::{Error, Result};

/// Default half-width of the sound stage in meters. Matches the reference
/// listening setup where the screen plane sits 1.47 m from the listener.
pub const DEFAULT_S_Y_M: f64 = 1.47;

/// Default upper bound for source distances, in meters. Beyond this the
/// distance-resampling model is not considered valid.
pub const DEFAULT_MAX_DISTANCE_M: f64 = 6.0;

/// Default video frame rate used when none is supplied.
pub const DEFAULT_FPS: f64 = 25.0;

/// Fraction of the motion-magnitude distribution used as the outlier
/// threshold during trajectory smoothing.
const OUTLIER_PERCENTILE: f64 = 0.95;

/// Video frame geometry: pixel dimensions plus frame rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub width_px: u32,
    pub height_px: u32,
    /// Frames per second; strictly positive but not necessarily integral.
    pub fps: f64,
}

impl FrameSpec {
    /// Validates dimensions and rate.
    pub fn new(width_px: u32, height_px: u32, fps: f64) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::InvalidParameter(format!(
                "frame dimensions must be positive, got {width_px}x{height_px}"
            )));
        }
        if !fps.is_finite() || fps <= 0.0 {
            return Err(Error::InvalidParameter(format!("fps must be positive, got {fps}")));
        }
        Ok(FrameSpec { width_px, height_px, fps })
    }
}

/// Parameters of the screen-to-sound-field mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoundFieldConfig {
    /// Half-width of the sound stage at the screen plane, meters.
    pub s_y_m: f64,
    /// Depth scale in pixels; `None` selects `width / 2`.
    pub gamma_override_px: Option<f64>,
    /// Largest admissible source distance, meters.
    pub max_distance_m: f64,
}

impl Default for SoundFieldConfig {
    fn default() -> Self {
        SoundFieldConfig {
            s_y_m: DEFAULT_S_Y_M,
            gamma_override_px: None,
            max_distance_m: DEFAULT_MAX_DISTANCE_M,
        }
    }
}

impl SoundFieldConfig {
    /// Depth scale in pixels for the given frame.
    pub fn gamma_px(&self, frame: &FrameSpec) -> f64 {
        self.gamma_override_px.unwrap_or(f64::from(frame.width_px) / 2.0)
    }

    /// Validates the stage half-width, optional gamma override and distance bound.
    pub fn validate(&self) -> Result<()> {
        if !self.s_y_m.is_finite() || self.s_y_m <= 0.0 {
            return Err(Error::InvalidParameter(format!("s_y must be positive, got {}", self.s_y_m)));
        }
        if let Some(g) = self.gamma_override_px {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {g}")));
            }
        }
        if !self.max_distance_m.is_finite() || self.max_distance_m <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "max distance must be positive, got {}",
                self.max_distance_m
            )));
        }
        Ok(())
    }
}

/// A point in the listener-centered sound field, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Euclidean distance to another point.
    pub fn distance_to(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Linear interpolation: `t = 0` yields `self`, `t = 1` yields `other`.
    pub fn lerp(&self, other: &Point3, t: f64) -> Point3 {
        Point3 {
            x: self.x + t * (other.x - self.x),
            y: self.y + t * (other.y - self.y),
            z: self.z + t * (other.z - self.z),
        }
    }
}

/// One frame's planar observation of the tracked object: bounding-box center
/// in pixels plus the raw (relative) depth sampled at that center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarObservation {
    /// 1-based video frame index.
    pub frame_index: usize,
    /// Horizontal pixel coordinate of the box center.
    pub w_px: f64,
    /// Vertical pixel coordinate of the box center.
    pub h_px: f64,
    /// Relative depth at the center, in the depth map's own units.
    pub depth: f64,
}

/// A listener-centered source trajectory sampled at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory3D {
    points: Vec<Point3>,
    rate_hz: f64,
}

impl Trajectory3D {
    /// Builds a trajectory, validating that every point is finite, sits in
    /// front of the listener (`x >= 0`) and that the rate is positive.
    pub fn new(points: Vec<Point3>, rate_hz: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TrajectoryTooShort { len: 0, min: 1 });
        }
        if !rate_hz.is_finite() || rate_hz <= 0.0 {
            return Err(Error::InvalidParameter(format!("trajectory rate must be positive, got {rate_hz}")));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidParameter(format!("point {i} is not finite")));
            }
            if p.x < -1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "point {i} lies behind the listener (x = {})",
                    p.x
                )));
            }
        }
        Ok(Trajectory3D { points, rate_hz })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// Points per second.
    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Duration covered by the trajectory in seconds.
    pub fn duration_s(&self) -> f64 {
        self.points.len() as f64 / self.rate_hz
    }

    /// Serializes to the on-disk trajectory document: a JSON object with a
    /// `rate` field (points per second) and a `points` array of `[x, y, z]`
    /// triples, each coordinate printed with six decimal places.
    pub fn to_json_string(&self) -> String {
        let mut out = String::with_capacity(32 + self.points.len() * 40);
        out.push_str("{\n");
        out.push_str(&format!("  \"rate\": {},\n", self.rate_hz));
        out.push_str("  \"points\": [\n");
        for (i, p) in self.points.iter().enumerate() {
            let sep = if i + 1 == self.points.len() { "" } else { "," };
            out.push_str(&format!("    [{:.6}, {:.6}, {:.6}]{sep}\n", p.x, p.y, p.z));
        }
        out.push_str("  ]\n}\n");
        out
    }

    /// Parses the trajectory document produced by [`Trajectory3D::to_json_string`].
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            rate: f64,
            points: Vec<[f64; 3]>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let points = doc.points.iter().map(|p| Point3::new(p[0], p[1], p[2])).collect();
        Trajectory3D::new(points, doc.rate)
    }

    /// Writes the trajectory document to a file.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }

    /// Reads a trajectory document from a file.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Direction (and distance) of a source relative to the listener.
///
/// Azimuth is wrapped into `[0, 360)` on construction; elevation must lie in
/// `[-90, 90]` and the radius must be non-negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalDirection {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub radius_m: f64,
}

impl SphericalDirection {
    pub fn new(azimuth_deg: f64, elevation_deg: f64, radius_m: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() || !elevation_deg.is_finite() || !radius_m.is_finite() {
            return Err(Error::InvalidParameter("non-finite spherical coordinate".into()));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::InvalidParameter(format!(
                "elevation {elevation_deg} outside [-90, 90]"
            )));
        }
        if radius_m < 0.0 {
            return Err(Error::InvalidParameter(format!("negative radius {radius_m}")));
        }
        Ok(SphericalDirection {
            azimuth_deg: wrap_azimuth_deg(azimuth_deg),
            elevation_deg,
            radius_m,
        })
    }
}

/// Wraps an angle in degrees into `[0, 360)`.
pub fn wrap_azimuth_deg(az: f64) -> f64 {
    let w = az.rem_euclid(360.0);
    // rem_euclid can return exactly 360.0 when az is a tiny negative number.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Shortest angular difference between two azimuths, in `[0, 180]` degrees.
pub fn azimuth_difference_deg(a: f64, b: f64) -> f64 {
    let d = (wrap_azimuth_deg(a) - wrap_azimuth_deg(b)).abs();
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// Meters-per-pixel scale of the mapping: `2 * s_y / W`.
///
/// For the reference setup (`W = 1470`, `s_y = 1.47`) this is exactly
/// 0.002 m per pixel.
pub fn mapping_factor(config: &SoundFieldConfig, frame: &FrameSpec) -> f64 {
    2.0 * config.s_y_m / f64::from(frame.width_px)
}

/// Min-max normalizes a raw depth value into `[0, gamma_px]`.
///
/// A flat depth map (`d_max == d_min`) carries no usable ordering, so the
/// value is pinned to the middle of the range and a warning is logged.
pub fn normalize_depth(depth: f64, d_min: f64, d_max: f64, gamma_px: f64) -> f64 {
    if d_max <= d_min {
        log::warn!("flat depth map (min == max == {d_min}); using mid-range depth");
        return gamma_px / 2.0;
    }
    let t = (depth - d_min) / (d_max - d_min);
    (gamma_px * t).clamp(0.0, gamma_px)
}

/// Maps one planar observation into the listener frame.
///
/// `d_min` / `d_max` are the extrema of the observation's own depth map;
/// depth is normalized per frame so that consecutive frames with different
/// depth ranges still land on the same `[0, gamma]` scale.
pub fn map_to_sound_field(
    obs: &PlanarObservation,
    frame: &FrameSpec,
    config: &SoundFieldConfig,
    d_min: f64,
    d_max: f64,
) -> Result<Point3> {
    config.validate()?;
    if !obs.w_px.is_finite() || !obs.h_px.is_finite() || !obs.depth.is_finite() {
        return Err(Error::InvalidParameter("non-finite observation".into()));
    }
    if !d_min.is_finite() || !d_max.is_finite() || d_max < d_min {
        return Err(Error::InvalidParameter(format!(
            "bad depth range [{d_min}, {d_max}]"
        )));
    }
    let delta = mapping_factor(config, frame);
    let gamma = config.gamma_px(frame);
    let depth = normalize_depth(obs.depth, d_min, d_max, gamma);
    let half_w = f64::from(frame.width_px) / 2.0;
    let half_h = f64::from(frame.height_px) / 2.0;
    Ok(Point3 {
        x: delta * depth,
        y: delta * (obs.w_px - half_w),
        z: -delta * (obs.h_px - half_h),
    })
}

/// Euclidean distances between consecutive trajectory points.
///
/// Returns `K - 1` magnitudes for `K` input points; at least two points are
/// required.
pub fn motion_magnitudes(points: &[Point3]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::TrajectoryTooShort { len: points.len(), min: 2 });
    }
    Ok(points.windows(2).map(|w| w[0].distance_to(&w[1])).collect())
}

/// Linear-interpolation percentile (the convention used by most numeric
/// packages): rank `q * (n - 1)` interpolated between the two nearest order
/// statistics.
fn percentile_linear(values: &[f64], q: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("percentile over non-finite values"));
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Removes motion outliers from a trajectory and re-interpolates the holes.
///
/// Consecutive-point distances are compared against the 95th percentile of
/// their own distribution (linear-interpolation percentile). Whenever a
/// distance strictly exceeds the threshold, both frames it connects are
/// dropped together with one neighbor frame on each side. The surviving
/// frames anchor a per-dimension linear interpolation over frame index;
/// leading and trailing holes hold the nearest surviving value.
///
/// The pass runs once. Trajectories whose motion is uniform (constant or
/// linear) are fixed points of this operation: every distance equals the
/// threshold, nothing strictly exceeds it.
///
/// Errors with [`Error::TrajectoryUnrecoverable`] if no frame survives.
pub fn smooth_trajectory(trajectory: &Trajectory3D) -> Result<Trajectory3D> {
    let points = trajectory.points();
    let deltas = motion_magnitudes(points)?;
    let threshold = percentile_linear(&deltas, OUTLIER_PERCENTILE);

    let n = points.len();
    let mut flagged = vec![false; n];
    for (k, &d) in deltas.iter().enumerate() {
        if d > threshold {
            flagged[k] = true;
            flagged[k + 1] = true;
        }
    }
    let mut dropped = flagged.clone();
    for (k, &f) in flagged.iter().enumerate() {
        if f {
            if k > 0 {
                dropped[k - 1] = true;
            }
            if k + 1 < n {
                dropped[k + 1] = true;
            }
        }
    }

    if dropped.iter().all(|&d| d) {
        return Err(Error::TrajectoryUnrecoverable { len: n });
    }

    let holes: Vec<Option<Point3>> = points
        .iter()
        .zip(&dropped)
        .map(|(p, &d)| if d { None } else { Some(*p) })
        .collect();
    let filled = fill_gaps(&holes)?;
    Trajectory3D::new(filled, trajectory.rate_hz())
}

/// Fills missing trajectory points by per-dimension linear interpolation over
/// the index axis. Interior runs of `None` are interpolated between their
/// flanking known points; leading and trailing runs hold the nearest known
/// value. Errors if every entry is `None`.
pub fn fill_gaps(points: &[Option<Point3>]) -> Result<Vec<Point3>> {
    let known: Vec<usize> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.map(|_| i))
        .collect();
    if known.is_empty() {
        return Err(Error::TrajectoryUnrecoverable { len: points.len() });
    }

    let mut out = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        if let Some(p) = points[i] {
            out.push(p);
            continue;
        }
        // Nearest known anchors on each side, if any.
        let prev = known.iter().rev().find(|&&k| k < i).copied();
        let next = known.iter().find(|&&k| k > i).copied();
        let p = match (prev, next) {
            (Some(a), Some(b)) => {
                let t = (i - a) as f64 / (b - a) as f64;
                points[a].unwrap().lerp(&points[b].unwrap(), t)
            }
            (Some(a), None) => points[a].unwrap(),
            (None, Some(b)) => points[b].unwrap(),
            (None, None) => unreachable!("known is non-empty"),
        };
        out.push(p);
    }
    Ok(out)
}

/// Coarse spatial discretization: a `cols x rows` screen grid crossed with a
/// ladder of fixed source distances.
///
/// Each grid column carries a fixed rendering azimuth and each row a fixed
/// elevation, spread symmetrically around straight ahead: columns span
/// +80 deg (leftmost) to -80 deg (rightmost), rows span +40 deg (top) to
/// -40 deg (bottom) for the default 5x3 grid. Crossing the 15 directions
/// with the distance ladder yields the scheme's 75 admissible positions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScheme {
    pub cols: u32,
    pub rows: u32,
    /// Ascending source distances in meters, one per depth bin.
    pub depth_bins_m: Vec<f64>,
}

impl Default for GridScheme {
    fn default() -> Self {
        GridScheme { cols: 5, rows: 3, depth_bins_m: vec![1.0, 2.0, 3.0, 4.0, 5.0] }
    }
}

/// Widest column azimuth magnitude, degrees. The leftmost column renders at
/// +80 deg, the rightmost at -80 deg (i.e. 280 deg wrapped).
const GRID_AZIMUTH_SPAN_DEG: f64 = 80.0;

/// Top row elevation, degrees; the bottom row mirrors it at -40 deg.
const GRID_ELEVATION_SPAN_DEG: f64 = 40.0;

impl GridScheme {
    /// Validates grid dimensions and the depth ladder (non-empty, finite,
    /// strictly ascending, positive).
    pub fn validate(&self) -> Result<()> {
        if self.cols == 0 || self.rows == 0 {
            return Err(Error::InvalidParameter("grid must have at least one cell".into()));
        }
        if self.depth_bins_m.is_empty() {
            return Err(Error::InvalidParameter("depth bin list is empty".into()));
        }
        for w in self.depth_bins_m.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter("depth bins must be strictly ascending".into()));
            }
        }
        if self.depth_bins_m.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::InvalidParameter("depth bins must be positive and finite".into()));
        }
        Ok(())
    }

    /// Rendering azimuth for a 1-based column index, degrees in `[0, 360)`.
    /// Columns run left to right across the screen, so azimuths run from
    /// +span (listener's left) down to -span (listener's right).
    pub fn column_azimuth_deg(&self, col: u32) -> f64 {
        assert!(col >= 1 && col <= self.cols, "column {col} outside 1..={}", self.cols);
        if self.cols == 1 {
            return 0.0;
        }
        let step = 2.0 * GRID_AZIMUTH_SPAN_DEG / f64::from(self.cols - 1);
        wrap_azimuth_deg(GRID_AZIMUTH_SPAN_DEG - f64::from(col - 1) * step)
    }

    /// Rendering elevation for a 1-based row index, degrees. Rows run top to
    /// bottom, so elevations run from +span down to -span.
    pub fn row_elevation_deg(&self, row: u32) -> f64 {
        assert!(row >= 1 && row <= self.rows, "row {row} outside 1..={}", self.rows);
        if self.rows == 1 {
            return 0.0;
        }
        let step = 2.0 * GRID_ELEVATION_SPAN_DEG / f64::from(self.rows - 1);
        GRID_ELEVATION_SPAN_DEG - f64::from(row - 1) * step
    }

    /// Rendering direction of one grid cell at a given depth bin value.
    pub fn cell_direction(&self, col: u32, row: u32, radius_m: f64) -> SphericalDirection {
        SphericalDirection {
            azimuth_deg: self.column_azimuth_deg(col),
            elevation_deg: self.row_elevation_deg(row),
            radius_m,
        }
    }

    /// All `cols * rows` cell directions ordered column-major (all rows of
    /// column 1, then column 2, ...), with unit radius.
    pub fn cell_directions(&self) -> Vec<SphericalDirection> {
        let mut out = Vec::with_capacity((self.cols * self.rows) as usize);
        for col in 1..=self.cols {
            for row in 1..=self.rows {
                out.push(self.cell_direction(col, row, 1.0));
            }
        }
        out
    }

    /// Every admissible coarse position: cells crossed with depth bins,
    /// column-major with the depth bin varying fastest. For the default
    /// scheme this enumerates 75 positions.
    pub fn coarse_positions(&self) -> Vec<(SphericalDirection, Point3)> {
        let mut out = Vec::with_capacity((self.cols * self.rows) as usize * self.depth_bins_m.len());
        for col in 1..=self.cols {
            for row in 1..=self.rows {
                for &r in &self.depth_bins_m {
                    let dir = self.cell_direction(col, row, r);
                    out.push((dir, spherical_to_cartesian(&dir)));
                }
            }
        }
        out
    }

    /// Nearest admissible coarse position to an arbitrary point (euclidean
    /// metric; exact ties keep the first position in enumeration order).
    pub fn nearest_position(&self, p: &Point3) -> Point3 {
        let mut best = None;
        for (_, candidate) in self.coarse_positions() {
            let d = candidate.distance_to(p);
            match best {
                None => best = Some((d, candidate)),
                Some((bd, _)) if d < bd => best = Some((d, candidate)),
                _ => {}
            }
        }
        best.expect("validated scheme has at least one position").1
    }
}

/// Grid cell an observation falls into, with its pixel-space center.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    /// 1-based column, counted from the left edge.
    pub col: u32,
    /// 1-based row, counted from the top edge.
    pub row: u32,
}

impl GridCell {
    /// Pixel coordinates of the cell center.
    pub fn center_px(&self, frame: &FrameSpec, scheme: &GridScheme) -> (f64, f64) {
        let cell_w = f64::from(frame.width_px) / f64::from(scheme.cols);
        let cell_h = f64::from(frame.height_px) / f64::from(scheme.rows);
        (
            (f64::from(self.col) - 0.5) * cell_w,
            (f64::from(self.row) - 0.5) * cell_h,
        )
    }
}

/// Locates the grid cell containing a pixel. Points exactly on an interior
/// boundary belong to the higher-index cell; coordinates must satisfy
/// `0 <= w < W`, `0 <= h < H`.
pub fn quantize_to_grid(w_px: f64, h_px: f64, frame: &FrameSpec, scheme: &GridScheme) -> Result<GridCell> {
    scheme.validate()?;
    let width = f64::from(frame.width_px);
    let height = f64::from(frame.height_px);
    if !w_px.is_finite() || !h_px.is_finite() || w_px < 0.0 || h_px < 0.0 || w_px >= width || h_px >= height {
        return Err(Error::PixelOutOfBounds {
            w: w_px.floor() as i64,
            h: h_px.floor() as i64,
            width: frame.width_px,
            height: frame.height_px,
        });
    }
    let col = ((w_px / (width / f64::from(scheme.cols))).floor() as u32 + 1).min(scheme.cols);
    let row = ((h_px / (height / f64::from(scheme.rows))).floor() as u32 + 1).min(scheme.rows);
    Ok(GridCell { col, row })
}

/// Snaps a distance to the nearest depth bin value; exact midpoints round to
/// the smaller bin, out-of-range distances clamp to the end bins.
pub fn quantize_depth(distance_m: f64, scheme: &GridScheme) -> Result<f64> {
    scheme.validate()?;
    if !distance_m.is_finite() {
        return Err(Error::InvalidParameter(format!("non-finite distance {distance_m}")));
    }
    let mut best = scheme.depth_bins_m[0];
    let mut best_d = (distance_m - best).abs();
    for &bin in &scheme.depth_bins_m[1..] {
        let d = (distance_m - bin).abs();
        // Strict improvement only: midpoint ties stay with the smaller bin.
        if d < best_d {
            best = bin;
            best_d = d;
        }
    }
    Ok(best)
}

/// Converts a listener-frame point to spherical coordinates.
///
/// Azimuth is `atan2(-y, x)` wrapped into `[0, 360)` (left = 90 deg, right =
/// 270 deg), elevation is `atan2(z, hypot(x, y))` and the radius is the
/// euclidean norm. The origin has no direction and produces an error.
pub fn cartesian_to_spherical(p: &Point3) -> Result<SphericalDirection> {
    if !p.is_finite() {
        return Err(Error::InvalidParameter("non-finite point".into()));
    }
    let radius = p.norm();
    if radius == 0.0 {
        return Err(Error::InvalidParameter("direction undefined at the origin".into()));
    }
    let azimuth = wrap_azimuth_deg((-p.y).atan2(p.x).to_degrees());
    let elevation = p.z.atan2(p.x.hypot(p.y)).to_degrees();
    Ok(SphericalDirection { azimuth_deg: azimuth, elevation_deg: elevation, radius_m: radius })
}

/// Inverse of [`cartesian_to_spherical`].
pub fn spherical_to_cartesian(dir: &SphericalDirection) -> Point3 {
    let az = dir.azimuth_deg.to_radians();
    let el = dir.elevation_deg.to_radians();
    Point3 {
        x: dir.radius_m * el.cos() * az.cos(),
        y: -dir.radius_m * el.cos() * az.sin(),
        z: dir.radius_m * el.sin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_1470() -> FrameSpec {
        FrameSpec::new(1470, 810, 25.0).unwrap()
    }

    fn config() -> SoundFieldConfig {
        SoundFieldConfig::default()
    }

    #[test]
    fn mapping_factor_reference_setup() {
        let delta = mapping_factor(&config(), &frame_1470());
        assert!((delta - 0.002).abs() < 1e-12, "delta = {delta}");
    }

    #[test]
    fn mapping_factor_scales_with_stage_width() {
        let cfg = SoundFieldConfig { s_y_m: 2.94, ..config() };
        let delta = mapping_factor(&cfg, &frame_1470());
        assert!((delta - 0.004).abs() < 1e-12);
    }

    #[test]
    fn normalize_depth_endpoints() {
        assert_eq!(normalize_depth(3.0, 3.0, 9.0, 735.0), 0.0);
        assert_eq!(normalize_depth(9.0, 3.0, 9.0, 735.0), 735.0);
        let mid = normalize_depth(6.0, 3.0, 9.0, 735.0);
        assert!((mid - 367.5).abs() < 1e-9);
    }

    #[test]
    fn normalize_depth_flat_map_pins_mid_range() {
        assert_eq!(normalize_depth(5.0, 5.0, 5.0, 735.0), 367.5);
    }

    #[test]
    fn map_center_right_of_frame() {
        // Observation 367.5 px right of center at maximum depth.
        let obs = PlanarObservation { frame_index: 1, w_px: 1102.5, h_px: 405.0, depth: 9.0 };
        let p = map_to_sound_field(&obs, &frame_1470(), &config(), 1.0, 9.0).unwrap();
        assert!((p.x - 1.47).abs() < 1e-9, "x = {}", p.x);
        assert!((p.y - 0.735).abs() < 1e-9, "y = {}", p.y);
        assert!(p.z.abs() < 1e-9, "z = {}", p.z);
    }

    #[test]
    fn map_top_left_corner_at_min_depth() {
        let obs = PlanarObservation { frame_index: 1, w_px: 0.0, h_px: 0.0, depth: 1.0 };
        let p = map_to_sound_field(&obs, &frame_1470(), &config(), 1.0, 9.0).unwrap();
        assert!(p.x.abs() < 1e-9);
        assert!((p.y - (-1.47)).abs() < 1e-9, "y = {}", p.y);
        assert!((p.z - 0.81).abs() < 1e-9, "z = {}", p.z);
    }

    #[test]
    fn map_frame_center_lands_on_axis() {
        let obs = PlanarObservation { frame_index: 1, w_px: 735.0, h_px: 405.0, depth: 4.0 };
        let p = map_to_sound_field(&obs, &frame_1470(), &config(), 1.0, 9.0).unwrap();
        assert_eq!(p.y, 0.0);
        assert_eq!(p.z, 0.0);
        assert!(p.x > 0.0);
    }

    #[test]
    fn map_rejects_inverted_depth_range() {
        let obs = PlanarObservation { frame_index: 1, w_px: 10.0, h_px: 10.0, depth: 2.0 };
        let err = map_to_sound_field(&obs, &frame_1470(), &config(), 9.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn lateral_extent_bounded_by_stage_half_width() {
        // Any pixel column inside the frame keeps |y| <= s_y.
        let frame = frame_1470();
        let cfg = config();
        for w in [0.0, 1.0, 734.0, 735.0, 1469.0] {
            let obs = PlanarObservation { frame_index: 1, w_px: w, h_px: 100.0, depth: 2.0 };
            let p = map_to_sound_field(&obs, &frame, &cfg, 1.0, 3.0).unwrap();
            assert!(p.y.abs() <= cfg.s_y_m + 1e-12, "w = {w}: y = {}", p.y);
        }
    }

    #[test]
    fn motion_magnitudes_basic() {
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(3.0, 4.0, 0.0)];
        assert_eq!(motion_magnitudes(&pts).unwrap(), vec![5.0]);
    }

    #[test]
    fn motion_magnitudes_constant_trajectory_is_zero() {
        let pts = vec![Point3::new(1.0, 2.0, 3.0); 4];
        assert_eq!(motion_magnitudes(&pts).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn motion_magnitudes_needs_two_points() {
        let err = motion_magnitudes(&[Point3::default()]).unwrap_err();
        assert!(matches!(err, Error::TrajectoryTooShort { len: 1, min: 2 }));
    }

    #[test]
    fn percentile_linear_interpolates() {
        let v = vec![0.0, 10.0];
        assert!((percentile_linear(&v, 0.95) - 9.5).abs() < 1e-12);
        let v = vec![1.0, 2.0, 3.0, 4.0];
        assert!((percentile_linear(&v, 0.5) - 2.5).abs() < 1e-12);
    }

    /// Reference drop-and-interpolate written independently of
    /// `smooth_trajectory`: recomputes the threshold from a sorted copy,
    /// marks outlier deltas, expands to neighbors, then interpolates each
    /// dimension with explicit index arithmetic.
    fn reference_smooth(points: &[Point3]) -> Vec<Point3> {
        let deltas: Vec<f64> = points.windows(2).map(|w| w[0].distance_to(&w[1])).collect();
        let mut sorted = deltas.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank = 0.95 * (sorted.len() - 1) as f64;
        let (lo, hi) = (rank.floor() as usize, rank.ceil() as usize);
        let thr = sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo]);

        let n = points.len();
        let mut drop = vec![false; n];
        for (k, &d) in deltas.iter().enumerate() {
            if d > thr {
                for f in k.saturating_sub(1)..=(k + 2).min(n - 1) {
                    drop[f] = true;
                }
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&i| !drop[i]).collect();
        assert!(!keep.is_empty(), "reference smoother dropped everything");
        let coord = |p: &Point3, dim: usize| match dim {
            0 => p.x,
            1 => p.y,
            _ => p.z,
        };
        (0..n)
            .map(|i| {
                if !drop[i] {
                    return points[i];
                }
                let prev = keep.iter().rev().find(|&&k| k < i);
                let next = keep.iter().find(|&&k| k > i);
                let mut vals = [0.0; 3];
                for (dim, v) in vals.iter_mut().enumerate() {
                    *v = match (prev, next) {
                        (Some(&a), Some(&b)) => {
                            let t = (i - a) as f64 / (b - a) as f64;
                            coord(&points[a], dim) + t * (coord(&points[b], dim) - coord(&points[a], dim))
                        }
                        (Some(&a), None) => coord(&points[a], dim),
                        (None, Some(&b)) => coord(&points[b], dim),
                        (None, None) => unreachable!(),
                    };
                }
                Point3::new(vals[0], vals[1], vals[2])
            })
            .collect()
    }

    #[test]
    fn smooth_constant_trajectory_is_fixed_point() {
        let pts = vec![Point3::new(1.0, -0.5, 0.25); 20];
        let traj = Trajectory3D::new(pts.clone(), 25.0).unwrap();
        let out = smooth_trajectory(&traj).unwrap();
        assert_eq!(out.points(), &pts[..]);
    }

    #[test]
    fn smooth_recovers_linear_ramp_with_spike() {
        let mut pts: Vec<Point3> = (0..200)
            .map(|k| Point3::new(1.0 + 0.005 * k as f64, -0.4 + 0.003 * k as f64, 0.1))
            .collect();
        let clean = pts.clone();
        pts[77] = Point3::new(4.0, 2.0, -1.0);
        let traj = Trajectory3D::new(pts.clone(), 25.0).unwrap();
        let out = smooth_trajectory(&traj).unwrap();
        for (k, (got, want)) in out.points().iter().zip(&clean).enumerate() {
            assert!(
                (got.x - want.x).abs() < 1e-9
                    && (got.y - want.y).abs() < 1e-9
                    && (got.z - want.z).abs() < 1e-9,
                "point {k}: got {got:?}, want {want:?}"
            );
        }
        assert_eq!(out.points(), &reference_smooth(&pts)[..]);
    }

    #[test]
    fn smooth_is_idempotent_on_smoothed_ramp() {
        let mut pts: Vec<Point3> =
            (0..120).map(|k| Point3::new(0.5 + 0.01 * k as f64, 0.0, 0.0)).collect();
        pts[60] = Point3::new(9.0, 1.0, 1.0);
        let once = smooth_trajectory(&Trajectory3D::new(pts, 25.0).unwrap()).unwrap();
        let twice = smooth_trajectory(&once).unwrap();
        assert_eq!(once.points(), twice.points());
    }

    /// A single interior spike among few points ties the two spike deltas at
    /// the top of the distribution, so the 95th percentile equals the spike
    /// magnitude and strict exceedance keeps everything. The removal path
    /// needs enough clean deltas for the percentile to drop below the spike.
    #[test]
    fn smooth_spike_survives_when_percentile_ties_with_it() {
        let mut pts = vec![Point3::new(0.0, 0.0, 0.0); 11];
        pts[6] = Point3::new(10.0, 0.0, 0.0);
        let traj = Trajectory3D::new(pts.clone(), 25.0).unwrap();
        let out = smooth_trajectory(&traj).unwrap();
        assert_eq!(out.points(), &pts[..], "threshold equals the spike delta; nothing dropped");
        assert_eq!(out.points(), &reference_smooth(&pts)[..]);
    }

    #[test]
    fn smooth_drops_spike_given_enough_clean_frames() {
        let mut pts = vec![Point3::new(0.0, 0.0, 0.0); 60];
        pts[30] = Point3::new(10.0, 0.0, 0.0);
        let traj = Trajectory3D::new(pts, 25.0).unwrap();
        let out = smooth_trajectory(&traj).unwrap();
        for (k, p) in out.points().iter().enumerate() {
            assert_eq!(*p, Point3::new(0.0, 0.0, 0.0), "point {k} should interpolate to zero");
        }
    }

    #[test]
    fn smooth_unrecoverable_when_everything_drops() {
        // One huge jump at the end of a 3-point trajectory flags both of its
        // frames, and the neighbor expansion eats the remaining one.
        let pts = vec![Point3::new(0.0, 0.0, 0.0), Point3::new(0.0, 0.0, 0.0), Point3::new(100.0, 0.0, 0.0)];
        let err = smooth_trajectory(&Trajectory3D::new(pts, 25.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TrajectoryUnrecoverable { len: 3 }));
    }

    #[test]
    fn fill_gaps_interpolates_interior_and_holds_ends() {
        let pts = vec![
            None,
            Some(Point3::new(1.0, 0.0, 0.0)),
            None,
            None,
            Some(Point3::new(4.0, 3.0, 0.0)),
            None,
        ];
        let out = fill_gaps(&pts).unwrap();
        assert_eq!(out[0], Point3::new(1.0, 0.0, 0.0));
        assert_eq!(out[2], Point3::new(2.0, 1.0, 0.0));
        assert_eq!(out[3], Point3::new(3.0, 2.0, 0.0));
        assert_eq!(out[5], Point3::new(4.0, 3.0, 0.0));
    }

    #[test]
    fn fill_gaps_all_missing_is_an_error() {
        let err = fill_gaps(&[None, None]).unwrap_err();
        assert!(matches!(err, Error::TrajectoryUnrecoverable { .. }));
    }

    #[test]
    fn grid_cells_from_pixels() {
        let frame = FrameSpec::new(1500, 900, 25.0).unwrap();
        let scheme = GridScheme::default();
        let cell = quantize_to_grid(200.0, 100.0, &frame, &scheme).unwrap();
        assert_eq!((cell.col, cell.row), (1, 1));
        assert_eq!(cell.center_px(&frame, &scheme), (150.0, 150.0));

        // Interior boundaries belong to the higher-index cell.
        let cell = quantize_to_grid(750.0, 450.0, &frame, &scheme).unwrap();
        assert_eq!((cell.col, cell.row), (3, 2));
        assert_eq!(cell.center_px(&frame, &scheme), (750.0, 450.0));

        let cell = quantize_to_grid(1499.0, 899.0, &frame, &scheme).unwrap();
        assert_eq!((cell.col, cell.row), (5, 3));
        assert_eq!(cell.center_px(&frame, &scheme), (1350.0, 750.0));
    }

    #[test]
    fn grid_rejects_out_of_frame_pixels() {
        let frame = FrameSpec::new(1500, 900, 25.0).unwrap();
        let scheme = GridScheme::default();
        assert!(quantize_to_grid(1500.0, 0.0, &frame, &scheme).is_err());
        assert!(quantize_to_grid(-1.0, 0.0, &frame, &scheme).is_err());
        assert!(quantize_to_grid(0.0, 900.0, &frame, &scheme).is_err());
    }

    #[test]
    fn depth_bins_snap_nearest_tie_down() {
        let scheme = GridScheme::default();
        assert_eq!(quantize_depth(2.4, &scheme).unwrap(), 2.0);
        assert_eq!(quantize_depth(4.5, &scheme).unwrap(), 4.0, "midpoint rounds down");
        assert_eq!(quantize_depth(9.0, &scheme).unwrap(), 5.0, "clamps to last bin");
        assert_eq!(quantize_depth(0.2, &scheme).unwrap(), 1.0, "clamps to first bin");
    }

    #[test]
    fn column_azimuths_match_default_grid() {
        let scheme = GridScheme::default();
        let az: Vec<f64> = (1..=5).map(|c| scheme.column_azimuth_deg(c)).collect();
        assert_eq!(az, vec![80.0, 40.0, 0.0, 320.0, 280.0]);
        let el: Vec<f64> = (1..=3).map(|r| scheme.row_elevation_deg(r)).collect();
        assert_eq!(el, vec![40.0, 0.0, -40.0]);
    }

    #[test]
    fn coarse_positions_are_distinct_and_round_trip() {
        let scheme = GridScheme::default();
        let positions = scheme.coarse_positions();
        assert_eq!(positions.len(), 75);
        let mut seen = std::collections::BTreeSet::new();
        for (dir, point) in &positions {
            let back = cartesian_to_spherical(point).unwrap();
            assert!(azimuth_difference_deg(back.azimuth_deg, dir.azimuth_deg) < 1e-9);
            assert!((back.elevation_deg - dir.elevation_deg).abs() < 1e-9);
            assert!((back.radius_m - dir.radius_m).abs() < 1e-9);
            let key = (
                (dir.azimuth_deg * 1000.0).round() as i64,
                (dir.elevation_deg * 1000.0).round() as i64,
                (dir.radius_m * 1000.0).round() as i64,
            );
            assert!(seen.insert(key), "duplicate coarse position {dir:?}");
        }
    }

    #[test]
    fn nearest_position_snaps_into_the_set() {
        let scheme = GridScheme::default();
        let target = spherical_to_cartesian(
            &SphericalDirection::new(75.0, 35.0, 2.2).unwrap(),
        );
        let snapped = scheme.nearest_position(&target);
        let positions = scheme.coarse_positions();
        assert!(positions.iter().any(|(_, p)| *p == snapped));
        let dir = cartesian_to_spherical(&snapped).unwrap();
        assert_eq!((dir.azimuth_deg.round(), dir.elevation_deg.round()), (80.0, 40.0));
        assert_eq!(dir.radius_m.round(), 2.0);
    }

    #[test]
    fn spherical_axes() {
        let d = cartesian_to_spherical(&Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((d.azimuth_deg, d.elevation_deg, d.radius_m), (0.0, 0.0, 1.0));

        let d = cartesian_to_spherical(&Point3::new(0.0, -1.0, 0.0)).unwrap();
        assert!((d.azimuth_deg - 90.0).abs() < 1e-12, "listener-left is 90 deg");

        let d = cartesian_to_spherical(&Point3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((d.azimuth_deg - 270.0).abs() < 1e-12, "listener-right is 270 deg");

        let d = cartesian_to_spherical(&Point3::new(1.0, 0.0, 1.0)).unwrap();
        assert!((d.elevation_deg - 45.0).abs() < 1e-12);
        assert!((d.radius_m - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn spherical_rejects_origin() {
        assert!(cartesian_to_spherical(&Point3::default()).is_err());
    }

    #[test]
    fn wrap_azimuth_examples() {
        assert_eq!(wrap_azimuth_deg(360.0), 0.0);
        assert_eq!(wrap_azimuth_deg(-40.0), 320.0);
        assert_eq!(wrap_azimuth_deg(725.0), 5.0);
        assert_eq!(azimuth_difference_deg(350.0, 10.0), 20.0);
    }

    #[test]
    fn trajectory_json_round_trip() {
        let traj = Trajectory3D::new(
            vec![Point3::new(1.0, -0.5, 0.25), Point3::new(1.5, 0.123456789, -0.125)],
            25.0,
        )
        .unwrap();
        let text = traj.to_json_string();
        assert!(text.contains("\"rate\": 25"));
        assert!(text.contains("[1.000000, -0.500000, 0.250000]"));
        assert!(text.contains("[1.500000, 0.123457, -0.125000]"), "six decimals, rounded");
        let back = Trajectory3D::from_json_str(&text).unwrap();
        assert_eq!(back.rate_hz(), 25.0);
        assert_eq!(back.len(), 2);
        assert!((back.points()[1].y - 0.123457).abs() < 1e-12);
    }

    #[test]
    fn trajectory_rejects_points_behind_listener() {
        let err = Trajectory3D::new(vec![Point3::new(-0.5, 0.0, 0.0)], 25.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn trajectory_rejects_bad_rate() {
        assert!(Trajectory3D::new(vec![Point3::default()], 0.0).is_err());
        assert!(Trajectory3D::new(vec![Point3::default()], f64::NAN).is_err());
    }
}
