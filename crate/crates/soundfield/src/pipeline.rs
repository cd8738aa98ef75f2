//! Track-to-trajectory pipelines.
//!
//! Ties ingest and geometry together: a detection track plus per-frame
//! depth maps become a listener-frame trajectory, in one of two forms.
//!
//! * **Fine** — one point per video frame: every detection's box center and
//!   depth are mapped continuously into the sound field, frames without a
//!   detection are filled by linear interpolation, and the result is
//!   outlier-smoothed. The trajectory runs at the video frame rate.
//! * **Coarse** — one quantized position per second: within each second the
//!   first detected frame is reduced to a grid cell and a depth bin, whose
//!   combination names one of the scheme's admissible positions. Seconds
//!   without any detection hold the nearest (in time) estimated position.
//!   The trajectory runs at one point per second.

use crate::error::Result;
use crate::geometry::{
    fill_gaps, map_to_sound_field, quantize_depth, quantize_to_grid, smooth_trajectory,
    spherical_to_cartesian, FrameSpec, GridScheme, Point3, SoundFieldConfig, Trajectory3D,
};
use crate::ingest::{select_label, track_to_observations, DepthSource, DetectionTrack};
use crate::Scheme;

/// Uses the given label, or picks the track's most confident one.
pub fn resolve_label(track: &DetectionTrack, label: Option<&str>) -> Result<String> {
    match label {
        Some(l) => Ok(l.to_owned()),
        None => select_label(track),
    }
}

/// Maps a track to a trajectory under either scheme; see [`fine_trajectory`]
/// and [`coarse_trajectory`].
pub fn map_track_to_trajectory(
    track: &DetectionTrack,
    depth: &dyn DepthSource,
    label: &str,
    frame: &FrameSpec,
    config: &SoundFieldConfig,
    scheme: Scheme,
    grid: &GridScheme,
) -> Result<Trajectory3D> {
    match scheme {
        Scheme::Fine => fine_trajectory(track, depth, label, frame, config),
        Scheme::Coarse => coarse_trajectory(track, depth, label, frame, config, grid),
    }
}

/// Continuous per-frame trajectory at the video frame rate.
///
/// Each detected frame's box center and sampled depth are mapped into the
/// sound field; undetected frames are linearly interpolated from their
/// neighbors (held at the ends), and the assembled trajectory is
/// outlier-smoothed. Single-frame tracks are returned as-is — there is no
/// motion to smooth.
pub fn fine_trajectory(
    track: &DetectionTrack,
    depth: &dyn DepthSource,
    label: &str,
    frame: &FrameSpec,
    config: &SoundFieldConfig,
) -> Result<Trajectory3D> {
    let observations = track_to_observations(track, label, depth)?;
    let mut points: Vec<Option<Point3>> = Vec::with_capacity(observations.len());
    for obs in &observations {
        points.push(match &obs.observed {
            None => None,
            Some(o) => Some(map_to_sound_field(
                &o.observation,
                frame,
                config,
                o.depth_min,
                o.depth_max,
            )?),
        });
    }
    let raw = Trajectory3D::new(fill_gaps(&points)?, frame.fps)?;
    if raw.len() < 2 {
        return Ok(raw);
    }
    smooth_trajectory(&raw)
}

/// Quantized once-per-second trajectory.
///
/// Each second covers one frame rate's worth of frames; the first frame in
/// the second carrying a detection supplies the estimate. Its box center
/// picks the grid cell, and its mapped forward coordinate picks the depth
/// bin; the cell direction at the bin distance is the second's position.
/// Seconds with no detection copy the nearest estimated second (earlier one
/// on ties). The result has one point per second at rate
/// [`crate::COARSE_POSITIONS_PER_SECOND`].
pub fn coarse_trajectory(
    track: &DetectionTrack,
    depth: &dyn DepthSource,
    label: &str,
    frame: &FrameSpec,
    config: &SoundFieldConfig,
    grid: &GridScheme,
) -> Result<Trajectory3D> {
    let observations = track_to_observations(track, label, depth)?;
    let frames_per_slot = frame.fps / crate::COARSE_POSITIONS_PER_SECOND;
    let slots = ((observations.len() as f64) / frames_per_slot).ceil().max(1.0) as usize;

    let mut estimates: Vec<Option<Point3>> = vec![None; slots];
    for obs in &observations {
        let Some(o) = &obs.observed else { continue };
        let slot = (((obs.frame_index - 1) as f64) / frames_per_slot).floor() as usize;
        let slot = slot.min(slots - 1);
        if estimates[slot].is_some() {
            continue; // first detected frame of the second wins
        }
        let cell = quantize_to_grid(o.observation.w_px, o.observation.h_px, frame, grid)?;
        let mapped = map_to_sound_field(&o.observation, frame, config, o.depth_min, o.depth_max)?;
        let bin_m = quantize_depth(mapped.x, grid)?;
        let direction = grid.cell_direction(cell.col, cell.row, bin_m);
        estimates[slot] = Some(spherical_to_cartesian(&direction));
    }

    let points = hold_nearest(&estimates);
    Trajectory3D::new(points, crate::COARSE_POSITIONS_PER_SECOND)
}

/// Fills empty slots with the value of the nearest filled slot; earlier
/// slots win distance ties. At least one slot must be filled.
fn hold_nearest(slots: &[Option<Point3>]) -> Vec<Point3> {
    let filled: Vec<(usize, Point3)> =
        slots.iter().enumerate().filter_map(|(i, s)| s.map(|p| (i, p))).collect();
    assert!(!filled.is_empty(), "caller guarantees at least one estimate");
    slots
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            slot.unwrap_or_else(|| {
                filled
                    .iter()
                    .min_by_key(|(j, _)| i.abs_diff(*j))
                    .expect("filled is non-empty")
                    .1
            })
        })
        .collect()
}
