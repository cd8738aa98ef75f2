//! Spatial-accuracy and interaural-cue metrics.
//!
//! Two metric families verify that rendered audio matches its trajectory:
//!
//! * **Angular error** — mean absolute error between an estimated and a
//!   reference direction series, with azimuth differences wrapped onto
//!   `[0, 180]` so that 350° vs 10° counts as 20°, and elevation compared
//!   directly.
//! * **Interaural cues** — windowed estimates of the level difference
//!   (ILD, decibels, positive = left louder) and the time difference (ITD,
//!   seconds, positive = left leads) between the two channels, plus a
//!   side-consistency score that checks the level cue's sign against the
//!   trajectory's lateral coordinate over time.
//!
//! Sign conventions are chosen to agree: a source on the listener's left
//! (negative `y`) should produce both positive ILD and positive ITD.

use crate::error::{Error, Result};
use crate::geometry::{azimuth_difference_deg, cartesian_to_spherical, wrap_azimuth_deg, Trajectory3D};
use crate::render::BinauralAudio;

/// Channel RMS below which a window counts as silent (applies when both
/// channels are under it).
pub const SILENCE_RMS: f64 = 1e-6;

/// Floor applied to each channel's RMS before taking logs, so one-sided
/// silence yields a large-but-finite level difference.
const ILD_RMS_FLOOR: f64 = 1e-12;

/// Default cross-correlation search bound in seconds; generously covers the
/// time differences a head can produce.
pub const DEFAULT_MAX_LAG_S: f64 = 0.001;

/// Default analysis window length, seconds.
pub const DEFAULT_WINDOW_S: f64 = 0.25;

/// Default hop between window starts, seconds.
pub const DEFAULT_HOP_S: f64 = 0.25;

/// Lateral positions with |y| below this are "centered" and carry no usable
/// side information; side-consistency skips them.
pub const LATERAL_DEAD_ZONE_M: f64 = 0.05;

/// Maximum allowed disagreement between audio and trajectory durations,
/// in percent of the longer one.
pub const DURATION_TOLERANCE_PCT: f64 = 5.0;

/// Which angle a series holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleKind {
    Azimuth,
    Elevation,
}

/// A validated series of angles in degrees. Azimuths are wrapped to
/// `[0, 360)` on construction; elevations must lie in `[-90, 90]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSeries {
    values: Vec<f64>,
    kind: AngleKind,
}

impl AngleSeries {
    /// Builds an azimuth series, wrapping each value into `[0, 360)`.
    pub fn azimuth(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("azimuth series must be finite".into()));
        }
        Ok(AngleSeries { values: values.into_iter().map(wrap_azimuth_deg).collect(), kind: AngleKind::Azimuth })
    }

    /// Builds an elevation series; every value must lie in `[-90, 90]`.
    pub fn elevation(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < -90.0 || *v > 90.0) {
            return Err(Error::InvalidParameter(
                "elevation series must be finite and within [-90, 90] degrees".into(),
            ));
        }
        Ok(AngleSeries { values, kind: AngleKind::Elevation })
    }

    /// Extracts the requested angle of every trajectory point. Fails on
    /// points at the origin, which have no direction.
    pub fn from_trajectory(trajectory: &Trajectory3D, kind: AngleKind) -> Result<Self> {
        let mut values = Vec::with_capacity(trajectory.len());
        for point in trajectory.points() {
            let dir = cartesian_to_spherical(point)?;
            values.push(match kind {
                AngleKind::Azimuth => dir.azimuth_deg,
                AngleKind::Elevation => dir.elevation_deg,
            });
        }
        Ok(AngleSeries { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_pair(est: &AngleSeries, gt: &AngleSeries, kind: AngleKind) -> Result<()> {
    if est.kind != kind || gt.kind != kind {
        return Err(Error::InvalidParameter(format!(
            "angle series kind mismatch: expected {kind:?}"
        )));
    }
    if est.is_empty() {
        return Err(Error::InvalidParameter("angle series must be non-empty".into()));
    }
    if est.len() != gt.len() {
        return Err(Error::SeriesLengthMismatch { got: est.len(), want: gt.len() });
    }
    Ok(())
}

/// Mean absolute azimuth error in degrees, each pairwise difference wrapped
/// onto `[0, 180]` (350° vs 10° contributes 20°, not 340°).
pub fn mae_azimuth(est: &AngleSeries, gt: &AngleSeries) -> Result<f64> {
    check_pair(est, gt, AngleKind::Azimuth)?;
    let sum: f64 = est
        .values
        .iter()
        .zip(&gt.values)
        .map(|(&e, &g)| azimuth_difference_deg(e, g))
        .sum();
    Ok(sum / est.len() as f64)
}

/// Mean absolute elevation error in degrees; no wrapping.
pub fn mae_elevation(est: &AngleSeries, gt: &AngleSeries) -> Result<f64> {
    check_pair(est, gt, AngleKind::Elevation)?;
    let sum: f64 = est.values.iter().zip(&gt.values).map(|(&e, &g)| (e - g).abs()).sum();
    Ok(sum / est.len() as f64)
}

/// Per-window quality flag on an estimated cue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CueFlag {
    /// Cue estimated normally.
    Ok,
    /// Both channels under [`SILENCE_RMS`]; cues reported as 0.
    Silence,
    /// Correlation peak under twice the mean absolute correlation: the time
    /// difference is weakly supported by the signal.
    LowConfidence,
}

/// Windowed interaural cue estimates. All three lists share one entry per
/// analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct CueSeries {
    /// Window length the series was computed with, seconds.
    pub window_s: f64,
    /// Hop between window starts, seconds.
    pub hop_s: f64,
    /// Level difference per window, decibels; positive = left louder.
    pub ild_db: Vec<f64>,
    /// Time difference per window, seconds; positive = left leads.
    pub itd_s: Vec<f64>,
    /// Per-window quality flag.
    pub flags: Vec<CueFlag>,
}

impl CueSeries {
    /// Number of analysis windows.
    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Level-difference series; thin wrapper over [`estimate_cues`] with the
/// default correlation bound (the returned series carries both cues).
pub fn estimate_ild(audio: &BinauralAudio, window_s: f64, hop_s: f64) -> Result<CueSeries> {
    estimate_cues(audio, window_s, hop_s, DEFAULT_MAX_LAG_S)
}

/// Time-difference series; thin wrapper over [`estimate_cues`] (the
/// returned series carries both cues).
pub fn estimate_itd(
    audio: &BinauralAudio,
    window_s: f64,
    hop_s: f64,
    max_lag_s: f64,
) -> Result<CueSeries> {
    estimate_cues(audio, window_s, hop_s, max_lag_s)
}

/// Estimates both interaural cues over sliding windows.
///
/// Per window: the level difference is `20·(log10 rms_left − log10 rms_right)`
/// with both RMS values floored at 1e-12, and the time difference is the lag
/// `τ` maximizing the cross-correlation `R(τ) = Σ_n left[n]·right[n+τ]` over
/// `|τ| ≤ max_lag_s·rate`, in seconds (positive = left leads). Ties go to
/// the smallest `|τ|`, positive before negative. Windows where both channels
/// are silent report 0 for both cues with [`CueFlag::Silence`]; windows
/// whose correlation peak is below twice the mean absolute correlation are
/// flagged [`CueFlag::LowConfidence`].
///
/// Windows start at multiples of the hop and must fit entirely inside the
/// signal; a window longer than the signal is an error, as is a correlation
/// bound under one sample.
pub fn estimate_cues(
    audio: &BinauralAudio,
    window_s: f64,
    hop_s: f64,
    max_lag_s: f64,
) -> Result<CueSeries> {
    if audio.left.len() != audio.right.len() {
        return Err(Error::LengthMismatch {
            context: format!("channels: {} vs {} samples", audio.left.len(), audio.right.len()),
        });
    }
    if !(window_s > 0.0) || !window_s.is_finite() || !(hop_s > 0.0) || !hop_s.is_finite() {
        return Err(Error::InvalidParameter("window and hop must be positive seconds".into()));
    }
    let rate = f64::from(audio.sample_rate);
    let window = (window_s * rate).round() as usize;
    let hop = (hop_s * rate).round() as usize;
    if window == 0 || hop == 0 {
        return Err(Error::InvalidParameter("window and hop must cover at least one sample".into()));
    }
    if window > audio.len() {
        return Err(Error::WindowTooLong { window, samples: audio.len() });
    }
    if !(max_lag_s * rate >= 1.0) {
        return Err(Error::InvalidParameter(
            "correlation bound must cover at least one sample".into(),
        ));
    }
    let max_lag = (max_lag_s * rate).round() as i64;

    let mut series = CueSeries {
        window_s,
        hop_s,
        ild_db: Vec::new(),
        itd_s: Vec::new(),
        flags: Vec::new(),
    };
    let mut start = 0usize;
    while start + window <= audio.len() {
        let left = &audio.left[start..start + window];
        let right = &audio.right[start..start + window];
        let rms_l = rms(left);
        let rms_r = rms(right);
        if rms_l < SILENCE_RMS && rms_r < SILENCE_RMS {
            series.ild_db.push(0.0);
            series.itd_s.push(0.0);
            series.flags.push(CueFlag::Silence);
        } else {
            // Difference of logs rather than log of the ratio: swapping the
            // channels then negates the result bit-exactly.
            let ild = 20.0 * (rms_l.max(ILD_RMS_FLOOR).log10() - rms_r.max(ILD_RMS_FLOOR).log10());
            let (lag, peak, mean_abs) = correlation_peak(left, right, max_lag);
            series.ild_db.push(ild);
            series.itd_s.push(lag as f64 / rate);
            series.flags.push(if peak < 2.0 * mean_abs {
                CueFlag::LowConfidence
            } else {
                CueFlag::Ok
            });
        }
        start += hop;
    }
    Ok(series)
}

fn rms(samples: &[f64]) -> f64 {
    (samples.iter().map(|s| s * s).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Cross-correlation peak over `|lag| ≤ max_lag`. Returns the winning lag,
/// the (signed) peak value, and the mean of |R| over all searched lags.
/// Ties keep the smallest |lag|, positive before negative; a signal pair
/// with an all-zero correlation therefore reports lag 0.
fn correlation_peak(left: &[f64], right: &[f64], max_lag: i64) -> (i64, f64, f64) {
    let w = left.len() as i64;
    let value_at = |lag: i64| -> f64 {
        let n0 = 0.max(-lag);
        let n1 = w.min(w - lag);
        let mut acc = 0.0;
        for n in n0..n1 {
            acc += left[n as usize] * right[(n + lag) as usize];
        }
        acc
    };
    let mut best_lag = 0i64;
    let mut best = value_at(0);
    let mut abs_sum = best.abs();
    for k in 1..=max_lag {
        for lag in [k, -k] {
            let v = value_at(lag);
            abs_sum += v.abs();
            if v > best {
                best = v;
                best_lag = lag;
            }
        }
    }
    (best_lag, best, abs_sum / (2 * max_lag + 1) as f64)
}

/// Fraction of analysis windows where the side implied by the level cue
/// matches the side of the time-aligned trajectory point — i.e. where
/// `sign(−ild)` equals `sign(y)` (positive `y` is the listener's right,
/// where the right channel should be louder).
///
/// Windows tile the signal (hop = window). Windows whose trajectory point
/// sits inside the lateral dead zone (|y| < 0.05 m) or whose audio is
/// silent are skipped; if every window is skipped the score is undefined
/// and `None` is returned. Audio and trajectory must cover the same
/// duration within [`DURATION_TOLERANCE_PCT`].
pub fn side_consistency(
    audio: &BinauralAudio,
    trajectory: &Trajectory3D,
    window_s: f64,
) -> Result<Option<f64>> {
    let audio_s = audio.duration_s();
    let trajectory_s = trajectory.duration_s();
    if (audio_s - trajectory_s).abs() > DURATION_TOLERANCE_PCT / 100.0 * audio_s.max(trajectory_s) {
        return Err(Error::DurationMismatch {
            audio_s,
            trajectory_s,
            tolerance_pct: DURATION_TOLERANCE_PCT,
        });
    }
    let cues = estimate_cues(audio, window_s, window_s, DEFAULT_MAX_LAG_S)?;
    let rate = f64::from(audio.sample_rate);
    let window = (window_s * rate).round() as usize;
    let points = trajectory.points();

    let mut considered = 0usize;
    let mut consistent = 0usize;
    for (i, (&ild, &flag)) in cues.ild_db.iter().zip(&cues.flags).enumerate() {
        if flag == CueFlag::Silence {
            continue;
        }
        let center_s = (i * window) as f64 / rate + window as f64 / (2.0 * rate);
        let index = ((center_s * trajectory.rate_hz()).round() as usize).min(points.len() - 1);
        let y = points[index].y;
        if y.abs() < LATERAL_DEAD_ZONE_M {
            continue;
        }
        considered += 1;
        if (ild > 0.0 && y < 0.0) || (ild < 0.0 && y > 0.0) {
            consistent += 1;
        }
    }
    Ok(if considered == 0 { None } else { Some(consistent as f64 / considered as f64) })
}
