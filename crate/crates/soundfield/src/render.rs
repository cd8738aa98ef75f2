//! Binaural rendering of moving sources.
//!
//! A mono signal following a trajectory is rendered by cutting it into `M`
//! contiguous segments, convolving each segment with the impulse response of
//! its own position *and* of the next segment's position, and blending the
//! two renderings with a linear ramp. The ramp hands the source over
//! smoothly from one position to the next instead of hard-switching at
//! segment boundaries; convolution tails spill across boundaries by plain
//! overlap-add, and the final output is truncated back to the input length.
//!
//! For a static trajectory every segment selects the same response, the
//! blend collapses to the identity, and overlap-add stitches the segments
//! back into exactly one full convolution; this property anchors the render
//! tests.

use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_spherical, SphericalDirection, Trajectory3D};
use crate::hrir::{resample_for_distance, Hrir, HrirSet};

/// Mono audio buffer; samples are `f64` in nominal `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonoAudio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl MonoAudio {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Two-channel (left, right) audio buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct BinauralAudio {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub sample_rate: u32,
}

impl BinauralAudio {
    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / f64::from(self.sample_rate)
    }
}

/// Rendering options shared by the moving-source renderer and the CLI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Apply the spherical-spreading gain `ref / d` when resampling
    /// responses to the source distance.
    pub distance_gain: bool,
    /// Scale the final output so the loudest sample has magnitude 1.
    pub normalize: bool,
    /// Validity bound for source distances, meters.
    pub max_distance_m: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            distance_gain: true,
            normalize: false,
            max_distance_m: crate::geometry::DEFAULT_MAX_DISTANCE_M,
        }
    }
}

/// Positions a renderer walks through: one direction (with distance) per
/// segment.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderPlan {
    pub positions: Vec<SphericalDirection>,
}

impl RenderPlan {
    /// Number of segments the plan covers.
    pub fn segments(&self) -> usize {
        self.positions.len()
    }
}

/// Splits `samples` into `m` contiguous segments: the first `m - 1` hold
/// `floor(n / m)` samples each and the last absorbs the remainder. Returned
/// as index ranges into the input.
pub fn segment_audio(samples: &[f64], m: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if m == 0 {
        return Err(Error::InvalidParameter("segment count must be positive".into()));
    }
    if samples.len() < m {
        return Err(Error::AudioTooShort { samples: samples.len(), segments: m });
    }
    let base = samples.len() / m;
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let start = i * base;
        let end = if i + 1 == m { samples.len() } else { start + base };
        out.push(start..end);
    }
    Ok(out)
}

/// Picks one trajectory position per segment: the trajectory point nearest
/// to each segment's midpoint in time. Segment `i` of `m` covers the time
/// fraction `(i + 0.5) / m`, which maps to point index
/// `round(fraction * (K - 1))`. Each position's spherical form carries the
/// source distance as its radius; points at the origin have no direction and
/// are rejected.
pub fn trajectory_to_plan(trajectory: &Trajectory3D, m: usize) -> Result<RenderPlan> {
    if m == 0 {
        return Err(Error::InvalidParameter("segment count must be positive".into()));
    }
    let points = trajectory.points();
    let last = (points.len() - 1) as f64;
    let mut positions = Vec::with_capacity(m);
    for i in 0..m {
        let fraction = (i as f64 + 0.5) / m as f64;
        let index = (fraction * last).round() as usize;
        positions.push(cartesian_to_spherical(&points[index])?);
    }
    Ok(RenderPlan { positions })
}

/// Full linear convolution of a mono segment with both channels of an
/// impulse response. Output length is `segment.len() + h.len() - 1`: the
/// first `segment.len()` samples are the segment body, the rest is the tail
/// that rings past the segment boundary.
pub fn convolve_binaural(segment: &[f64], h: &Hrir) -> (Vec<f64>, Vec<f64>) {
    (convolve(segment, &h.left), convolve(segment, &h.right))
}

fn convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
    if signal.is_empty() || kernel.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; signal.len() + kernel.len() - 1];
    for (i, &s) in signal.iter().enumerate() {
        if s == 0.0 {
            continue;
        }
        for (j, &k) in kernel.iter().enumerate() {
            out[i + j] += s * k;
        }
    }
    out
}

/// Blends two equal-length renderings of the same samples with a linear
/// ramp: sample `t` of the output is `a[t] + alpha_t * (b[t] - a[t])` with
/// `alpha_t = t / (T - 1)`. The first output sample equals `a`'s and the
/// last equals `b`'s exactly; a single-sample input stays entirely on `a`.
pub fn crossfade(a: &BinauralAudio, b: &BinauralAudio) -> Result<BinauralAudio> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::SampleRateMismatch { got: b.sample_rate, want: a.sample_rate });
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            context: format!("crossfade inputs: {} vs {} samples", a.len(), b.len()),
        });
    }
    let n = a.len();
    let blend_channel = |xa: &[f64], xb: &[f64]| -> Vec<f64> {
        (0..n).map(|t| blend_sample(xa[t], xb[t], ramp_alpha(t, n))).collect()
    };
    Ok(BinauralAudio {
        left: blend_channel(&a.left, &b.left),
        right: blend_channel(&a.right, &b.right),
        sample_rate: a.sample_rate,
    })
}

/// Linear ramp weight for sample `t` of a `len`-sample segment: 0 at the
/// first sample, 1 at the last; degenerate single-sample segments stay at 0.
fn ramp_alpha(t: usize, len: usize) -> f64 {
    if len < 2 {
        0.0
    } else {
        t as f64 / (len - 1) as f64
    }
}

/// Convex blend that is bit-exact at the endpoints and for `a == b`.
fn blend_sample(a: f64, b: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        a
    } else if alpha == 1.0 {
        b
    } else {
        a + alpha * (b - a)
    }
}

/// Renders a mono source moving along a trajectory into binaural audio.
///
/// The signal is split into `m` segments ([`segment_audio`]), each segment
/// is assigned the trajectory position nearest its midpoint
/// ([`trajectory_to_plan`]), and for every segment but the last the segment
/// samples are rendered under both its own position and the next segment's
/// position and blended with the linear ramp (the last segment keeps its own
/// rendering throughout). Ramp weights hold at 1 across each rendering's
/// convolution tail, which overlap-adds into the following segment. The
/// output is truncated to the input length.
///
/// Impulse responses come from `set` by nearest direction and are resampled
/// to each position's distance; the set's sample rate must match the input.
pub fn render_moving_source(
    mono: &MonoAudio,
    trajectory: &Trajectory3D,
    set: &HrirSet,
    m: usize,
    options: &RenderOptions,
) -> Result<BinauralAudio> {
    if set.sample_rate != mono.sample_rate {
        return Err(Error::SampleRateMismatch { got: set.sample_rate, want: mono.sample_rate });
    }
    let segments = segment_audio(&mono.samples, m)?;
    let plan = trajectory_to_plan(trajectory, m)?;

    // One prepared (direction-selected, distance-resampled) response per
    // segment position.
    let prepared: Vec<Hrir> = plan
        .positions
        .iter()
        .map(|p| {
            let entry = set.select_direction(p.azimuth_deg, p.elevation_deg);
            resample_for_distance(
                entry,
                p.radius_m,
                set.ref_distance_m,
                options.max_distance_m,
                options.distance_gain,
            )
        })
        .collect::<Result<_>>()?;

    let n = mono.samples.len();
    let max_len = prepared.iter().map(Hrir::len).max().unwrap_or(1);
    let mut left = vec![0.0; n + max_len];
    let mut right = vec![0.0; n + max_len];

    for (i, range) in segments.iter().enumerate() {
        let body_len = range.len();
        let offset = range.start;
        let segment = &mono.samples[range.clone()];
        let (cur_l, cur_r) = convolve_binaural(segment, &prepared[i]);
        let (next_l, next_r) = if i + 1 < prepared.len() {
            convolve_binaural(segment, &prepared[i + 1])
        } else {
            (Vec::new(), Vec::new())
        };

        let total = cur_l.len().max(next_l.len());
        for t in 0..total {
            // The ramp runs over the segment body; tail samples keep the
            // final weight so each ring-out fades out under the position it
            // was handed over to.
            let alpha = if next_l.is_empty() {
                0.0
            } else if t >= body_len {
                1.0
            } else {
                ramp_alpha(t, body_len)
            };
            let a_l = cur_l.get(t).copied().unwrap_or(0.0);
            let a_r = cur_r.get(t).copied().unwrap_or(0.0);
            let b_l = next_l.get(t).copied().unwrap_or(0.0);
            let b_r = next_r.get(t).copied().unwrap_or(0.0);
            left[offset + t] += blend_sample(a_l, b_l, alpha);
            right[offset + t] += blend_sample(a_r, b_r, alpha);
        }
    }

    left.truncate(n);
    right.truncate(n);
    let mut out = BinauralAudio { left, right, sample_rate: mono.sample_rate };
    if options.normalize {
        normalize_peak(&mut out);
    }
    Ok(out)
}

/// Scales both channels so the loudest sample has magnitude 1. Silence is
/// left untouched.
pub fn normalize_peak(audio: &mut BinauralAudio) {
    let peak = audio
        .left
        .iter()
        .chain(&audio.right)
        .fold(0.0f64, |acc, &s| acc.max(s.abs()));
    if peak > 0.0 {
        let scale = 1.0 / peak;
        for s in audio.left.iter_mut().chain(audio.right.iter_mut()) {
            *s *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use crate::hrir::{synth_spherical_head, SynthHeadSpec};

    /// Direct reference convolution, written independently of `convolve`
    /// (accumulates over kernel taps instead of scattering input samples).
    fn naive_convolve(signal: &[f64], kernel: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; signal.len() + kernel.len() - 1];
        for (idx, o) in out.iter_mut().enumerate() {
            for (j, &k) in kernel.iter().enumerate() {
                if idx >= j && idx - j < signal.len() {
                    *o += k * signal[idx - j];
                }
            }
        }
        out
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        // Tiny xorshift keeps the fixture self-contained and deterministic.
        let mut state = seed.max(1);
        (0..n)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state as f64 / u64::MAX as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn segments_split_with_remainder_in_last() {
        let samples = vec![0.0; 10];
        let ranges = segment_audio(&samples, 3).unwrap();
        let lens: Vec<usize> = ranges.iter().map(|r| r.len()).collect();
        assert_eq!(lens, vec![3, 3, 4]);
        assert_eq!(ranges[2], 6..10);
    }

    #[test]
    fn segments_cover_input_exactly() {
        let samples = vec![0.0; 1001];
        let ranges = segment_audio(&samples, 8).unwrap();
        assert_eq!(ranges.len(), 8);
        assert_eq!(ranges.iter().map(|r| r.len()).sum::<usize>(), 1001);
        for w in ranges.windows(2) {
            assert_eq!(w[0].end, w[1].start, "contiguous segments");
        }
    }

    #[test]
    fn segments_reject_short_audio_and_zero_m() {
        assert!(matches!(
            segment_audio(&[0.0; 3], 4),
            Err(Error::AudioTooShort { samples: 3, segments: 4 })
        ));
        assert!(segment_audio(&[0.0; 3], 0).is_err());
    }

    #[test]
    fn plan_repeats_nearest_points() {
        let traj = Trajectory3D::new(
            vec![Point3::new(1.0, -0.5, 0.0), Point3::new(1.0, 0.5, 0.0)],
            25.0,
        )
        .unwrap();
        let plan = trajectory_to_plan(&traj, 4).unwrap();
        assert_eq!(plan.segments(), 4);
        let az: Vec<f64> = plan.positions.iter().map(|p| p.azimuth_deg).collect();
        assert_eq!(az[0], az[1], "first two segments sit on the first point");
        assert_eq!(az[2], az[3], "last two segments sit on the second point");
        assert!(az[0] < 90.0 && az[0] > 0.0, "first point is to the left");
        assert!(az[2] > 270.0, "second point is to the right");
    }

    #[test]
    fn plan_is_identity_when_m_equals_k() {
        let points: Vec<Point3> =
            (0..50).map(|k| Point3::new(1.0 + 0.01 * k as f64, 0.0, 0.0)).collect();
        let traj = Trajectory3D::new(points.clone(), 25.0).unwrap();
        let plan = trajectory_to_plan(&traj, 50).unwrap();
        for (i, pos) in plan.positions.iter().enumerate() {
            assert!((pos.radius_m - points[i].norm()).abs() < 1e-12, "segment {i}");
        }
    }

    #[test]
    fn plan_rejects_origin_points() {
        let traj = Trajectory3D::new(vec![Point3::new(0.0, 0.0, 0.0)], 25.0).unwrap();
        assert!(trajectory_to_plan(&traj, 2).is_err());
    }

    #[test]
    fn convolution_matches_reference() {
        let sig = noise(64, 7);
        let h = Hrir {
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            left: noise(9, 11),
            right: noise(9, 13),
        };
        let (l, r) = convolve_binaural(&sig, &h);
        assert_eq!(l.len(), 64 + 9 - 1);
        let want_l = naive_convolve(&sig, &h.left);
        let want_r = naive_convolve(&sig, &h.right);
        for t in 0..l.len() {
            assert!((l[t] - want_l[t]).abs() < 1e-12);
            assert!((r[t] - want_r[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_impulse_passes_signal_through() {
        let sig = noise(32, 3);
        let h = Hrir { azimuth_deg: 0.0, elevation_deg: 0.0, left: vec![1.0], right: vec![0.5] };
        let (l, r) = convolve_binaural(&sig, &h);
        assert_eq!(l, sig);
        for (a, b) in r.iter().zip(&sig) {
            assert_eq!(*a, b * 0.5);
        }
    }

    fn stereo(left: Vec<f64>, right: Vec<f64>) -> BinauralAudio {
        BinauralAudio { left, right, sample_rate: 16_000 }
    }

    #[test]
    fn crossfade_endpoints_are_exact() {
        let a = stereo(vec![0.1, 0.2, 0.3, 0.4], vec![-0.1, -0.2, -0.3, -0.4]);
        let b = stereo(vec![0.9, 0.8, 0.7, 0.6], vec![0.5, 0.4, 0.3, 0.2]);
        let out = crossfade(&a, &b).unwrap();
        assert_eq!(out.left[0], a.left[0]);
        assert_eq!(out.right[0], a.right[0]);
        assert_eq!(out.left[3], b.left[3]);
        assert_eq!(out.right[3], b.right[3]);
        // Interior sample: alpha = 1/3.
        let alpha = 1.0 / 3.0;
        assert!((out.left[1] - (a.left[1] + alpha * (b.left[1] - a.left[1]))).abs() < 1e-15);
    }

    #[test]
    fn crossfade_identity_when_inputs_match() {
        let a = stereo(vec![0.3, -0.7, 0.1], vec![0.2, 0.0, -0.5]);
        let out = crossfade(&a, &a.clone()).unwrap();
        assert_eq!(out, a, "bit-exact identity");
    }

    #[test]
    fn crossfade_single_sample_stays_on_a() {
        let a = stereo(vec![0.25], vec![0.5]);
        let b = stereo(vec![0.75], vec![1.0]);
        let out = crossfade(&a, &b).unwrap();
        assert_eq!(out.left[0], 0.25);
    }

    #[test]
    fn crossfade_output_bounded_by_inputs() {
        let a = stereo(noise(100, 5), noise(100, 6));
        let b = stereo(noise(100, 7), noise(100, 8));
        let out = crossfade(&a, &b).unwrap();
        for t in 0..100 {
            let bound = a.left[t].abs().max(b.left[t].abs()) + 1e-15;
            assert!(out.left[t].abs() <= bound, "sample {t}");
        }
    }

    #[test]
    fn crossfade_rejects_mismatched_inputs() {
        let a = stereo(vec![0.0; 4], vec![0.0; 4]);
        let b = stereo(vec![0.0; 5], vec![0.0; 5]);
        assert!(matches!(crossfade(&a, &b), Err(Error::LengthMismatch { .. })));
        let mut c = stereo(vec![0.0; 4], vec![0.0; 4]);
        c.sample_rate = 8_000;
        assert!(matches!(crossfade(&a, &c), Err(Error::SampleRateMismatch { .. })));
    }

    fn test_set(rate: u32) -> HrirSet {
        let dirs: Vec<(f64, f64)> = (-9..=9).map(|k| (f64::from(k) * 10.0, 0.0)).collect();
        synth_spherical_head(&dirs, &SynthHeadSpec::new(rate)).unwrap()
    }

    #[test]
    fn static_render_equals_one_shot_convolution() {
        let rate = 16_000u32;
        let set = test_set(rate);
        let mono = MonoAudio { samples: noise(4_000, 42), sample_rate: rate };
        let pos = Point3::new(1.0, -0.8, 0.2);
        let traj = Trajectory3D::new(vec![pos; 10], 25.0).unwrap();
        let out = render_moving_source(&mono, &traj, &set, 8, &RenderOptions::default()).unwrap();
        assert_eq!(out.len(), mono.samples.len());

        // Oracle: single untiled convolution with the same prepared response.
        let dir = cartesian_to_spherical(&pos).unwrap();
        let entry = set.select_direction(dir.azimuth_deg, dir.elevation_deg);
        let h = resample_for_distance(entry, dir.radius_m, set.ref_distance_m, 6.0, true).unwrap();
        let want_l = naive_convolve(&mono.samples, &h.left);
        let want_r = naive_convolve(&mono.samples, &h.right);
        for t in 0..out.len() {
            assert!((out.left[t] - want_l[t]).abs() < 1e-6, "left sample {t}");
            assert!((out.right[t] - want_r[t]).abs() < 1e-6, "right sample {t}");
        }
    }

    #[test]
    fn render_is_linear_in_the_input() {
        let rate = 16_000u32;
        let set = test_set(rate);
        let samples = noise(2_000, 9);
        let mono = MonoAudio { samples: samples.clone(), sample_rate: rate };
        let scaled = MonoAudio { samples: samples.iter().map(|s| s * 2.5).collect(), sample_rate: rate };
        let traj = Trajectory3D::new(
            (0..50).map(|k| Point3::new(1.2, -0.8 + 0.032 * k as f64, 0.1)).collect(),
            25.0,
        )
        .unwrap();
        let a = render_moving_source(&mono, &traj, &set, 10, &RenderOptions::default()).unwrap();
        let b = render_moving_source(&scaled, &traj, &set, 10, &RenderOptions::default()).unwrap();
        for t in 0..a.len() {
            let want = a.left[t] * 2.5;
            let tol = 1e-12 * want.abs().max(1e-9);
            assert!((b.left[t] - want).abs() <= tol, "sample {t}: {} vs {want}", b.left[t]);
        }
    }

    #[test]
    fn silence_renders_to_silence() {
        let rate = 16_000u32;
        let set = test_set(rate);
        let mono = MonoAudio { samples: vec![0.0; 1_000], sample_rate: rate };
        let traj = Trajectory3D::new(vec![Point3::new(1.0, 0.3, 0.0); 5], 25.0).unwrap();
        let out = render_moving_source(&mono, &traj, &set, 4, &RenderOptions::default()).unwrap();
        assert!(out.left.iter().chain(&out.right).all(|&s| s == 0.0));
    }

    #[test]
    fn render_rejects_rate_mismatch_and_short_input() {
        let set = test_set(44_100);
        let mono = MonoAudio { samples: vec![0.1; 100], sample_rate: 16_000 };
        let traj = Trajectory3D::new(vec![Point3::new(1.0, 0.0, 0.0); 2], 25.0).unwrap();
        assert!(matches!(
            render_moving_source(&mono, &traj, &set, 4, &RenderOptions::default()),
            Err(Error::SampleRateMismatch { .. })
        ));
        let set = test_set(16_000);
        let short = MonoAudio { samples: vec![0.1; 3], sample_rate: 16_000 };
        assert!(matches!(
            render_moving_source(&short, &traj, &set, 4, &RenderOptions::default()),
            Err(Error::AudioTooShort { .. })
        ));
    }

    #[test]
    fn normalization_scales_peak_to_one() {
        let rate = 16_000u32;
        let set = test_set(rate);
        let mono = MonoAudio { samples: noise(2_000, 21), sample_rate: rate };
        let traj = Trajectory3D::new(vec![Point3::new(1.0, -0.5, 0.0); 4], 25.0).unwrap();
        let opts = RenderOptions { normalize: true, ..RenderOptions::default() };
        let out = render_moving_source(&mono, &traj, &set, 4, &opts).unwrap();
        let peak = out.left.iter().chain(&out.right).fold(0.0f64, |m, &s| m.max(s.abs()));
        assert!((peak - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_trajectory_swaps_channels_exactly() {
        let rate = 16_000u32;
        let set = test_set(rate);
        let mono = MonoAudio { samples: noise(3_000, 17), sample_rate: rate };
        let path: Vec<Point3> =
            (0..60).map(|k| Point3::new(1.1, -0.9 + 0.03 * k as f64, 0.0)).collect();
        let mirrored: Vec<Point3> = path.iter().map(|p| Point3::new(p.x, -p.y, p.z)).collect();
        let a = render_moving_source(
            &mono,
            &Trajectory3D::new(path, 25.0).unwrap(),
            &set,
            12,
            &RenderOptions::default(),
        )
        .unwrap();
        let b = render_moving_source(
            &mono,
            &Trajectory3D::new(mirrored, 25.0).unwrap(),
            &set,
            12,
            &RenderOptions::default(),
        )
        .unwrap();
        assert_eq!(a.left, b.right);
        assert_eq!(a.right, b.left);
    }
}
