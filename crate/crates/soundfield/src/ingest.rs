//! Detection tracks and depth maps.
//!
//! The pipeline's upstream artifacts are per-frame object detections (label,
//! confidence, bounding box) and per-frame relative depth maps. This module
//! loads both from disk, picks the sound-source label, and reduces each frame
//! to a [`PlanarObservation`]: box center in pixels plus the depth sampled at
//! that center. Frames without a usable detection are emitted as explicit
//! gaps so the geometry stage can interpolate them instead of silently
//! shortening the trajectory.
//!
//! # On-disk formats
//!
//! Detection tracks are JSON:
//!
//! ```json
//! {
//!   "frames": [
//!     { "frame_index": 1,
//!       "boxes": [ { "label": "dog", "confidence": 0.92,
//!                    "x0": 10.0, "y0": 20.0, "x1": 110.0, "y1": 220.0 } ] }
//!   ]
//! }
//! ```
//!
//! `frame_index` is 1-based and strictly increasing; missing indices are
//! frames with no detections. Box corners are pixels, `(x0, y0)` top-left,
//! `(x1, y1)` bottom-right, exclusive of nothing; a box degenerate in either
//! axis (extent `<= 1e-9` px) is rejected.
//!
//! Depth maps live in a directory with one file per frame, named by the
//! zero-padded 1-based frame index. Two layouts are accepted:
//!
//! * `NNNNNN.pgm`: binary PGM (`P5`), maxval up to 65535. Sample values are
//!   used verbatim as relative depth.
//! * `NNNNNN.f32` plus a `depth_meta.json` sidecar `{"width": W, "height": H}`
//!   in the same directory: row-major little-endian 32-bit floats, one plane
//!   per file.
//!
//! The sidecar's presence selects the raw layout.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::PlanarObservation;

/// One detected box in one frame.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct BoundingBox {
    pub label: String,
    pub confidence: f64,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

/// All detections of one video frame.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrackFrame {
    /// 1-based video frame index.
    pub frame_index: usize,
    #[serde(default)]
    pub boxes: Vec<BoundingBox>,
}

/// A whole detection track, ordered by frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionTrack {
    frames: Vec<TrackFrame>,
}

impl DetectionTrack {
    /// Validates frame ordering (1-based, strictly increasing) and box
    /// confidences.
    pub fn new(frames: Vec<TrackFrame>) -> Result<Self> {
        let mut last = 0usize;
        for f in &frames {
            if f.frame_index == 0 {
                return Err(Error::InvalidFormat {
                    kind: "track",
                    detail: "frame_index must be 1-based".into(),
                });
            }
            if f.frame_index <= last {
                return Err(Error::InvalidFormat {
                    kind: "track",
                    detail: format!(
                        "frame indices must be strictly increasing ({} after {last})",
                        f.frame_index
                    ),
                });
            }
            last = f.frame_index;
            for b in &f.boxes {
                if !b.confidence.is_finite() || !(0.0..=1.0).contains(&b.confidence) {
                    return Err(Error::InvalidFormat {
                        kind: "track",
                        detail: format!("confidence {} outside [0, 1]", b.confidence),
                    });
                }
            }
        }
        Ok(DetectionTrack { frames })
    }

    pub fn frames(&self) -> &[TrackFrame] {
        &self.frames
    }

    /// Highest frame index present; 0 for an empty track.
    pub fn last_frame_index(&self) -> usize {
        self.frames.last().map_or(0, |f| f.frame_index)
    }

    /// Parses the JSON track document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            frames: Vec<TrackFrame>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        DetectionTrack::new(doc.frames)
    }

    /// Reads a JSON track document from a file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

/// Center of a bounding box. Boxes must have positive extent in both axes
/// beyond a 1e-9 px tolerance.
pub fn bbox_center(b: &BoundingBox) -> Result<(f64, f64)> {
    let finite = [b.x0, b.y0, b.x1, b.y1].iter().all(|v| v.is_finite());
    if !finite || b.x1 - b.x0 <= 1e-9 || b.y1 - b.y0 <= 1e-9 {
        return Err(Error::DegenerateBox { x0: b.x0, y0: b.y0, x1: b.x1, y1: b.y1 });
    }
    Ok(((b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0))
}

/// Picks the sound-source label for a track: the label of the single most
/// confident detection anywhere in the track. Equal confidences resolve to
/// the lexicographically smallest label, so the choice is stable under box
/// reordering.
pub fn select_label(track: &DetectionTrack) -> Result<String> {
    let mut best: Option<(&str, f64)> = None;
    for frame in track.frames() {
        for b in &frame.boxes {
            best = match best {
                None => Some((&b.label, b.confidence)),
                Some((label, conf)) => {
                    if b.confidence > conf
                        || (b.confidence == conf && b.label.as_str() < label)
                    {
                        Some((&b.label, b.confidence))
                    } else {
                        Some((label, conf))
                    }
                }
            };
        }
    }
    best.map(|(label, _)| label.to_string()).ok_or(Error::NoDetections)
}

/// One frame's relative depth plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMapFrame {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMapFrame {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFormat {
                kind: "depth map",
                detail: format!("empty dimensions {width}x{height}"),
            });
        }
        if values.len() != (width as usize) * (height as usize) {
            return Err(Error::InvalidFormat {
                kind: "depth map",
                detail: format!(
                    "{} values for {width}x{height} plane",
                    values.len()
                ),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFormat {
                kind: "depth map",
                detail: "non-finite depth value".into(),
            });
        }
        Ok(DepthMapFrame { width, height, values })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Value at integer pixel coordinates (column `w`, row `h`).
    pub fn value(&self, w: u32, h: u32) -> f64 {
        self.values[h as usize * self.width as usize + w as usize]
    }

    /// Smallest and largest value in the plane.
    pub fn min_max(&self) -> (f64, f64) {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in &self.values {
            min = min.min(v);
            max = max.max(v);
        }
        (min, max)
    }
}

/// Depth sampled at one pixel, together with the plane's extrema (needed by
/// the per-frame min-max normalization downstream).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSample {
    pub value: f64,
    pub min: f64,
    pub max: f64,
}

/// Samples a depth map at fractional pixel coordinates.
///
/// Coordinates are rounded to the nearest pixel (halves round away from
/// zero) and must land inside the plane after rounding.
pub fn sample_depth(map: &DepthMapFrame, w_px: f64, h_px: f64) -> Result<DepthSample> {
    if !w_px.is_finite() || !h_px.is_finite() {
        return Err(Error::InvalidParameter("non-finite sample coordinates".into()));
    }
    let wi = w_px.round();
    let hi = h_px.round();
    if wi < 0.0 || hi < 0.0 || wi >= f64::from(map.width) || hi >= f64::from(map.height) {
        return Err(Error::PixelOutOfBounds {
            w: wi as i64,
            h: hi as i64,
            width: map.width,
            height: map.height,
        });
    }
    let (min, max) = map.min_max();
    Ok(DepthSample { value: map.value(wi as u32, hi as u32), min, max })
}

/// Source of per-frame depth planes, keyed by 1-based frame index.
pub trait DepthSource {
    fn depth_frame(&self, frame_index: usize) -> Result<DepthMapFrame>;
}

/// Depth planes held in memory; convenient for tests and synthetic input.
#[derive(Debug, Clone, Default)]
pub struct InMemoryDepth {
    frames: BTreeMap<usize, DepthMapFrame>,
}

impl InMemoryDepth {
    pub fn insert(&mut self, frame_index: usize, frame: DepthMapFrame) {
        self.frames.insert(frame_index, frame);
    }
}

impl DepthSource for InMemoryDepth {
    fn depth_frame(&self, frame_index: usize) -> Result<DepthMapFrame> {
        self.frames.get(&frame_index).cloned().ok_or_else(|| Error::InvalidFormat {
            kind: "depth map",
            detail: format!("no depth plane for frame {frame_index}"),
        })
    }
}

#[derive(Debug, Clone)]
enum DepthDirLayout {
    /// Binary PGM files, one per frame.
    Pgm,
    /// Raw little-endian f32 planes with dimensions from the sidecar.
    RawF32 { width: u32, height: u32 },
}

/// A directory of depth planes, one file per frame.
#[derive(Debug, Clone)]
pub struct DepthDir {
    dir: PathBuf,
    layout: DepthDirLayout,
}

impl DepthDir {
    /// Opens a depth directory, selecting the raw-f32 layout when a
    /// `depth_meta.json` sidecar is present and PGM otherwise.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let sidecar = dir.join("depth_meta.json");
        let layout = if sidecar.exists() {
            #[derive(Deserialize)]
            struct Meta {
                width: u32,
                height: u32,
            }
            let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
            let meta: Meta = serde_json::from_str(&text)?;
            if meta.width == 0 || meta.height == 0 {
                return Err(Error::InvalidFormat {
                    kind: "depth sidecar",
                    detail: format!("empty dimensions {}x{}", meta.width, meta.height),
                });
            }
            DepthDirLayout::RawF32 { width: meta.width, height: meta.height }
        } else {
            DepthDirLayout::Pgm
        };
        Ok(DepthDir { dir, layout })
    }

    fn frame_path(&self, frame_index: usize) -> PathBuf {
        let ext = match self.layout {
            DepthDirLayout::Pgm => "pgm",
            DepthDirLayout::RawF32 { .. } => "f32",
        };
        self.dir.join(format!("{frame_index:06}.{ext}"))
    }
}

impl DepthSource for DepthDir {
    fn depth_frame(&self, frame_index: usize) -> Result<DepthMapFrame> {
        let path = self.frame_path(frame_index);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        match self.layout {
            DepthDirLayout::Pgm => parse_pgm(&bytes),
            DepthDirLayout::RawF32 { width, height } => {
                let expected = width as usize * height as usize * 4;
                if bytes.len() != expected {
                    return Err(Error::InvalidFormat {
                        kind: "depth plane",
                        detail: format!(
                            "{}: {} bytes, expected {expected} for {width}x{height} f32",
                            path.display(),
                            bytes.len()
                        ),
                    });
                }
                let values = bytes
                    .chunks_exact(4)
                    .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
                    .collect();
                DepthMapFrame::new(width, height, values)
            }
        }
    }
}

/// Parses a binary PGM (`P5`) plane. Values are used verbatim; maxval up to
/// 255 reads one byte per sample, larger maxvals two big-endian bytes.
pub fn parse_pgm(bytes: &[u8]) -> Result<DepthMapFrame> {
    let mut cursor = bytes;
    let bad = |detail: String| Error::InvalidFormat { kind: "pgm", detail };

    fn token(cursor: &mut &[u8]) -> Option<Vec<u8>> {
        // Skip whitespace and '#' comment lines between tokens.
        loop {
            match cursor.first()? {
                b' ' | b'\t' | b'\r' | b'\n' => {
                    *cursor = &cursor[1..];
                }
                b'#' => {
                    let end = cursor.iter().position(|&b| b == b'\n')?;
                    *cursor = &cursor[end + 1..];
                }
                _ => break,
            }
        }
        let end = cursor
            .iter()
            .position(|b| b.is_ascii_whitespace())
            .unwrap_or(cursor.len());
        let tok = cursor[..end].to_vec();
        *cursor = &cursor[end..];
        Some(tok)
    }

    let magic = token(&mut cursor).ok_or_else(|| bad("truncated header".into()))?;
    if magic != b"P5" {
        return Err(bad(format!("bad magic {:?}", String::from_utf8_lossy(&magic))));
    }
    let mut next_u32 = |what: &str| -> Result<u32> {
        let tok = token(&mut cursor).ok_or_else(|| bad(format!("missing {what}")))?;
        std::str::from_utf8(&tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("bad {what}")))
    };
    let width = next_u32("width")?;
    let height = next_u32("height")?;
    let maxval = next_u32("maxval")?;
    if maxval == 0 || maxval > 65_535 {
        return Err(bad(format!("maxval {maxval} outside 1..=65535")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let mut sep = [0u8; 1];
    cursor.read_exact(&mut sep).map_err(|_| bad("missing raster".into()))?;
    if !sep[0].is_ascii_whitespace() {
        return Err(bad("missing raster separator".into()));
    }

    let n = width as usize * height as usize;
    let values: Vec<f64> = if maxval <= 255 {
        if cursor.len() < n {
            return Err(bad(format!("raster has {} bytes, expected {n}", cursor.len())));
        }
        cursor[..n].iter().map(|&b| f64::from(b)).collect()
    } else {
        if cursor.len() < 2 * n {
            return Err(bad(format!("raster has {} bytes, expected {}", cursor.len(), 2 * n)));
        }
        cursor[..2 * n]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    };
    DepthMapFrame::new(width, height, values)
}

/// Serializes a depth plane as 16-bit binary PGM. Values are rounded and
/// clamped to `[0, 65535]`; useful for writing synthetic fixtures.
pub fn write_pgm16(map: &DepthMapFrame) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", map.width, map.height).into_bytes();
    for &v in &map.values {
        let q = v.round().clamp(0.0, 65_535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    out
}

/// One track frame reduced to an observation, or an explicit gap.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    /// 1-based video frame index.
    pub frame_index: usize,
    /// `None` when the frame carries no detection of the selected label.
    pub observed: Option<ObservedPoint>,
}

/// A successful observation: planar coordinates plus the depth extrema of
/// the frame it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPoint {
    pub observation: PlanarObservation,
    pub depth_min: f64,
    pub depth_max: f64,
}

/// Reduces a track to per-frame observations of `label`, sampling depth at
/// each box center.
///
/// The output covers every frame index from 1 to the track's last frame:
/// frames without a detection of `label` become gaps. Within a frame, the
/// most confident box of the label wins; equal confidences keep the earliest
/// box in file order. Errors if no frame carries the label at all.
pub fn track_to_observations(
    track: &DetectionTrack,
    label: &str,
    depth: &dyn DepthSource,
) -> Result<Vec<FrameObservation>> {
    let total = track.last_frame_index();
    if total == 0 {
        return Err(Error::NoDetections);
    }

    let mut by_index: BTreeMap<usize, &TrackFrame> = BTreeMap::new();
    for frame in track.frames() {
        by_index.insert(frame.frame_index, frame);
    }

    let mut out = Vec::with_capacity(total);
    let mut detected = 0usize;
    for frame_index in 1..=total {
        let best = by_index.get(&frame_index).and_then(|frame| {
            frame
                .boxes
                .iter()
                .filter(|b| b.label == label)
                .fold(None::<&BoundingBox>, |acc, b| match acc {
                    Some(cur) if cur.confidence >= b.confidence => Some(cur),
                    _ => Some(b),
                })
        });
        let observed = match best {
            None => None,
            Some(b) => {
                let (w, h) = bbox_center(b)?;
                let plane = depth.depth_frame(frame_index)?;
                let sample = sample_depth(&plane, w, h)?;
                detected += 1;
                Some(ObservedPoint {
                    observation: PlanarObservation {
                        frame_index,
                        w_px: w,
                        h_px: h,
                        depth: sample.value,
                    },
                    depth_min: sample.min,
                    depth_max: sample.max,
                })
            }
        };
        out.push(FrameObservation { frame_index, observed });
    }

    if detected == 0 {
        return Err(Error::NoDetections);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(label: &str, confidence: f64) -> BoundingBox {
        BoundingBox { label: label.into(), confidence, x0: 0.0, y0: 0.0, x1: 10.0, y1: 10.0 }
    }

    #[test]
    fn bbox_center_is_midpoint() {
        let b = BoundingBox { label: "a".into(), confidence: 1.0, x0: 10.0, y0: 20.0, x1: 110.0, y1: 220.0 };
        assert_eq!(bbox_center(&b).unwrap(), (60.0, 120.0));
    }

    #[test]
    fn bbox_center_accepts_tiny_but_positive_extent() {
        let b = BoundingBox {
            label: "a".into(),
            confidence: 1.0,
            x0: 100.0,
            y0: 100.0,
            x1: 100.0001,
            y1: 100.0001,
        };
        let (w, h) = bbox_center(&b).unwrap();
        assert!((w - 100.00005).abs() < 1e-9);
        assert!((h - 100.00005).abs() < 1e-9);
    }

    #[test]
    fn bbox_center_rejects_degenerate_boxes() {
        let b = BoundingBox { label: "a".into(), confidence: 1.0, x0: 5.0, y0: 5.0, x1: 5.0, y1: 9.0 };
        assert!(matches!(bbox_center(&b), Err(Error::DegenerateBox { .. })));
        let b = BoundingBox { label: "a".into(), confidence: 1.0, x0: 9.0, y0: 5.0, x1: 5.0, y1: 9.0 };
        assert!(matches!(bbox_center(&b), Err(Error::DegenerateBox { .. })));
    }

    #[test]
    fn select_label_takes_global_argmax() {
        let track = DetectionTrack::new(vec![
            TrackFrame { frame_index: 1, boxes: vec![boxed("dog", 0.8)] },
            TrackFrame { frame_index: 2, boxes: vec![boxed("cat", 0.95), boxed("dog", 0.7)] },
        ])
        .unwrap();
        assert_eq!(select_label(&track).unwrap(), "cat");
    }

    #[test]
    fn select_label_breaks_ties_lexicographically() {
        let track = DetectionTrack::new(vec![TrackFrame {
            frame_index: 1,
            boxes: vec![boxed("dog", 0.9), boxed("cat", 0.9)],
        }])
        .unwrap();
        assert_eq!(select_label(&track).unwrap(), "cat");
    }

    #[test]
    fn select_label_needs_detections() {
        let track = DetectionTrack::new(vec![TrackFrame { frame_index: 1, boxes: vec![] }]).unwrap();
        assert!(matches!(select_label(&track), Err(Error::NoDetections)));
    }

    #[test]
    fn track_rejects_unsorted_frames() {
        let frames = vec![
            TrackFrame { frame_index: 2, boxes: vec![] },
            TrackFrame { frame_index: 1, boxes: vec![] },
        ];
        assert!(DetectionTrack::new(frames).is_err());
    }

    #[test]
    fn depth_sampling_rounds_half_away_from_zero() {
        let map = DepthMapFrame::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(sample_depth(&map, 1.0, 1.0).unwrap().value, 4.0);
        assert_eq!(sample_depth(&map, 0.5, 0.0).unwrap().value, 2.0);
        assert_eq!(sample_depth(&map, 0.4, 0.4).unwrap().value, 1.0);
        let s = sample_depth(&map, 0.0, 0.0).unwrap();
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }

    #[test]
    fn depth_sampling_rejects_out_of_bounds_after_rounding() {
        let map = DepthMapFrame::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(sample_depth(&map, 1.5, 0.0).is_err(), "rounds to column 2");
        assert!(sample_depth(&map, -0.6, 0.0).is_err());
        assert!(sample_depth(&map, 0.0, 2.0).is_err());
        assert!(sample_depth(&map, -0.4, 0.0).is_ok(), "rounds to column 0");
    }

    #[test]
    fn pgm_round_trip_16_bit() {
        let map = DepthMapFrame::new(3, 2, vec![0.0, 7.0, 65535.0, 256.0, 1.0, 513.0]).unwrap();
        let bytes = write_pgm16(&map);
        let back = parse_pgm(&bytes).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn pgm_parses_8_bit_and_comments() {
        let mut bytes = b"P5 # comment\n# another\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 250]);
        let map = parse_pgm(&bytes).unwrap();
        assert_eq!(map.value(0, 0), 7.0);
        assert_eq!(map.value(1, 0), 250.0);
    }

    #[test]
    fn pgm_rejects_short_raster() {
        let bytes = b"P5\n4 4\n65535\n\x00\x01".to_vec();
        assert!(parse_pgm(&bytes).is_err());
    }

    #[test]
    fn raw_f32_depth_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("depth_meta.json"), r#"{"width": 2, "height": 1}"#).unwrap();
        let mut plane = Vec::new();
        for v in [1.5f32, -0.25] {
            plane.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(dir.path().join("000003.f32"), plane).unwrap();

        let source = DepthDir::open(dir.path()).unwrap();
        let map = source.depth_frame(3).unwrap();
        assert_eq!(map.value(0, 0), 1.5);
        assert_eq!(map.value(1, 0), -0.25);
        assert!(source.depth_frame(4).is_err(), "missing file");
    }

    #[test]
    fn raw_f32_depth_dir_rejects_wrong_plane_size() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("depth_meta.json"), r#"{"width": 2, "height": 2}"#).unwrap();
        std::fs::write(dir.path().join("000001.f32"), [0u8; 4]).unwrap();
        let source = DepthDir::open(dir.path()).unwrap();
        assert!(matches!(source.depth_frame(1), Err(Error::InvalidFormat { .. })));
    }

    fn flat_depth(value: f64) -> DepthMapFrame {
        DepthMapFrame::new(4, 4, vec![value; 16]).unwrap()
    }

    #[test]
    fn observations_cover_every_frame_with_gaps() {
        let track = DetectionTrack::new(vec![
            TrackFrame {
                frame_index: 1,
                boxes: vec![BoundingBox { label: "dog".into(), confidence: 0.9, x0: 0.0, y0: 0.0, x1: 2.0, y1: 2.0 }],
            },
            TrackFrame {
                frame_index: 3,
                boxes: vec![BoundingBox { label: "dog".into(), confidence: 0.8, x0: 2.0, y0: 2.0, x1: 4.0, y1: 4.0 }],
            },
        ])
        .unwrap();
        let mut depth = InMemoryDepth::default();
        depth.insert(1, flat_depth(5.0));
        depth.insert(3, flat_depth(7.0));

        let obs = track_to_observations(&track, "dog", &depth).unwrap();
        assert_eq!(obs.len(), 3, "one entry per frame up to the last index");
        assert!(obs[0].observed.is_some());
        assert!(obs[1].observed.is_none(), "frame 2 is a gap");
        assert!(obs[2].observed.is_some());
        let p = obs[2].observed.as_ref().unwrap();
        assert_eq!(p.observation.w_px, 3.0);
        assert_eq!(p.observation.depth, 7.0);
        let detected = obs.iter().filter(|o| o.observed.is_some()).count();
        let gaps = obs.iter().filter(|o| o.observed.is_none()).count();
        assert_eq!(detected + gaps, obs.len());
    }

    #[test]
    fn observations_prefer_most_confident_box_of_label() {
        let track = DetectionTrack::new(vec![TrackFrame {
            frame_index: 1,
            boxes: vec![
                BoundingBox { label: "dog".into(), confidence: 0.5, x0: 0.0, y0: 0.0, x1: 2.0, y1: 2.0 },
                BoundingBox { label: "dog".into(), confidence: 0.9, x0: 2.0, y0: 2.0, x1: 4.0, y1: 4.0 },
                BoundingBox { label: "cat".into(), confidence: 0.99, x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 },
            ],
        }])
        .unwrap();
        let mut depth = InMemoryDepth::default();
        depth.insert(1, flat_depth(1.0));
        let obs = track_to_observations(&track, "dog", &depth).unwrap();
        assert_eq!(obs[0].observed.as_ref().unwrap().observation.w_px, 3.0);
    }

    #[test]
    fn observations_error_when_label_never_appears() {
        let track = DetectionTrack::new(vec![TrackFrame { frame_index: 1, boxes: vec![boxed("cat", 0.9)] }])
            .unwrap();
        let depth = InMemoryDepth::default();
        assert!(matches!(
            track_to_observations(&track, "dog", &depth),
            Err(Error::NoDetections)
        ));
    }
}
