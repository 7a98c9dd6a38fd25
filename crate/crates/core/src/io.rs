//! Line-delimited JSON records and CSV tables.
//!
//! Candidate stream:
//! `{"frame": 30, "interval": 1, "mask": "W H r0 r1 ...", "bbox": [x0,y0,x1,y1], "scores": {"shark": 0.98}}`
//!
//! Track records, one line per (origin, frame):
//! `{"origin_interval": 1, "origin_candidate": 0, "frame": 12, "mask": "..."}`
//!
//! A tracker that loses a candidate may instead write
//! `{"warning": "tracking-failed", "origin_interval": 1, "origin_candidate": 0, "message": "..."}`.
//!
//! Individuals: `{"id": 0, "frame": 12, "mask": "..."}`
//!
//! Ground truth from the scene generator: a leading
//! `{"scene": {"fps": .., "n_frames": .., "width": .., "height": .., "frequency_hz": [..]}}`
//! line, then `{"swimmer": 0, "frame": 12, "true_mask": "...", "arc_length_px": .., "head_xy": [x, y]}`.
//!
//! Readers report the 1-based line number of the first malformed record.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::alignment::{AlignmentOutcome, CandidateDetection, FileTracks, TrackOrigin, TrackRecord};
use crate::error::{Error, Result};
use crate::mask::{BinaryMask, BoundingBox};
use crate::synth::GroundTruth;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateLine {
    pub frame: usize,
    pub interval: usize,
    pub mask: BinaryMask,
    pub bbox: BoundingBox,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackLine {
    pub origin_interval: usize,
    pub origin_candidate: usize,
    pub frame: usize,
    pub mask: BinaryMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndividualLine {
    pub id: usize,
    pub frame: usize,
    pub mask: BinaryMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSummary {
    pub fps: f64,
    pub n_frames: usize,
    pub width: u32,
    pub height: u32,
    pub frequency_hz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFrameLine {
    pub swimmer: usize,
    pub frame: usize,
    pub true_mask: BinaryMask,
    pub arc_length_px: f64,
    pub head_xy: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthLine {
    Scene { scene: SceneSummary },
    Frame(TruthFrameLine),
}

/// Either an individuals line or a ground-truth frame line, as read for evaluation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
struct EvalMaskLine {
    #[serde(alias = "swimmer", default)]
    #[allow(dead_code)]
    id: usize,
    frame: usize,
    #[serde(alias = "true_mask")]
    mask: BinaryMask,
}

/// Parse every non-blank line as `T`.
pub fn read_ndjson<T: DeserializeOwned>(reader: impl BufRead, label: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Schema {
            path: label.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, value));
    }
    Ok(out)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn create(path: &Path) -> Result<std::io::BufWriter<File>> {
    File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

/// Read a candidate stream. Candidate indices count records per interval in file order.
pub fn read_candidates(reader: impl BufRead, label: &str) -> Result<Vec<CandidateDetection>> {
    let lines: Vec<(usize, CandidateLine)> = read_ndjson(reader, label)?;
    let mut per_interval: BTreeMap<usize, usize> = BTreeMap::new();
    let mut dims = None;
    let mut out = Vec::with_capacity(lines.len());
    for (line_no, c) in lines {
        let schema = |message: String| Error::Schema {
            path: label.to_string(),
            line: line_no,
            message,
        };
        if let Some((label, v)) = c.scores.iter().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(schema(format!("score for {label:?} is {v}, outside [0, 1]")));
        }
        match dims {
            None => dims = Some(c.mask.dims()),
            Some(d) if d != c.mask.dims() => {
                return Err(schema(format!(
                    "mask is {}x{}, earlier records are {}x{}",
                    c.mask.width(),
                    c.mask.height(),
                    d.0,
                    d.1
                )))
            }
            _ => {}
        }
        let slot = per_interval.entry(c.interval).or_insert(0);
        out.push(CandidateDetection {
            frame_index: c.frame,
            interval_index: c.interval,
            candidate_index: *slot,
            mask: c.mask,
            bbox: c.bbox,
            prompt_scores: c.scores,
        });
        *slot += 1;
    }
    Ok(out)
}

pub fn write_candidates(mut w: impl Write, candidates: &[CandidateDetection]) -> std::io::Result<()> {
    for c in candidates {
        let line = CandidateLine {
            frame: c.frame_index,
            interval: c.interval_index,
            mask: c.mask.clone(),
            bbox: c.bbox,
            scores: c.prompt_scores.clone(),
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackWarningLine {
    pub warning: String,
    pub origin_interval: usize,
    pub origin_candidate: usize,
    #[serde(default)]
    pub message: Option<String>,
}

/// Contents of a track file: tracks grouped by origin, plus tracker-reported failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrackFile {
    pub tracks: Vec<TrackRecord>,
    pub failures: BTreeMap<TrackOrigin, String>,
}

impl TrackFile {
    pub fn into_propagator(self) -> FileTracks {
        FileTracks::new(self.tracks).with_failures(self.failures)
    }
}

pub fn read_track_file(reader: impl BufRead, label: &str) -> Result<TrackFile> {
    let lines: Vec<(usize, serde_json::Value)> = read_ndjson(reader, label)?;
    let mut tracks: BTreeMap<TrackOrigin, TrackRecord> = BTreeMap::new();
    let mut failures = BTreeMap::new();
    for (line_no, value) in lines {
        let schema = |message: String| Error::Schema {
            path: label.to_string(),
            line: line_no,
            message,
        };
        if value.get("warning").is_some() {
            let w: TrackWarningLine = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
            let origin = TrackOrigin {
                interval: w.origin_interval,
                candidate: w.origin_candidate,
            };
            let reason = match w.message {
                Some(m) => format!("{}: {m}", w.warning),
                None => w.warning,
            };
            failures.insert(origin, reason);
            continue;
        }
        let t: TrackLine = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        let origin = TrackOrigin {
            interval: t.origin_interval,
            candidate: t.origin_candidate,
        };
        let track = tracks.entry(origin).or_insert_with(|| TrackRecord::new(origin));
        if track.masks.insert(t.frame, t.mask).is_some() {
            return Err(schema(format!(
                "duplicate frame {} for track (interval {}, candidate {})",
                t.frame, origin.interval, origin.candidate
            )));
        }
    }
    Ok(TrackFile {
        tracks: tracks.into_values().collect(),
        failures,
    })
}

/// Read track lines grouped by origin, ignoring tracker warning records.
pub fn read_tracks(reader: impl BufRead, label: &str) -> Result<Vec<TrackRecord>> {
    read_track_file(reader, label).map(|f| f.tracks)
}

/// Write tracks ordered by (interval, candidate, frame); absent frames are omitted.
pub fn write_tracks(mut w: impl Write, tracks: &[TrackRecord]) -> std::io::Result<()> {
    let mut sorted: Vec<&TrackRecord> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.origin);
    for t in sorted {
        for (&frame, mask) in t.masks.iter().filter(|(_, m)| !m.is_empty()) {
            let line = TrackLine {
                origin_interval: t.origin.interval,
                origin_candidate: t.origin.candidate,
                frame,
                mask: mask.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_individuals(mut w: impl Write, outcome: &AlignmentOutcome) -> std::io::Result<()> {
    for (id, frame, mask) in outcome.frame_masks() {
        serde_json::to_writer(
            &mut w,
            &IndividualLine {
                id,
                frame,
                mask: mask.clone(),
            },
        )?;
        writeln!(w)?;
    }
    Ok(())
}

/// Individuals as `id -> frame -> mask`.
pub fn read_individuals(
    reader: impl BufRead,
    label: &str,
) -> Result<BTreeMap<usize, BTreeMap<usize, BinaryMask>>> {
    let lines: Vec<(usize, IndividualLine)> = read_ndjson(reader, label)?;
    let mut out: BTreeMap<usize, BTreeMap<usize, BinaryMask>> = BTreeMap::new();
    for (line_no, l) in lines {
        if out.entry(l.id).or_default().insert(l.frame, l.mask).is_some() {
            return Err(Error::Schema {
                path: label.to_string(),
                line: line_no,
                message: format!("duplicate frame {} for individual {}", l.frame, l.id),
            });
        }
    }
    Ok(out)
}

pub fn write_truth(mut w: impl Write, truth: &GroundTruth) -> std::io::Result<()> {
    let scene = TruthLine::Scene {
        scene: SceneSummary {
            fps: truth.fps,
            n_frames: truth.n_frames,
            width: truth.width,
            height: truth.height,
            frequency_hz: truth.swimmers.iter().map(|s| s.frequency_hz).collect(),
        },
    };
    serde_json::to_writer(&mut w, &scene)?;
    writeln!(w)?;
    for frame in 0..truth.n_frames {
        for (i, s) in truth.swimmers.iter().enumerate() {
            let fr = &s.frames[frame];
            let line = TruthLine::Frame(TruthFrameLine {
                swimmer: i,
                frame,
                true_mask: fr.mask.clone(),
                arc_length_px: fr.arc_length_px,
                head_xy: [fr.head.x, fr.head.y],
            });
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_truth(reader: impl BufRead, label: &str) -> Result<Vec<TruthLine>> {
    Ok(read_ndjson(reader, label)?.into_iter().map(|(_, l)| l).collect())
}

/// Masks keyed by frame index.
pub type FrameMasks = BTreeMap<usize, Vec<BinaryMask>>;

/// Masks grouped per frame, from individuals or ground-truth NDJSON.
///
/// Returns the frame map and, when present, the frame count declared by a
/// ground-truth scene line.
pub fn read_frame_masks(
    reader: impl BufRead,
    label: &str,
) -> Result<(FrameMasks, Option<usize>)> {
    let mut frames = FrameMasks::new();
    let mut declared = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(label, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| Error::Schema {
            path: label.to_string(),
            line: i + 1,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if let Some(scene) = value.get("scene") {
            let summary: SceneSummary =
                serde_json::from_value(scene.clone()).map_err(|e| schema(e.to_string()))?;
            declared = Some(summary.n_frames);
            continue;
        }
        let rec: EvalMaskLine = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        frames.entry(rec.frame).or_default().push(rec.mask);
    }
    Ok((frames, declared))
}

/// `frame,individual_id,length_px,length_m`
pub fn write_length_csv(
    mut w: impl Write,
    rows: &[(usize, usize, f64, f64)],
) -> std::io::Result<()> {
    writeln!(w, "frame,individual_id,length_px,length_m")?;
    for (frame, id, px, m) in rows {
        writeln!(w, "{frame},{id},{px:.4},{m:.6}")?;
    }
    Ok(())
}

/// `frame,individual_id,displacement_px,displacement_smoothed_px`; empty cells where a value is missing.
pub fn write_displacement_csv(
    mut w: impl Write,
    rows: &[(usize, usize, Option<f64>, Option<f64>)],
) -> std::io::Result<()> {
    writeln!(w, "frame,individual_id,displacement_px,displacement_smoothed_px")?;
    let cell = |v: &Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
    for (frame, id, raw, smooth) in rows {
        writeln!(w, "{frame},{id},{},{}", cell(raw), cell(smooth))?;
    }
    Ok(())
}

/// `window_center_s,individual_id,tbf_hz`
pub fn write_tbf_csv(mut w: impl Write, rows: &[(f64, usize, f64)]) -> std::io::Result<()> {
    writeln!(w, "window_center_s,individual_id,tbf_hz")?;
    for (center, id, tbf) in rows {
        writeln!(w, "{center:.2},{id},{tbf:.6}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::AlignmentConfig;

    const CANDIDATES: &str = r#"{"frame": 0, "interval": 0, "mask": "4 2 1 2 5", "bbox": [1,0,2,0], "scores": {"shark": 0.99, "rock": 0.01}}
{"frame": 0, "interval": 0, "mask": "4 2 6 2", "bbox": [2,1,3,1], "scores": {"shark": 0.2}}

{"frame": 30, "interval": 1, "mask": "4 2 1 2 5", "bbox": [1,0,2,0], "scores": {"shark": 0.97}}
"#;

    #[test]
    fn candidates_parse_with_per_interval_indices() {
        let c = read_candidates(CANDIDATES.as_bytes(), "c.ndjson").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(
            c.iter().map(|d| (d.interval_index, d.candidate_index)).collect::<Vec<_>>(),
            vec![(0, 0), (0, 1), (1, 0)]
        );
        assert_eq!(c[0].mask.area(), 2);
        let kept = crate::alignment::filter_candidates(&c, &AlignmentConfig::default()).unwrap();
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn tracker_warnings_become_propagation_failures() {
        use crate::alignment::{PropagationRequest, TrackPropagator};
        let text = r#"{"origin_interval": 0, "origin_candidate": 0, "frame": 0, "mask": "4 2 1 2 5"}
{"warning": "tracking-failed", "origin_interval": 1, "origin_candidate": 0, "message": "lost at frame 31"}
"#;
        let file = read_track_file(text.as_bytes(), "t").unwrap();
        assert_eq!(file.tracks.len(), 1);
        let origin = TrackOrigin { interval: 1, candidate: 0 };
        assert_eq!(file.failures[&origin], "tracking-failed: lost at frame 31");
        let c = &read_candidates(CANDIDATES.as_bytes(), "c").unwrap()[2];
        let err = file.into_propagator().propagate(&PropagationRequest::from(c)).unwrap_err();
        assert!(err.to_string().contains("lost at frame 31"), "{err}");
        let bad = r#"{"warning": "x", "origin_interval": 1}"#;
        assert!(matches!(read_track_file(bad.as_bytes(), "t"), Err(Error::Schema { line: 1, .. })));
    }

    #[test]
    fn malformed_line_reports_number() {
        let text = format!("{CANDIDATES}{{\"frame\": 60, \"interval\": 2, \"mask\": \"4 2 9\"}}\n");
        match read_candidates(text.as_bytes(), "c.ndjson") {
            Err(Error::Schema { line, path, .. }) => {
                assert_eq!(line, 5);
                assert_eq!(path, "c.ndjson");
            }
            other => panic!("unexpected {other:?}"),
        }
        let unknown = r#"{"frame": 0, "interval": 0, "mask": "1 1 1", "bbox": [0,0,0,0], "scores": {}, "extra": 1}"#;
        assert!(matches!(read_candidates(unknown.as_bytes(), "x"), Err(Error::Schema { line: 1, .. })));
        let bad_score = r#"{"frame": 0, "interval": 0, "mask": "1 1 1", "bbox": [0,0,0,0], "scores": {"shark": 1.5}}"#;
        assert!(matches!(read_candidates(bad_score.as_bytes(), "x"), Err(Error::Schema { line: 1, .. })));
        let bad_box = r#"{"frame": 0, "interval": 0, "mask": "1 1 1", "bbox": [3,0,1,0], "scores": {}}"#;
        assert!(read_candidates(bad_box.as_bytes(), "x").is_err());
    }

    #[test]
    fn tracks_group_and_round_trip() {
        let text = r#"{"origin_interval": 1, "origin_candidate": 0, "frame": 0, "mask": "2 2 0 4"}
{"origin_interval": 0, "origin_candidate": 0, "frame": 0, "mask": "2 2 3 1"}
{"origin_interval": 1, "origin_candidate": 0, "frame": 1, "mask": "2 2 3 1"}
"#;
        let tracks = read_tracks(text.as_bytes(), "t").unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[1].masks.len(), 2);
        let mut buf = Vec::new();
        write_tracks(&mut buf, &tracks).unwrap();
        assert_eq!(read_tracks(buf.as_slice(), "t").unwrap(), tracks);

        let dup = r#"{"origin_interval": 0, "origin_candidate": 0, "frame": 0, "mask": "2 2 0 4"}
{"origin_interval": 0, "origin_candidate": 0, "frame": 0, "mask": "2 2 0 4"}"#;
        assert!(matches!(read_tracks(dup.as_bytes(), "t"), Err(Error::Schema { line: 2, .. })));
    }

    #[test]
    fn frame_masks_accept_truth_lines() {
        let text = r#"{"scene": {"fps": 30.0, "n_frames": 3, "width": 2, "height": 2, "frequency_hz": [0.5]}}
{"swimmer": 0, "frame": 1, "true_mask": "2 2 0 4", "arc_length_px": 2.0, "head_xy": [0.0, 0.0]}
"#;
        let (frames, declared) = read_frame_masks(text.as_bytes(), "gt").unwrap();
        assert_eq!(declared, Some(3));
        assert_eq!(frames[&1][0].area(), 4);
        let ind = r#"{"id": 2, "frame": 0, "mask": "2 2 3 1"}"#;
        let (frames, declared) = read_frame_masks(ind.as_bytes(), "p").unwrap();
        assert_eq!(declared, None);
        assert_eq!(frames[&0].len(), 1);
    }
}
