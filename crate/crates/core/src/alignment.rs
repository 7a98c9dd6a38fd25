//! Cross-interval track alignment.
//!
//! Candidates are generated on every `interval_stride`-th frame, gated on the
//! score of the target prompt, and each surviving candidate is propagated over
//! the whole video (forward and backward) by a [`TrackPropagator`]. A track is
//! confirmed only when tracks started from other sampled intervals agree with
//! it: on at least one shared frame their masks overlap with IOU above the
//! threshold. Confirmed tracks that agree with each other are merged into one
//! individual. Objects seen from a single interval never gather support and
//! are dropped.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, BoundingBox};

/// Frame at which candidates are generated: `[0, stride, 2*stride, ...)` below `n_frames`.
pub fn sample_interval_frames(n_frames: usize, stride: usize) -> Vec<usize> {
    (0..n_frames).step_by(stride.max(1)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentConfig {
    /// Frames between candidate-generation frames.
    pub interval_stride: usize,
    /// Candidates need a target-prompt probability strictly above this.
    pub score_threshold: f64,
    /// Two tracks are aligned on a frame when their IOU is strictly above this.
    pub iou_threshold: f64,
    pub shark_prompt_label: String,
    /// Number of distinct other intervals that must agree with a track.
    pub min_support: usize,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        Self {
            interval_stride: 30,
            score_threshold: 0.95,
            iou_threshold: 0.7,
            shark_prompt_label: "shark".to_string(),
            min_support: 1,
        }
    }
}

impl AlignmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interval_stride < 1 {
            return Err(Error::InvalidConfig("interval_stride must be >= 1".into()));
        }
        for (name, v) in [
            ("score_threshold", self.score_threshold),
            ("iou_threshold", self.iou_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.min_support < 1 {
            return Err(Error::InvalidConfig("min_support must be >= 1".into()));
        }
        if self.shark_prompt_label.is_empty() {
            return Err(Error::InvalidConfig("shark_prompt_label is empty".into()));
        }
        Ok(())
    }
}

/// A mask proposed on a sampled frame, with per-prompt probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateDetection {
    pub frame_index: usize,
    pub interval_index: usize,
    /// Position among the records of the same interval in the candidate
    /// stream, before gating. Tracks refer back to candidates by this index.
    pub candidate_index: usize,
    pub mask: BinaryMask,
    pub bbox: BoundingBox,
    pub prompt_scores: BTreeMap<String, f64>,
}

/// Keep the candidates whose target-prompt score is strictly above the threshold.
pub fn filter_candidates(
    dets: &[CandidateDetection],
    cfg: &AlignmentConfig,
) -> Result<Vec<CandidateDetection>> {
    let mut kept = Vec::new();
    for (index, det) in dets.iter().enumerate() {
        let score = det
            .prompt_scores
            .get(&cfg.shark_prompt_label)
            .ok_or_else(|| Error::MissingScore {
                index,
                frame: det.frame_index,
                interval: det.interval_index,
                label: cfg.shark_prompt_label.clone(),
            })?;
        if *score > cfg.score_threshold {
            kept.push(det.clone());
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TrackOrigin {
    pub interval: usize,
    pub candidate: usize,
}

/// One candidate propagated over the video. Frames without an entry (or with
/// an empty mask) are frames where the object was not tracked.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackRecord {
    pub origin: TrackOrigin,
    pub masks: BTreeMap<usize, BinaryMask>,
}

impl TrackRecord {
    pub fn new(origin: TrackOrigin) -> Self {
        Self {
            origin,
            masks: BTreeMap::new(),
        }
    }

    pub fn present_frames(&self) -> impl Iterator<Item = usize> + '_ {
        self.masks
            .iter()
            .filter(|(_, m)| !m.is_empty())
            .map(|(&f, _)| f)
    }

    pub fn mask_at(&self, frame: usize) -> Option<&BinaryMask> {
        self.masks.get(&frame).filter(|m| !m.is_empty())
    }
}

/// An animal confirmed by cross-interval agreement.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfirmedIndividual {
    pub id: usize,
    pub masks: BTreeMap<usize, BinaryMask>,
    pub supporting_intervals: BTreeSet<usize>,
    pub member_tracks: Vec<TrackOrigin>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignmentWarning {
    /// Every track came from one interval, so nothing could be confirmed.
    SingleIntervalVideo,
    PropagationFailed { origin: TrackOrigin, reason: String },
}

impl AlignmentWarning {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AlignmentWarning::SingleIntervalVideo => "single-interval-video",
            AlignmentWarning::PropagationFailed { .. } => "propagation-failed",
        }
    }
}

impl std::fmt::Display for AlignmentWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlignmentWarning::SingleIntervalVideo => {
                write!(f, "{}: fewer than two sampled intervals produced tracks", self.code())
            }
            AlignmentWarning::PropagationFailed { origin, reason } => write!(
                f,
                "{}: interval {} candidate {}: {reason}",
                self.code(),
                origin.interval,
                origin.candidate
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AlignmentOutcome {
    pub individuals: Vec<ConfirmedIndividual>,
    pub warnings: Vec<AlignmentWarning>,
}

impl AlignmentOutcome {
    /// `(id, frame, mask)` rows ordered by id then frame.
    pub fn frame_masks(&self) -> impl Iterator<Item = (usize, usize, &BinaryMask)> + '_ {
        self.individuals
            .iter()
            .flat_map(|ind| ind.masks.iter().map(move |(&f, m)| (ind.id, f, m)))
    }
}

/// Whether two tracks agree on some shared frame.
fn tracks_aligned(a: &TrackRecord, b: &TrackRecord, iou_threshold: f64) -> bool {
    a.masks.iter().any(|(frame, ma)| {
        !ma.is_empty()
            && b
                .mask_at(*frame)
                .is_some_and(|mb| ma.iou(mb).is_ok_and(|v| v > iou_threshold))
    })
}

/// A confirmed track together with the intervals that support it.
#[derive(Debug, Clone)]
pub struct ConfirmedTrack<'a> {
    pub track: &'a TrackRecord,
    pub support: BTreeSet<usize>,
}

/// Group of confirmed tracks connected by the aligned relation.
pub type ConfirmedGroup<'a> = Vec<ConfirmedTrack<'a>>;

/// Confirm tracks by cross-interval agreement and merge them into individuals.
pub fn align_tracks(tracks: &[TrackRecord], cfg: &AlignmentConfig) -> Result<AlignmentOutcome> {
    cfg.validate()?;
    let mut sorted: Vec<&TrackRecord> = tracks.iter().collect();
    sorted.sort_by_key(|t| t.origin);
    for pair in sorted.windows(2) {
        if pair[0].origin == pair[1].origin {
            return Err(Error::InvalidInput(format!(
                "duplicate track origin (interval {}, candidate {})",
                pair[0].origin.interval, pair[0].origin.candidate
            )));
        }
    }
    let mut dims = None;
    for t in &sorted {
        for m in t.masks.values() {
            match dims {
                None => dims = Some(m.dims()),
                Some(d) if d != m.dims() => {
                    return Err(Error::InvalidInput(format!(
                        "track (interval {}, candidate {}) has {}x{} masks, expected {}x{}",
                        t.origin.interval,
                        t.origin.candidate,
                        m.width(),
                        m.height(),
                        d.0,
                        d.1
                    )))
                }
                _ => {}
            }
        }
    }

    let intervals: BTreeSet<usize> = sorted.iter().map(|t| t.origin.interval).collect();
    if intervals.len() < 2 {
        return Ok(AlignmentOutcome {
            individuals: Vec::new(),
            warnings: vec![AlignmentWarning::SingleIntervalVideo],
        });
    }

    // Aligned relation over pairs from distinct intervals.
    let n = sorted.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| sorted[i].origin.interval != sorted[j].origin.interval)
        .collect();
    let edges: Vec<(usize, usize)> = pairs
        .into_par_iter()
        .filter(|&(i, j)| tracks_aligned(sorted[i], sorted[j], cfg.iou_threshold))
        .collect();

    let mut support: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in &edges {
        support[i].insert(sorted[j].origin.interval);
        support[j].insert(sorted[i].origin.interval);
    }
    let confirmed: Vec<bool> = support.iter().map(|s| s.len() >= cfg.min_support).collect();

    // Connected components over confirmed tracks.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j) in &edges {
        if confirmed[i] && confirmed[j] {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: BTreeMap<usize, ConfirmedGroup> = BTreeMap::new();
    for i in (0..n).filter(|&i| confirmed[i]) {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(ConfirmedTrack {
            track: sorted[i],
            support: support[i].clone(),
        });
    }

    Ok(AlignmentOutcome {
        individuals: consolidate(groups.into_values().collect()),
        warnings: Vec::new(),
    })
}

/// Turn groups of mutually aligned confirmed tracks into individuals.
///
/// On each frame the mask comes from the present member with the most
/// supporting intervals, ties going to the earliest origin interval and then
/// the lowest candidate index. Ids follow the earliest member origin.
pub fn consolidate(groups: Vec<ConfirmedGroup<'_>>) -> Vec<ConfirmedIndividual> {
    let mut groups: Vec<ConfirmedGroup> = groups.into_iter().filter(|g| !g.is_empty()).collect();
    for g in &mut groups {
        g.sort_by(|a, b| {
            b.support
                .len()
                .cmp(&a.support.len())
                .then(a.track.origin.cmp(&b.track.origin))
        });
    }
    groups.sort_by_key(|g| g.iter().map(|m| m.track.origin).min());

    groups
        .into_iter()
        .enumerate()
        .map(|(id, members)| {
            let frames: BTreeSet<usize> = members
                .iter()
                .flat_map(|m| m.track.present_frames())
                .collect();
            let masks = frames
                .into_iter()
                .filter_map(|f| {
                    members
                        .iter()
                        .find_map(|m| m.track.mask_at(f))
                        .map(|mask| (f, mask.clone()))
                })
                .collect();
            let supporting_intervals = members
                .iter()
                .flat_map(|m| m.support.iter().copied().chain([m.track.origin.interval]))
                .collect();
            let mut member_tracks: Vec<TrackOrigin> =
                members.iter().map(|m| m.track.origin).collect();
            member_tracks.sort();
            ConfirmedIndividual {
                id,
                masks,
                supporting_intervals,
                member_tracks,
            }
        })
        .collect()
}

/// What a propagator is asked to track.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationRequest {
    pub origin: TrackOrigin,
    pub frame_index: usize,
    pub bbox: BoundingBox,
    pub mask: BinaryMask,
}

impl From<&CandidateDetection> for PropagationRequest {
    fn from(c: &CandidateDetection) -> Self {
        Self {
            origin: TrackOrigin {
                interval: c.interval_index,
                candidate: c.candidate_index,
            },
            frame_index: c.frame_index,
            bbox: c.bbox,
            mask: c.mask.clone(),
        }
    }
}

/// Anything that can follow a prompted object through the whole video.
///
/// Implementations own their video handle, may be called concurrently for
/// distinct candidates, and may leave frames absent from the returned track.
pub trait TrackPropagator: Sync {
    fn propagate(&self, request: &PropagationRequest) -> Result<TrackRecord>;
}

/// Propagator backed by precomputed tracks, keyed by origin.
#[derive(Debug, Clone, Default)]
pub struct FileTracks {
    tracks: BTreeMap<TrackOrigin, TrackRecord>,
    failures: BTreeMap<TrackOrigin, String>,
}

impl FileTracks {
    pub fn new(tracks: impl IntoIterator<Item = TrackRecord>) -> Self {
        Self {
            tracks: tracks.into_iter().map(|t| (t.origin, t)).collect(),
            failures: BTreeMap::new(),
        }
    }

    /// Failures recorded by the tracker; requests for these origins fail with the given reason.
    pub fn with_failures(mut self, failures: impl IntoIterator<Item = (TrackOrigin, String)>) -> Self {
        self.failures.extend(failures);
        self
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }
}

impl TrackPropagator for FileTracks {
    fn propagate(&self, request: &PropagationRequest) -> Result<TrackRecord> {
        if let Some(reason) = self.failures.get(&request.origin) {
            return Err(Error::Propagation(reason.clone()));
        }
        self.tracks.get(&request.origin).cloned().ok_or_else(|| {
            Error::Propagation(format!(
                "no precomputed track for interval {} candidate {}",
                request.origin.interval, request.origin.candidate
            ))
        })
    }
}

/// Gate, propagate and align a candidate stream.
///
/// A failed propagation skips its candidate with a warning; the run fails only
/// if every propagation fails.
pub fn run_alignment(
    candidates: &[CandidateDetection],
    propagator: &dyn TrackPropagator,
    cfg: &AlignmentConfig,
) -> Result<AlignmentOutcome> {
    cfg.validate()?;
    for c in candidates {
        if c.frame_index != c.interval_index * cfg.interval_stride {
            return Err(Error::InvalidInput(format!(
                "candidate at frame {} claims interval {}, which samples frame {}",
                c.frame_index,
                c.interval_index,
                c.interval_index * cfg.interval_stride
            )));
        }
    }
    let gated = filter_candidates(candidates, cfg)?;
    if gated.is_empty() {
        return Ok(AlignmentOutcome::default());
    }
    let results: Vec<(TrackOrigin, Result<TrackRecord>)> = gated
        .par_iter()
        .map(|c| {
            let req = PropagationRequest::from(c);
            (req.origin, propagator.propagate(&req))
        })
        .collect();

    let mut tracks = Vec::new();
    let mut warnings = Vec::new();
    for (origin, res) in results {
        match res {
            Ok(t) => tracks.push(t),
            Err(e) => warnings.push(AlignmentWarning::PropagationFailed {
                origin,
                reason: e.to_string(),
            }),
        }
    }
    if tracks.is_empty() {
        return Err(Error::AllPropagationsFailed(warnings.len()));
    }
    let mut outcome = align_tracks(&tracks, cfg)?;
    warnings.append(&mut outcome.warnings);
    outcome.warnings = warnings;
    Ok(outcome)
}
