//! Tailbeat frequency from a sequence of body masks.
//!
//! Per frame, the farthest pair of foreground pixels gives the two body ends;
//! the end nearer the center of mass is the head. The signed perpendicular
//! distance of the tail from the head-to-COM line forms an oscillating series
//! that is smoothed with a Savitzky-Golay filter. Sign changes of the smoothed
//! series that sit between a local maximum and a local minimum are kept as
//! centerline crossings, every other crossing closes one beat, and a sliding
//! window turns the beats into beats per second.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PixelPoint, RealPoint};
use crate::morphometry::CameraModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KinematicsConfig {
    /// Savitzky-Golay window length in frames (odd).
    pub savgol_window: usize,
    pub savgol_order: usize,
    pub tbf_window_s: f64,
    pub tbf_step_s: f64,
    /// Half-width, in frames, of the neighborhood a local extremum must dominate.
    pub extremum_radius: usize,
    /// Tracking gaps shorter than this are interpolated; longer ones split the series.
    pub max_gap_s: f64,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            savgol_window: 15,
            savgol_order: 3,
            tbf_window_s: 5.0,
            tbf_step_s: 0.5,
            extremum_radius: 7,
            max_gap_s: 0.5,
        }
    }
}

impl KinematicsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.savgol_window.is_multiple_of(2) || self.savgol_window <= self.savgol_order {
            return Err(Error::InvalidConfig(format!(
                "savgol_window must be odd and greater than savgol_order (got {} and {})",
                self.savgol_window, self.savgol_order
            )));
        }
        if !(self.tbf_step_s > 0.0 && self.tbf_window_s > self.tbf_step_s) {
            return Err(Error::InvalidConfig(format!(
                "need tbf_window_s > tbf_step_s > 0 (got {} and {})",
                self.tbf_window_s, self.tbf_step_s
            )));
        }
        if self.extremum_radius < 1 {
            return Err(Error::InvalidConfig("extremum_radius must be >= 1".into()));
        }
        if !(self.max_gap_s >= 0.0) {
            return Err(Error::InvalidConfig("max_gap_s must be >= 0".into()));
        }
        Ok(())
    }
}

/// Foreground pixels that can be convex-hull vertices: each row's outermost pixels.
fn row_extremes(m: &BinaryMask) -> Vec<PixelPoint> {
    let mut rows: BTreeMap<u32, (u32, u32)> = BTreeMap::new();
    for (y, x0, x1) in m.row_spans() {
        let e = rows.entry(y).or_insert((x0, x1 - 1));
        e.0 = e.0.min(x0);
        e.1 = e.1.max(x1 - 1);
    }
    let mut pts = Vec::with_capacity(rows.len() * 2);
    for (y, (a, b)) in rows {
        pts.push(PixelPoint::new(a, y));
        if b != a {
            pts.push(PixelPoint::new(b, y));
        }
    }
    pts
}

/// Foreground pixel pair at maximal Euclidean distance, ordered by `(y, x)`.
///
/// Exact: distances are compared as integers. Among equally distant pairs the
/// lexicographically smallest `((y, x), (y, x))` wins.
pub fn farthest_pair(m: &BinaryMask) -> Result<(PixelPoint, PixelPoint)> {
    if m.area() < 2 {
        return Err(Error::EmptyMask("farthest pair needs at least two foreground pixels"));
    }
    let pts = row_extremes(m);
    type Pair = (u64, (u32, u32), (u32, u32));
    let mut best: Option<Pair> = None;
    for (i, &a) in pts.iter().enumerate() {
        for &b in &pts[i + 1..] {
            let d = a.dist_sq(b);
            let (lo, hi) = if a.yx() <= b.yx() { (a.yx(), b.yx()) } else { (b.yx(), a.yx()) };
            let better = match best {
                None => true,
                Some((bd, blo, bhi)) => d > bd || (d == bd && (lo, hi) < (blo, bhi)),
            };
            if better {
                best = Some((d, lo, hi));
            }
        }
    }
    let (_, lo, hi) = best.expect("at least two candidate points");
    Ok((PixelPoint::new(lo.1, lo.0), PixelPoint::new(hi.1, hi.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadTail {
    pub head: PixelPoint,
    pub tail: PixelPoint,
    /// Both ends were exactly equidistant from the center of mass.
    pub tie: bool,
}

/// Of the farthest pair, the end nearer the center of mass is the head.
pub fn head_tail(m: &BinaryMask) -> Result<HeadTail> {
    let (a, b) = farthest_pair(m)?;
    // Compare |n*p - S|^2 to stay in exact integer arithmetic.
    let (mut n, mut sx, mut sy) = (0i128, 0i128, 0i128);
    for (y, x0, x1) in m.row_spans() {
        let len = (x1 - x0) as i128;
        n += len;
        sx += (x0 as i128 + x1 as i128 - 1) * len / 2;
        sy += y as i128 * len;
    }
    let d2 = |p: PixelPoint| {
        let dx = n * p.x as i128 - sx;
        let dy = n * p.y as i128 - sy;
        dx * dx + dy * dy
    };
    let (da, db) = (d2(a), d2(b));
    // `a` is already the lexicographically smaller point, so it takes ties.
    Ok(if db < da {
        HeadTail { head: b, tail: a, tie: false }
    } else {
        HeadTail { head: a, tail: b, tie: da == db }
    })
}

/// Signed distance of the tail from the head-to-COM line; positive when the
/// tail lies to the left of the heading (image coordinates, y down).
pub fn tail_displacement(m: &BinaryMask) -> Result<f64> {
    let HeadTail { head, tail, .. } = head_tail(m)?;
    let com = m.centroid()?;
    displacement_from(head.to_real(), com, tail.to_real())
}

fn displacement_from(head: RealPoint, com: RealPoint, tail: RealPoint) -> Result<f64> {
    let (cx, cy) = (com.x - head.x, com.y - head.y);
    let norm = cx.hypot(cy);
    if norm < 1e-12 {
        return Err(Error::DegenerateCenterline);
    }
    let (vx, vy) = (tail.x - com.x, tail.y - com.y);
    Ok((vx * cy - vy * cx) / norm)
}

/// Smoothing weights for the window center.
pub fn savgol_coefficients(window: usize, order: usize) -> Result<Vec<f64>> {
    if window.is_multiple_of(2) || window <= order {
        return Err(Error::InvalidConfig(format!(
            "Savitzky-Golay window must be odd and greater than the order (got {window}, {order})"
        )));
    }
    let half = (window / 2) as f64;
    let design = DMatrix::from_fn(window, order + 1, |i, j| (i as f64 - half).powi(j as i32));
    let normal = design.transpose() * &design;
    let mut e0 = DVector::zeros(order + 1);
    e0[0] = 1.0;
    let a = normal
        .lu()
        .solve(&e0)
        .ok_or_else(|| Error::InvalidConfig("singular Savitzky-Golay system".into()))?;
    Ok((design * a).iter().copied().collect())
}

/// Least-squares polynomial smoothing with mirror padding at the edges.
pub fn savgol_smooth(series: &[f64], window: usize, order: usize) -> Result<Vec<f64>> {
    let coeffs = savgol_coefficients(window, order)?;
    let n = series.len();
    if n < window {
        return Err(Error::SeriesTooShort { len: n, window });
    }
    let half = (window / 2) as isize;
    let last = n as isize - 1;
    let mirror = |k: isize| -> usize {
        let k = if k < 0 { -k } else { k };
        (if k > last { 2 * last - k } else { k }) as usize
    };
    Ok((0..n as isize)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * series[mirror(i + j as isize - half)])
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExtremumKind {
    Max,
    Min,
}

/// Points that dominate their `radius` neighborhood (first index of a plateau).
fn local_extrema(v: &[f64], radius: usize) -> Vec<(usize, ExtremumKind, f64)> {
    let n = v.len();
    let mut out: Vec<(usize, ExtremumKind, f64)> = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let lo = i.saturating_sub(radius);
        let hi = (i + radius).min(n - 1);
        let nb = &v[lo..=hi];
        let (min, max) = nb
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if min == max {
            continue;
        }
        let kind = if v[i] == max && v[lo..i].iter().all(|&x| x < max) {
            ExtremumKind::Max
        } else if v[i] == min && v[lo..i].iter().all(|&x| x > min) {
            ExtremumKind::Min
        } else {
            continue;
        };
        // Consecutive extrema of one kind collapse to the more extreme one.
        match out.last_mut() {
            Some(last) if last.1 == kind => {
                let more = match kind {
                    ExtremumKind::Max => v[i] > last.2,
                    ExtremumKind::Min => v[i] < last.2,
                };
                if more {
                    *last = (i, kind, v[i]);
                }
            }
            _ => out.push((i, kind, v[i])),
        }
    }
    out
}

/// Fractional sample positions where the series changes sign.
fn sign_changes(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, &x) in v.iter().enumerate() {
        if x == 0.0 || !x.is_finite() {
            continue;
        }
        if let Some(p) = prev {
            if (v[p] > 0.0) != (x > 0.0) {
                out.push(if i == p + 1 {
                    p as f64 + v[p] / (v[p] - x)
                } else {
                    (p + 1 + i - 1) as f64 / 2.0
                });
            }
        }
        prev = Some(i);
    }
    out
}

/// Times (seconds from the first sample) of centerline crossings.
///
/// Between every adjacent positive maximum and negative minimum exactly one
/// crossing is kept; when the series dithers around zero there, the median
/// sign change stands for the crossing and the rest are discarded.
pub fn find_crossings(smoothed: &[f64], fps: f64, extremum_radius: usize) -> Vec<f64> {
    let extrema = local_extrema(smoothed, extremum_radius);
    let changes = sign_changes(smoothed);
    let mut out = Vec::new();
    for pair in extrema.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (max, min) = if a.1 == ExtremumKind::Max { (a.2, b.2) } else { (b.2, a.2) };
        if !(max > 0.0 && min < 0.0) {
            continue;
        }
        let inside: Vec<f64> = changes
            .iter()
            .copied()
            .filter(|&t| t > a.0 as f64 && t < b.0 as f64)
            .collect();
        if !inside.is_empty() {
            out.push(inside[(inside.len() - 1) / 2] / fps);
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BeatIntervals {
    pub crossing_times: Vec<f64>,
    /// `(start_s, end_s)` of each full beat.
    pub beats: Vec<(f64, f64)>,
}

/// One beat spans three consecutive crossings: out, back through, and returning.
pub fn beat_intervals(crossings: &[f64]) -> BeatIntervals {
    let beats = crossings
        .iter()
        .step_by(2)
        .zip(crossings.iter().skip(2).step_by(2))
        .map(|(&a, &b)| (a, b))
        .collect();
    BeatIntervals {
        crossing_times: crossings.to_vec(),
        beats,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TbfSeries {
    pub window_centers_s: Vec<f64>,
    pub beats_per_second: Vec<f64>,
}

impl TbfSeries {
    pub fn len(&self) -> usize {
        self.window_centers_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window_centers_s.is_empty()
    }
}

fn sliding_windows(start: f64, end: f64, len: f64, step: f64) -> Vec<(f64, f64)> {
    const EPS: f64 = 1e-9;
    if end - start < len {
        return vec![(start, end)];
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let s = start + k as f64 * step;
        if s + len > end + EPS {
            break;
        }
        out.push((s, s + len));
        k += 1;
    }
    out
}

/// Beats per second in sliding windows.
///
/// Each beat contributes the fraction of its duration that falls inside the
/// window. Windows slide over the stretch covered by beats; with no beats they
/// cover `[0, duration_s]` and read zero. A stretch shorter than one window
/// yields a single window over the whole stretch.
pub fn windowed_tbf(beats: &BeatIntervals, duration_s: f64, cfg: &KinematicsConfig) -> TbfSeries {
    let (start, end) = match (beats.beats.first(), beats.beats.last()) {
        (Some(first), Some(last)) => (first.0, last.1),
        _ => (0.0, duration_s.max(0.0)),
    };
    let mut series = TbfSeries::default();
    for (ws, we) in sliding_windows(start, end, cfg.tbf_window_s, cfg.tbf_step_s) {
        let count: f64 = beats
            .beats
            .iter()
            .map(|&(bs, be)| {
                let overlap = (be.min(we) - bs.max(ws)).max(0.0);
                if be > bs { overlap / (be - bs) } else { 0.0 }
            })
            .fold(0.0, |a, b| a + b);
        let len = we - ws;
        series.window_centers_s.push(0.5 * (ws + we));
        series
            .beats_per_second
            .push(if len > 0.0 { count / len } else { 0.0 });
    }
    series
}

/// Per-frame tail displacement for one individual.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DisplacementSeries {
    pub fps: f64,
    pub frame_indices: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TbfEstimate {
    /// Raw displacement on every frame where it could be computed.
    pub displacement: DisplacementSeries,
    /// Smoothed displacement on every analyzed frame, including interpolated ones.
    pub smoothed: BTreeMap<usize, f64>,
    pub beats: BeatIntervals,
    pub tbf: TbfSeries,
}

/// Full tailbeat pipeline for one individual's per-frame masks.
pub fn estimate_tbf(
    masks: &BTreeMap<usize, BinaryMask>,
    cam: &CameraModel,
    cfg: &KinematicsConfig,
) -> Result<TbfEstimate> {
    cfg.validate()?;
    cam.validate()?;
    let fps = cam.fps;

    let mut displacement = DisplacementSeries {
        fps,
        ..Default::default()
    };
    for (&frame, m) in masks {
        if let Ok(d) = tail_displacement(m) {
            displacement.frame_indices.push(frame);
            displacement.values.push(d);
        }
    }

    // Split at long gaps; fill short ones linearly.
    let max_gap_frames = cfg.max_gap_s * fps;
    let mut segments: Vec<(usize, Vec<f64>)> = Vec::new();
    for (&f, &v) in displacement.frame_indices.iter().zip(&displacement.values) {
        match segments.last_mut() {
            Some((start, vals)) if {
                let missing = f - (*start + vals.len());
                missing == 0 || (missing as f64) < max_gap_frames
            } =>
            {
                let prev_frame = *start + vals.len() - 1;
                let prev = *vals.last().expect("segments are never empty");
                let span = (f - prev_frame) as f64;
                for k in 1..(f - prev_frame) {
                    vals.push(prev + (v - prev) * k as f64 / span);
                }
                vals.push(v);
            }
            _ => segments.push((f, vec![v])),
        }
    }

    let mut smoothed = BTreeMap::new();
    let mut crossings = Vec::new();
    let mut beats = BeatIntervals::default();
    let mut analyzed = 0;
    for (start, vals) in &segments {
        if vals.len() < cfg.savgol_window {
            continue;
        }
        analyzed += 1;
        let sm = savgol_smooth(vals, cfg.savgol_window, cfg.savgol_order)?;
        let offset = *start as f64 / fps;
        let seg_crossings: Vec<f64> = find_crossings(&sm, fps, cfg.extremum_radius)
            .into_iter()
            .map(|t| t + offset)
            .collect();
        let seg_beats = beat_intervals(&seg_crossings);
        crossings.extend_from_slice(&seg_crossings);
        beats.beats.extend(seg_beats.beats);
        smoothed.extend(sm.into_iter().enumerate().map(|(i, v)| (start + i, v)));
    }
    if analyzed == 0 {
        return Err(Error::InsufficientFrames(format!(
            "no run of at least {} consecutive usable frames (have {} usable frames)",
            cfg.savgol_window,
            displacement.values.len()
        )));
    }
    beats.crossing_times = crossings;

    let last = *displacement.frame_indices.last().expect("analyzed a segment");
    let duration = (last + 1) as f64 / fps;
    let tbf = windowed_tbf(&beats, duration, cfg);
    Ok(TbfEstimate {
        displacement,
        smoothed,
        beats,
        tbf,
    })
}
