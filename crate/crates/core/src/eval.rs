//! Segmentation and detection metrics, and time-blocked dataset splits.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

fn union_all(masks: &[BinaryMask]) -> Result<Option<BinaryMask>> {
    let mut it = masks.iter();
    let Some(first) = it.next() else {
        return Ok(None);
    };
    it.try_fold(first.clone(), |acc, m| acc.union(m)).map(Some)
}

fn check_frame_counts(preds: usize, gts: usize) -> Result<()> {
    if preds != gts {
        return Err(Error::InvalidInput(format!(
            "prediction covers {preds} frames but ground truth covers {gts}"
        )));
    }
    Ok(())
}

/// Dice of a single frame after merging all masks on each side.
pub fn frame_dice(preds: &[BinaryMask], gts: &[BinaryMask]) -> Result<f64> {
    match (union_all(preds)?, union_all(gts)?) {
        (Some(p), Some(g)) => p.dice(&g),
        (None, None) => Ok(1.0),
        (Some(m), None) | (None, Some(m)) => Ok(if m.is_empty() { 1.0 } else { 0.0 }),
    }
}

/// Mean per-frame Dice. With `only_positive_frames`, frames whose ground
/// truth is empty are left out of the average.
pub fn video_dice(
    preds: &[Vec<BinaryMask>],
    gts: &[Vec<BinaryMask>],
    only_positive_frames: bool,
) -> Result<f64> {
    check_frame_counts(preds.len(), gts.len())?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, g) in preds.iter().zip(gts) {
        if only_positive_frames && g.iter().all(BinaryMask::is_empty) {
            continue;
        }
        total += frame_dice(p, g)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("no frames to average".into()));
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub true_positives: usize,
    pub predictions: usize,
    pub ground_truths: usize,
}

/// Greedy one-to-one matching by descending IOU; returns matched `(pred, gt)` pairs.
pub fn greedy_match(preds: &[BinaryMask], gts: &[BinaryMask], threshold: f64) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for (i, p) in preds.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let v = p.iou(g)?;
            if v >= threshold && v > 0.0 {
                pairs.push((v, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut used_p = vec![false; preds.len()];
    let mut used_g = vec![false; gts.len()];
    let mut matched = Vec::new();
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            matched.push((i, j));
        }
    }
    Ok(matched)
}

/// Precision and recall aggregated over frames. No predictions gives
/// precision 1; no ground truth gives recall 1.
pub fn precision_recall_at_iou(
    preds: &[Vec<BinaryMask>],
    gts: &[Vec<BinaryMask>],
    threshold: f64,
) -> Result<PrecisionRecall> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!("IOU threshold {threshold} outside (0, 1)")));
    }
    check_frame_counts(preds.len(), gts.len())?;
    let (mut tp, mut np, mut ng) = (0, 0, 0);
    for (p, g) in preds.iter().zip(gts) {
        tp += greedy_match(p, g, threshold)?.len();
        np += p.len();
        ng += g.len();
    }
    Ok(PrecisionRecall {
        precision: if np == 0 { 1.0 } else { tp as f64 / np as f64 },
        recall: if ng == 0 { 1.0 } else { tp as f64 / ng as f64 },
        true_positives: tp,
        predictions: np,
        ground_truths: ng,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub block_size: usize,
    /// Train, validation, test.
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            block_size: 45,
            ratios: [0.8, 0.1, 0.1],
            seed: 0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 1 {
            return Err(Error::InvalidConfig("block_size must be >= 1".into()));
        }
        if self.ratios.iter().any(|r| !(*r >= 0.0)) || (self.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split ratios must be non-negative and sum to 1, got {:?}",
                self.ratios
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameRow {
    pub video: String,
    pub frame: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub video: String,
    pub frame: usize,
    pub block: usize,
    pub split: Split,
}

/// Partition each video's frames into consecutive blocks, shuffle the blocks,
/// and hand whole blocks to whichever split is furthest below its target.
///
/// Output is ordered by video then frame.
pub fn time_block_split(rows: &[FrameRow], cfg: &SplitConfig) -> Result<Vec<SplitAssignment>> {
    cfg.validate()?;
    let mut videos: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for r in rows {
        videos.entry(r.video.as_str()).or_default().push(r.frame);
    }
    let mut blocks: Vec<(&str, &[usize])> = Vec::new();
    for (video, frames) in videos.iter_mut() {
        frames.sort_unstable();
        if let Some(w) = frames.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput(format!("frame {} of video {video} listed twice", w[0])));
        }
    }
    for (video, frames) in &videos {
        for chunk in frames.chunks(cfg.block_size) {
            blocks.push((video, chunk));
        }
    }

    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let total = rows.len() as f64;
    let mut deficit: [f64; 3] = cfg.ratios.map(|r| r * total);
    let mut block_split = vec![Split::Train; blocks.len()];
    for b in order {
        let k = (0..3).fold(0, |best, k| if deficit[k] > deficit[best] { k } else { best });
        block_split[b] = Split::ALL[k];
        deficit[k] -= blocks[b].1.len() as f64;
    }

    Ok(blocks
        .iter()
        .enumerate()
        .flat_map(|(b, (video, frames))| {
            let split = block_split[b];
            frames.iter().map(move |&frame| SplitAssignment {
                video: video.to_string(),
                frame,
                block: b,
                split,
            })
        })
        .collect())
}

pub fn split_sizes(assignments: &[SplitAssignment]) -> [usize; 3] {
    let mut sizes = [0; 3];
    for a in assignments {
        sizes[a.split as usize] += 1;
    }
    sizes
}
