//! Body length along the centerline.
//!
//! The mask is thinned to a one-pixel skeleton (Zhang-Suen), the longest
//! geodesic path between skeleton endpoints is traced with unit cost for
//! orthogonal steps and `sqrt(2)` for diagonal ones, and each end of the path
//! is extended along its local direction until it leaves the mask, recovering
//! the tips eroded away by thinning. Pixel lengths are converted to meters
//! with the ground-sample-distance relation of [`CameraModel`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PixelPoint};

/// Camera and flight parameters for the pixel-to-meter conversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub sensor_width_mm: f64,
    pub image_width_px: f64,
    pub altitude_m: f64,
    /// Subject depth below the surface; added to altitude.
    pub depth_m: f64,
    pub focal_length_mm: f64,
    pub fps: f64,
}

impl Default for CameraModel {
    /// 1" sensor, 1920 px wide frames, 28 mm lens, 37 m altitude, 1.5 m depth, 30 fps.
    fn default() -> Self {
        Self {
            sensor_width_mm: 13.2,
            image_width_px: 1920.0,
            altitude_m: 37.0,
            depth_m: 1.5,
            focal_length_mm: 28.0,
            fps: 30.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sensor_width_mm", self.sensor_width_mm),
            ("image_width_px", self.image_width_px),
            ("altitude_m", self.altitude_m),
            ("focal_length_mm", self.focal_length_mm),
            ("fps", self.fps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("camera {name} must be positive, got {v}")));
            }
        }
        if !(self.depth_m.is_finite() && self.depth_m >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "camera depth_m must be non-negative, got {}",
                self.depth_m
            )));
        }
        Ok(())
    }

    /// Meters per pixel at the subject plane: `(S_w / I_w) * ((A + D) / F)`.
    pub fn meters_per_pixel(&self) -> Result<f64> {
        self.validate()?;
        Ok((self.sensor_width_mm / self.image_width_px)
            * ((self.altitude_m + self.depth_m) / self.focal_length_mm))
    }
}

pub fn pixels_to_meters(length_px: f64, cam: &CameraModel) -> Result<f64> {
    if !(length_px.is_finite() && length_px >= 0.0) {
        return Err(Error::InvalidInput(format!("pixel length must be >= 0, got {length_px}")));
    }
    Ok(cam.meters_per_pixel()? * length_px)
}

/// One-pixel-wide medial skeleton of a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

const NEIGHBORS: [(i64, i64); 8] = [
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
];

impl Skeleton {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn at(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < self.width as i64
            && y < self.height as i64
            && self.bits[(y * self.width as i64 + x) as usize]
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        self.at(p.x as i64, p.y as i64)
    }

    /// Skeleton pixels in row-major order.
    pub fn pixels(&self) -> Vec<PixelPoint> {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| PixelPoint::new((i % w) as u32, (i / w) as u32))
            .collect()
    }

    /// 8-connected neighbors of a skeleton pixel, clockwise from north.
    pub fn neighbors(&self, p: PixelPoint) -> Vec<PixelPoint> {
        NEIGHBORS
            .iter()
            .map(|&(dx, dy)| (p.x as i64 + dx, p.y as i64 + dy))
            .filter(|&(x, y)| self.at(x, y))
            .map(|(x, y)| PixelPoint::new(x as u32, y as u32))
            .collect()
    }

    /// Pixels with exactly one neighbor.
    pub fn endpoints(&self) -> Vec<PixelPoint> {
        self.pixels()
            .into_iter()
            .filter(|&p| self.neighbors(p).len() == 1)
            .collect()
    }

    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask::from_bitmap(self.width, self.height, &self.bits)
            .expect("skeleton bitmap matches its dimensions")
    }
}

/// Zhang-Suen thinning: alternate the two deletion sub-iterations until a
/// full pass removes nothing.
pub fn skeletonize(m: &BinaryMask) -> Result<Skeleton> {
    if m.is_empty() {
        return Err(Error::EmptyMask("cannot skeletonize an empty mask"));
    }
    let mut sk = Skeleton {
        width: m.width(),
        height: m.height(),
        bits: m.to_bitmap(),
    };
    let w = sk.width as i64;
    let mut marked = Vec::new();
    loop {
        let mut changed = false;
        for step in 0..2 {
            marked.clear();
            for (i, _) in sk.bits.iter().enumerate().filter(|(_, &b)| b) {
                let (x, y) = (i as i64 % w, i as i64 / w);
                // p[0..8] = P2..P9: N, NE, E, SE, S, SW, W, NW
                let p: [bool; 8] = NEIGHBORS.map(|(dx, dy)| sk.at(x + dx, y + dy));
                let b = p.iter().filter(|&&v| v).count();
                if !(2..=6).contains(&b) {
                    continue;
                }
                let a = (0..8).filter(|&k| !p[k] && p[(k + 1) % 8]).count();
                if a != 1 {
                    continue;
                }
                let (n, e, s, west) = (p[0], p[2], p[4], p[6]);
                let deletable = if step == 0 {
                    !(n && e && s) && !(e && s && west)
                } else {
                    !(n && e && west) && !(n && s && west)
                };
                if deletable {
                    marked.push(i);
                }
            }
            for &i in &marked {
                sk.bits[i] = false;
            }
            changed |= !marked.is_empty();
        }
        if !changed {
            return Ok(sk);
        }
    }
}

/// Traced centerline: the skeleton path plus the extension at each end.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    /// Pixels of the longest geodesic path, endpoint to endpoint.
    pub path: Vec<PixelPoint>,
    pub path_px: f64,
    /// Distance added beyond the first and last path pixel.
    pub extension_px: [f64; 2],
}

impl Centerline {
    pub fn length_px(&self) -> f64 {
        self.path_px + self.extension_px[0] + self.extension_px[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest paths over the skeleton graph.
fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> (Vec<f64>, Vec<usize>) {
    let mut dist = vec![f64::INFINITY; adj.len()];
    let mut prev = vec![usize::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(HeapEntry {
        dist: 0.0,
        node: source,
    });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in &adj[node] {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                prev[next] = node;
                heap.push(HeapEntry { dist: nd, node: next });
            }
        }
    }
    (dist, prev)
}

/// Longest geodesic path through the skeleton, extended to the mask boundary.
pub fn trace_centerline(s: &Skeleton, m: &BinaryMask) -> Result<Centerline> {
    if s.width != m.width() || s.height != m.height() {
        return Err(Error::DimensionMismatch {
            left_width: s.width,
            left_height: s.height,
            right_width: m.width(),
            right_height: m.height(),
        });
    }
    let pixels = s.pixels();
    if pixels.is_empty() {
        return Err(Error::EmptyMask("skeleton has no pixels"));
    }
    let w = s.width as usize;
    let mut index = vec![usize::MAX; s.bits.len()];
    for (i, p) in pixels.iter().enumerate() {
        index[p.y as usize * w + p.x as usize] = i;
    }
    let adj: Vec<Vec<(usize, f64)>> = pixels
        .iter()
        .map(|&p| {
            s.neighbors(p)
                .into_iter()
                .map(|q| {
                    let diagonal = q.x != p.x && q.y != p.y;
                    (
                        index[q.y as usize * w + q.x as usize],
                        if diagonal { std::f64::consts::SQRT_2 } else { 1.0 },
                    )
                })
                .collect()
        })
        .collect();

    let endpoints: Vec<usize> = (0..pixels.len()).filter(|&i| adj[i].len() == 1).collect();
    // Loops without endpoints fall back to every pixel as a source.
    let sources: Vec<usize> = if endpoints.len() >= 2 {
        endpoints.clone()
    } else {
        (0..pixels.len()).collect()
    };
    let mut best = (0.0, sources[0], sources[0], Vec::new());
    for &a in &sources {
        let (dist, prev) = dijkstra(&adj, a);
        for &b in &sources {
            if dist[b].is_finite() && dist[b] > best.0 {
                best = (dist[b], a, b, prev.clone());
            }
        }
    }
    let (path_px, start, end, prev) = best;
    let mut path = vec![pixels[end]];
    let mut cur = end;
    while cur != start {
        cur = prev[cur];
        path.push(pixels[cur]);
    }
    path.reverse();

    let extension_px = if path.len() == 1 {
        let axis = principal_axis(m).unwrap_or((1.0, 0.0));
        [
            march_to_boundary(m, path[0], axis),
            march_to_boundary(m, path[0], (-axis.0, -axis.1)),
        ]
    } else {
        [
            march_to_boundary(m, path[0], end_direction(path.iter().copied())),
            march_to_boundary(m, path[path.len() - 1], end_direction(path.iter().rev().copied())),
        ]
    };
    Ok(Centerline {
        path,
        path_px,
        extension_px,
    })
}

/// Outward unit direction at the first point of `path`, averaged over up to three steps.
fn end_direction(path: impl Iterator<Item = PixelPoint>) -> (f64, f64) {
    let pts: Vec<PixelPoint> = path.take(4).collect();
    let (tip, inner) = (pts[0], pts[pts.len() - 1]);
    let dx = tip.x as f64 - inner.x as f64;
    let dy = tip.y as f64 - inner.y as f64;
    let n = dx.hypot(dy);
    (dx / n, dy / n)
}

/// Major axis of the foreground pixel cloud, `None` when isotropic.
fn principal_axis(m: &BinaryMask) -> Option<(f64, f64)> {
    let c = m.centroid().ok()?;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in m.pixels() {
        let (dx, dy) = (p.x as f64 - c.x, p.y as f64 - c.y);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx - syy).abs() < 1e-12 && sxy.abs() < 1e-12 {
        return None;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some((theta.cos(), theta.sin()))
}

/// Walk from `from` along `dir` in quarter-pixel steps until the sample falls
/// outside the mask; return how far the ray runs before leaving the last
/// mask pixel it visited.
fn march_to_boundary(m: &BinaryMask, from: PixelPoint, dir: (f64, f64)) -> f64 {
    const STEP: f64 = 0.25;
    let bits = m.to_bitmap();
    let (w, h) = (m.width() as i64, m.height() as i64);
    let (ox, oy) = (from.x as f64, from.y as f64);
    // Ray parameter at which it leaves the unit square centered on (px, py).
    let exit = |px: i64, py: i64| -> f64 {
        [(px as f64 - ox, dir.0), (py as f64 - oy, dir.1)]
            .into_iter()
            .filter(|&(_, d)| d.abs() > 1e-12)
            .map(|(c, d)| (c + 0.5 * d.signum()) / d)
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = exit(from.x as i64, from.y as i64);
    let mut t = STEP;
    loop {
        let px = (ox + t * dir.0).round() as i64;
        let py = (oy + t * dir.1).round() as i64;
        if px < 0 || py < 0 || px >= w || py >= h || !bits[(py * w + px) as usize] {
            return best;
        }
        best = best.max(exit(px, py));
        t += STEP;
    }
}

pub fn skeleton_length_px(s: &Skeleton, m: &BinaryMask) -> Result<f64> {
    trace_centerline(s, m).map(|c| c.length_px())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthMeasurement {
    pub length_px: f64,
    pub length_m: f64,
}

pub fn measure_length(m: &BinaryMask, cam: &CameraModel) -> Result<LengthMeasurement> {
    let skeleton = skeletonize(m)?;
    let length_px = skeleton_length_px(&skeleton, m)?;
    Ok(LengthMeasurement {
        length_px,
        length_m: pixels_to_meters(length_px, cam)?,
    })
}
