//! Run-length-encoded binary masks.
//!
//! A [`BinaryMask`] stores a `width x height` foreground/background image as
//! alternating run lengths in row-major order, starting with background. Only
//! the first run may be zero, so every bitmap has exactly one encoding. Set
//! operations (intersection, union, IOU, Dice) run directly on the runs.
//!
//! The canonical text form used inside NDJSON records is
//! `width height r0 r1 r2 ...`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Integer pixel coordinate. `x` grows rightward, `y` downward, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PixelPoint {
    pub x: u32,
    pub y: u32,
}

impl PixelPoint {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn to_real(self) -> RealPoint {
        RealPoint::new(self.x as f64, self.y as f64)
    }

    /// Squared Euclidean distance, exact in integer arithmetic.
    pub fn dist_sq(self, other: PixelPoint) -> u64 {
        let dx = self.x as i64 - other.x as i64;
        let dy = self.y as i64 - other.y as i64;
        (dx * dx + dy * dy) as u64
    }

    /// Ordering key used for deterministic tie-breaks: row first, then column.
    pub fn yx(self) -> (u32, u32) {
        (self.y, self.x)
    }
}

/// Real-valued image coordinate, same convention as [`PixelPoint`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RealPoint {
    pub x: f64,
    pub y: f64,
}

impl RealPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: RealPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Tight inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u32; 4]", try_from = "[u32; 4]")]
pub struct BoundingBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BoundingBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::InvalidInput(format!(
                "bounding box [{x_min},{y_min},{x_max},{y_max}] has min greater than max"
            )));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }
}

impl From<BoundingBox> for [u32; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

impl TryFrom<[u32; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [u32; 4]) -> Result<Self> {
        BoundingBox::new(v[0], v[1], v[2], v[3])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl BinaryMask {
    /// All-background mask.
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as u64 * height as u64;
        let runs = if n == 0 { Vec::new() } else { vec![n as u32] };
        Self {
            width,
            height,
            runs,
        }
    }

    /// All-foreground mask.
    pub fn full(width: u32, height: u32) -> Self {
        let n = width as u64 * height as u64;
        let runs = if n == 0 { Vec::new() } else { vec![0, n as u32] };
        Self {
            width,
            height,
            runs,
        }
    }

    /// Encode a row-major bitmap.
    pub fn from_bitmap(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        let n = width as usize * height as usize;
        if bits.len() != n {
            return Err(Error::InvalidInput(format!(
                "bitmap has {} pixels, expected {width}x{height} = {n}",
                bits.len()
            )));
        }
        let mut runs = Vec::new();
        let mut current = false;
        let mut count = 0u32;
        for &b in bits {
            if b != current {
                runs.push(count);
                count = 0;
                current = b;
            }
            count += 1;
        }
        if n > 0 {
            runs.push(count);
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    /// Build a mask by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::from_bitmap(width, height, &bits).expect("bitmap sized from dimensions")
    }

    /// Mask whose foreground is exactly the given pixels (duplicates allowed).
    pub fn from_pixels(
        width: u32,
        height: u32,
        pixels: impl IntoIterator<Item = PixelPoint>,
    ) -> Result<Self> {
        let mut bits = vec![false; width as usize * height as usize];
        for p in pixels {
            if p.x >= width || p.y >= height {
                return Err(Error::InvalidInput(format!(
                    "pixel ({}, {}) outside {width}x{height} mask",
                    p.x, p.y
                )));
            }
            bits[p.y as usize * width as usize + p.x as usize] = true;
        }
        Self::from_bitmap(width, height, &bits)
    }

    /// Validate and wrap an existing run list.
    pub fn from_runs(width: u32, height: u32, runs: Vec<u32>) -> Result<Self> {
        let expected = width as u64 * height as u64;
        let total: u64 = runs.iter().map(|&r| r as u64).sum();
        if total != expected {
            return Err(Error::InvalidRle(format!(
                "runs sum to {total}, expected {width}x{height} = {expected}"
            )));
        }
        if let Some(i) = runs.iter().skip(1).position(|&r| r == 0) {
            return Err(Error::InvalidRle(format!(
                "zero-length run at position {}; only the first run may be zero",
                i + 1
            )));
        }
        if runs.len() == 1 && runs[0] == 0 {
            return Err(Error::InvalidRle("single zero run".into()));
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(self.width as usize * self.height as usize);
        for (i, &r) in self.runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, r as usize));
        }
        bits
    }

    /// Foreground runs as half-open linear pixel ranges, ascending.
    pub fn spans(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut pos = 0u64;
        self.runs.iter().enumerate().filter_map(move |(i, &r)| {
            let start = pos;
            pos += r as u64;
            (i % 2 == 1).then_some((start, pos))
        })
    }

    /// Foreground runs split at row boundaries: `(y, x_start, x_end_exclusive)`.
    pub fn row_spans(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let w = self.width as u64;
        self.spans().flat_map(move |(start, end)| {
            let mut out = Vec::new();
            let mut s = start;
            while s < end {
                let y = s / w;
                let row_end = (y + 1) * w;
                let e = end.min(row_end);
                out.push((y as u32, (s - y * w) as u32, (e - y * w) as u32));
                s = e;
            }
            out
        })
    }

    /// Foreground pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = PixelPoint> + '_ {
        self.row_spans()
            .flat_map(|(y, x0, x1)| (x0..x1).map(move |x| PixelPoint::new(x, y)))
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        if p.x >= self.width || p.y >= self.height {
            return false;
        }
        let idx = p.y as u64 * self.width as u64 + p.x as u64;
        self.spans()
            .take_while(|&(s, _)| s <= idx)
            .any(|(s, e)| (s..e).contains(&idx))
    }

    pub fn area(&self) -> u64 {
        self.spans().map(|(s, e)| e - s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.len() < 2
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<u64> {
        self.check_dims(other)?;
        let a: Vec<_> = self.spans().collect();
        let b: Vec<_> = other.spans().collect();
        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                total += hi - lo;
            }
            if a[i].1 <= b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// Intersection over union; 0 when both masks are empty.
    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        Ok(if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        })
    }

    /// Dice coefficient; 1 when both masks are empty.
    pub fn dice(&self, other: &BinaryMask) -> Result<f64> {
        let inter = self.intersection_area(other)?;
        let total = self.area() + other.area();
        Ok(if total == 0 {
            1.0
        } else {
            2.0 * inter as f64 / total as f64
        })
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let mut merged: Vec<(u64, u64)> = self.spans().chain(other.spans()).collect();
        merged.sort_unstable();
        let mut out: Vec<(u64, u64)> = Vec::with_capacity(merged.len());
        for (s, e) in merged {
            match out.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => out.push((s, e)),
            }
        }
        Ok(Self::from_spans(self.width, self.height, &out))
    }

    pub fn intersection(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let a: Vec<_> = self.spans().collect();
        let b: Vec<_> = other.spans().collect();
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a[i].1 <= b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Self::from_spans(self.width, self.height, &out))
    }

    /// Build from sorted, disjoint, non-adjacent foreground spans.
    fn from_spans(width: u32, height: u32, spans: &[(u64, u64)]) -> Self {
        let n = width as u64 * height as u64;
        if n == 0 {
            return Self::empty(width, height);
        }
        let mut runs = Vec::with_capacity(spans.len() * 2 + 1);
        let mut pos = 0u64;
        for &(s, e) in spans {
            runs.push((s - pos) as u32);
            runs.push((e - s) as u32);
            pos = e;
        }
        if pos < n || runs.is_empty() {
            runs.push((n - pos) as u32);
        }
        Self {
            width,
            height,
            runs,
        }
    }

    pub fn centroid(&self) -> Result<RealPoint> {
        let (mut n, mut sx, mut sy) = (0u64, 0u128, 0u128);
        for (y, x0, x1) in self.row_spans() {
            let len = (x1 - x0) as u64;
            n += len;
            // sum of x over [x0, x1)
            sx += (x0 as u128 + x1 as u128 - 1) * len as u128 / 2;
            sy += y as u128 * len as u128;
        }
        if n == 0 {
            return Err(Error::EmptyMask("empty mask has no centroid"));
        }
        Ok(RealPoint::new(sx as f64 / n as f64, sy as f64 / n as f64))
    }

    pub fn bbox(&self) -> Result<BoundingBox> {
        let mut it = self.row_spans();
        let (y0, a0, b0) = it
            .next()
            .ok_or(Error::EmptyMask("empty mask has no bounding box"))?;
        let (mut x_min, mut x_max, mut y_max) = (a0, b0 - 1, y0);
        for (y, a, b) in it {
            x_min = x_min.min(a);
            x_max = x_max.max(b - 1);
            y_max = y;
        }
        Ok(BoundingBox {
            x_min,
            y_min: y0,
            x_max,
            y_max,
        })
    }

    /// Mirror about the vertical axis (`x -> width - 1 - x`).
    pub fn flip_horizontal(&self) -> BinaryMask {
        let bits = self.to_bitmap();
        let w = self.width as usize;
        Self::from_fn(self.width, self.height, |x, y| {
            bits[y as usize * w + (w - 1 - x as usize)]
        })
    }

    /// One step of 8-neighborhood dilation.
    pub fn dilate(&self) -> BinaryMask {
        self.morph(true)
    }

    /// One step of 8-neighborhood erosion. Pixels beyond the border count as background.
    pub fn erode(&self) -> BinaryMask {
        self.morph(false)
    }

    fn morph(&self, dilate: bool) -> BinaryMask {
        let (w, h) = (self.width, self.height);
        let mut rows: Vec<Vec<(u32, u32)>> = vec![Vec::new(); h as usize];
        for (y, x0, x1) in self.row_spans() {
            rows[y as usize].push((x0, x1));
        }
        let mut out: Vec<(u64, u64)> = Vec::new();
        for y in 0..h as usize {
            let row = if dilate {
                let lo = y.saturating_sub(1);
                let hi = (y + 1).min(h as usize - 1);
                let mut grown: Vec<(u32, u32)> = rows[lo..=hi]
                    .iter()
                    .flatten()
                    .map(|&(a, b)| (a.saturating_sub(1), (b + 1).min(w)))
                    .collect();
                grown.sort_unstable();
                grown
            } else {
                if y == 0 || y + 1 >= h as usize {
                    continue;
                }
                // a pixel survives when its whole 3x3 neighborhood is foreground
                let shrink = |r: &[(u32, u32)]| -> Vec<(u32, u32)> {
                    r.iter().filter(|(a, b)| b - a > 2).map(|&(a, b)| (a + 1, b - 1)).collect()
                };
                let mid = intersect_spans(&shrink(&rows[y - 1]), &shrink(&rows[y]));
                intersect_spans(&mid, &shrink(&rows[y + 1]))
            };
            let base = y as u64 * w as u64;
            for (a, b) in row {
                let (a, b) = (base + a as u64, base + b as u64);
                match out.last_mut() {
                    Some(last) if a <= last.1 => last.1 = last.1.max(b),
                    _ => out.push((a, b)),
                }
            }
        }
        Self::from_spans(w, h, &out)
    }
}

/// Intersection of two sorted lists of disjoint half-open spans.
fn intersect_spans(a: &[(u32, u32)], b: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo < hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

impl fmt::Display for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.width, self.height)?;
        for r in &self.runs {
            write!(f, " {r}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryMask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut fields = s.split_ascii_whitespace().map(|tok| {
            tok.parse::<u32>()
                .map_err(|_| Error::InvalidRle(format!("bad integer {tok:?} in mask text")))
        });
        let width = fields
            .next()
            .ok_or_else(|| Error::InvalidRle("missing width".into()))??;
        let height = fields
            .next()
            .ok_or_else(|| Error::InvalidRle("missing height".into()))??;
        let runs = fields.collect::<Result<Vec<_>>>()?;
        BinaryMask::from_runs(width, height, runs)
    }
}

impl Serialize for BinaryMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: u32, h: u32, x0: u32, y0: u32, side: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            (x0..x0 + side).contains(&x) && (y0..y0 + side).contains(&y)
        })
    }

    fn rect(w: u32, h: u32, x0: u32, y0: u32, rw: u32, rh: u32) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y))
    }

    #[test]
    fn area_examples() {
        assert_eq!(BinaryMask::empty(4, 4).area(), 0);
        assert_eq!(BinaryMask::full(4, 4).area(), 16);
        assert_eq!(square(8, 8, 3, 2, 2).area(), 4);
    }

    #[test]
    fn canonical_runs() {
        assert_eq!(BinaryMask::full(4, 4).runs(), &[0, 16]);
        assert_eq!(BinaryMask::empty(4, 4).runs(), &[16]);
        let m = BinaryMask::from_pixels(3, 1, [PixelPoint::new(1, 0)]).unwrap();
        assert_eq!(m.runs(), &[1, 1, 1]);
    }

    #[test]
    fn iou_and_dice_examples() {
        let a = square(8, 8, 1, 1, 2);
        let b = square(8, 8, 8, 8, 0);
        assert_eq!(a.iou(&a).unwrap(), 1.0);
        assert_eq!(a.dice(&a).unwrap(), 1.0);
        assert_eq!(a.iou(&b).unwrap(), 0.0);
        let c = square(8, 8, 5, 5, 2);
        assert_eq!(a.iou(&c).unwrap(), 0.0);
        assert_eq!(a.dice(&c).unwrap(), 0.0);
        // squares at x 1..3 and 2..4, same rows: overlap is a 1x2 strip
        let d = square(8, 8, 2, 1, 2);
        assert!((a.iou(&d).unwrap() - 2.0 / 6.0).abs() < 1e-15);
        assert_eq!(a.dice(&d).unwrap(), 0.5);
    }

    #[test]
    fn both_empty_conventions() {
        let e = BinaryMask::empty(5, 5);
        assert_eq!(e.iou(&e).unwrap(), 0.0);
        assert_eq!(e.dice(&e).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = BinaryMask::full(4, 4);
        let b = BinaryMask::full(4, 5);
        assert!(matches!(a.iou(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.dice(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn centroid_examples() {
        let p = BinaryMask::from_pixels(10, 10, [PixelPoint::new(3, 5)]).unwrap();
        assert_eq!(p.centroid().unwrap(), RealPoint::new(3.0, 5.0));
        assert_eq!(square(8, 8, 0, 0, 2).centroid().unwrap(), RealPoint::new(0.5, 0.5));
        let line = rect(12, 3, 0, 0, 10, 1);
        assert_eq!(line.centroid().unwrap(), RealPoint::new(4.5, 0.0));
        assert!(matches!(
            BinaryMask::empty(3, 3).centroid(),
            Err(Error::EmptyMask("empty mask has no centroid"))
        ));
    }

    #[test]
    fn bbox_examples() {
        let p = BinaryMask::from_pixels(10, 10, [PixelPoint::new(3, 5)]).unwrap();
        assert_eq!(p.bbox().unwrap(), BoundingBox::new(3, 5, 3, 5).unwrap());
        let two =
            BinaryMask::from_pixels(10, 10, [PixelPoint::new(1, 1), PixelPoint::new(4, 2)]).unwrap();
        assert_eq!(two.bbox().unwrap(), BoundingBox::new(1, 1, 4, 2).unwrap());
        assert_eq!(
            BinaryMask::full(8, 8).bbox().unwrap(),
            BoundingBox::new(0, 0, 7, 7).unwrap()
        );
        assert!(BinaryMask::empty(8, 8).bbox().is_err());
    }

    #[test]
    fn text_form() {
        let m = square(4, 3, 1, 1, 2);
        assert_eq!(m.to_string(), "4 3 5 2 2 2 1");
        assert_eq!("4 3 5 2 2 2 1".parse::<BinaryMask>().unwrap(), m);
        assert!("4 3 5 2 2 2".parse::<BinaryMask>().is_err());
        assert!("4 3 5 0 2 2 3".parse::<BinaryMask>().is_err());
        assert!("4 x 12".parse::<BinaryMask>().is_err());
        assert_eq!("2 2 0 4".parse::<BinaryMask>().unwrap(), BinaryMask::full(2, 2));
    }

    #[test]
    fn row_spans_split_at_row_ends() {
        let m = BinaryMask::from_runs(3, 2, vec![2, 3, 1]).unwrap();
        let spans: Vec<_> = m.row_spans().collect();
        assert_eq!(spans, vec![(0, 2, 3), (1, 0, 2)]);
        assert!(m.contains(PixelPoint::new(2, 0)));
        assert!(!m.contains(PixelPoint::new(2, 1)));
    }

    #[test]
    fn union_and_intersection() {
        let a = square(6, 6, 0, 0, 3);
        let b = square(6, 6, 2, 2, 3);
        assert_eq!(a.union(&b).unwrap().area(), 17);
        assert_eq!(a.intersection(&b).unwrap().area(), 1);
        assert_eq!(a.intersection(&b).unwrap().pixels().collect::<Vec<_>>(), vec![PixelPoint::new(2, 2)]);
    }

    #[test]
    fn morphology_matches_per_pixel_rule() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (w, h) = (rng.gen_range(1..12), rng.gen_range(1..12));
            let p = rng.gen_range(0.1..0.95);
            let m = BinaryMask::from_fn(w, h, |_, _| rng.gen_bool(p));
            let bits = m.to_bitmap();
            let at = |x: i64, y: i64| x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && bits[(y * w as i64 + x) as usize];
            let around = |x: u32, y: u32| {
                (-1..=1).flat_map(move |dy| (-1..=1).map(move |dx| (x as i64 + dx, y as i64 + dy)))
            };
            let dilated = BinaryMask::from_fn(w, h, |x, y| around(x, y).any(|(x, y)| at(x, y)));
            let eroded = BinaryMask::from_fn(w, h, |x, y| around(x, y).all(|(x, y)| at(x, y)));
            assert_eq!(m.dilate(), dilated, "{m}");
            assert_eq!(m.erode(), eroded, "{m}");
        }
    }

    #[test]
    fn morphology_steps() {
        let m = square(9, 9, 3, 3, 3);
        assert_eq!(m.dilate().area(), 25);
        assert_eq!(m.erode().area(), 1);
        assert_eq!(m.flip_horizontal(), square(9, 9, 3, 3, 3));
        let p = BinaryMask::from_pixels(4, 1, [PixelPoint::new(0, 0)]).unwrap();
        assert_eq!(p.flip_horizontal().pixels().next(), Some(PixelPoint::new(3, 0)));
    }
}
