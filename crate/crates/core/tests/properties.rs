use std::collections::BTreeSet;

use flair::alignment::{align_tracks, AlignmentConfig, TrackOrigin, TrackRecord};
use flair::eval::{time_block_split, FrameRow, SplitConfig};
use flair::kinematics::savgol_smooth;
use flair::BinaryMask;
use proptest::prelude::*;

fn mask_strategy(w: u32, h: u32) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(any::<bool>(), (w * h) as usize).prop_map(move |bits| BinaryMask::from_bitmap(w, h, &bits).unwrap())
}

fn rect(w: u32, h: u32, x0: u32, y0: u32, rw: u32, rh: u32) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| (x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y))
}

/// Tracks of drifting rectangles spread over a few intervals.
fn tracks_strategy() -> impl Strategy<Value = Vec<TrackRecord>> {
    let track = (0usize..4, 0u32..16, 0u32..16, 3u32..8, -1i32..=1, 0usize..12, 4usize..12);
    prop::collection::vec(track, 1..10).prop_map(|specs| {
        let mut per_interval = [0usize; 4];
        specs
            .into_iter()
            .map(|(interval, x, y, side, drift, start, len)| {
                let candidate = per_interval[interval];
                per_interval[interval] += 1;
                let mut t = TrackRecord::new(TrackOrigin { interval, candidate });
                for f in start..start + len {
                    let dx = (x as i32 + drift * (f as i32 - start as i32)).clamp(0, 16) as u32;
                    t.masks.insert(f, rect(24, 24, dx, y, side, side));
                }
                t
            })
            .collect()
    })
}

fn confirmed(tracks: &[TrackRecord], iou: f64) -> BTreeSet<TrackOrigin> {
    let cfg = AlignmentConfig {
        iou_threshold: iou,
        ..Default::default()
    };
    align_tracks(tracks, &cfg)
        .unwrap()
        .individuals
        .iter()
        .flat_map(|i| i.member_tracks.iter().copied())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rle_text_round_trip(m in mask_strategy(13, 7)) {
        let text = m.to_string();
        let back: BinaryMask = text.parse().unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(BinaryMask::from_bitmap(13, 7, &m.to_bitmap()).unwrap(), m);
    }

    #[test]
    fn overlap_metrics_are_ordered_and_symmetric(a in mask_strategy(9, 9), b in mask_strategy(9, 9)) {
        let (iou, dice) = (a.iou(&b).unwrap(), a.dice(&b).unwrap());
        prop_assert!(iou <= dice + 1e-15);
        prop_assert!((0.0..=1.0).contains(&iou) && (0.0..=1.0).contains(&dice));
        prop_assert_eq!(iou, b.iou(&a).unwrap());
        prop_assert_eq!(a.union(&b).unwrap().area() + a.intersection(&b).unwrap().area(), a.area() + b.area());
    }

    #[test]
    fn alignment_ignores_input_order(tracks in tracks_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = tracks.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let cfg = AlignmentConfig::default();
        prop_assert_eq!(align_tracks(&tracks, &cfg).unwrap(), align_tracks(&shuffled, &cfg).unwrap());
    }

    #[test]
    fn stricter_iou_confirms_fewer_tracks(tracks in tracks_strategy(), lo in 0.05f64..0.9, gap in 0.0f64..0.5) {
        let hi = (lo + gap).min(0.95);
        prop_assert!(confirmed(&tracks, hi).is_subset(&confirmed(&tracks, lo)));
    }

    #[test]
    fn split_assigns_every_row_once(n_a in 0usize..400, n_b in 1usize..400, block in 1usize..60, seed in any::<u64>()) {
        let rows: Vec<FrameRow> = (0..n_a)
            .map(|f| FrameRow { video: "a".into(), frame: f })
            .chain((0..n_b).map(|f| FrameRow { video: "b".into(), frame: f * 2 }))
            .collect();
        let cfg = SplitConfig { block_size: block, seed, ..Default::default() };
        let out = time_block_split(&rows, &cfg).unwrap();
        prop_assert_eq!(out.len(), rows.len());
        let seen: BTreeSet<(String, usize)> = out.iter().map(|r| (r.video.clone(), r.frame)).collect();
        prop_assert_eq!(seen.len(), rows.len());
        let mut per_block = std::collections::BTreeMap::new();
        for r in &out {
            prop_assert_eq!(*per_block.entry(r.block).or_insert(r.split), r.split);
        }
    }

    #[test]
    fn savgol_keeps_cubics(c in prop::array::uniform4(-3.0f64..3.0), len in 15usize..60) {
        let poly = |t: f64| c[0] + c[1] * t + c[2] * t * t + c[3] * t * t * t;
        let xs: Vec<f64> = (0..len).map(|i| poly(i as f64 / 10.0)).collect();
        let ys = savgol_smooth(&xs, 15, 3).unwrap();
        for i in 7..len - 7 {
            prop_assert!((xs[i] - ys[i]).abs() <= 1e-9 * (1.0 + xs[i].abs()), "i={} {} vs {}", i, xs[i], ys[i]);
        }
    }
}
