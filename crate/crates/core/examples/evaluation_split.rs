//! Dice and detection precision/recall, then a time-blocked train/val/test split.

use flair::eval::{precision_recall_at_iou, split_sizes, time_block_split, video_dice, FrameRow, SplitConfig};
use flair::BinaryMask;

fn square(x0: u32, side: u32) -> BinaryMask {
    BinaryMask::from_fn(32, 32, |x, y| (x0..x0 + side).contains(&x) && (4..4 + side).contains(&y))
}

fn main() -> flair::Result<()> {
    let truth: Vec<Vec<BinaryMask>> = (0..8).map(|_| vec![square(4, 10)]).collect();
    // predictions drift right by a pixel per frame, plus one spurious mask on frame 0
    let mut pred: Vec<Vec<BinaryMask>> = (0..8).map(|i| vec![square(4 + i, 10)]).collect();
    pred[0].push(square(20, 4));

    println!("dice = {:.3}", video_dice(&pred, &truth, false)?);
    for t in [0.5, 0.75] {
        let pr = precision_recall_at_iou(&pred, &truth, t)?;
        println!("iou >= {t}: precision {:.3}, recall {:.3}", pr.precision, pr.recall);
    }

    let rows: Vec<FrameRow> = ["dive_a", "dive_b"]
        .iter()
        .flat_map(|v| (0..900).map(move |frame| FrameRow { video: v.to_string(), frame }))
        .collect();
    let assignments = time_block_split(&rows, &SplitConfig::default())?;
    let [train, val, test] = split_sizes(&assignments);
    println!("{} frames -> train {train}, val {val}, test {test}", rows.len());
    Ok(())
}
