//! Run-length masks: parsing, overlap metrics and geometry.

use flair::BinaryMask;

fn main() -> flair::Result<()> {
    // 4x3 image, background first: 1 off, 2 on, 2 off, 2 on, 5 off
    let a: BinaryMask = "4 3 1 2 2 2 5".parse()?;
    let b = BinaryMask::from_fn(4, 3, |x, y| x >= 1 && y <= 1);

    println!("a = {a}  area {}", a.area());
    println!("b = {b}  area {}", b.area());
    println!("iou  = {:.3}", a.iou(&b)?);
    println!("dice = {:.3}", a.dice(&b)?);
    println!("union = {}", a.union(&b)?);

    let c = a.centroid()?;
    println!("centroid of a = ({:.2}, {:.2}), bbox {:?}", c.x, c.y, a.bbox()?);

    let empty = BinaryMask::empty(4, 3);
    println!("empty vs empty: iou {} dice {}", empty.iou(&empty)?, empty.dice(&empty)?);
    Ok(())
}
