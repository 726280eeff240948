//! Encode a mask as column-major RLE, decode it back and read its area and
//! bounding box straight from the run lengths.

use kernelrow::rle::{rle_decode, rle_encode, rle_stats, LocalMask};
use kernelrow::BinaryMask;

fn main() -> kernelrow::Result<()> {
    // a 4x3 block inside a 10x8 frame
    let mask = BinaryMask::from_fn(10, 8, |x, y| (3..7).contains(&x) && (2..5).contains(&y));
    let counts = rle_encode(&mask);
    println!("counts: {counts:?}");

    assert_eq!(rle_decode(&counts, 10, 8)?, mask);
    let stats = rle_stats(&counts, 10, 8)?;
    println!("area {} bbox {:?}", stats.area, stats.bbox);

    // decode only the bounding box, as the mask filter does
    let local = LocalMask::decode(&counts, 10, 8)?;
    println!("local bbox {:?}, pixel (4,3) set: {}", local.bbox, local.get(4, 3));
    Ok(())
}
