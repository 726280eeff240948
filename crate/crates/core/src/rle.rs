//! Uncompressed run-length codec for binary masks.
//!
//! Runs are column-major and always begin with a background run, which may be
//! zero-length. `[6]` on a 2x3 mask is all background; `[0, 6]` is all
//! foreground.

use crate::error::{Error, Result};
use crate::model::{BBox, BinaryMask};

/// Foreground area and tight bounding box of a mask. `bbox` is `None` for an
/// empty mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskStats {
    pub area: u64,
    pub bbox: Option<BBox>,
}

fn check_sum(counts: &[u32], width: u32, height: u32) -> Result<()> {
    let sum: u64 = counts.iter().map(|&c| c as u64).sum();
    let expected = width as u64 * height as u64;
    if sum != expected {
        return Err(Error::SumMismatch { sum, expected });
    }
    Ok(())
}

/// Foreground intervals `[start, end)` in column-major linear index space.
fn foreground_runs(counts: &[u32]) -> impl Iterator<Item = (u64, u64)> + '_ {
    let mut pos = 0u64;
    counts.iter().enumerate().filter_map(move |(i, &c)| {
        let start = pos;
        pos += c as u64;
        (i % 2 == 1 && c > 0).then_some((start, pos))
    })
}

pub fn rle_decode(counts: &[u32], width: u32, height: u32) -> Result<BinaryMask> {
    check_sum(counts, width, height)?;
    let mut bits = vec![false; width as usize * height as usize];
    for (start, end) in foreground_runs(counts) {
        bits[start as usize..end as usize].fill(true);
    }
    BinaryMask::from_column_major(width, height, bits)
}

pub fn rle_encode(mask: &BinaryMask) -> Vec<u32> {
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for &bit in mask.bits() {
        if bit != current {
            counts.push(run);
            run = 0;
            current = bit;
        }
        run += 1;
    }
    counts.push(run);
    counts
}

/// Encode foreground intervals given as sorted, non-overlapping `[start, end)`
/// column-major ranges over a mask of `total` pixels. Touching intervals are
/// merged so the output stays canonical.
pub fn rle_from_intervals(total: u64, intervals: impl IntoIterator<Item = (u64, u64)>) -> Vec<u32> {
    let mut counts = Vec::new();
    let mut pos = 0u64;
    let mut open: Option<(u64, u64)> = None;
    let flush = |counts: &mut Vec<u32>, pos: &mut u64, (s, e): (u64, u64)| {
        counts.push((s - *pos) as u32);
        counts.push((e - s) as u32);
        *pos = e;
    };
    for (s, e) in intervals {
        if s >= e {
            continue;
        }
        match open {
            Some((os, oe)) if s <= oe => open = Some((os, oe.max(e))),
            Some(prev) => {
                flush(&mut counts, &mut pos, prev);
                open = Some((s, e));
            }
            None => open = Some((s, e)),
        }
    }
    if let Some(prev) = open {
        flush(&mut counts, &mut pos, prev);
    }
    if pos < total || counts.is_empty() {
        counts.push((total - pos) as u32);
    }
    counts
}

pub fn mask_stats(mask: &BinaryMask) -> MaskStats {
    let (w, h) = mask.dims();
    let mut area = 0u64;
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for x in 0..w {
        for y in 0..h {
            if mask.get(x, y) {
                area += 1;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    let bbox = (area > 0).then(|| BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1));
    MaskStats { area, bbox }
}

/// Same result as `mask_stats(&rle_decode(..))` without materializing the mask.
pub fn rle_stats(counts: &[u32], width: u32, height: u32) -> Result<MaskStats> {
    check_sum(counts, width, height)?;
    let h = height as u64;
    let mut area = 0u64;
    let (mut x0, mut y0, mut x1, mut y1) = (u64::MAX, u64::MAX, 0u64, 0u64);
    for (start, end) in foreground_runs(counts) {
        area += end - start;
        let (cs, ce) = (start / h, (end - 1) / h);
        x0 = x0.min(cs);
        x1 = x1.max(ce);
        if cs == ce {
            y0 = y0.min(start % h);
            y1 = y1.max((end - 1) % h);
        } else {
            // the run wraps into the next column, so it touches both the last and first row
            y0 = 0;
            y1 = h - 1;
        }
    }
    let bbox = (area > 0).then(|| {
        BBox::new(x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32)
    });
    Ok(MaskStats { area, bbox })
}

/// A mask decoded only inside its bounding box. Used where full-frame masks
/// would be too large to keep around (hundreds of kernels per ear image).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalMask {
    pub bbox: BBox,
    pub area: u64,
    /// Column-major bits of the `bbox` region.
    bits: Vec<bool>,
}

impl LocalMask {
    pub fn decode(counts: &[u32], width: u32, height: u32) -> Result<Self> {
        let stats = rle_stats(counts, width, height)?;
        let bbox = stats.bbox.unwrap_or(BBox::new(0, 0, 0, 0));
        let mut bits = vec![false; bbox.w as usize * bbox.h as usize];
        let h = height as u64;
        for (start, end) in foreground_runs(counts) {
            for idx in start..end {
                let (x, y) = ((idx / h) as u32, (idx % h) as u32);
                let local = (x - bbox.x) as usize * bbox.h as usize + (y - bbox.y) as usize;
                bits[local] = true;
            }
        }
        Ok(Self {
            bbox,
            area: stats.area,
            bits,
        })
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        let stats = mask_stats(mask);
        let bbox = stats.bbox.unwrap_or(BBox::new(0, 0, 0, 0));
        let mut bits = Vec::with_capacity(bbox.w as usize * bbox.h as usize);
        for x in bbox.x..bbox.right() {
            for y in bbox.y..bbox.bottom() {
                bits.push(mask.get(x, y));
            }
        }
        Self {
            bbox,
            area: stats.area,
            bits,
        }
    }

    /// Whether absolute pixel `(x, y)` is foreground.
    pub fn get(&self, x: u32, y: u32) -> bool {
        let b = &self.bbox;
        if x < b.x || y < b.y || x >= b.right() || y >= b.bottom() {
            return false;
        }
        self.bits[(x - b.x) as usize * b.h as usize + (y - b.y) as usize]
    }

    pub fn intersection(&self, other: &LocalMask) -> u64 {
        if self.area == 0 || other.area == 0 || !self.bbox.intersects(&other.bbox) {
            return 0;
        }
        let x0 = self.bbox.x.max(other.bbox.x);
        let x1 = self.bbox.right().min(other.bbox.right());
        let y0 = self.bbox.y.max(other.bbox.y);
        let y1 = self.bbox.bottom().min(other.bbox.bottom());
        let mut n = 0u64;
        for x in x0..x1 {
            for y in y0..y1 {
                if self.get(x, y) && other.get(x, y) {
                    n += 1;
                }
            }
        }
        n
    }

    /// Intersection over union; 0 when both masks are empty.
    pub fn iou(&self, other: &LocalMask) -> f64 {
        let inter = self.intersection(other);
        let union = self.area + other.area - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_single_background_run() {
        let m = rle_decode(&[6], 2, 3).unwrap();
        assert_eq!(m.count_ones(), 0);
        assert_eq!(m.dims(), (2, 3));
    }

    #[test]
    fn decode_leading_zero_run() {
        let m = rle_decode(&[0, 6], 2, 3).unwrap();
        assert_eq!(m.count_ones(), 6);
    }

    #[test]
    fn decode_rejects_bad_sum() {
        assert!(matches!(
            rle_decode(&[2, 3], 2, 3),
            Err(Error::SumMismatch { sum: 5, expected: 6 })
        ));
        assert!(rle_stats(&[7], 2, 3).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(rle_encode(&BinaryMask::empty(2, 3)), vec![6]);
        assert_eq!(rle_encode(&BinaryMask::from_fn(2, 3, |_, _| true)), vec![0, 6]);
        // 3 wide, 1 tall: column-major order is just x
        let m = BinaryMask::from_fn(3, 1, |x, _| x == 1);
        assert_eq!(rle_encode(&m), vec![1, 1, 1]);
    }

    #[test]
    fn decode_is_column_major() {
        // 2x2, runs: bg 1, fg 1 -> pixel index 1 = (x=0, y=1)
        let m = rle_decode(&[1, 1, 2], 2, 2).unwrap();
        assert!(m.get(0, 1));
        assert!(!m.get(1, 0));
    }

    #[test]
    fn stats_examples() {
        let s = mask_stats(&BinaryMask::empty(3, 3));
        assert_eq!(s, MaskStats { area: 0, bbox: None });
        let s = mask_stats(&BinaryMask::from_fn(4, 5, |_, _| true));
        assert_eq!(s.area, 20);
        assert_eq!(s.bbox, Some(BBox::new(0, 0, 4, 5)));
        let m = BinaryMask::from_fn(5, 5, |x, y| (x, y) == (1, 1) || (x, y) == (3, 2));
        let s = mask_stats(&m);
        assert_eq!(s.area, 2);
        assert_eq!(s.bbox, Some(BBox::new(1, 1, 3, 2)));
    }

    #[test]
    fn wrapping_run_stats() {
        // 2x3 with pixels (0,2) and (1,0): one run crossing the column boundary
        let m = BinaryMask::from_fn(2, 3, |x, y| (x, y) == (0, 2) || (x, y) == (1, 0));
        let rle = rle_encode(&m);
        assert_eq!(rle, vec![2, 2, 2]);
        assert_eq!(rle_stats(&rle, 2, 3).unwrap(), mask_stats(&m));
    }

    #[test]
    fn intervals_merge_touching() {
        assert_eq!(rle_from_intervals(10, [(2, 4), (4, 6)]), vec![2, 4, 4]);
        assert_eq!(rle_from_intervals(6, []), vec![6]);
        assert_eq!(rle_from_intervals(6, [(0, 6)]), vec![0, 6]);
        assert_eq!(rle_from_intervals(6, [(0, 2), (3, 6)]), vec![0, 2, 1, 3]);
    }

    fn arb_mask(max: u32) -> impl Strategy<Value = BinaryMask> {
        (1..=max, 1..=max).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), (w * h) as usize)
                .prop_map(move |bits| BinaryMask::from_column_major(w, h, bits).unwrap())
        })
    }

    proptest! {
        #[test]
        fn encode_is_canonical(m in arb_mask(12)) {
            let rle = rle_encode(&m);
            prop_assert!(rle.iter().skip(1).all(|&c| c > 0));
        }

        #[test]
        fn rle_stats_match_decoded(m in arb_mask(12)) {
            let rle = rle_encode(&m);
            prop_assert_eq!(rle_stats(&rle, m.width(), m.height()).unwrap(), mask_stats(&m));
        }

        #[test]
        fn local_mask_agrees_with_full(m in arb_mask(10)) {
            let rle = rle_encode(&m);
            let local = LocalMask::decode(&rle, m.width(), m.height()).unwrap();
            prop_assert_eq!(&local, &LocalMask::from_mask(&m));
            for x in 0..m.width() {
                for y in 0..m.height() {
                    prop_assert_eq!(local.get(x, y), m.get(x, y));
                }
            }
        }

        #[test]
        fn intervals_match_encode(m in arb_mask(10)) {
            let h = m.height() as u64;
            let mut intervals = Vec::new();
            for x in 0..m.width() {
                let mut y = 0;
                while y < m.height() {
                    if m.get(x, y) {
                        let s = y;
                        while y < m.height() && m.get(x, y) { y += 1; }
                        intervals.push((x as u64 * h + s as u64, x as u64 * h + y as u64));
                    } else {
                        y += 1;
                    }
                }
            }
            let total = m.width() as u64 * h;
            prop_assert_eq!(rle_from_intervals(total, intervals), rle_encode(&m));
        }
    }
}
