//! Domain types shared by every stage of the pipeline.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned pixel box `(x, y, w, h)`, serialized as a 4-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub const fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Exclusive right edge.
    pub fn right(&self) -> u32 {
        self.x + self.w
    }

    /// Exclusive bottom edge.
    pub fn bottom(&self) -> u32 {
        self.y + self.h
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.x < other.right()
            && other.x < self.right()
            && self.y < other.bottom()
            && other.y < self.bottom()
    }

    pub fn contains_point(&self, p: Point) -> bool {
        let (x0, y0) = (self.x as f64, self.y as f64);
        p.x >= x0 && p.x <= x0 + self.w as f64 && p.y >= y0 && p.y <= y0 + self.h as f64
    }

    pub fn center(&self) -> Result<Point> {
        center_of_bbox(*self)
    }
}

impl From<[u32; 4]> for BBox {
    fn from(v: [u32; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [u32; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// Real-valued pixel coordinate, serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Equal squared distances give bit-identical results.
    pub fn distance(&self, other: &Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        (dx * dx + dy * dy).sqrt()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Center of a bounding box with half-pixel resolution: `(x + w/2, y + h/2)`.
pub fn center_of_bbox(bbox: BBox) -> Result<Point> {
    if bbox.w == 0 || bbox.h == 0 {
        return Err(Error::DegenerateBox {
            w: bbox.w as i64,
            h: bbox.h as i64,
        });
    }
    Ok(Point::new(
        bbox.x as f64 + bbox.w as f64 / 2.0,
        bbox.y as f64 + bbox.h as f64 / 2.0,
    ))
}

/// 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("zero dimension {width}x{height}")));
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::InvalidImage(format!(
                "buffer has {} bytes, expected {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Solid-color image.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let n = width as usize * height as usize;
        let pixels = rgb.iter().copied().cycle().take(n * 3).collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// Copy of the region `bbox`, which must lie inside the image.
    pub fn crop(&self, bbox: BBox) -> Result<RgbImage> {
        if bbox.right() > self.width || bbox.bottom() > self.height {
            return Err(Error::InvalidImage(format!(
                "crop {bbox:?} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(bbox.w as usize * bbox.h as usize * 3);
        let stride = self.width as usize * 3;
        for y in bbox.y..bbox.bottom() {
            let start = y as usize * stride + bbox.x as usize * 3;
            pixels.extend_from_slice(&self.pixels[start..start + bbox.w as usize * 3]);
        }
        RgbImage::new(bbox.w, bbox.h, pixels)
    }

    pub fn to_image(&self) -> image::RgbImage {
        image::RgbImage::from_raw(self.width, self.height, self.pixels.clone())
            .expect("buffer length checked at construction")
    }
}

impl TryFrom<image::RgbImage> for RgbImage {
    type Error = Error;

    fn try_from(img: image::RgbImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        RgbImage::new(w, h, img.into_raw())
    }
}

/// Boolean raster stored column-major (pixel `(x, y)` at index `x * height + y`),
/// the same order the RLE codec walks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for x in 0..width {
            for y in 0..height {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    /// Build from bits already in column-major order.
    pub fn from_column_major(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width as usize * height as usize {
            return Err(Error::InvalidImage(format!(
                "{} bits for a {width}x{height} mask",
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
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

    /// Column-major bits.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    fn index(&self, x: u32, y: u32) -> usize {
        x as usize * self.height as usize + y as usize
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[self.index(x, y)]
    }

    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let i = self.index(x, y);
        self.bits[i] = value;
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }
}

/// One raw mask as emitted by the segmentation backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCandidate {
    pub id: String,
    /// Column-major run lengths starting with a background run.
    pub rle: Vec<u32>,
    pub width: u32,
    pub height: u32,
    pub bbox: BBox,
    pub area: u64,
    pub quality_score: f64,
    pub stability_score: f64,
}

/// A mask that survived post-processing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub id: usize,
    pub bbox: BBox,
    pub center: Point,
    pub area: u64,
    /// Id of the candidate this kernel came from.
    #[serde(default)]
    pub candidate_id: String,
}

impl Kernel {
    /// Kernel with its center taken from `bbox`.
    pub fn from_bbox(id: usize, bbox: BBox, area: u64) -> Result<Self> {
        Ok(Self {
            id,
            bbox,
            center: center_of_bbox(bbox)?,
            area,
            candidate_id: String::new(),
        })
    }

    /// Kernel at an explicit center; the bbox is the smallest pixel box containing it.
    pub fn at(id: usize, center: Point, area: u64) -> Self {
        let x = center.x.floor().max(0.0) as u32;
        let y = center.y.floor().max(0.0) as u32;
        Self {
            id,
            bbox: BBox::new(x, y, 1, 1),
            center,
            area,
            candidate_id: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EarRecord {
    pub ear_id: String,
    pub source_image: String,
    pub crop_offset: [u32; 2],
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DotLabel {
    Valid,
    Invalid,
    ExpertCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDot {
    pub x: f64,
    pub y: f64,
    pub label: DotLabel,
}

/// Expert annotation of one ear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthAnnotation {
    pub ear_id: String,
    #[serde(default)]
    pub expert_path: Vec<Point>,
    #[serde(default)]
    pub dots: Vec<AnnotationDot>,
}

impl GroundTruthAnnotation {
    pub fn count(&self, label: DotLabel) -> usize {
        self.dots.iter().filter(|d| d.label == label).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_examples() {
        assert_eq!(center_of_bbox(BBox::new(0, 0, 10, 10)).unwrap(), Point::new(5.0, 5.0));
        assert_eq!(center_of_bbox(BBox::new(4, 6, 2, 2)).unwrap(), Point::new(5.0, 7.0));
        assert_eq!(center_of_bbox(BBox::new(3, 3, 5, 7)).unwrap(), Point::new(5.5, 6.5));
    }

    #[test]
    fn degenerate_box() {
        assert!(matches!(
            center_of_bbox(BBox::new(1, 1, 0, 3)),
            Err(Error::DegenerateBox { .. })
        ));
        assert!(matches!(
            center_of_bbox(BBox::new(1, 1, 3, 0)),
            Err(Error::DegenerateBox { .. })
        ));
    }

    #[test]
    fn center_inside_bbox() {
        for (x, y, w, h) in [(0, 0, 1, 1), (7, 2, 9, 4), (100, 50, 3, 31)] {
            let b = BBox::new(x, y, w, h);
            assert!(b.contains_point(b.center().unwrap()));
        }
    }

    #[test]
    fn image_validation() {
        assert!(RgbImage::new(2, 2, vec![0; 11]).is_err());
        assert!(RgbImage::new(0, 2, vec![]).is_err());
        let img = RgbImage::new(2, 1, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.get(1, 0), [4, 5, 6]);
    }

    #[test]
    fn crop_copies_region() {
        let img = RgbImage::new(3, 2, (0..18).collect()).unwrap();
        let c = img.crop(BBox::new(1, 0, 2, 2)).unwrap();
        assert_eq!(c.pixels(), &[3, 4, 5, 6, 7, 8, 12, 13, 14, 15, 16, 17]);
        assert!(img.crop(BBox::new(2, 0, 2, 1)).is_err());
    }

    #[test]
    fn bbox_serializes_as_array() {
        let s = serde_json::to_string(&BBox::new(1, 2, 3, 4)).unwrap();
        assert_eq!(s, "[1,2,3,4]");
    }
}
