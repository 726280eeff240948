//! Ear extraction from multi-ear scenes shot on a dark backdrop: threshold
//! the HSV value channel, label 8-connected components and crop every
//! component shaped like an upright ear.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BBox, BinaryMask, EarRecord, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hsv {
    /// Degrees in `[0, 360)`.
    pub hue: f64,
    /// `[0, 255]`.
    pub saturation: f64,
    pub value: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsvImage {
    pub width: u32,
    pub height: u32,
    /// Row-major.
    pub pixels: Vec<Hsv>,
}

impl HsvImage {
    pub fn get(&self, x: u32, y: u32) -> Hsv {
        self.pixels[y as usize * self.width as usize + x as usize]
    }
}

pub fn pixel_to_hsv([r, g, b]: [u8; 3]) -> Hsv {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = (max - min) as f64;
    let (rf, gf, bf) = (r as f64, g as f64, b as f64);
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((gf - bf) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    let saturation = if max == 0 { 0.0 } else { delta / max as f64 * 255.0 };
    Hsv {
        hue: if hue >= 360.0 { hue - 360.0 } else { hue },
        saturation,
        value: max,
    }
}

pub fn rgb_to_hsv(image: &RgbImage) -> HsvImage {
    HsvImage {
        width: image.width(),
        height: image.height(),
        pixels: image
            .pixels()
            .chunks_exact(3)
            .map(|p| pixel_to_hsv([p[0], p[1], p[2]]))
            .collect(),
    }
}

/// Value-channel threshold. Pixels with `V > t` are foreground.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    #[default]
    Otsu,
    Fixed(u8),
}

/// Otsu's threshold: the `t` maximizing between-class variance of
/// `{v <= t}` and `{v > t}`. The smallest maximizer wins.
pub fn otsu_threshold(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let sum_all: f64 = hist.iter().enumerate().map(|(v, &c)| v as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0u64, 0.0f64);
    let (mut best_t, mut best) = (0u8, -1.0f64);
    for (t, &count) in hist.iter().enumerate() {
        w0 += count;
        sum0 += t as f64 * count as f64;
        let w1 = total - w0;
        let between = if w0 == 0 || w1 == 0 {
            0.0
        } else {
            let (mu0, mu1) = (sum0 / w0 as f64, (sum_all - sum0) / w1 as f64);
            w0 as f64 * w1 as f64 * (mu0 - mu1).powi(2)
        };
        if between > best {
            best = between;
            best_t = t as u8;
        }
    }
    best_t
}

pub fn value_histogram(hsv: &HsvImage) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for p in &hsv.pixels {
        hist[p.value as usize] += 1;
    }
    hist
}

pub fn threshold_value(hsv: &HsvImage, rule: ThresholdRule) -> BinaryMask {
    let t = match rule {
        ThresholdRule::Fixed(t) => t,
        ThresholdRule::Otsu => otsu_threshold(&value_histogram(hsv)),
    };
    BinaryMask::from_fn(hsv.width, hsv.height, |x, y| hsv.get(x, y).value > t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneComponent {
    /// 1-based, in output order.
    pub label: u32,
    pub pixel_count: u64,
    pub bbox: BBox,
    /// `h / w` of the bounding box.
    pub aspect_ratio: f64,
}

/// Labels per pixel (row-major, 0 = background) and the components, sorted
/// left to right by bounding box.
#[derive(Debug, Clone)]
pub struct Labeling {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<u32>,
    pub components: Vec<SceneComponent>,
}

/// 8-connected component labeling.
pub fn label_components(mask: &BinaryMask) -> Labeling {
    let (w, h) = mask.dims();
    let (wu, hu) = (w as usize, h as usize);
    let mut raw = vec![0u32; wu * hu];
    // (first pixel index, pixel count, x0, y0, x1, y1)
    let mut found: Vec<(usize, u64, u32, u32, u32, u32)> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..wu * hu {
        let (sx, sy) = ((start % wu) as u32, (start / wu) as u32);
        if raw[start] != 0 || !mask.get(sx, sy) {
            continue;
        }
        let label = found.len() as u32 + 1;
        let mut comp = (start, 0u64, sx, sy, sx, sy);
        raw[start] = label;
        queue.push_back((sx, sy));
        while let Some((x, y)) = queue.pop_front() {
            comp.1 += 1;
            comp.2 = comp.2.min(x);
            comp.3 = comp.3.min(y);
            comp.4 = comp.4.max(x);
            comp.5 = comp.5.max(y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let idx = ny as usize * wu + nx as usize;
                    if raw[idx] == 0 && mask.get(nx as u32, ny as u32) {
                        raw[idx] = label;
                        queue.push_back((nx as u32, ny as u32));
                    }
                }
            }
        }
        found.push(comp);
    }

    let mut order: Vec<usize> = (0..found.len()).collect();
    order.sort_by_key(|&i| (found[i].2, found[i].3, found[i].0));
    let mut relabel = vec![0u32; found.len() + 1];
    let components = order
        .iter()
        .enumerate()
        .map(|(rank, &i)| {
            let (_, count, x0, y0, x1, y1) = found[i];
            relabel[i + 1] = rank as u32 + 1;
            let bbox = BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1);
            SceneComponent {
                label: rank as u32 + 1,
                pixel_count: count,
                bbox,
                aspect_ratio: bbox.h as f64 / bbox.w as f64,
            }
        })
        .collect();
    let labels = raw.into_iter().map(|l| relabel[l as usize]).collect();
    Labeling {
        width: w,
        height: h,
        labels,
        components,
    }
}

pub fn connected_components(mask: &BinaryMask) -> Vec<SceneComponent> {
    label_components(mask).components
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub threshold: ThresholdRule,
    /// Minimum component area as a fraction of the scene area.
    pub min_area_fraction: f64,
    /// Bounds on bounding-box `h / w`; ears are photographed tip up.
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub padding_px: u32,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdRule::Otsu,
            min_area_fraction: 0.01,
            aspect_min: 1.5,
            aspect_max: 8.0,
            padding_px: 10,
        }
    }
}

impl ExtractConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.min_area_fraction) {
            return Err(Error::InvalidConfig(format!(
                "extract: min_area_fraction {} outside [0, 1)",
                self.min_area_fraction
            )));
        }
        if !(self.aspect_min > 0.0 && self.aspect_min <= self.aspect_max) {
            return Err(Error::InvalidConfig(format!(
                "extract: need 0 < aspect_min <= aspect_max, got {} and {}",
                self.aspect_min, self.aspect_max
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, c: &SceneComponent, scene_area: u64) -> bool {
        c.pixel_count as f64 >= self.min_area_fraction * scene_area as f64
            && c.aspect_ratio >= self.aspect_min
            && c.aspect_ratio <= self.aspect_max
    }
}

/// Crop every ear-shaped component of `image`, left to right. Ear ids are
/// `{stem}_{index}`.
pub fn extract_ears(image: &RgbImage, cfg: &ExtractConfig, stem: &str) -> Result<Vec<(RgbImage, EarRecord)>> {
    let hsv = rgb_to_hsv(image);
    let mask = threshold_value(&hsv, cfg.threshold);
    let scene_area = image.width() as u64 * image.height() as u64;
    let pad = cfg.padding_px;
    let mut out = Vec::new();
    for c in connected_components(&mask) {
        if !cfg.accepts(&c, scene_area) {
            continue;
        }
        let x0 = c.bbox.x.saturating_sub(pad);
        let y0 = c.bbox.y.saturating_sub(pad);
        let x1 = (c.bbox.right() + pad).min(image.width());
        let y1 = (c.bbox.bottom() + pad).min(image.height());
        let crop = image.crop(BBox::new(x0, y0, x1 - x0, y1 - y0))?;
        let record = EarRecord {
            ear_id: format!("{stem}_{}", out.len()),
            source_image: stem.to_owned(),
            crop_offset: [x0, y0],
            metadata: Default::default(),
        };
        out.push((crop, record));
    }
    if out.is_empty() {
        return Err(Error::NoEarsFound);
    }
    Ok(out)
}
