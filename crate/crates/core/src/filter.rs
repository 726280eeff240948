//! Mask post-processing: turn raw candidates into one kernel per mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{center_of_bbox, BinaryMask, Kernel, MaskCandidate};
use crate::rle::LocalMask;

/// Which candidate confidence the score threshold applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreField {
    Quality,
    #[default]
    Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub area_min: u64,
    pub area_max: u64,
    pub score_min: f64,
    pub score_field: ScoreField,
    pub iou_max: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            area_min: 1000,
            area_max: 10_000,
            score_min: 0.93,
            score_field: ScoreField::Stability,
            iou_max: 0.4,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.area_min == 0 || self.area_min >= self.area_max {
            return Err(Error::InvalidConfig(format!(
                "filter: need 0 < area_min < area_max, got {} and {}",
                self.area_min, self.area_max
            )));
        }
        if !(0.0..=1.0).contains(&self.score_min) {
            return Err(Error::InvalidConfig(format!(
                "filter: score_min {} outside [0, 1]",
                self.score_min
            )));
        }
        if !(self.iou_max > 0.0 && self.iou_max < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "filter: iou_max {} outside (0, 1)",
                self.iou_max
            )));
        }
        Ok(())
    }

    pub fn score(&self, c: &MaskCandidate) -> f64 {
        match self.score_field {
            ScoreField::Quality => c.quality_score,
            ScoreField::Stability => c.stability_score,
        }
    }
}

/// Intersection over union of two same-sized masks; 0 when both are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            a: a.dims(),
            b: b.dims(),
        });
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += (x && y) as u64;
        union += (x || y) as u64;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

/// Apply the area window, the score threshold and overlap removal, then
/// convert survivors into kernels.
///
/// Overlap removal scans candidates from largest to smallest area (ties by
/// id); a candidate is discarded when its IoU with any smaller candidate
/// exceeds `iou_max`, since a mask that heavily overlaps a smaller one
/// usually spans several kernels.
///
/// Kernels are returned sorted top-to-bottom then left-to-right by center,
/// with `id` equal to their position, so the result does not depend on the
/// order of `candidates`.
pub fn filter_masks(candidates: &[MaskCandidate], cfg: &FilterConfig) -> Result<Vec<Kernel>> {
    let mut pool: Vec<(&MaskCandidate, LocalMask)> = Vec::new();
    for c in candidates {
        if c.area < cfg.area_min || c.area > cfg.area_max || cfg.score(c) < cfg.score_min {
            continue;
        }
        pool.push((c, LocalMask::decode(&c.rle, c.width, c.height)?));
    }
    pool.sort_by(|(a, _), (b, _)| b.area.cmp(&a.area).then_with(|| a.id.cmp(&b.id)));

    let mut keep = vec![true; pool.len()];
    for i in 0..pool.len() {
        let mask = &pool[i].1;
        keep[i] = !pool[i + 1..]
            .iter()
            .any(|(_, smaller)| mask.iou(smaller) > cfg.iou_max);
    }

    let mut kernels = pool
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((c, m), _)| {
            Ok(Kernel {
                id: 0,
                bbox: m.bbox,
                center: center_of_bbox(m.bbox)?,
                area: m.area,
                candidate_id: c.id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    kernels.sort_by(|a, b| {
        a.center
            .y
            .total_cmp(&b.center.y)
            .then(a.center.x.total_cmp(&b.center.x))
            .then_with(|| a.candidate_id.cmp(&b.candidate_id))
    });
    for (i, k) in kernels.iter_mut().enumerate() {
        k.id = i;
    }
    Ok(kernels)
}
