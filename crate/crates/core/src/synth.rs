//! Synthetic ears with known kernels-per-row, used as a ground-truth oracle.
//!
//! An ear is a lattice of filled elliptical kernel masks: `rows` vertical
//! kernel rows side by side, `col_spacing` apart, each holding
//! `kernels_per_row` kernels `row_spacing` apart (image y grows downward, the
//! tip is at the top). Rows are stretched a little more the closer they sit to
//! the middle of the ear, which rounds off both ends the way a real ear's
//! silhouette does, and makes the lowest and highest kernels unique. The
//! stretch peaks slightly off-center so no two rows are stretched equally.
//!
//! The top `immature_tip` kernels of every row are rendered with about 1500
//! px of area: large enough to pass the default area window, small enough to
//! count as immature. Mature kernels must fall inside
//! `[2000, 10000]` px.
//!
//! Randomness comes from ChaCha8 seeded with [`SyntheticEarSpec::seed`]
//! (`rand_chacha::ChaCha8Rng::seed_from_u64`); jitter is a normal deviate
//! truncated at three standard deviations.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contract::{ImageInfo, MaskContract};
use crate::error::{Error, Result};
use crate::model::{BBox, MaskCandidate, Point, RgbImage};
use crate::rle::rle_from_intervals;

/// Target area of an immature tip kernel, in pixels.
pub const IMMATURE_AREA: f64 = 1500.0;
/// Mature kernels must render inside this area window.
pub const MATURE_AREA: (f64, f64) = (2000.0, 10_000.0);
/// Largest IoU allowed between any two generated kernels.
pub const MAX_KERNEL_IOU: f64 = 0.4;
/// Offset of the stretch peak from the middle row, in row indices.
const STRETCH_PEAK_OFFSET: f64 = 0.3;
const MAX_PLACEMENT_TRIES: usize = 200;

fn default_end_rounding() -> f64 {
    0.12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEarSpec {
    /// Ear id used for output files; empty means "assign one".
    #[serde(default)]
    pub ear_id: String,
    /// Number of kernel rows side by side.
    pub rows: u32,
    pub kernels_per_row: u32,
    pub kernel_rx: f64,
    pub kernel_ry: f64,
    /// Vertical distance between consecutive kernels of a row.
    pub row_spacing: f64,
    /// Horizontal distance between adjacent rows.
    pub col_spacing: f64,
    /// Standard deviation of the per-kernel center perturbation.
    #[serde(default)]
    pub jitter_px: f64,
    #[serde(default)]
    pub immature_tip: u32,
    /// Lateral bow amplitude shared by all rows.
    #[serde(default)]
    pub curvature: f64,
    #[serde(default)]
    pub seed: u64,
    /// Extra vertical stretch of the middle row relative to the outer rows.
    #[serde(default = "default_end_rounding")]
    pub end_rounding: f64,
    /// Masks spanning two vertically adjacent kernels.
    #[serde(default)]
    pub merged_pairs: u32,
    /// Duplicate kernel masks with scores below the default threshold.
    #[serde(default)]
    pub low_score_masks: u32,
}

impl Default for SyntheticEarSpec {
    fn default() -> Self {
        Self {
            ear_id: String::new(),
            rows: 14,
            kernels_per_row: 30,
            kernel_rx: 32.0,
            kernel_ry: 26.0,
            row_spacing: 58.0,
            col_spacing: 70.0,
            jitter_px: 0.0,
            immature_tip: 0,
            curvature: 0.0,
            seed: 0,
            end_rounding: default_end_rounding(),
            merged_pairs: 0,
            low_score_masks: 0,
        }
    }
}

impl SyntheticEarSpec {
    pub fn mature_per_row(&self) -> u32 {
        self.kernels_per_row - self.immature_tip
    }

    fn immature_scale(&self) -> f64 {
        (IMMATURE_AREA / (PI * self.kernel_rx * self.kernel_ry)).sqrt().min(0.9)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInfeasible(m));
        if self.rows == 0 || self.kernels_per_row == 0 {
            return bad("rows and kernels_per_row must be at least 1".into());
        }
        if self.immature_tip >= self.kernels_per_row {
            return bad(format!(
                "immature_tip {} leaves no mature kernels in a row of {}",
                self.immature_tip, self.kernels_per_row
            ));
        }
        let finite_pos = [self.kernel_rx, self.kernel_ry, self.row_spacing, self.col_spacing];
        if finite_pos.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("radii and spacings must be positive".into());
        }
        if !(self.jitter_px.is_finite() && self.jitter_px >= 0.0) || !self.curvature.is_finite() {
            return bad("jitter_px must be >= 0 and curvature finite".into());
        }
        if !(0.0..=1.0).contains(&self.end_rounding) {
            return bad(format!("end_rounding {} outside [0, 1]", self.end_rounding));
        }
        let area = PI * self.kernel_rx * self.kernel_ry;
        // allow for rasterization error around the analytic area
        let slack = 2.0 * (self.kernel_rx + self.kernel_ry) + 4.0;
        if area - slack < MATURE_AREA.0 || area + slack > MATURE_AREA.1 {
            return bad(format!(
                "kernel area {area:.0} px is not safely inside [{}, {}]",
                MATURE_AREA.0, MATURE_AREA.1
            ));
        }
        if self.merged_pairs > 0 && self.kernels_per_row < 2 {
            return bad("merged pairs need at least two kernels per row".into());
        }
        // the jitter-free lattice must already respect the overlap bound
        let probe = |dx: f64, dy: f64| {
            let a = Blob::ellipse(Point::new(500.5, 500.5), self.kernel_rx, self.kernel_ry);
            let b = Blob::ellipse(Point::new(500.5 + dx, 500.5 + dy), self.kernel_rx, self.kernel_ry);
            a.iou(&b)
        };
        let worst = probe(self.col_spacing, 0.0).max(probe(0.0, self.row_spacing));
        if worst > MAX_KERNEL_IOU {
            return bad(format!("lattice neighbors overlap with IoU {worst:.2}"));
        }
        Ok(())
    }
}

/// Filled shape stored as one vertical pixel span per column.
#[derive(Debug, Clone, PartialEq)]
struct Blob {
    /// `(x, y_start, y_end)` with `y_end` exclusive, ascending in x.
    spans: Vec<(u32, u32, u32)>,
}

impl Blob {
    /// Pixels whose centers fall inside the ellipse.
    fn ellipse(center: Point, rx: f64, ry: f64) -> Self {
        let x_lo = (center.x - rx - 0.5).floor().max(0.0) as u32;
        let x_hi = (center.x + rx + 0.5).ceil().max(0.0) as u32;
        let mut spans = Vec::new();
        for x in x_lo..=x_hi {
            let u = (x as f64 + 0.5 - center.x) / rx;
            if u.abs() > 1.0 {
                continue;
            }
            let dy = ry * (1.0 - u * u).sqrt();
            let y0 = (center.y - dy - 0.5).ceil().max(0.0);
            let y1 = (center.y + dy - 0.5).floor();
            if y1 >= y0 {
                spans.push((x, y0 as u32, y1 as u32 + 1));
            }
        }
        Self { spans }
    }

    fn area(&self) -> u64 {
        self.spans.iter().map(|&(_, a, b)| (b - a) as u64).sum()
    }

    fn bbox(&self) -> BBox {
        let x0 = self.spans.first().map_or(0, |s| s.0);
        let x1 = self.spans.last().map_or(0, |s| s.0 + 1);
        let y0 = self.spans.iter().map(|s| s.1).min().unwrap_or(0);
        let y1 = self.spans.iter().map(|s| s.2).max().unwrap_or(0);
        BBox::new(x0, y0, x1 - x0, y1 - y0)
    }

    fn intersection(&self, other: &Blob) -> u64 {
        let (mut i, mut j, mut n) = (0, 0, 0u64);
        while i < self.spans.len() && j < other.spans.len() {
            let (xa, a0, a1) = self.spans[i];
            let (xb, b0, b1) = other.spans[j];
            match xa.cmp(&xb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += a1.min(b1).saturating_sub(a0.max(b0)) as u64;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    fn iou(&self, other: &Blob) -> f64 {
        let inter = self.intersection(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Union of two blobs. Only overlapping or touching spans are joined, so
    /// a column may hold two spans.
    fn union(&self, other: &Blob) -> Blob {
        let mut all: Vec<_> = self.spans.iter().chain(&other.spans).copied().collect();
        all.sort();
        let mut spans: Vec<(u32, u32, u32)> = Vec::new();
        for s in all {
            match spans.last_mut() {
                Some(last) if last.0 == s.0 && s.1 <= last.2 => last.2 = last.2.max(s.2),
                _ => spans.push(s),
            }
        }
        Blob { spans }
    }

    fn candidate(&self, id: String, width: u32, height: u32, quality: f64, stability: f64) -> MaskCandidate {
        let h = height as u64;
        let rle = rle_from_intervals(
            width as u64 * h,
            self.spans
                .iter()
                .map(|&(x, a, b)| (x as u64 * h + a as u64, x as u64 * h + b as u64)),
        );
        MaskCandidate {
            id,
            rle,
            width,
            height,
            bbox: self.bbox(),
            area: self.area(),
            quality_score: quality,
            stability_score: stability,
        }
    }
}

/// A generated ear together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticEar {
    pub spec: SyntheticEarSpec,
    pub width: u32,
    pub height: u32,
    pub candidates: Vec<MaskCandidate>,
    /// Mature kernels per row: `kernels_per_row - immature_tip`.
    pub truth_kpr: u32,
    /// Rendered kernel centers, row by row from the left, bottom to top.
    pub truth_centers: Vec<Point>,
    blobs: Vec<Blob>,
}

impl SyntheticEar {
    pub fn to_contract(&self, ear_id: &str) -> MaskContract {
        let mut c = MaskContract::new(
            ear_id,
            ImageInfo {
                file: format!("{ear_id}.png"),
                width: self.width,
                height: self.height,
            },
            self.candidates.clone(),
        );
        c.producer.insert("generator".into(), "synthetic-ear".into());
        c.producer.insert("seed".into(), self.spec.seed.into());
        c
    }

    /// Kernel masks drawn on a dark background.
    pub fn render(&self) -> RgbImage {
        let mut img = RgbImage::filled(self.width, self.height, [12, 10, 8]).expect("non-empty ear");
        for (i, blob) in self.blobs.iter().enumerate() {
            let shade = 200 + (i % 5) as u8 * 10;
            for &(x, y0, y1) in &blob.spans {
                for y in y0..y1.min(self.height) {
                    if x < self.width {
                        img.put(x, y, [shade, shade - 40, 50]);
                    }
                }
            }
        }
        img
    }
}

fn truncated_normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    loop {
        let v: f64 = normal.sample(rng);
        if v.abs() <= 3.0 * sigma {
            return v;
        }
    }
}

/// Render the kernel masks of one ear.
pub fn generate_ear(spec: &SyntheticEarSpec) -> Result<SyntheticEar> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rows = spec.rows as usize;
    let kpr = spec.kernels_per_row as usize;

    let peak = (rows as f64 - 1.0) / 2.0 + STRETCH_PEAK_OFFSET;
    let reach = (0..rows).map(|c| (c as f64 - peak).abs()).fold(0.0, f64::max) + 1.0;
    let stretch: Vec<f64> = (0..rows)
        .map(|c| 1.0 + spec.end_rounding * (1.0 - (c as f64 - peak).abs() / reach))
        .collect();

    let jitter_bound = 3.0 * spec.jitter_px;
    let half_span = (kpr as f64 - 1.0) / 2.0 * spec.row_spacing * (1.0 + spec.end_rounding);
    let margin_x = spec.kernel_rx + spec.curvature.abs() + jitter_bound + 8.0;
    let margin_y = spec.kernel_ry + jitter_bound + 8.0;
    let width = (2.0 * margin_x + (rows as f64 - 1.0) * spec.col_spacing).ceil() as u32;
    let height = (2.0 * margin_y + 2.0 * half_span).ceil() as u32;
    let mid_y = height as f64 / 2.0;

    let imm_scale = spec.immature_scale();
    let reach_px = 2.0 * spec.kernel_rx.max(spec.kernel_ry) + 2.0 * jitter_bound;
    let nbhd = (reach_px / spec.row_spacing.min(spec.col_spacing)).ceil() as usize + 1;

    // blobs indexed [row][level], level 0 at the bottom
    let mut grid: Vec<Vec<Blob>> = Vec::with_capacity(rows);
    let mut centers = Vec::with_capacity(rows * kpr);
    for c in 0..rows {
        let mut column = Vec::with_capacity(kpr);
        for l in 0..kpr {
            let t = if kpr > 1 { l as f64 / (kpr as f64 - 1.0) } else { 0.0 };
            let base_x = margin_x + c as f64 * spec.col_spacing + spec.curvature * (PI * t).sin();
            let base_y = mid_y + ((kpr as f64 - 1.0) / 2.0 - l as f64) * spec.row_spacing * stretch[c];
            let immature = l >= kpr - spec.immature_tip as usize;
            let scale = if immature { imm_scale } else { 1.0 };
            let (rx, ry) = (spec.kernel_rx * scale, spec.kernel_ry * scale);

            let mut placed = None;
            for _ in 0..MAX_PLACEMENT_TRIES {
                let dx = truncated_normal(&mut rng, spec.jitter_px);
                let dy = truncated_normal(&mut rng, spec.jitter_px);
                let center = if spec.jitter_px == 0.0 {
                    // pixel-centered so bbox centers are exact
                    Point::new(base_x.floor() + 0.5, base_y.floor() + 0.5)
                } else {
                    Point::new(base_x + dx, base_y + dy)
                };
                let blob = Blob::ellipse(center, rx, ry);
                let lo = l.saturating_sub(nbhd);
                let near = |others: &[Blob]| {
                    let hi = (l + nbhd + 1).min(others.len());
                    others.get(lo..hi).unwrap_or(&[]).iter().any(|o| o.iou(&blob) > MAX_KERNEL_IOU)
                };
                let clash = near(&column) || grid[c.saturating_sub(nbhd)..].iter().any(|col| near(col));
                if !clash {
                    placed = Some((center, blob));
                    break;
                }
            }
            let (center, blob) = placed.ok_or_else(|| {
                Error::SpecInfeasible(format!("could not place kernel ({c}, {l}) without overlap"))
            })?;
            centers.push(center);
            column.push(blob);
        }
        grid.push(column);
    }

    let mut candidates = Vec::with_capacity(rows * kpr);
    let score = |rng: &mut ChaCha8Rng| rng.random_range(0.94..1.0);
    for (c, column) in grid.iter().enumerate() {
        for (l, blob) in column.iter().enumerate() {
            let (q, s) = (score(&mut rng), score(&mut rng));
            candidates.push(blob.candidate(format!("k{c:03}_{l:03}"), width, height, q, s));
        }
    }
    for i in 0..spec.merged_pairs {
        let c = rng.random_range(0..rows);
        let mature = kpr - spec.immature_tip as usize;
        let l = rng.random_range(0..mature.max(2) - 1);
        let merged = grid[c][l].union(&grid[c][l + 1]);
        let (q, s) = (score(&mut rng), score(&mut rng));
        candidates.push(merged.candidate(format!("m{i:03}"), width, height, q, s));
    }
    for i in 0..spec.low_score_masks {
        let c = rng.random_range(0..rows);
        let l = rng.random_range(0..kpr);
        let (q, s) = (rng.random_range(0.5..0.9), rng.random_range(0.5..0.9));
        candidates.push(grid[c][l].candidate(format!("n{i:03}"), width, height, q, s));
    }

    Ok(SyntheticEar {
        spec: spec.clone(),
        width,
        height,
        candidates,
        truth_kpr: spec.mature_per_row(),
        truth_centers: centers,
        blobs: grid.into_iter().flatten().collect(),
    })
}

/// Parameters for a randomized batch of ears.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteParams {
    pub count: usize,
    pub seed: u64,
    pub rows: (u32, u32),
    pub kernels_per_row: (u32, u32),
    /// Jitter standard deviation as a fraction of `col_spacing`.
    pub jitter_fraction: f64,
    pub immature_tip: (u32, u32),
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self {
            count: 200,
            seed: 2024,
            rows: (10, 20),
            kernels_per_row: (20, 45),
            jitter_fraction: 0.0,
            immature_tip: (0, 0),
        }
    }
}

/// Random ear specs drawn uniformly from the (inclusive) ranges of `params`.
pub fn random_suite(params: &SuiteParams) -> Vec<SyntheticEarSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.count)
        .map(|i| {
            let base = SyntheticEarSpec::default();
            SyntheticEarSpec {
                ear_id: format!("synth_{i:04}"),
                rows: rng.random_range(params.rows.0..=params.rows.1),
                kernels_per_row: rng.random_range(params.kernels_per_row.0..=params.kernels_per_row.1),
                jitter_px: params.jitter_fraction * base.col_spacing,
                immature_tip: rng.random_range(params.immature_tip.0..=params.immature_tip.1),
                seed: rng.random(),
                ..base
            }
        })
        .collect()
}

/// Where the ears and tag-like distractors go in a generated scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub width: u32,
    pub height: u32,
    /// One slot per ear; the ear silhouette is the ellipse inscribed in it.
    pub ears: Vec<BBox>,
    /// Bright rectangles standing in for tags and labels.
    #[serde(default)]
    pub tags: Vec<BBox>,
}

impl SceneLayout {
    /// `n` equal ear slots in a row, left to right, with `gap` px around them.
    pub fn row(n: usize, ear_w: u32, ear_h: u32, gap: u32) -> Self {
        let ears = (0..n as u32)
            .map(|i| BBox::new(gap + i * (ear_w + gap), gap, ear_w, ear_h))
            .collect();
        Self {
            width: gap + n as u32 * (ear_w + gap),
            height: ear_h + 2 * gap,
            ears,
            tags: Vec::new(),
        }
    }

    fn check(&self) -> Result<()> {
        let slots: Vec<&BBox> = self.ears.iter().chain(&self.tags).collect();
        for (i, a) in slots.iter().enumerate() {
            if a.w == 0 || a.h == 0 || a.right() > self.width || a.bottom() > self.height {
                return Err(Error::LayoutOverlap(format!("slot {a:?} outside the scene")));
            }
            for b in &slots[i + 1..] {
                // one pixel of clearance keeps 8-connected blobs apart
                let grown = BBox::new(a.x.saturating_sub(1), a.y.saturating_sub(1), a.w + 2, a.h + 2);
                if grown.intersects(b) {
                    return Err(Error::LayoutOverlap(format!("{a:?} touches {b:?}")));
                }
            }
        }
        Ok(())
    }
}

/// What a scene contains: tight boxes of the rendered ears, left to right as
/// laid out, and of the tags.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub ears: Vec<BBox>,
    pub tags: Vec<BBox>,
}

/// Bright ear silhouettes (with a kernel lattice texture) and tags on a dark
/// backdrop.
pub fn generate_scene(ear_specs: &[SyntheticEarSpec], layout: &SceneLayout) -> Result<(RgbImage, SceneTruth)> {
    if ear_specs.len() != layout.ears.len() {
        return Err(Error::LayoutOverlap(format!(
            "{} ear specs for {} slots",
            ear_specs.len(),
            layout.ears.len()
        )));
    }
    layout.check()?;
    let seed = ear_specs.first().map_or(0, |s| s.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce7e);
    let mut img = RgbImage::filled(layout.width, layout.height, [0, 0, 0])?;
    for y in 0..layout.height {
        for x in 0..layout.width {
            let n: u8 = rng.random_range(0..16);
            img.put(x, y, [n, n, n]);
        }
    }

    let mut truth = SceneTruth {
        ears: Vec::new(),
        tags: layout.tags.clone(),
    };
    for (spec, slot) in ear_specs.iter().zip(&layout.ears) {
        let (cx, cy) = (slot.x as f64 + slot.w as f64 / 2.0, slot.y as f64 + slot.h as f64 / 2.0);
        let (rx, ry) = (slot.w as f64 / 2.0, slot.h as f64 / 2.0);
        let cols = spec.rows.max(1) as f64;
        let lev = spec.kernels_per_row.max(1) as f64;
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in slot.y..slot.bottom() {
            for x in slot.x..slot.right() {
                let u = (x as f64 + 0.5 - cx) / rx;
                let v = (y as f64 + 0.5 - cy) / ry;
                if u * u + v * v > 1.0 {
                    continue;
                }
                // kernel lattice: lighter cells, darker seams
                let fx = ((x - slot.x) as f64 / slot.w as f64 * cols).fract();
                let fy = ((y - slot.y) as f64 / slot.h as f64 * lev).fract();
                let seam = fx < 0.15 || fy < 0.15;
                img.put(x, y, if seam { [170, 135, 45] } else { [235, 200, 80] });
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
        if x0 > x1 {
            return Err(Error::LayoutOverlap(format!("ear slot {slot:?} too small to draw")));
        }
        truth.ears.push(BBox::new(x0, y0, x1 - x0 + 1, y1 - y0 + 1));
    }
    for tag in &layout.tags {
        for y in tag.y..tag.bottom() {
            for x in tag.x..tag.right() {
                img.put(x, y, [245, 245, 245]);
            }
        }
    }
    Ok((img, truth))
}
