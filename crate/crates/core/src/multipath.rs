//! Three-path counting: trace a central row, split the ear along it, trace
//! one row in each half and average the three counts.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::model::{Kernel, Point};
use crate::row::{count_kpr_single, RowPath};

/// Kernels closer than this to the polyline (in x) count as on the line.
pub const ON_LINE_EPS: f64 = 1e-9;

/// Piecewise-linear curve through the central row, extended vertically to
/// the top (y = 0) and bottom (y = image height) of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralPolyline {
    vertices: Vec<Point>,
}

impl CentralPolyline {
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn max_height(&self) -> f64 {
        self.vertices.last().map_or(0.0, |v| v.y)
    }
}

/// Polyline through the centers of `path`, top to bottom, with vertical
/// extensions from the topmost center to y = 0 and from the bottommost to
/// y = `image_height`. Vertices whose y does not exceed the previous one are
/// skipped so y stays strictly increasing.
pub fn central_polyline(path: &RowPath, kernels: &[Kernel], image_height: f64) -> Result<CentralPolyline> {
    let mut centers: Vec<Point> = path
        .node_ids
        .iter()
        .filter_map(|id| kernels.iter().find(|k| k.id == *id))
        .map(|k| k.center)
        .collect();
    if centers.len() < 2 {
        return Err(Error::TooFewKernels {
            needed: 2,
            got: centers.len(),
        });
    }
    centers.sort_by(|a, b| a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x)));
    let top = centers[0];
    let bottom = centers[centers.len() - 1];

    let mut vertices = vec![Point::new(top.x, 0.0)];
    for p in centers.into_iter().chain([Point::new(bottom.x, image_height)]) {
        if p.y > vertices.last().expect("non-empty").y {
            vertices.push(p);
        }
    }
    Ok(CentralPolyline { vertices })
}

/// x of the polyline at height `y`, by linear interpolation.
pub fn polyline_x_at(line: &CentralPolyline, y: f64) -> Result<f64> {
    let v = &line.vertices;
    let max = line.max_height();
    if !(0.0..=max).contains(&y) || v.len() < 2 {
        return Err(Error::OutOfRange { y, max });
    }
    let seg = v.partition_point(|p| p.y < y).clamp(1, v.len() - 1);
    let (a, b) = (v[seg - 1], v[seg]);
    let t = (y - a.y) / (b.y - a.y);
    Ok(a.x + t * (b.x - a.x))
}

/// Partition of an ear's kernels around the central polyline.
#[derive(Debug, Clone, Default)]
pub struct Split {
    pub left: Vec<Kernel>,
    pub right: Vec<Kernel>,
    /// Path kernels and kernels lying exactly on the line.
    pub on_line: Vec<Kernel>,
}

/// Assign every kernel not on `path` to the left or right half.
pub fn split_kernels(kernels: &[Kernel], path: &RowPath, line: &CentralPolyline) -> Split {
    let on_path: HashSet<usize> = path.node_ids.iter().copied().collect();
    let max = line.max_height();
    let mut split = Split::default();
    for k in kernels {
        if on_path.contains(&k.id) {
            split.on_line.push(k.clone());
            continue;
        }
        let y = k.center.y.clamp(0.0, max);
        let x_line = polyline_x_at(line, y).expect("y clamped into range");
        let dx = k.center.x - x_line;
        if dx.abs() <= ON_LINE_EPS {
            split.on_line.push(k.clone());
        } else if dx > 0.0 {
            split.right.push(k.clone());
        } else {
            split.left.push(k.clone());
        }
    }
    split
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// Why a result fell back to the central path alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KprFlag {
    HalfTooSparse(Side),
    HalfNoPath(Side),
}

impl fmt::Display for KprFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KprFlag::HalfTooSparse(s) => write!(f, "HalfTooSparse({s})"),
            KprFlag::HalfNoPath(s) => write!(f, "HalfNoPath({s})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KprResult {
    pub center: RowPath,
    pub left: Option<RowPath>,
    pub right: Option<RowPath>,
    pub kpr_mean: f64,
    pub kpr_rounded: u32,
    pub flags: Vec<KprFlag>,
}

impl KprResult {
    /// True when the half paths were unusable and only the center counts.
    pub fn degraded(&self) -> bool {
        !self.flags.is_empty()
    }
}

fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor() as u32
}

fn half_path(kernels: &[Kernel], side: Side, cfg: &GraphConfig) -> std::result::Result<RowPath, KprFlag> {
    match count_kpr_single(kernels, cfg) {
        Ok(p) => Ok(p),
        Err(Error::TooFewKernels { .. }) => Err(KprFlag::HalfTooSparse(side)),
        Err(_) => Err(KprFlag::HalfNoPath(side)),
    }
}

/// Count kernels-per-row from three paths: the central row and one row in
/// each half. When either half cannot be traced the result carries a flag
/// and uses the central count alone.
pub fn three_path_kpr(kernels: &[Kernel], image_height: f64, cfg: &GraphConfig) -> Result<KprResult> {
    let center = count_kpr_single(kernels, cfg)?;
    let line = central_polyline(&center, kernels, image_height)?;
    let split = split_kernels(kernels, &center, &line);

    let left = half_path(&split.left, Side::Left, cfg);
    let right = half_path(&split.right, Side::Right, cfg);
    Ok(match (left, right) {
        (Ok(l), Ok(r)) => {
            let mean = (center.mature_count + l.mature_count + r.mature_count) as f64 / 3.0;
            KprResult {
                center,
                left: Some(l),
                right: Some(r),
                kpr_mean: mean,
                kpr_rounded: round_half_up(mean),
                flags: Vec::new(),
            }
        }
        (l, r) => {
            let flags = [l.err(), r.err()].into_iter().flatten().collect();
            let mean = center.mature_count as f64;
            KprResult {
                center,
                left: None,
                right: None,
                kpr_mean: mean,
                kpr_rounded: round_half_up(mean),
                flags,
            }
        }
    })
}
