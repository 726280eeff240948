//! Brute-force oracles and generators shared by the integration suites.
#![allow(dead_code)]

use kernelrow::graph::WeightedGraph;
use kernelrow::model::{BBox, MaskCandidate};
use kernelrow::rle::rle_encode;
use kernelrow::BinaryMask;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on 2..=12 nodes: a random spanning tree plus extra edges.
/// Integer weights in 1..=6 make equal-cost paths common.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, integer_weights: bool) -> WeightedGraph {
    let n = rng.random_range(2..=12);
    let mut g = WeightedGraph::new(n);
    let weight = |rng: &mut ChaCha8Rng| {
        if integer_weights {
            rng.random_range(1..=6) as f64
        } else {
            rng.random_range(0.1..10.0)
        }
    };
    for v in 1..n {
        let u = rng.random_range(0..v);
        let w = weight(rng);
        g.set_edge(u, v, w);
    }
    let extra = rng.random_range(0..=n * (n - 1) / 2);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && g.weight(a, b).is_none() {
            let w = weight(rng);
            g.set_edge(a, b, w);
        }
    }
    g
}

/// Every simple path from `start` to `end`, with its length.
pub fn all_simple_paths(g: &WeightedGraph, start: usize, end: usize) -> Vec<(Vec<usize>, f64)> {
    fn walk(
        g: &WeightedGraph,
        end: usize,
        path: &mut Vec<usize>,
        seen: &mut [bool],
        len: f64,
        out: &mut Vec<(Vec<usize>, f64)>,
    ) {
        let at = *path.last().unwrap();
        if at == end {
            out.push((path.clone(), len));
            return;
        }
        for v in 0..g.node_count() {
            if let Some(w) = g.weight(at, v) {
                if !seen[v] {
                    seen[v] = true;
                    path.push(v);
                    walk(g, end, path, seen, len + w, out);
                    path.pop();
                    seen[v] = false;
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; g.node_count()];
    seen[start] = true;
    walk(g, end, &mut vec![start], &mut seen, 0.0, &mut out);
    out
}

/// Minimum length and, among paths of that length, the lexicographically
/// smallest node sequence.
pub fn brute_force_shortest(g: &WeightedGraph, start: usize, end: usize) -> Option<(Vec<usize>, f64)> {
    let paths = all_simple_paths(g, start, end);
    let best = paths.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * best.max(1.0);
    paths
        .into_iter()
        .filter(|p| (p.1 - best).abs() <= tol)
        .min_by(|a, b| a.0.cmp(&b.0))
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: u32, h: u32, density: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.random_bool(density))
}

/// Candidate built from an axis-aligned filled rectangle.
pub fn rect_candidate(id: &str, frame: (u32, u32), rect: BBox, quality: f64, stability: f64) -> MaskCandidate {
    let mask = BinaryMask::from_fn(frame.0, frame.1, |x, y| {
        x >= rect.x && x < rect.right() && y >= rect.y && y < rect.bottom()
    });
    MaskCandidate {
        id: id.to_owned(),
        rle: rle_encode(&mask),
        width: frame.0,
        height: frame.1,
        bbox: rect,
        area: rect.w as u64 * rect.h as u64,
        quality_score: quality,
        stability_score: stability,
    }
}

/// A random candidate set: rectangles of widely varying size and overlap
/// with scores spread around the default threshold.
pub fn random_candidates(rng: &mut ChaCha8Rng, n: usize) -> Vec<MaskCandidate> {
    let frame = (160, 160);
    (0..n)
        .map(|i| {
            let w = rng.random_range(10..=120);
            let h = rng.random_range(10..=120);
            let x = rng.random_range(0..=frame.0 - w);
            let y = rng.random_range(0..=frame.1 - h);
            let q = rng.random_range(0.8..1.0);
            let s = rng.random_range(0.8..1.0);
            rect_candidate(&format!("c{i:03}"), frame, BBox::new(x, y, w, h), q, s)
        })
        .collect()
}

/// Pixel-enumeration IoU between two candidates' rectangles.
pub fn rect_iou(a: &BBox, b: &BBox) -> f64 {
    let mut inter = 0u64;
    for y in a.y..a.bottom() {
        for x in a.x..a.right() {
            if b.contains_point(kernelrow::Point::new(x as f64 + 0.5, y as f64 + 0.5)) {
                inter += 1;
            }
        }
    }
    let union = a.w as u64 * a.h as u64 + b.w as u64 * b.h as u64 - inter;
    inter as f64 / union as f64
}
