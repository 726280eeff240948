//! Neighbor graph over kernel centers and shortest-path search.
//!
//! Each center keeps its `k` nearest neighbors; a neighbor is then dropped
//! when it lies in nearly the same direction as a closer one (the two are in
//! the same row, so only the nearer one is a true neighbor). Surviving
//! relations become symmetric edges weighted by Euclidean distance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Kernel, Point};

/// How immature kernels on a traced row are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImmatureRule {
    /// Only the run of under-sized kernels starting at the top of the row.
    #[default]
    Prefix,
    /// Every under-sized kernel on the row.
    Anywhere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub k: usize,
    pub angle_min_deg: f64,
    pub mature_min_px: u64,
    pub immature_rule: ImmatureRule,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            k: 5,
            angle_min_deg: 20.0,
            mature_min_px: 2000,
            immature_rule: ImmatureRule::Prefix,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("graph: k must be at least 1".into()));
        }
        if !(0.0..=180.0).contains(&self.angle_min_deg) {
            return Err(Error::InvalidConfig(format!(
                "graph: angle_min_deg {} outside [0, 180]",
                self.angle_min_deg
            )));
        }
        Ok(())
    }
}

/// Undirected graph with positive edge weights. Adjacency lists are kept
/// sorted by neighbor index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Insert or overwrite the edge `i - j`.
    ///
    /// # Panics
    /// On self-loops and non-positive or non-finite weights.
    pub fn set_edge(&mut self, i: usize, j: usize, weight: f64) {
        assert!(i != j, "self-edge on node {i}");
        assert!(weight > 0.0 && weight.is_finite(), "edge weight {weight}");
        for (a, b) in [(i, j), (j, i)] {
            let list = &mut self.adj[a];
            match list.binary_search_by_key(&b, |&(n, _)| n) {
                Ok(pos) => list[pos].1 = weight,
                Err(pos) => list.insert(pos, (b, weight)),
            }
        }
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let list = &self.adj[i];
        list.binary_search_by_key(&j, |&(n, _)| n)
            .ok()
            .map(|pos| list[pos].1)
    }

    /// Edges as `(i, j, weight)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, list)| {
            list.iter()
                .filter(move |&&(j, _)| i < j)
                .map(move |&(j, w)| (i, j, w))
        })
    }
}

/// Kernels plus the refined neighbor graph over their centers. Node `i` of
/// `graph` is `nodes[i]`.
#[derive(Debug, Clone)]
pub struct EarGraph {
    pub nodes: Vec<Kernel>,
    pub graph: WeightedGraph,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: usize,
    pub distance: f64,
}

/// The `k` nearest other centers of every center, nearest first, distance
/// ties broken by index. Coincident centers are not neighbors of each other.
pub fn knn_neighbors(centers: &[Point], k: usize) -> Result<Vec<Vec<Neighbor>>> {
    if centers.len() < 2 {
        return Err(Error::TooFewKernels {
            needed: 2,
            got: centers.len(),
        });
    }
    let mut out = Vec::with_capacity(centers.len());
    let mut scratch: Vec<Neighbor> = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        scratch.clear();
        scratch.extend(
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, p)| Neighbor {
                    id: j,
                    distance: c.distance(p),
                })
                .filter(|n| n.distance > 0.0),
        );
        let by_distance = |a: &Neighbor, b: &Neighbor| {
            a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id))
        };
        if scratch.len() > k {
            scratch.select_nth_unstable_by(k, by_distance);
            scratch.truncate(k);
        }
        scratch.sort_by(by_distance);
        out.push(scratch.clone());
    }
    Ok(out)
}

/// Angle in degrees between the vectors `origin -> a` and `origin -> b`.
pub fn angle_between(origin: Point, a: Point, b: Point) -> f64 {
    let (ax, ay) = (a.x - origin.x, a.y - origin.y);
    let (bx, by) = (b.x - origin.x, b.y - origin.y);
    let cross = ax * by - ay * bx;
    let dot = ax * bx + ay * by;
    cross.abs().atan2(dot).to_degrees()
}

/// Drop neighbors that are nearly collinear with a closer one.
///
/// Pairs are visited in ascending order of combined distance; when the
/// angle at `origin` is below `angle_min_deg` the farther of the two is
/// removed, and pairs involving removed neighbors are skipped. All pairs
/// left in the result are at least `angle_min_deg` apart. The result keeps
/// the input order.
pub fn refine_by_angle(
    origin: Point,
    neighbors: &[Neighbor],
    centers: &[Point],
    angle_min_deg: f64,
) -> Vec<Neighbor> {
    let n = neighbors.len();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    pairs.sort_by(|&(a1, b1), &(a2, b2)| {
        let s1 = neighbors[a1].distance + neighbors[b1].distance;
        let s2 = neighbors[a2].distance + neighbors[b2].distance;
        s1.total_cmp(&s2).then((a1, b1).cmp(&(a2, b2)))
    });
    let mut removed = vec![false; n];
    for (a, b) in pairs {
        if removed[a] || removed[b] {
            continue;
        }
        let (na, nb) = (neighbors[a], neighbors[b]);
        if angle_between(origin, centers[na.id], centers[nb.id]) < angle_min_deg {
            // on equal distance the later-ranked neighbor goes
            let farther = if nb.distance >= na.distance { b } else { a };
            removed[farther] = true;
        }
    }
    neighbors
        .iter()
        .zip(removed)
        .filter(|(_, r)| !r)
        .map(|(n, _)| *n)
        .collect()
}

/// Build the refined, symmetric neighbor graph. The graph may be disconnected.
pub fn build_adjacency(kernels: &[Kernel], cfg: &GraphConfig) -> Result<EarGraph> {
    let centers: Vec<Point> = kernels.iter().map(|k| k.center).collect();
    let knn = knn_neighbors(&centers, cfg.k)?;
    let mut graph = WeightedGraph::new(centers.len());
    for (i, list) in knn.iter().enumerate() {
        for n in refine_by_angle(centers[i], list, &centers, cfg.angle_min_deg) {
            graph.set_edge(i, n.id, n.distance);
        }
    }
    Ok(EarGraph {
        nodes: kernels.to_vec(),
        graph,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPath {
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then on node index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn distances_from(graph: &WeightedGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in graph.neighbors(node) {
            let nd = d + w;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Entry { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Minimum-length path from `start` to `end`.
///
/// Among paths of equal length (within a relative 1e-9) the lexicographically
/// smallest node sequence is returned: distances are computed from both ends,
/// then the path is walked from `start`, always stepping to the smallest
/// neighbor that stays on some shortest path.
pub fn dijkstra(graph: &WeightedGraph, start: usize, end: usize) -> Result<ShortestPath> {
    let n = graph.node_count();
    if start >= n || end >= n {
        return Err(Error::NoPath { start, end });
    }
    if start == end {
        return Ok(ShortestPath {
            nodes: vec![start],
            length: 0.0,
        });
    }
    let from_start = distances_from(graph, start);
    let total = from_start[end];
    if !total.is_finite() {
        return Err(Error::NoPath { start, end });
    }
    let to_end = distances_from(graph, end);
    let tol = 1e-9 * total.max(1.0);

    let mut nodes = vec![start];
    let mut current = start;
    while current != end {
        let next = graph
            .neighbors(current)
            .iter()
            .find(|&&(v, w)| {
                (from_start[current] + w + to_end[v] - total).abs() <= tol
                    && from_start[v] > from_start[current]
            })
            .map(|&(v, _)| v)
            .expect("a shortest-path successor always exists");
        nodes.push(next);
        current = next;
    }
    Ok(ShortestPath {
        nodes,
        length: total,
    })
}
