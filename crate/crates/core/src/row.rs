//! Single-row tracing: endpoints, shortest path and immature-tip filtering.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_adjacency, dijkstra, GraphConfig, ImmatureRule};
use crate::model::Kernel;

/// A traced row of kernels, ordered from the start (bottom) to the end (top).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowPath {
    /// `Kernel::id` of every kernel on the path.
    pub node_ids: Vec<usize>,
    pub raw_count: usize,
    pub immature_count: usize,
    pub mature_count: usize,
    pub total_length: f64,
}

impl RowPath {
    pub fn new(node_ids: Vec<usize>, total_length: f64) -> Self {
        let raw_count = node_ids.len();
        Self {
            node_ids,
            raw_count,
            immature_count: 0,
            mature_count: raw_count,
            total_length,
        }
    }
}

/// Positions (into `kernels`) of the second bottom-most and second top-most
/// kernel. Image y grows downward, so the bottom of the ear has the largest
/// y. Ties on y are broken by x, then by id.
pub fn select_endpoints(kernels: &[Kernel]) -> Result<(usize, usize)> {
    if kernels.len() < 4 {
        return Err(Error::TooFewKernels {
            needed: 4,
            got: kernels.len(),
        });
    }
    let mut order: Vec<usize> = (0..kernels.len()).collect();
    order.sort_by(|&a, &b| {
        let (ka, kb) = (&kernels[a], &kernels[b]);
        kb.center
            .y
            .total_cmp(&ka.center.y)
            .then(ka.center.x.total_cmp(&kb.center.x))
            .then(ka.id.cmp(&kb.id))
    });
    Ok((order[1], order[order.len() - 2]))
}

/// Count immature kernels on `path`, walking from its top end downward.
///
/// With [`ImmatureRule::Prefix`] the walk stops at the first kernel of at
/// least `mature_min` pixels; with [`ImmatureRule::Anywhere`] every
/// under-sized kernel on the path counts.
pub fn filter_immature(
    mut path: RowPath,
    kernels: &[Kernel],
    mature_min: u64,
    rule: ImmatureRule,
) -> RowPath {
    let area: HashMap<usize, u64> = kernels.iter().map(|k| (k.id, k.area)).collect();
    let small = |id: &usize| area.get(id).is_some_and(|&a| a < mature_min);
    let top_down = path.node_ids.iter().rev();
    path.immature_count = match rule {
        ImmatureRule::Prefix => top_down.take_while(|id| small(id)).count(),
        ImmatureRule::Anywhere => top_down.filter(|id| small(id)).count(),
    };
    path.mature_count = path.raw_count - path.immature_count;
    path
}

/// Trace one row across the ear: graph, endpoints, shortest path, then the
/// immature-tip correction.
pub fn count_kpr_single(kernels: &[Kernel], cfg: &GraphConfig) -> Result<RowPath> {
    let (start, end) = select_endpoints(kernels)?;
    let ear = build_adjacency(kernels, cfg)?;
    let sp = dijkstra(&ear.graph, start, end)?;
    let ids = sp.nodes.iter().map(|&i| kernels[i].id).collect();
    Ok(filter_immature(
        RowPath::new(ids, sp.length),
        kernels,
        cfg.mature_min_px,
        cfg.immature_rule,
    ))
}
