//! Build the angle-refined neighbor graph over kernel centers and trace a
//! single row with Dijkstra, discounting immature tip kernels.

use kernelrow::filter::{filter_masks, FilterConfig};
use kernelrow::graph::{build_adjacency, GraphConfig};
use kernelrow::row::{count_kpr_single, select_endpoints};
use kernelrow::synth::{generate_ear, SyntheticEarSpec};

fn main() -> kernelrow::Result<()> {
    let spec = SyntheticEarSpec {
        rows: 12,
        kernels_per_row: 30,
        immature_tip: 3,
        jitter_px: 6.0,
        seed: 1,
        ..Default::default()
    };
    let ear = generate_ear(&spec)?;
    let kernels = filter_masks(&ear.candidates, &FilterConfig::default())?;
    let cfg = GraphConfig::default();

    let graph = build_adjacency(&kernels, &cfg)?;
    let (start, end) = select_endpoints(&kernels)?;
    println!(
        "{} kernels, {} edges; tracing from kernel {} to kernel {}",
        kernels.len(),
        graph.graph.edge_count(),
        kernels[start].id,
        kernels[end].id
    );

    let row = count_kpr_single(&kernels, &cfg)?;
    println!(
        "path of {} kernels ({:.0} px), {} immature at the tip -> {} mature (truth {})",
        row.raw_count, row.total_length, row.immature_count, row.mature_count, ear.truth_kpr
    );
    Ok(())
}
