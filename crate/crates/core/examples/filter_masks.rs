//! Reduce raw mask candidates to kernels: area window, score threshold and
//! overlap removal. Pass a `.masks.json` contract to filter real output.

use kernelrow::contract::MaskContract;
use kernelrow::filter::{filter_masks, FilterConfig};
use kernelrow::synth::{generate_ear, SyntheticEarSpec};

fn main() -> kernelrow::Result<()> {
    let contract = match std::env::args().nth(1) {
        Some(path) => MaskContract::load(path.as_ref())?,
        None => {
            // merged pairs and low-score duplicates are what the filter removes
            let spec = SyntheticEarSpec {
                rows: 6,
                kernels_per_row: 12,
                merged_pairs: 5,
                low_score_masks: 8,
                ..Default::default()
            };
            generate_ear(&spec)?.to_contract("demo")
        }
    };
    let (candidates, rejected) = contract.ingest();
    let kernels = filter_masks(&candidates, &FilterConfig::default())?;
    println!(
        "{} candidates ({} rejected at load) -> {} kernels",
        candidates.len(),
        rejected.len(),
        kernels.len()
    );
    for k in kernels.iter().take(5) {
        println!("  kernel {} from {}: center ({:.1}, {:.1}), {} px", k.id, k.candidate_id, k.center.x, k.center.y, k.area);
    }
    Ok(())
}
