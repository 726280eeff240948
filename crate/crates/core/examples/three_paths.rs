//! Count a whole ear with the three-path average: the central row plus one
//! row traced in each half.

use kernelrow::filter::{filter_masks, FilterConfig};
use kernelrow::graph::GraphConfig;
use kernelrow::multipath::three_path_kpr;
use kernelrow::synth::{generate_ear, SyntheticEarSpec};

fn main() -> kernelrow::Result<()> {
    for (jitter, curvature) in [(0.0, 0.0), (10.5, 0.0), (10.5, 25.0)] {
        let spec = SyntheticEarSpec {
            jitter_px: jitter,
            curvature,
            immature_tip: 2,
            seed: 3,
            ..Default::default()
        };
        let ear = generate_ear(&spec)?;
        let kernels = filter_masks(&ear.candidates, &FilterConfig::default())?;
        let r = three_path_kpr(&kernels, ear.height as f64, &GraphConfig::default())?;
        let side = |p: &Option<kernelrow::row::RowPath>| p.as_ref().map_or("-".to_owned(), |p| p.mature_count.to_string());
        println!(
            "jitter {jitter:>4} curvature {curvature:>4}: center {} left {} right {} -> mean {:.2}, rounded {} (truth {}){}",
            r.center.mature_count,
            side(&r.left),
            side(&r.right),
            r.kpr_mean,
            r.kpr_rounded,
            ear.truth_kpr,
            if r.degraded() { format!(" flags {:?}", r.flags) } else { String::new() }
        );
    }
    Ok(())
}
