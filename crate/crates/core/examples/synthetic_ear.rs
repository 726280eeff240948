//! Generate a synthetic ear, save its mask contract and a preview image.
//!
//! ```text
//! cargo run --example synthetic_ear [-- OUT_DIR]
//! ```

use std::path::PathBuf;

use kernelrow::synth::{generate_ear, SyntheticEarSpec};

fn main() -> kernelrow::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("kernelrow-synth"));
    std::fs::create_dir_all(&out)?;

    let spec = SyntheticEarSpec {
        rows: 14,
        kernels_per_row: 32,
        jitter_px: 10.5,
        immature_tip: 3,
        curvature: 20.0,
        seed: 17,
        ..Default::default()
    };
    let ear = generate_ear(&spec)?;
    println!("{}", serde_json::to_string(&spec)?);
    println!(
        "{}x{} image, {} masks, {} mature kernels per row",
        ear.width,
        ear.height,
        ear.candidates.len(),
        ear.truth_kpr
    );

    let contract = out.join("demo.masks.json");
    ear.to_contract("demo").save(&contract)?;
    let preview = out.join("demo.png");
    ear.render().to_image().save(&preview)?;
    println!("wrote {} and {}", contract.display(), preview.display());
    Ok(())
}
