//! Render a scene of four ears plus two small tags on a dark backdrop, then
//! cut the ears out. Pass an image path to run on your own scene instead.
//!
//! ```text
//! cargo run --example extract_ears [-- scene.png]
//! ```

use kernelrow::extract::{extract_ears, ExtractConfig};
use kernelrow::model::BBox;
use kernelrow::synth::{generate_scene, SceneLayout, SyntheticEarSpec};
use kernelrow::RgbImage;

fn main() -> kernelrow::Result<()> {
    let (scene, stem) = match std::env::args().nth(1) {
        Some(path) => {
            let img: RgbImage = image::open(&path)?.to_rgb8().try_into()?;
            (img, "scene".to_owned())
        }
        None => {
            let mut layout = SceneLayout::row(4, 60, 200, 30);
            layout.height += 50;
            layout.tags = vec![BBox::new(40, 265, 20, 12), BBox::new(200, 265, 20, 12)];
            let (img, _) = generate_scene(&vec![SyntheticEarSpec::default(); 4], &layout)?;
            (img, "synthetic".to_owned())
        }
    };
    let out = std::env::temp_dir().join("kernelrow-extract");
    std::fs::create_dir_all(&out)?;
    for (crop, record) in extract_ears(&scene, &ExtractConfig::default(), &stem)? {
        let path = out.join(format!("{}.png", record.ear_id));
        crop.to_image().save(&path)?;
        println!("{} at {:?}, {}x{} -> {}", record.ear_id, record.crop_offset, crop.width(), crop.height(), path.display());
    }
    Ok(())
}
