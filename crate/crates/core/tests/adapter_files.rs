//! Files as an external mask producer would write them, parsed from raw
//! JSON text rather than through the crate's own writers.

use std::fs;

use kernelrow::contract::{load_annotation, MaskContract, MetadataSidecar};
use kernelrow::model::DotLabel;

// a 4x3 image with one 2x2 mask at (1,1): columns 1 and 2, rows 1 and 2
const CONTRACT: &str = r#"{"format":"kernel-mask-contract","version":1,
"rle_order":"column-major,background-first","ear_id":"plot7_0",
"image":{"file":"plot7_0.png","width":4,"height":3},
"producer":{"model":"vit_h","points_per_side":80},
"candidates":[
{"id":"0","rle":[4,2,1,2,3],"width":4,"height":3,"bbox":[1,1,2,2],"area":4,"quality_score":0.97,"stability_score":0.95}
]}"#;

#[test]
fn producer_contract_ingests_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot7_0.masks.json");
    fs::write(&path, CONTRACT).unwrap();
    let c = MaskContract::load(&path).unwrap();
    assert_eq!(c.producer["points_per_side"], 80);
    let (candidates, rejected) = c.ingest();
    assert_eq!(candidates.len(), 1);
    assert!(rejected.is_empty());
}

#[test]
fn sidecar_with_decoded_metadata_and_missing_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot7.metadata.json");
    fs::write(
        &path,
        r#"{"source_image":"plot7.png","ears":[
            {"ear_id":"plot7_0","source_image":"plot7","crop_offset":[20,20],"metadata":{"plot":"7","geno":"B73xMo17"}},
            {"ear_id":"plot7_1","source_image":"plot7","crop_offset":[110,20]}],
           "warnings":["no QR code found"]}"#,
    )
    .unwrap();
    let s = MetadataSidecar::load(&path).unwrap();
    assert_eq!(s.ears[0].metadata["geno"], "B73xMo17");
    assert!(s.ears[1].metadata.is_empty());
    assert_eq!(s.warnings, ["no QR code found"]);
}

#[test]
fn annotation_file_counts_by_label() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot7_0.annotation.json");
    fs::write(
        &path,
        r#"{"ear_id":"plot7_0","expert_path":[[10,200],[12,20]],"dots":[
            {"x":10,"y":190,"label":"valid"},{"x":11,"y":150,"label":"invalid"},
            {"x":30,"y":100,"label":"expert_count"}]}"#,
    )
    .unwrap();
    let a = load_annotation(&path).unwrap();
    assert_eq!(a.expert_path.len(), 2);
    assert_eq!(
        (a.count(DotLabel::Valid), a.count(DotLabel::Invalid), a.count(DotLabel::ExpertCount)),
        (1, 1, 1)
    );
}
