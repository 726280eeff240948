//! On-disk file contracts: per-image mask files, metadata sidecars and expert
//! annotations. All are JSON.
//!
//! A mask contract file looks like
//!
//! ```text
//! {"ear_id":"scene_0","format":"kernel-mask-contract","image":{...},"producer":{...},
//!  "rle_order":"column-major,background-first","version":1,"candidates":[
//! {"id":"k0","rle":[...],"width":...,"height":...,"bbox":[x,y,w,h],"area":...,
//!  "quality_score":...,"stability_score":...},
//! ...
//! ]}
//! ```
//!
//! with one candidate per line so parse errors point at a specific mask.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EarRecord, GroundTruthAnnotation, MaskCandidate};
use crate::rle::rle_stats;

pub const CONTRACT_FORMAT: &str = "kernel-mask-contract";
pub const CONTRACT_VERSION: u32 = 1;
pub const RLE_ORDER: &str = "column-major,background-first";

/// File name suffixes used when scanning directories.
pub const CONTRACT_SUFFIX: &str = ".masks.json";
pub const METADATA_SUFFIX: &str = ".metadata.json";
pub const ANNOTATION_SUFFIX: &str = ".annotation.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub file: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskContract {
    pub format: String,
    pub version: u32,
    pub rle_order: String,
    pub ear_id: String,
    pub image: ImageInfo,
    /// Free-form producer stamp (model id, `points_per_side`, ...).
    #[serde(default)]
    pub producer: BTreeMap<String, serde_json::Value>,
    pub candidates: Vec<MaskCandidate>,
}

/// A candidate refused at load time.
#[derive(Debug)]
pub struct Rejection {
    pub candidate_id: String,
    pub error: Error,
}

impl MaskContract {
    pub fn new(ear_id: impl Into<String>, image: ImageInfo, candidates: Vec<MaskCandidate>) -> Self {
        Self {
            format: CONTRACT_FORMAT.to_owned(),
            version: CONTRACT_VERSION,
            rle_order: RLE_ORDER.to_owned(),
            ear_id: ear_id.into(),
            image,
            producer: BTreeMap::new(),
            candidates,
        }
    }

    fn check_header(&self) -> std::result::Result<(), String> {
        if self.format != CONTRACT_FORMAT {
            return Err(format!("format is {:?}, expected {CONTRACT_FORMAT:?}", self.format));
        }
        if self.version != CONTRACT_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        if self.rle_order != RLE_ORDER {
            return Err(format!("rle_order is {:?}, expected {RLE_ORDER:?}", self.rle_order));
        }
        if self.image.width == 0 || self.image.height == 0 {
            return Err("image has a zero dimension".to_owned());
        }
        Ok(())
    }

    /// Split candidates into those that satisfy the mask contract and those
    /// that do not. Rejected candidates are never repaired.
    pub fn ingest(self) -> (Vec<MaskCandidate>, Vec<Rejection>) {
        let (w, h) = (self.image.width, self.image.height);
        let mut accepted = Vec::with_capacity(self.candidates.len());
        let mut rejected = Vec::new();
        for c in self.candidates {
            match validate_candidate(&c, w, h) {
                Ok(()) => accepted.push(c),
                Err(error) => rejected.push(Rejection {
                    candidate_id: c.id.clone(),
                    error,
                }),
            }
        }
        (accepted, rejected)
    }

    pub fn to_writer(&self, mut w: impl Write) -> Result<()> {
        let mut header = serde_json::to_value(self)?;
        let map = header.as_object_mut().expect("contract serializes to an object");
        map.remove("candidates");
        let header = serde_json::to_string(map)?;
        // reopen the header object to append the candidate list
        w.write_all(&header.as_bytes()[..header.len() - 1])?;
        w.write_all(b",\"candidates\":[\n")?;
        for (i, c) in self.candidates.iter().enumerate() {
            if i > 0 {
                w.write_all(b",\n")?;
            }
            serde_json::to_writer(&mut w, c)?;
        }
        w.write_all(b"\n]}\n")?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    /// Parse and header-check a contract file. Candidate-level checks happen
    /// in [`MaskContract::ingest`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let contract: MaskContract = serde_json::from_str(&text).map_err(|e| Error::Schema {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        contract.check_header().map_err(|message| Error::Schema {
            path: path.to_owned(),
            message,
        })?;
        Ok(contract)
    }
}

/// Check the stored area, bbox and dimensions of a candidate against its
/// decoded RLE.
pub fn validate_candidate(c: &MaskCandidate, width: u32, height: u32) -> Result<()> {
    let fail = |reason: String| Error::Contract {
        id: c.id.clone(),
        reason,
    };
    if (c.width, c.height) != (width, height) {
        return Err(fail(format!(
            "mask is {}x{} but the image is {width}x{height}",
            c.width, c.height
        )));
    }
    for (name, s) in [("quality_score", c.quality_score), ("stability_score", c.stability_score)] {
        if !(0.0..=1.0).contains(&s) {
            return Err(fail(format!("{name} {s} outside [0, 1]")));
        }
    }
    let stats = rle_stats(&c.rle, width, height).map_err(|e| fail(e.to_string()))?;
    if stats.area != c.area {
        return Err(fail(format!("stored area {} but decoded area {}", c.area, stats.area)));
    }
    match stats.bbox {
        Some(b) if b != c.bbox => Err(fail(format!("stored bbox {:?} but decoded bbox {b:?}", c.bbox))),
        None if c.bbox.w != 0 || c.bbox.h != 0 => Err(fail("empty mask with non-empty bbox".to_owned())),
        _ => Ok(()),
    }
}

/// Per-scene sidecar listing the ears cut from one source image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataSidecar {
    pub source_image: String,
    pub ears: Vec<EarRecord>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl MetadataSidecar {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }
}

pub fn save_annotation(a: &GroundTruthAnnotation, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(a)? + "\n")?;
    Ok(())
}

pub fn load_annotation(path: &Path) -> Result<GroundTruthAnnotation> {
    load_json(path)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, BinaryMask, DotLabel};
    use crate::rle::{mask_stats, rle_encode};

    fn candidate(id: &str, mask: &BinaryMask) -> MaskCandidate {
        let stats = mask_stats(mask);
        MaskCandidate {
            id: id.to_owned(),
            rle: rle_encode(mask),
            width: mask.width(),
            height: mask.height(),
            bbox: stats.bbox.unwrap(),
            area: stats.area,
            quality_score: 0.97,
            stability_score: 0.95,
        }
    }

    fn sample() -> MaskContract {
        let a = BinaryMask::from_fn(8, 6, |x, y| (1..3).contains(&x) && (2..5).contains(&y));
        let b = BinaryMask::from_fn(8, 6, |x, y| x == 6 && y < 2);
        MaskContract::new(
            "ear_0",
            ImageInfo {
                file: "ear_0.png".into(),
                width: 8,
                height: 6,
            },
            vec![candidate("a", &a), candidate("b", &b)],
        )
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ear_0.masks.json");
        let mut c = sample();
        c.producer.insert("points_per_side".into(), 80.into());
        c.save(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(MaskContract::load(&path).unwrap(), c);
    }

    #[test]
    fn ingest_rejects_inconsistent_candidates() {
        let mut c = sample();
        c.candidates[1].area += 1;
        let mut bad_box = c.candidates[0].clone();
        bad_box.id = "c".into();
        bad_box.bbox = BBox::new(0, 0, 3, 5);
        c.candidates.push(bad_box);
        let mut bad_sum = c.candidates[0].clone();
        bad_sum.id = "d".into();
        bad_sum.rle.push(1);
        c.candidates.push(bad_sum);
        let (ok, rejected) = c.ingest();
        assert_eq!(ok.len(), 1);
        assert_eq!(ok[0].id, "a");
        let ids: Vec<_> = rejected.iter().map(|r| r.candidate_id.as_str()).collect();
        assert_eq!(ids, ["b", "c", "d"]);
    }

    #[test]
    fn rejects_out_of_range_score() {
        let mut c = sample();
        c.candidates[0].stability_score = 1.2;
        let (ok, rejected) = c.ingest();
        assert_eq!(ok.len(), 1);
        assert_eq!(rejected.len(), 1);
    }

    #[test]
    fn header_errors_name_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.masks.json");
        let mut c = sample();
        c.rle_order = "row-major".into();
        c.save(&path).unwrap();
        let err = MaskContract::load(&path).unwrap_err();
        assert!(err.to_string().contains("x.masks.json"), "{err}");

        fs::write(&path, "{\"format\": \n 12").unwrap();
        let err = MaskContract::load(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn annotation_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.annotation.json");
        let json = r#"{"ear_id":"e","expert_path":[[1.0,2.0],[3.0,4.0]],
            "dots":[{"x":1.0,"y":2.0,"label":"valid"},{"x":5.0,"y":6.0,"label":"expert_count"}]}"#;
        fs::write(&path, json).unwrap();
        let a = load_annotation(&path).unwrap();
        assert_eq!(a.count(DotLabel::Valid), 1);
        assert_eq!(a.count(DotLabel::ExpertCount), 1);
        save_annotation(&a, &path).unwrap();
        assert_eq!(load_annotation(&path).unwrap(), a);

        fs::write(&path, r#"{"ear_id":"e","dots":[{"x":1,"y":2,"label":"maybe"}]}"#).unwrap();
        assert!(load_annotation(&path).is_err());
    }
}
