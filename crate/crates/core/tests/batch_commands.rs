use std::fs;
use std::path::Path;
use std::process::Command;

use kernelrow::batch::{cmd_count, cmd_eval, cmd_extract, cmd_synth, read_results_csv, EvalArgs, Status};
use kernelrow::config::RunConfig;
use kernelrow::contract::{save_annotation, MetadataSidecar};
use kernelrow::model::{AnnotationDot, DotLabel, GroundTruthAnnotation};
use kernelrow::synth::{generate_scene, random_suite, SceneLayout, SuiteParams, SyntheticEarSpec};

fn small_suite(n: usize) -> Vec<SyntheticEarSpec> {
    random_suite(&SuiteParams {
        count: n,
        rows: (10, 12),
        kernels_per_row: (20, 24),
        seed: 5,
        ..Default::default()
    })
}

fn config(input: &Path, output: &Path, parallelism: usize) -> RunConfig {
    let mut cfg = RunConfig {
        parallelism,
        ..Default::default()
    };
    cfg.paths.input = Some(input.into());
    cfg.paths.output = Some(output.into());
    cfg
}

#[test]
fn count_recovers_truth_and_isolates_a_corrupt_file() {
    let dir = tempfile::tempdir().unwrap();
    let (masks, out) = (dir.path().join("masks"), dir.path().join("out"));
    let report = cmd_synth(&small_suite(9), &masks, 2).unwrap();
    assert_eq!(report.status(), Status::Success);
    fs::write(masks.join("broken.masks.json"), "{\"format\": 3").unwrap();

    let counted = cmd_count(&config(&masks, &out, 4)).unwrap();
    assert_eq!(counted.rows.len(), 10);
    assert_eq!(counted.status(), Status::PartialFailure);
    let broken: Vec<_> = counted.rows.iter().filter(|r| r.is_error()).collect();
    assert_eq!(broken.len(), 1);
    assert_eq!(broken[0].ear_id, "broken");
    for (row, (id, truth)) in counted.rows.iter().filter(|r| !r.is_error()).zip(&report.truth) {
        assert_eq!(&row.ear_id, id);
        assert_eq!(row.center_mature, Some(*truth as usize));
        assert_eq!(row.kpr_rounded, Some(*truth));
    }

    let t = counted.timing;
    assert_eq!(t.ears, 10);
    assert!(t.extracting >= 0.0 && t.ingest_filter >= 0.0 && t.row_counting >= 0.0);
    let timing = fs::read_to_string(out.join("timing.csv")).unwrap();
    assert!(timing.starts_with("stage,seconds_per_ear,ears\nextracting,"));
    assert_eq!(read_results_csv(&out.join("results.csv")).unwrap(), counted.rows);
}

#[test]
fn results_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    let masks = dir.path().join("masks");
    cmd_synth(&small_suite(12), &masks, 3).unwrap();
    let mut outputs = Vec::new();
    for p in [1, 3, 8] {
        let out = dir.path().join(format!("out{p}"));
        cmd_count(&config(&masks, &out, p)).unwrap();
        outputs.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn synth_spec_file_writes_one_contract_per_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("ears.jsonl");
    let lines: Vec<String> = (0..50)
        .map(|i| {
            format!(
                "{{\"rows\":3,\"kernels_per_row\":5,\"kernel_rx\":32,\"kernel_ry\":26,\"row_spacing\":58,\"col_spacing\":70,\"seed\":{i}}}"
            )
        })
        .collect();
    fs::write(&spec_path, lines.join("\n")).unwrap();
    let specs = kernelrow::batch::read_spec_file(&spec_path).unwrap();
    let out = dir.path().join("out");
    cmd_synth(&specs, &out, 4).unwrap();
    let contracts = fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".masks.json"))
        .count();
    assert_eq!(contracts, 50);
    let truth = fs::read_to_string(out.join("truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 51);
    assert!(truth.contains("ears_0049,5"));
}

#[test]
fn eval_scores_matching_ids_and_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let (masks, out) = (dir.path().join("masks"), dir.path().join("out"));
    cmd_synth(&small_suite(4), &masks, 2).unwrap();
    let counted = cmd_count(&config(&masks, &out, 2)).unwrap();

    let ann_dir = dir.path().join("ann");
    fs::create_dir_all(&ann_dir).unwrap();
    let first = &counted.rows[0];
    let dots = (0..first.center_mature.unwrap())
        .map(|i| AnnotationDot {
            x: 0.0,
            y: i as f64,
            label: DotLabel::Valid,
        })
        .collect();
    let ann = GroundTruthAnnotation {
        ear_id: first.ear_id.clone(),
        expert_path: Vec::new(),
        dots,
    };
    save_annotation(&ann, &ann_dir.join(format!("{}.annotation.json", first.ear_id))).unwrap();

    let report = cmd_eval(&EvalArgs {
        results: out.join("results.csv"),
        truth: Some(masks.join("truth.csv")),
        annotations: Some(ann_dir),
        output: out.clone(),
        bin_width: 1.0,
    })
    .unwrap();
    assert_eq!(report.truth_pairs.len(), 4);
    assert_eq!(report.model_path_pairs.len(), 1);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.contains("accuracy_ratio,100\n"), "{metrics}");
    assert!(out.join("model_path_metrics.csv").exists());
    assert!(fs::read_to_string(out.join("histogram.csv")).unwrap().starts_with("bin_start,count\n"));
}

#[test]
fn eval_without_overlapping_ids_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (masks, out) = (dir.path().join("masks"), dir.path().join("out"));
    cmd_synth(&small_suite(2), &masks, 1).unwrap();
    cmd_count(&config(&masks, &out, 1)).unwrap();
    let truth = dir.path().join("other.csv");
    fs::write(&truth, "ear_id,truth\nnope,30\n").unwrap();
    assert!(cmd_eval(&EvalArgs {
        results: out.join("results.csv"),
        truth: Some(truth),
        annotations: None,
        output: out,
        bin_width: 1.0,
    })
    .is_err());
}

#[test]
fn extract_writes_crops_and_sidecars_and_skips_unreadable_files() {
    let dir = tempfile::tempdir().unwrap();
    let (scenes, out) = (dir.path().join("scenes"), dir.path().join("ears"));
    fs::create_dir_all(&scenes).unwrap();
    let (img, _) = generate_scene(&vec![SyntheticEarSpec::default(); 4], &SceneLayout::row(4, 60, 200, 30)).unwrap();
    img.to_image().save(scenes.join("plot7.png")).unwrap();
    fs::write(scenes.join("garbage.png"), b"not an image").unwrap();

    let report = cmd_extract(&config(&scenes, &out, 2)).unwrap();
    assert_eq!(report.ears.len(), 4);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.status(), Status::PartialFailure);
    for i in 0..4 {
        assert!(out.join(format!("plot7_{i}.png")).exists());
    }
    let sidecar = MetadataSidecar::load(&out.join("plot7.metadata.json")).unwrap();
    assert_eq!(sidecar.ears, report.ears);
}

#[test]
fn extract_on_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(cmd_extract(&config(dir.path(), &out, 1)).is_err());
}

fn kernelrow_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kernelrow"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let masks = dir.path().join("masks");
    let out = dir.path().join("out");
    let status = kernelrow_bin()
        .args(["synth", "--count", "3", "--seed", "1", "--output"])
        .arg(&masks)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let count = |extra: Option<&str>| {
        if let Some(name) = extra {
            fs::write(masks.join(name), "[]").unwrap();
        }
        kernelrow_bin()
            .args(["count", "-j", "2", "--input"])
            .arg(&masks)
            .arg("--output")
            .arg(&out)
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(count(None), Some(0));
    assert_eq!(count(Some("bad.masks.json")), Some(2));

    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let code = kernelrow_bin()
        .args(["extract", "--input"])
        .arg(&empty)
        .arg("--output")
        .arg(&out)
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(1));
}

#[test]
fn binary_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[graph]\nk = 0\n").unwrap();
    let out = kernelrow_bin()
        .args(["bench", "--ears", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k"));
}
