//! Directory-level commands: extract ears from scenes, count contracts,
//! generate synthetic suites, score results and benchmark.
//!
//! Ears are processed independently on a fixed-size thread pool; outputs are
//! sorted by ear id so they do not depend on the pool size. A failing ear
//! becomes a flagged row, never an aborted batch.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::contract::{load_annotation, MaskContract, MetadataSidecar, ANNOTATION_SUFFIX, CONTRACT_SUFFIX};
use crate::error::{Error, Result};
use crate::eval::{compare_counts, histogram, summarize, write_histogram_csv, write_metrics_csv, write_pairs_csv, EvalPair};
use crate::extract::extract_ears;
use crate::filter::filter_masks;
use crate::model::{EarRecord, RgbImage};
use crate::multipath::{three_path_kpr, KprResult};
use crate::row::RowPath;
use crate::synth::{generate_ear, SyntheticEarSpec};

pub const RESULTS_FILE: &str = "results.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const PAIRS_FILE: &str = "pairs.csv";
pub const BENCH_FILE: &str = "bench.csv";

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Process exit status of a batch command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    TotalFailure,
    PartialFailure,
}

impl Status {
    pub fn from_counts(ok: usize, failed: usize) -> Self {
        match (ok, failed) {
            (_, 0) if ok > 0 => Status::Success,
            (0, _) => Status::TotalFailure,
            _ => Status::PartialFailure,
        }
    }

    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::TotalFailure => 1,
            Status::PartialFailure => 2,
        }
    }
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

/// Files in `dir` accepted by `keep`, sorted by path.
fn list_files(dir: &Path, keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && keep(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("no {what} directory given")))
}

/// Mean wall-clock seconds per ear for each pipeline stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TimingReport {
    pub ears: usize,
    pub extracting: f64,
    pub ingest_filter: f64,
    pub row_counting: f64,
}

impl TimingReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["stage", "seconds_per_ear", "ears"])?;
        for (stage, v) in [
            ("extracting", self.extracting),
            ("ingest_filter", self.ingest_filter),
            ("row_counting", self.row_counting),
        ] {
            w.write_record([stage.to_string(), format!("{v:.6}"), self.ears.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean_or_zero(total: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

// ---------------------------------------------------------------- extract

#[derive(Debug, Default)]
pub struct ExtractReport {
    pub ears: Vec<EarRecord>,
    /// Input files that produced no ears, with the reason.
    pub failures: Vec<(PathBuf, String)>,
    pub timing: TimingReport,
}

impl ExtractReport {
    pub fn status(&self) -> Status {
        let ok = self.ears.iter().map(|e| &e.source_image).collect::<std::collections::BTreeSet<_>>().len();
        Status::from_counts(ok, self.failures.len())
    }
}

fn extract_one(path: &Path, cfg: &RunConfig, out_dir: &Path) -> Result<(Vec<EarRecord>, f64)> {
    let img: RgbImage = image::open(path)?.to_rgb8().try_into()?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let started = Instant::now();
    let ears = extract_ears(&img, &cfg.extract, &stem)?;
    let seconds = started.elapsed().as_secs_f64();
    let mut records = Vec::with_capacity(ears.len());
    for (crop, record) in ears {
        crop.to_image().save(out_dir.join(format!("{}.png", record.ear_id)))?;
        records.push(record);
    }
    MetadataSidecar {
        source_image: file_name(path),
        ears: records.clone(),
        warnings: Vec::new(),
    }
    .save(&out_dir.join(format!("{stem}{}", crate::contract::METADATA_SUFFIX)))?;
    Ok((records, seconds))
}

/// Cut ears out of every scene image in the input directory. Writes one PNG
/// per ear and a metadata sidecar per scene into the output directory.
pub fn cmd_extract(cfg: &RunConfig) -> Result<ExtractReport> {
    let input = required(&cfg.paths.input, "input")?;
    let out_dir = required(&cfg.paths.output, "output")?;
    let files = list_files(input, |p| {
        p.extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
    })?;
    if files.is_empty() {
        return Err(Error::NoInputFiles(input.to_owned()));
    }
    fs::create_dir_all(out_dir)?;
    let outcomes: Vec<_> = pool(cfg.parallelism)?.install(|| {
        files
            .par_iter()
            .map(|p| (p.clone(), extract_one(p, cfg, out_dir)))
            .collect()
    });
    let mut report = ExtractReport::default();
    let mut seconds = 0.0;
    for (path, outcome) in outcomes {
        match outcome {
            Ok((records, s)) => {
                seconds += s;
                report.ears.extend(records);
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                report.failures.push((path, e.to_string()));
            }
        }
    }
    report.timing = TimingReport {
        ears: report.ears.len(),
        extracting: mean_or_zero(seconds, report.ears.len()),
        ..Default::default()
    };
    report.timing.write_csv(&out_dir.join(TIMING_FILE))?;
    Ok(report)
}

// ---------------------------------------------------------------- count

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub ear_id: String,
    pub kernels: Option<usize>,
    pub rejected_masks: Option<usize>,
    pub center_raw: Option<usize>,
    pub center_immature: Option<usize>,
    pub center_mature: Option<usize>,
    pub left_raw: Option<usize>,
    pub left_immature: Option<usize>,
    pub left_mature: Option<usize>,
    pub right_raw: Option<usize>,
    pub right_immature: Option<usize>,
    pub right_mature: Option<usize>,
    pub kpr_mean: Option<f64>,
    pub kpr_rounded: Option<u32>,
    /// `;`-separated flags of a degraded result.
    pub flags: String,
    /// Set when the ear could not be counted at all.
    pub error: String,
}

impl ResultRow {
    fn failed(ear_id: String, error: &Error) -> Self {
        Self {
            ear_id,
            kernels: None,
            rejected_masks: None,
            center_raw: None,
            center_immature: None,
            center_mature: None,
            left_raw: None,
            left_immature: None,
            left_mature: None,
            right_raw: None,
            right_immature: None,
            right_mature: None,
            kpr_mean: None,
            kpr_rounded: None,
            flags: String::new(),
            error: error.to_string(),
        }
    }

    fn counted(ear_id: String, kernels: usize, rejected: usize, r: &KprResult) -> Self {
        let parts = |p: Option<&RowPath>| {
            (
                p.map(|p| p.raw_count),
                p.map(|p| p.immature_count),
                p.map(|p| p.mature_count),
            )
        };
        let (center_raw, center_immature, center_mature) = parts(Some(&r.center));
        let (left_raw, left_immature, left_mature) = parts(r.left.as_ref());
        let (right_raw, right_immature, right_mature) = parts(r.right.as_ref());
        Self {
            ear_id,
            kernels: Some(kernels),
            rejected_masks: Some(rejected),
            center_raw,
            center_immature,
            center_mature,
            left_raw,
            left_immature,
            left_mature,
            right_raw,
            right_immature,
            right_mature,
            kpr_mean: Some(r.kpr_mean),
            kpr_rounded: Some(r.kpr_rounded),
            flags: r.flags.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";"),
            error: String::new(),
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }
}

/// Outcome of counting one ear, with stage timings in seconds.
#[derive(Debug, Clone)]
pub struct EarCount {
    pub row: ResultRow,
    pub result: Option<KprResult>,
    pub ingest_filter: f64,
    pub row_counting: f64,
}

/// Filter and count one loaded contract.
pub fn count_contract(contract: MaskContract, cfg: &RunConfig) -> EarCount {
    let ear_id = contract.ear_id.clone();
    let height = contract.image.height as f64;
    let started = Instant::now();
    let (candidates, rejections) = contract.ingest();
    for r in &rejections {
        log::debug!("{ear_id}: rejected mask {}: {}", r.candidate_id, r.error);
    }
    let kernels = filter_masks(&candidates, &cfg.filter);
    let ingest_filter = started.elapsed().as_secs_f64();
    let started = Instant::now();
    let outcome = kernels.and_then(|ks| three_path_kpr(&ks, height, &cfg.graph).map(|r| (ks.len(), r)));
    let row_counting = started.elapsed().as_secs_f64();
    match outcome {
        Ok((n, result)) => EarCount {
            row: ResultRow::counted(ear_id, n, rejections.len(), &result),
            result: Some(result),
            ingest_filter,
            row_counting,
        },
        Err(e) => {
            log::warn!("{ear_id}: {e}");
            EarCount {
                row: ResultRow::failed(ear_id, &e),
                result: None,
                ingest_filter,
                row_counting,
            }
        }
    }
}

fn count_file(path: &Path, cfg: &RunConfig) -> EarCount {
    let started = Instant::now();
    match MaskContract::load(path) {
        Ok(contract) => {
            let mut c = count_contract(contract, cfg);
            c.ingest_filter = started.elapsed().as_secs_f64() - c.row_counting;
            c
        }
        Err(e) => {
            log::warn!("{}: {e}", path.display());
            let name = file_name(path);
            let id = name.strip_suffix(CONTRACT_SUFFIX).unwrap_or(&name).to_string();
            EarCount {
                row: ResultRow::failed(id, &e),
                result: None,
                ingest_filter: started.elapsed().as_secs_f64(),
                row_counting: 0.0,
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CountReport {
    /// Sorted by ear id.
    pub rows: Vec<ResultRow>,
    pub timing: TimingReport,
}

impl CountReport {
    pub fn status(&self) -> Status {
        let failed = self.rows.iter().filter(|r| r.is_error()).count();
        Status::from_counts(self.rows.len() - failed, failed)
    }
}

pub fn write_results_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for r in csv::Reader::from_path(path)?.deserialize() {
        rows.push(r?);
    }
    Ok(rows)
}

/// Count every mask contract in the input directory; writes the results
/// table and the timing report to the output directory.
pub fn cmd_count(cfg: &RunConfig) -> Result<CountReport> {
    let input = required(&cfg.paths.input, "input")?;
    let out_dir = required(&cfg.paths.output, "output")?;
    let files = list_files(input, |p| file_name(p).ends_with(CONTRACT_SUFFIX))?;
    if files.is_empty() {
        return Err(Error::NoInputFiles(input.to_owned()));
    }
    fs::create_dir_all(out_dir)?;
    let mut counts: Vec<EarCount> = pool(cfg.parallelism)?.install(|| files.par_iter().map(|p| count_file(p, cfg)).collect());
    counts.sort_by(|a, b| a.row.ear_id.cmp(&b.row.ear_id));

    let n = counts.len();
    let timing = TimingReport {
        ears: n,
        extracting: 0.0,
        ingest_filter: mean_or_zero(counts.iter().map(|c| c.ingest_filter).sum(), n),
        row_counting: mean_or_zero(counts.iter().map(|c| c.row_counting).sum(), n),
    };
    let rows: Vec<ResultRow> = counts.into_iter().map(|c| c.row).collect();
    write_results_csv(&rows, &out_dir.join(RESULTS_FILE))?;
    timing.write_csv(&out_dir.join(TIMING_FILE))?;
    Ok(CountReport { rows, timing })
}

// ---------------------------------------------------------------- synth

/// Read synthetic ear specs, one JSON object per line. Blank lines and lines
/// starting with `#` are skipped. Specs without an id get `{stem}_{n:04}`
/// where `n` counts specs from 0.
pub fn read_spec_file(path: &Path) -> Result<Vec<SyntheticEarSpec>> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut specs = Vec::new();
    for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let mut spec: SyntheticEarSpec = serde_json::from_str(text).map_err(|e| Error::Schema {
            path: path.to_owned(),
            message: format!("line {}: {e}", i + 1),
        })?;
        spec.validate().map_err(|e| Error::Schema {
            path: path.to_owned(),
            message: format!("line {}: {e}", i + 1),
        })?;
        if spec.ear_id.is_empty() {
            spec.ear_id = format!("{stem}_{:04}", specs.len());
        }
        specs.push(spec);
    }
    Ok(specs)
}

#[derive(Debug, Clone)]
pub struct SynthReport {
    /// `(ear_id, truth)` for every generated ear, sorted by id.
    pub truth: Vec<(String, u32)>,
    pub failures: Vec<(String, String)>,
}

impl SynthReport {
    pub fn status(&self) -> Status {
        Status::from_counts(self.truth.len(), self.failures.len())
    }
}

/// Generate one contract file per spec plus a `truth.csv` into `out_dir`.
pub fn cmd_synth(specs: &[SyntheticEarSpec], out_dir: &Path, parallelism: usize) -> Result<SynthReport> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ids: Vec<&str> = specs.iter().map(|s| s.ear_id.as_str()).collect();
    ids.sort();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(format!("duplicate ear id {:?}", w[0])));
    }
    fs::create_dir_all(out_dir)?;
    let outcomes: Vec<_> = pool(parallelism)?.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let written = generate_ear(spec).and_then(|ear| {
                    ear.to_contract(&spec.ear_id)
                        .save(&out_dir.join(format!("{}{CONTRACT_SUFFIX}", spec.ear_id)))?;
                    Ok(ear.truth_kpr)
                });
                (spec.ear_id.clone(), written)
            })
            .collect()
    });
    let mut report = SynthReport {
        truth: Vec::new(),
        failures: Vec::new(),
    };
    for (id, outcome) in outcomes {
        match outcome {
            Ok(t) => report.truth.push((id, t)),
            Err(e) => {
                log::warn!("{id}: {e}");
                report.failures.push((id, e.to_string()));
            }
        }
    }
    report.truth.sort();
    write_truth_csv(&report.truth, &out_dir.join(TRUTH_FILE))?;
    Ok(report)
}

pub fn write_truth_csv(truth: &[(String, u32)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["ear_id", "truth"])?;
    for (id, t) in truth {
        w.write_record([id.clone(), t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv(path: &Path) -> Result<Vec<(String, f64)>> {
    #[derive(Deserialize)]
    struct Row {
        ear_id: String,
        truth: f64,
    }
    let mut out = Vec::new();
    for r in csv::Reader::from_path(path)?.deserialize() {
        let r: Row = r?;
        out.push((r.ear_id, r.truth));
    }
    Ok(out)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Clone, PartialEq)]
pub struct EvalArgs {
    pub results: PathBuf,
    pub truth: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub output: PathBuf,
    pub bin_width: f64,
}

#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    /// Prediction vs truth table, when a truth file was given.
    pub truth_pairs: Vec<EvalPair>,
    pub model_path_pairs: Vec<EvalPair>,
    pub expert_path_pairs: Vec<EvalPair>,
}

/// Score a results table against a truth table and/or a directory of expert
/// annotations. Fails when no ear id overlaps.
///
/// Writes `metrics.csv` and `pairs.csv` for the truth table,
/// `model_path_metrics.csv` / `expert_path_metrics.csv` for annotations, and
/// `histogram.csv` of all counted `kpr_mean` values.
pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let rows: Vec<ResultRow> = read_results_csv(&args.results)?
        .into_iter()
        .filter(|r| !r.is_error())
        .collect();
    fs::create_dir_all(&args.output)?;
    let mut report = EvalReport::default();

    if let Some(truth_path) = &args.truth {
        let truth: std::collections::HashMap<String, f64> = read_truth_csv(truth_path)?.into_iter().collect();
        report.truth_pairs = rows
            .iter()
            .filter_map(|r| Some(EvalPair::new(&r.ear_id, r.kpr_mean?, *truth.get(&r.ear_id)?)))
            .collect();
        if report.truth_pairs.is_empty() {
            return Err(Error::InvalidConfig("no ear id in common between results and truth".into()));
        }
        write_metrics_csv(&summarize(&report.truth_pairs)?, fs::File::create(args.output.join(METRICS_FILE))?)?;
        write_pairs_csv(&report.truth_pairs, fs::File::create(args.output.join(PAIRS_FILE))?)?;
    }

    if let Some(dir) = &args.annotations {
        let files = list_files(dir, |p| file_name(p).ends_with(ANNOTATION_SUFFIX))?;
        let by_id: std::collections::HashMap<&str, &ResultRow> = rows.iter().map(|r| (r.ear_id.as_str(), r)).collect();
        for f in files {
            let ann = load_annotation(&f)?;
            let Some(row) = by_id.get(ann.ear_id.as_str()) else {
                continue;
            };
            let (Some(center), Some(mean)) = (row.center_mature, row.kpr_mean) else {
                continue;
            };
            let c = compare_counts(&row.ear_id, center, mean, &ann)?;
            report.model_path_pairs.extend(c.model_path);
            report.expert_path_pairs.extend(c.expert_path);
        }
        if report.model_path_pairs.is_empty() && report.expert_path_pairs.is_empty() {
            return Err(Error::InvalidConfig("no annotation matches a counted ear".into()));
        }
        for (name, pairs) in [
            ("model_path_metrics.csv", &report.model_path_pairs),
            ("expert_path_metrics.csv", &report.expert_path_pairs),
        ] {
            if !pairs.is_empty() {
                write_metrics_csv(&summarize(pairs)?, fs::File::create(args.output.join(name))?)?;
            }
        }
    }

    if args.truth.is_none() && args.annotations.is_none() {
        return Err(Error::InvalidConfig("eval needs a truth file or an annotation directory".into()));
    }
    let values: Vec<f64> = rows.iter().filter_map(|r| r.kpr_mean).collect();
    write_histogram_csv(&histogram(&values, args.bin_width)?, fs::File::create(args.output.join(HISTOGRAM_FILE))?)?;
    Ok(report)
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub ear_id: String,
    pub kernels: usize,
    pub ingest_filter_s: f64,
    pub row_counting_s: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub timing: TimingReport,
    pub max_row_counting: f64,
}

/// Time filtering and row counting over in-memory synthetic ears, one ear at
/// a time so per-ear times are not inflated by contention.
pub fn cmd_bench(specs: &[SyntheticEarSpec], cfg: &RunConfig, out_dir: Option<&Path>) -> Result<BenchReport> {
    if specs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let contract = generate_ear(spec)?.to_contract(&spec.ear_id);
        let c = count_contract(contract, cfg);
        rows.push(BenchRow {
            ear_id: c.row.ear_id,
            kernels: c.row.kernels.unwrap_or(0),
            ingest_filter_s: c.ingest_filter,
            row_counting_s: c.row_counting,
        });
    }
    let n = rows.len();
    let timing = TimingReport {
        ears: n,
        extracting: 0.0,
        ingest_filter: mean_or_zero(rows.iter().map(|r| r.ingest_filter_s).sum(), n),
        row_counting: mean_or_zero(rows.iter().map(|r| r.row_counting_s).sum(), n),
    };
    let max_row_counting = rows.iter().map(|r| r.row_counting_s).fold(0.0, f64::max);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(BENCH_FILE))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
        timing.write_csv(&dir.join(TIMING_FILE))?;
    }
    Ok(BenchReport {
        rows,
        timing,
        max_row_counting,
    })
}
