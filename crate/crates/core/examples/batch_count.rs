//! End-to-end batch run: write a synthetic suite of mask contracts, count
//! them on a thread pool, and score the results against the truth table.

use kernelrow::batch::{cmd_count, cmd_eval, cmd_synth, EvalArgs};
use kernelrow::config::RunConfig;
use kernelrow::synth::{random_suite, SuiteParams};

fn main() -> kernelrow::Result<()> {
    let root = std::env::temp_dir().join("kernelrow-batch");
    let (masks, out) = (root.join("masks"), root.join("results"));

    let specs = random_suite(&SuiteParams {
        count: 24,
        jitter_fraction: 0.15,
        immature_tip: (0, 4),
        ..Default::default()
    });
    let synth = cmd_synth(&specs, &masks, 4)?;
    println!("{} contracts in {}", synth.truth.len(), masks.display());

    let mut cfg = RunConfig {
        parallelism: 4,
        ..Default::default()
    };
    cfg.paths.input = Some(masks.clone());
    cfg.paths.output = Some(out.clone());
    let report = cmd_count(&cfg)?;
    println!(
        "{} ears: {:.4} s/ear ingest+filter, {:.4} s/ear row counting",
        report.timing.ears, report.timing.ingest_filter, report.timing.row_counting
    );

    let eval = cmd_eval(&EvalArgs {
        results: out.join("results.csv"),
        truth: Some(masks.join("truth.csv")),
        annotations: None,
        output: out.clone(),
        bin_width: 1.0,
    })?;
    print!("{}", std::fs::read_to_string(out.join("metrics.csv"))?);
    println!("{} pairs scored; outputs in {}", eval.truth_pairs.len(), out.display());
    Ok(())
}
