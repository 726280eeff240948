//! Scoring predicted kernels-per-row against ground truth.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DotLabel, GroundTruthAnnotation};
use crate::multipath::KprResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPair {
    pub ear_id: String,
    pub predicted: f64,
    pub truth: f64,
}

impl EvalPair {
    pub fn new(ear_id: impl Into<String>, predicted: f64, truth: f64) -> Self {
        Self {
            ear_id: ear_id.into(),
            predicted,
            truth,
        }
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// `100 * mean(predicted) / mean(truth)`.
pub fn accuracy_ratio(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(p) = pairs.iter().find(|p| p.truth.is_nan() || p.truth <= 0.0) {
        return Err(Error::NonPositiveTruth(p.ear_id.clone()));
    }
    let mp = mean(pairs.iter().map(|p| p.predicted));
    let mt = mean(pairs.iter().map(|p| p.truth));
    Ok(100.0 * mp / mt)
}

fn truth_sum_of_squares(pairs: &[EvalPair]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let mt = mean(pairs.iter().map(|p| p.truth));
    let ss_tot: f64 = pairs.iter().map(|p| (p.truth - mt).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok((mt, ss_tot))
}

/// Coefficient of determination of the predictions taken as-is, i.e. against
/// the identity line: `1 - SS_res / SS_tot`. Can be negative.
pub fn r_squared(pairs: &[EvalPair]) -> Result<f64> {
    let (_, ss_tot) = truth_sum_of_squares(pairs)?;
    let ss_res: f64 = pairs.iter().map(|p| (p.truth - p.predicted).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Squared Pearson correlation, the R² of the least-squares regression line.
/// Fails when either variable is constant.
pub fn pearson_r_squared(pairs: &[EvalPair]) -> Result<f64> {
    let (mt, ss_t) = truth_sum_of_squares(pairs)?;
    let mp = mean(pairs.iter().map(|p| p.predicted));
    let ss_p: f64 = pairs.iter().map(|p| (p.predicted - mp).powi(2)).sum();
    if ss_p == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let cov: f64 = pairs.iter().map(|p| (p.truth - mt) * (p.predicted - mp)).sum();
    Ok(cov * cov / (ss_t * ss_p))
}

/// Counts in left-closed bins `[start, start + bin_width)` aligned to
/// multiples of `bin_width`, from the lowest to the highest occupied bin.
/// Empty bins in between are listed with count 0. Non-finite values are
/// skipped.
pub fn histogram(values: &[f64], bin_width: f64) -> Result<Vec<(f64, usize)>> {
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(Error::InvalidConfig(format!("bin width {bin_width} must be positive")));
    }
    let bins: Vec<i64> = values
        .iter()
        .filter(|v| v.is_finite())
        .map(|v| (v / bin_width).floor() as i64)
        .collect();
    let (Some(&lo), Some(&hi)) = (bins.iter().min(), bins.iter().max()) else {
        return Ok(Vec::new());
    };
    let mut counts = vec![0usize; (hi - lo + 1) as usize];
    for b in bins {
        counts[(b - lo) as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| ((lo + i as i64) as f64 * bin_width, c))
        .collect())
}

/// The two ways an expert can check a model count.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathComparison {
    /// Model mature count on its central path vs the dots the expert marked
    /// valid along that path.
    pub model_path: Option<EvalPair>,
    /// Model mean count vs the kernels the expert counted on their own path.
    pub expert_path: Option<EvalPair>,
}

/// Pair a model result with an expert annotation of the same ear. A
/// comparison is present only when the annotation has dots of its kind.
pub fn compare_paths(ear_id: &str, result: &KprResult, annotation: &GroundTruthAnnotation) -> Result<PathComparison> {
    compare_counts(ear_id, result.center.mature_count, result.kpr_mean, annotation)
}

/// [`compare_paths`] from the two counts it uses.
pub fn compare_counts(
    ear_id: &str,
    center_mature: usize,
    kpr_mean: f64,
    annotation: &GroundTruthAnnotation,
) -> Result<PathComparison> {
    if annotation.ear_id != ear_id {
        return Err(Error::IdMismatch {
            result: ear_id.to_string(),
            annotation: annotation.ear_id.clone(),
        });
    }
    let judged = annotation.count(DotLabel::Valid) + annotation.count(DotLabel::Invalid);
    let expert = annotation.count(DotLabel::ExpertCount);
    Ok(PathComparison {
        model_path: (judged > 0)
            .then(|| EvalPair::new(ear_id, center_mature as f64, annotation.count(DotLabel::Valid) as f64)),
        expert_path: (expert > 0).then(|| EvalPair::new(ear_id, kpr_mean, expert as f64)),
    })
}

/// Summary metrics over a set of pairs. R² values are `None` when the
/// truth (or, for Pearson, the prediction) has no variance.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub count: usize,
    pub accuracy_ratio: f64,
    pub r_squared: Option<f64>,
    pub pearson_r_squared: Option<f64>,
    pub mean_abs_error: f64,
    /// Fraction of ears whose rounded prediction is within one kernel.
    pub within_one: f64,
}

pub fn summarize(pairs: &[EvalPair]) -> Result<EvalSummary> {
    let accuracy_ratio = accuracy_ratio(pairs)?;
    let n = pairs.len() as f64;
    Ok(EvalSummary {
        count: pairs.len(),
        accuracy_ratio,
        r_squared: r_squared(pairs).ok(),
        pearson_r_squared: pearson_r_squared(pairs).ok(),
        mean_abs_error: pairs.iter().map(|p| (p.predicted - p.truth).abs()).sum::<f64>() / n,
        within_one: pairs
            .iter()
            .filter(|p| ((p.predicted + 0.5).floor() - p.truth).abs() <= 1.0)
            .count() as f64
            / n,
    })
}

/// `metric,value` rows; undefined metrics are written as empty values.
pub fn write_metrics_csv(summary: &EvalSummary, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "value"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let rows = [
        ("count", summary.count.to_string()),
        ("accuracy_ratio", summary.accuracy_ratio.to_string()),
        ("r_squared", opt(summary.r_squared)),
        ("pearson_r_squared", opt(summary.pearson_r_squared)),
        ("mean_abs_error", summary.mean_abs_error.to_string()),
        ("within_one", summary.within_one.to_string()),
    ];
    for (k, v) in rows {
        out.write_record([k, v.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram_csv(bins: &[(f64, usize)], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["bin_start", "count"])?;
    for (start, count) in bins {
        out.write_record([start.to_string(), count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pairs_csv(pairs: &[EvalPair], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in pairs {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnnotationDot, Point};
    use crate::row::RowPath;
    use proptest::prelude::*;

    fn pairs(pred: &[f64], truth: &[f64]) -> Vec<EvalPair> {
        pred.iter()
            .zip(truth)
            .enumerate()
            .map(|(i, (&p, &t))| EvalPair::new(format!("e{i}"), p, t))
            .collect()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy_ratio(&pairs(&[3.0, 4.0], &[3.0, 4.0])).unwrap(), 100.0);
        let r = accuracy_ratio(&pairs(&[39.0, 31.0, 40.0], &[38.0, 32.0, 40.0])).unwrap();
        assert!((r - 100.0).abs() < 1e-9);
        assert_eq!(accuracy_ratio(&pairs(&[20.0], &[40.0])).unwrap(), 50.0);
    }

    #[test]
    fn accuracy_errors() {
        assert!(matches!(accuracy_ratio(&[]), Err(Error::EmptyInput)));
        assert!(matches!(
            accuracy_ratio(&pairs(&[1.0, 1.0], &[1.0, 0.0])),
            Err(Error::NonPositiveTruth(id)) if id == "e1"
        ));
    }

    #[test]
    fn r_squared_examples() {
        let t = [30.0, 32.0, 35.0, 41.0];
        assert_eq!(r_squared(&pairs(&t, &t)).unwrap(), 1.0);
        let m = t.iter().sum::<f64>() / 4.0;
        assert_eq!(r_squared(&pairs(&[m; 4], &t)).unwrap(), 0.0);
        assert!(matches!(r_squared(&pairs(&[1.0, 2.0], &[5.0, 5.0])), Err(Error::DegenerateVariance)));
        assert!(matches!(r_squared(&pairs(&[1.0], &[5.0])), Err(Error::DegenerateVariance)));
    }

    #[test]
    fn r_squared_hand_computed() {
        // truth mean 34; SS_tot = 36+16+0+16+36 = 104
        // residuals 1,-1,2,0,-2 -> SS_res = 10
        let p = pairs(&[29.0, 29.0, 36.0, 38.0, 38.0], &[28.0, 30.0, 34.0, 38.0, 40.0]);
        assert!((r_squared(&p).unwrap() - (1.0 - 10.0 / 104.0)).abs() < 1e-12);
    }

    #[test]
    fn pearson_differs_from_identity_r_squared() {
        // a perfect linear relation that is off the identity line
        let p = pairs(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert!((pearson_r_squared(&p).unwrap() - 1.0).abs() < 1e-12);
        assert!(r_squared(&p).unwrap() < 0.0);
    }

    #[test]
    fn histogram_examples() {
        assert!(histogram(&[], 1.0).unwrap().is_empty());
        assert_eq!(histogram(&[1.0, 1.0, 2.0], 1.0).unwrap(), [(1.0, 2), (2.0, 1)]);
        assert_eq!(histogram(&[10.0, 14.9, 25.0], 5.0).unwrap(), [(10.0, 2), (15.0, 0), (20.0, 0), (25.0, 1)]);
        assert!(histogram(&[1.0], 0.0).is_err());
    }

    fn result(center_mature: usize, mean: f64) -> KprResult {
        let mut center = RowPath::new((0..center_mature).collect(), 0.0);
        center.mature_count = center_mature;
        KprResult {
            center,
            left: None,
            right: None,
            kpr_mean: mean,
            kpr_rounded: (mean + 0.5).floor() as u32,
            flags: Vec::new(),
        }
    }

    fn annotation(id: &str, valid: usize, invalid: usize, expert: usize) -> GroundTruthAnnotation {
        let dot = |label| AnnotationDot { x: 0.0, y: 0.0, label };
        let dots = std::iter::repeat_n(dot(DotLabel::Valid), valid)
            .chain(std::iter::repeat_n(dot(DotLabel::Invalid), invalid))
            .chain(std::iter::repeat_n(dot(DotLabel::ExpertCount), expert))
            .collect();
        GroundTruthAnnotation {
            ear_id: id.into(),
            expert_path: vec![Point::new(0.0, 0.0)],
            dots,
        }
    }

    #[test]
    fn compare_model_path() {
        let c = compare_paths("a", &result(30, 30.0), &annotation("a", 30, 0, 0)).unwrap();
        assert_eq!(c.model_path, Some(EvalPair::new("a", 30.0, 30.0)));
        assert_eq!(c.expert_path, None);
    }

    #[test]
    fn compare_expert_path() {
        let c = compare_paths("a", &result(29, 29.0), &annotation("a", 0, 0, 28)).unwrap();
        assert_eq!(c.expert_path, Some(EvalPair::new("a", 29.0, 28.0)));
        assert_eq!(c.model_path, None);
    }

    #[test]
    fn compare_invalid_dots_count_against_the_model() {
        let c = compare_paths("a", &result(30, 30.0), &annotation("a", 28, 2, 0)).unwrap();
        assert_eq!(c.model_path, Some(EvalPair::new("a", 30.0, 28.0)));
    }

    #[test]
    fn compare_id_mismatch() {
        assert!(matches!(
            compare_paths("a", &result(1, 1.0), &annotation("b", 1, 0, 0)),
            Err(Error::IdMismatch { .. })
        ));
    }

    #[test]
    fn metrics_csv_layout() {
        let s = summarize(&pairs(&[39.0, 31.0, 40.0], &[38.0, 32.0, 40.0])).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,value\ncount,3\naccuracy_ratio,100\n"));
        assert_eq!(s.within_one, 1.0);
    }

    proptest! {
        #[test]
        fn histogram_conserves_count(values in prop::collection::vec(-1e3f64..1e3, 0..300), w in 0.1f64..50.0) {
            let bins = histogram(&values, w).unwrap();
            prop_assert_eq!(bins.iter().map(|b| b.1).sum::<usize>(), values.len());
            for win in bins.windows(2) {
                prop_assert!(win[1].0 > win[0].0);
            }
        }

        #[test]
        fn accuracy_scales_with_predictions(
            data in prop::collection::vec((0.0f64..100.0, 1.0f64..100.0), 1..50),
            c in 0.1f64..10.0,
        ) {
            let base: Vec<EvalPair> = data.iter().map(|&(p, t)| EvalPair::new("x", p, t)).collect();
            let scaled: Vec<EvalPair> = data.iter().map(|&(p, t)| EvalPair::new("x", c * p, t)).collect();
            let (a, b) = (accuracy_ratio(&base).unwrap(), accuracy_ratio(&scaled).unwrap());
            prop_assert!((b - c * a).abs() <= 1e-9 * (1.0 + b.abs()));
        }

        #[test]
        fn r_squared_at_most_one(data in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 2..50)) {
            let p: Vec<EvalPair> = data.iter().map(|&(p, t)| EvalPair::new("x", p, t)).collect();
            if let Ok(r) = r_squared(&p) {
                prop_assert!(r <= 1.0);
                let exact = p.iter().all(|q| q.predicted == q.truth);
                prop_assert_eq!(r == 1.0, exact);
            }
        }
    }
}
