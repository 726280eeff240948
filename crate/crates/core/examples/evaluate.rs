//! Score predictions against ground truth: accuracy ratio, both R²
//! definitions, a histogram, and the two expert comparisons.

use kernelrow::eval::{accuracy_ratio, compare_counts, histogram, pearson_r_squared, r_squared, EvalPair};
use kernelrow::model::{AnnotationDot, DotLabel, GroundTruthAnnotation};

fn main() -> kernelrow::Result<()> {
    let pairs: Vec<EvalPair> = [("a", 39.0, 38.0), ("b", 31.0, 32.0), ("c", 40.0, 40.0), ("d", 35.0, 36.0)]
        .into_iter()
        .map(|(id, p, t)| EvalPair::new(id, p, t))
        .collect();
    println!("accuracy ratio   {:.3}%", accuracy_ratio(&pairs)?);
    println!("R² (identity)    {:.4}", r_squared(&pairs)?);
    println!("R² (regression)  {:.4}", pearson_r_squared(&pairs)?);

    let values: Vec<f64> = pairs.iter().map(|p| p.predicted).collect();
    for (start, count) in histogram(&values, 5.0)? {
        println!("  [{start}, {}) {}", start + 5.0, "#".repeat(count));
    }

    // an expert marked 29 of the model's 30 kernels valid, and counted 31 on
    // a path of their own
    let dot = |label| AnnotationDot { x: 0.0, y: 0.0, label };
    let mut dots = vec![dot(DotLabel::Valid); 29];
    dots.push(dot(DotLabel::Invalid));
    dots.extend(vec![dot(DotLabel::ExpertCount); 31]);
    let ann = GroundTruthAnnotation {
        ear_id: "a".into(),
        expert_path: Vec::new(),
        dots,
    };
    let c = compare_counts("a", 30, 30.33, &ann)?;
    println!("model path  {:?}", c.model_path);
    println!("expert path {:?}", c.expert_path);
    Ok(())
}
