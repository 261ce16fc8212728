//! Label-based and instance-based metrics on a small hand-made example.

use ndarray::array;
use zsplit::io::ScoreKind;
use zsplit::metrics::{binarize_scores, instance_metrics, mean_accuracy};

fn main() -> zsplit::Result<()> {
    let truth = array![[1u8, 0], [1, 1], [0, 1], [0, 0]];
    let scores = [[0.9, 0.1], [0.4, 0.8], [0.2, 0.5], [0.7, 0.3]];
    let rows: Vec<Vec<u8>> = scores
        .iter()
        .map(|s| binarize_scores(s, ScoreKind::Probs, 0.5))
        .collect();
    let predicted = ndarray::Array2::from_shape_fn((4, 2), |(i, j)| rows[i][j]);

    let ma = mean_accuracy(truth.view(), predicted.view())?;
    for a in &ma.per_attribute {
        println!(
            "attribute {}: TPR {:.3} TNR {:.3}",
            a.attribute, a.tpr, a.tnr
        );
    }
    println!("mA {:.4}", ma.m_a);

    let inst = instance_metrics(truth.view(), predicted.view())?;
    println!(
        "accuracy {:.4} precision {:.4} recall {:.4} F1 {:.4}",
        inst.accuracy, inst.precision, inst.recall, inst.f1
    );
    Ok(())
}
