//! Imbalance-weighted cross-entropy of a linear classifier and its gradient.

use ndarray::{array, Array2};
use zsplit::audit::sample_weight;
use zsplit::loss::{cosine_logits, weighted_bce, weighted_bce_grad, DEFAULT_COSINE_SCALE};

fn main() -> zsplit::Result<()> {
    let ratios = [0.1, 0.5, 0.9];
    for r in ratios {
        println!(
            "r = {r}: positive weight {:.4}, negative weight {:.4}",
            sample_weight(r, true)?,
            sample_weight(r, false)?
        );
    }

    let features = array![[0.5, -1.0], [1.5, 0.2], [-0.3, 0.8]];
    let weights = array![[0.4, -0.2, 1.0], [0.3, 0.9, -0.5]];
    let labels: Array2<u8> = array![[1, 0, 1], [0, 1, 1], [0, 0, 0]];

    let logits = features.dot(&weights);
    println!(
        "linear loss {:.6}",
        weighted_bce(logits.view(), labels.view(), &ratios)?
    );
    println!(
        "gradient\n{:.4}",
        weighted_bce_grad(logits.view(), labels.view(), &ratios)?
    );

    let cosine = cosine_logits(features.view(), weights.view(), DEFAULT_COSINE_SCALE)?;
    println!(
        "cosine loss {:.6}",
        weighted_bce(cosine.view(), labels.view(), &ratios)?
    );
    Ok(())
}
