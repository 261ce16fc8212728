//! Linear and cosine attribute classifiers and the imbalance-weighted
//! binary cross-entropy with its analytic gradient, in double precision.
//!
//! Each element's weight is chosen by its own label: `e^(1-r_j)` for a
//! positive and `e^(r_j)` for a negative, with `r_j` the training-set
//! positive ratio of attribute `j`. The loss carries the usual leading
//! minus, so it is non-negative and minimized at the correct labels.

use ndarray::{Array2, ArrayView2, Axis};

use crate::audit::weight_unchecked;
use crate::error::{Error, Result};

/// Default scale of [`cosine_logits`].
pub const DEFAULT_COSINE_SCALE: f64 = 30.0;

/// Logistic sigmoid that neither overflows nor loses precision for large
/// `|z|`.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Pairwise (cascade) summation; the result does not depend on thread
/// scheduling and has O(log n) error growth.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn check_finite(m: &ArrayView2<'_, f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} contains non-finite entries")))
    }
}

/// Probabilities `sigmoid(w_j . x_i)` for features `N x d` and classifier
/// weights `d x M`.
pub fn linear_probs(
    features: ArrayView2<'_, f64>,
    weights: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    if features.ncols() == 0 || features.ncols() != weights.nrows() {
        return Err(Error::shape(
            format!("weights with {} rows", features.ncols()),
            format!("{} rows", weights.nrows()),
        ));
    }
    check_finite(&features, "features")?;
    check_finite(&weights, "weights")?;
    Ok(features.dot(&weights).mapv(sigmoid))
}

/// Scaled cosine similarity between each feature row and each weight
/// column.
pub fn cosine_logits(
    features: ArrayView2<'_, f64>,
    weights: ArrayView2<'_, f64>,
    scale: f64,
) -> Result<Array2<f64>> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::Domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    if features.ncols() == 0 || features.ncols() != weights.nrows() {
        return Err(Error::shape(
            format!("weights with {} rows", features.ncols()),
            format!("{} rows", weights.nrows()),
        ));
    }
    check_finite(&features, "features")?;
    check_finite(&weights, "weights")?;
    let row_norms = features.map_axis(Axis(1), |r| r.dot(&r).sqrt());
    let col_norms = weights.map_axis(Axis(0), |c| c.dot(&c).sqrt());
    if let Some(i) = row_norms.iter().position(|&n| n == 0.0) {
        return Err(Error::Domain(format!("zero-norm feature row {i}")));
    }
    if let Some(j) = col_norms.iter().position(|&n| n == 0.0) {
        return Err(Error::Domain(format!("zero-norm weight column {j}")));
    }
    let mut logits = features.dot(&weights);
    for ((i, j), v) in logits.indexed_iter_mut() {
        *v = scale * *v / (row_norms[i] * col_norms[j]);
    }
    Ok(logits)
}

fn check_loss_inputs(
    logits: &ArrayView2<'_, f64>,
    labels: &ArrayView2<'_, u8>,
    ratios: &[f64],
) -> Result<()> {
    if logits.dim() != labels.dim() {
        return Err(Error::shape(
            format!("labels {:?}", logits.dim()),
            format!("{:?}", labels.dim()),
        ));
    }
    if ratios.len() != logits.ncols() {
        return Err(Error::shape(
            format!("{} ratios", logits.ncols()),
            ratios.len(),
        ));
    }
    if logits.nrows() == 0 {
        return Err(Error::Domain("no rows".into()));
    }
    if let Some(r) = ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!(
            "positive ratio must lie in [0,1], got {r}"
        )));
    }
    if let Some(v) = labels.iter().find(|&&v| v > 1) {
        return Err(Error::Domain(format!("non-binary label {v}")));
    }
    if logits.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("NaN logit".into()));
    }
    Ok(())
}

/// Weighted binary cross-entropy averaged over rows and summed over
/// attributes.
pub fn weighted_bce(
    logits: ArrayView2<'_, f64>,
    labels: ArrayView2<'_, u8>,
    ratios: &[f64],
) -> Result<f64> {
    check_loss_inputs(&logits, &labels, ratios)?;
    let n = logits.nrows() as f64;
    let terms: Vec<f64> = logits
        .indexed_iter()
        .map(|((i, j), &z)| {
            let positive = labels[[i, j]] == 1;
            // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
            let nll = if positive { softplus(-z) } else { softplus(z) };
            weight_unchecked(ratios[j], positive) * nll
        })
        .collect();
    Ok(pairwise_sum(&terms) / n)
}

/// Gradient of [`weighted_bce`] with respect to each logit:
/// `w_ij (sigmoid(z_ij) - y_ij) / N`.
pub fn weighted_bce_grad(
    logits: ArrayView2<'_, f64>,
    labels: ArrayView2<'_, u8>,
    ratios: &[f64],
) -> Result<Array2<f64>> {
    check_loss_inputs(&logits, &labels, ratios)?;
    let n = logits.nrows() as f64;
    let mut grad = Array2::zeros(logits.dim());
    for ((i, j), g) in grad.indexed_iter_mut() {
        let positive = labels[[i, j]] == 1;
        let y = if positive { 1.0 } else { 0.0 };
        *g = weight_unchecked(ratios[j], positive) * (sigmoid(logits[[i, j]]) - y) / n;
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1e4), 0.0);
        assert_eq!(sigmoid(1e4), 1.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((softplus(-1e4)).abs() < 1e-300);
        assert_eq!(softplus(1e4), 1e4);
    }

    #[test]
    fn linear_examples() {
        let x = array![[1.0, 0.0], [0.3, -2.0]];
        let zero = Array2::<f64>::zeros((2, 3));
        assert!(linear_probs(x.view(), zero.view())
            .unwrap()
            .iter()
            .all(|&p| p == 0.5));
        let w = array![[3.0], [5.0]];
        let p = linear_probs(x.view(), w.view()).unwrap();
        assert!((p[[0, 0]] - 0.952_574_126_822_433_4).abs() < 1e-12);
        let w_bad = array![[1.0, 2.0]];
        assert!(linear_probs(x.view(), w_bad.view()).is_err());
        let far = array![[1.0]];
        let w_far = array![[-1e4]];
        let p = linear_probs(far.view(), w_far.view()).unwrap();
        assert_eq!(p[[0, 0]], 0.0);
    }

    #[test]
    fn cosine_examples() {
        let x = array![[1.0, 2.0], [2.0, -1.0]];
        let w = array![[2.0], [4.0]];
        let z = cosine_logits(x.view(), w.view(), 30.0).unwrap();
        assert!((z[[0, 0]] - 30.0).abs() < 1e-12);
        assert!(z[[1, 0]].abs() < 1e-12);
        let scaled = w.mapv(|v| v * 7.5);
        let z2 = cosine_logits(x.view(), scaled.view(), 30.0).unwrap();
        assert!(z.iter().zip(z2.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        let zero_row = array![[0.0, 0.0]];
        assert!(cosine_logits(zero_row.view(), w.view(), 30.0).is_err());
    }

    #[test]
    fn single_element_closed_forms() {
        let z = array![[0.0]];
        let y = array![[1u8]];
        let loss = weighted_bce(z.view(), y.view(), &[0.5]).unwrap();
        assert!((loss - 0.5f64.exp() * 2f64.ln()).abs() < 1e-12);
        let g = weighted_bce_grad(z.view(), y.view(), &[0.5]).unwrap();
        assert!((g[[0, 0]] + 0.824_360_635_350_064_1).abs() < 1e-12);
    }

    #[test]
    fn confident_correct_limit() {
        let y = array![[1u8, 0]];
        let z = array![[800.0, -800.0]];
        assert_eq!(weighted_bce(z.view(), y.view(), &[0.3, 0.3]).unwrap(), 0.0);
        let g = weighted_bce_grad(z.view(), y.view(), &[0.3, 0.3]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let z = array![[0.0, 1.0]];
        let y = array![[1u8, 0]];
        assert!(weighted_bce(z.view(), y.view(), &[0.5]).is_err());
        assert!(weighted_bce(z.view(), y.view(), &[0.5, 1.5]).is_err());
        let y3 = array![[1u8, 0, 1]];
        assert!(weighted_bce_grad(z.view(), y3.view(), &[0.5, 0.5]).is_err());
    }

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let v: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 499_500.0);
    }
}
