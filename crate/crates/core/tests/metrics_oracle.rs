mod common;

use ndarray::Array2;
use proptest::prelude::*;
use zsplit::io::{PredictionSet, ScoreKind};
use zsplit::metrics::{self, Subset};
use zsplit::{Dataset, Error, Record};

fn to_array(rows: &[Vec<u8>]) -> Array2<u8> {
    let m = rows[0].len();
    Array2::from_shape_fn((rows.len(), m), |(i, j)| rows[i][j])
}

fn matrices() -> impl Strategy<Value = (Vec<Vec<u8>>, Vec<Vec<u8>>)> {
    (1usize..=8, 1usize..=4).prop_flat_map(|(n, m)| {
        let row = proptest::collection::vec(0u8..=1, m);
        (
            proptest::collection::vec(row.clone(), n),
            proptest::collection::vec(row, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_brute_force((truth, pred) in matrices()) {
        let oracle = common::reference_metrics(&truth, &pred);
        let (y, p) = (to_array(&truth), to_array(&pred));
        match metrics::mean_accuracy(y.view(), p.view()) {
            Ok(ma) => prop_assert!((ma.m_a - oracle.m_a.unwrap()).abs() < 1e-12),
            Err(Error::UndefinedMeanAccuracy) => prop_assert!(oracle.m_a.is_none()),
            Err(e) => panic!("{e}"),
        }
        let inst = metrics::instance_metrics(y.view(), p.view()).unwrap();
        prop_assert!((inst.accuracy - oracle.accuracy).abs() < 1e-12);
        prop_assert!((inst.precision - oracle.precision).abs() < 1e-12);
        prop_assert!((inst.recall - oracle.recall).abs() < 1e-12);
        prop_assert!((inst.f1 - oracle.f1).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one((truth, _) in matrices()) {
        let y = to_array(&truth);
        let inst = metrics::instance_metrics(y.view(), y.view()).unwrap();
        prop_assert_eq!((inst.accuracy, inst.precision, inst.recall, inst.f1), (1.0, 1.0, 1.0, 1.0));
        if let Ok(ma) = metrics::mean_accuracy(y.view(), y.view()) {
            prop_assert_eq!(ma.m_a, 1.0);
        }
    }

    #[test]
    fn complement_scores_zero((truth, _) in matrices()) {
        let y = to_array(&truth);
        let flipped = y.mapv(|v| 1 - v);
        if let Ok(ma) = metrics::mean_accuracy(y.view(), flipped.view()) {
            prop_assert_eq!(ma.m_a, 0.0);
        }
        let inst = metrics::instance_metrics(y.view(), flipped.view()).unwrap();
        prop_assert_eq!(inst.accuracy, 0.0);
    }

    #[test]
    fn metrics_lie_in_unit_interval((truth, pred) in matrices()) {
        let (y, p) = (to_array(&truth), to_array(&pred));
        let inst = metrics::instance_metrics(y.view(), p.view()).unwrap();
        for v in [inst.accuracy, inst.precision, inst.recall, inst.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn binarization_boundary_is_positive(t in 0.01f64..0.99) {
        prop_assert_eq!(metrics::binarize_scores(&[t], ScoreKind::Probs, t), vec![1]);
        prop_assert_eq!(metrics::binarize_scores(&[t - 1e-9], ScoreKind::Probs, t), vec![0]);
    }
}

#[test]
fn worked_example() {
    let (truth, pred) = common::worked_example();
    let (y, p) = (to_array(&truth), to_array(&pred));
    let ma = metrics::mean_accuracy(y.view(), p.view()).unwrap();
    assert_eq!(ma.m_a, 0.75);
    let inst = metrics::instance_metrics(y.view(), p.view()).unwrap();
    assert_eq!(inst.accuracy, 0.625);
    assert_eq!(inst.precision, 0.75);
    assert_eq!(inst.recall, 0.625);
    assert!((inst.f1 - 15.0 / 22.0).abs() < 1e-12);
}

#[test]
fn evaluate_reports_names_and_exclusions() {
    let catalog = common::catalog(2);
    let ds = Dataset::new(
        catalog,
        vec![
            Record::new("x", Some("p"), vec![1, 0]),
            Record::new("y", Some("q"), vec![0, 0]),
        ],
    )
    .unwrap();
    let preds = PredictionSet::new(
        &ds,
        ScoreKind::Logits,
        vec![("x".into(), vec![2.0, -1.0]), ("y".into(), vec![-3.0, 0.0])],
    )
    .unwrap();
    let report = metrics::evaluate_covered(&ds, &preds).unwrap();
    assert_eq!(report.subset, Subset::All);
    assert_eq!(report.m_a, Some(1.0));
    assert_eq!(report.excluded, vec!["a1".to_string()]);
    // Logit 0 sits exactly on the 0.5 boundary and counts as positive.
    assert_eq!(report.precision, 0.5);
}
