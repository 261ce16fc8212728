//! Scores predictions separately on test images whose identity was seen in
//! training and on those that were not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsplit::io::{PredictionSet, ScoreKind};
use zsplit::metrics::partitioned_eval;
use zsplit::split::naive_image_split;
use zsplit::synth::{self, SynthConfig};

fn main() -> zsplit::Result<()> {
    let dataset = synth::generate(&SynthConfig {
        identity_count: 800,
        seed: 5,
        ..SynthConfig::default()
    })?;
    let split = naive_image_split(&dataset, [0.5, 0.1, 0.4], 5)?;

    // A noisy predictor: each score leans towards the true label.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let rows = dataset
        .records()
        .iter()
        .map(|r| {
            let scores = r.labels.iter().map(|&y| {
                let noise: f64 = rng.random_range(-0.6..0.6);
                (f64::from(y) + noise).clamp(0.0, 1.0)
            });
            (r.image_id.clone(), scores.collect())
        })
        .collect();
    let predictions = PredictionSet::new(&dataset, ScoreKind::Probs, rows)?;

    let report = partitioned_eval(&dataset, &split, &predictions)?;
    println!(
        "all test images: {} images, mA {:?}",
        report.all.images, report.all.m_a
    );
    for subset in [&report.common_identity, &report.unique_identity] {
        match subset.report() {
            Some(r) => println!(
                "{:?}: {} images, mA {:?}, F1 {:.4}",
                r.subset, r.images, r.m_a, r.f1
            ),
            None => println!("empty subset"),
        }
    }
    Ok(())
}
