//! Compares identity leakage of an image-level random split with an
//! identity-disjoint one.

use zsplit::audit;
use zsplit::split::{build_zero_shot_split, criteria_evaluate, naive_image_split};
use zsplit::synth::{self, SynthConfig};
use zsplit::SplitConfig;

fn main() -> zsplit::Result<()> {
    let dataset = synth::generate(&SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    })?;
    let config = SplitConfig {
        seed: 3,
        ..SplitConfig::default()
    };

    let naive = naive_image_split(&dataset, [0.5, 0.1, 0.4], 3)?;
    let overlap = audit::overlap_report(&dataset, &naive)?;
    let report = criteria_evaluate(&dataset, &naive, &config)?;
    println!(
        "random split: {} shared identities, {:.1}% of test images leak, criteria {:?}",
        overlap.common_identity_count,
        100.0 * overlap.common_image_fraction_test,
        report.verdicts()
    );

    let built = build_zero_shot_split(&dataset, &config)?;
    let overlap = audit::overlap_report(&dataset, &built.assignment)?;
    println!(
        "zero-shot split: {} shared identities, {:.1}% of test images leak, criteria {:?}",
        overlap.common_identity_count,
        100.0 * overlap.common_image_fraction_test,
        built.report.verdicts()
    );
    if overlap.lower_bound {
        println!("some images lack an identity, so leakage figures are lower bounds");
    }
    Ok(())
}
