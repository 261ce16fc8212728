//! Generates a synthetic dataset and prints its attribute statistics.

use zsplit::audit::positive_ratios_all;
use zsplit::synth::{self, SynthConfig};
use zsplit::validate_dataset;

fn main() -> zsplit::Result<()> {
    let config = SynthConfig {
        identity_count: 200,
        attribute_count: 6,
        seed: 11,
        ..SynthConfig::default()
    };
    let dataset = synth::generate(&config)?;
    let unlabeled = dataset
        .records()
        .iter()
        .filter(|r| r.identity.is_none())
        .count();
    println!("{} images, {} without identity", dataset.len(), unlabeled);
    println!("valid: {}", validate_dataset(&dataset).ok);

    for a in positive_ratios_all(&dataset)?.attributes {
        println!(
            "{:>6}  r = {:.3}  w+ = {:.3}  w- = {:.3}",
            a.name, a.ratio, a.weight_positive, a.weight_negative
        );
    }
    Ok(())
}
