//! Builds an identity-disjoint split of a synthetic dataset and writes it
//! next to the dataset in a temp directory.

use zsplit::io::{self, FileFormat};
use zsplit::split::build_zero_shot_split;
use zsplit::synth::{self, SynthConfig};
use zsplit::SplitConfig;

fn main() -> zsplit::Result<()> {
    let dataset = synth::generate(&SynthConfig {
        identity_count: 1500,
        seed: 42,
        ..SynthConfig::default()
    })?;
    let config = SplitConfig {
        seed: 1,
        ..SplitConfig::default()
    };
    let built = build_zero_shot_split(&dataset, &config)?;

    let c = &built.report.c1_identity_ratio.identities;
    let n = &built.report.c4_image_balance.images;
    println!("identities {}/{}/{}", c.train, c.valid, c.test);
    println!("images     {}/{}/{}", n.train, n.valid, n.test);
    println!(
        "restart {} after {} proposals, pass = {}",
        built.restart, built.proposals, built.report.pass
    );

    let dir = std::env::temp_dir().join("zsplit-example");
    std::fs::create_dir_all(&dir).map_err(|e| zsplit::Error::io(&dir, e))?;
    io::save_dataset(&dataset, &dir.join("people.csv"), FileFormat::Csv)?;
    io::write_split(
        &dir.join("split.json"),
        &dataset,
        &built.assignment,
        Some(&config),
        Some(&built.report),
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}
