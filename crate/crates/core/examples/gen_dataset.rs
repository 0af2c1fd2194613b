//! Generate offline datasets for every quality tier and round-trip one
//! through the binary container.
//!
//! ```text
//! cargo run --release --example gen_dataset
//! ```

use baq::envs::{generate_dataset, EnvKind, QualityTier};
use baq::mdp::{dataset_load, dataset_save, Tier};

fn main() -> baq::Result<()> {
    let kind = EnvKind::by_name("point-mass")?;
    let anchors = kind.anchors()?;
    println!(
        "point-mass anchors: random {:.1}, expert {:.1}",
        anchors.random_return, anchors.expert_return
    );
    for tier in [
        Tier::Expert,
        Tier::MediumExpert,
        Tier::Medium,
        Tier::MediumReplay,
    ] {
        let ds = generate_dataset(&kind, &QualityTier::for_tier(tier), 4000, 0)?;
        let per_step = ds.mean_reward();
        println!(
            "{:>14}: {} transitions, mean reward {per_step:.3}",
            tier.as_str(),
            ds.len()
        );
    }

    let chain = EnvKind::by_name("chain")?;
    let ds = generate_dataset(&chain, &QualityTier::expert(), 500, 1)?;
    let path = std::env::temp_dir().join("baq-chain-expert.baqd");
    dataset_save(&ds, &path)?;
    let back = dataset_load(&path)?;
    assert_eq!(ds, back);
    println!(
        "chain expert dataset round-tripped through {}",
        path.display()
    );
    Ok(())
}
