//! Offline pretraining of CQL and IQL on the same dataset, saving checkpoints.
//!
//! ```text
//! cargo run --release --example offline_pretrain
//! ```

use baq::envs::{generate_dataset, EnvKind, QualityTier};
use baq::harness::{run_offline_on, Algo, ExperimentConfig};
use baq::mdp::Tier;

fn main() -> baq::Result<()> {
    let kind = EnvKind::by_name("point-mass")?;
    let ds = generate_dataset(&kind, &QualityTier::medium(), 5000, 0)?;
    for tag in ["cql", "iql"] {
        let mut cfg = ExperimentConfig::desk("point-mass", Tier::Medium, tag.parse::<Algo>()?);
        cfg.offline_steps = 4000;
        let started = std::time::Instant::now();
        let out = run_offline_on(&cfg, &ds, 0)?;
        let row = out.record.series.last().expect("final evaluation");
        let dir = std::env::temp_dir().join(format!("baq-{tag}-offline"));
        let files = out.agent.save(&dir)?;
        println!(
            "{tag}: normalized {:.1} after {} steps in {:.1}s, {} checkpoint files in {}",
            row.normalized_score,
            cfg.offline_steps,
            started.elapsed().as_secs_f64(),
            files.len(),
            dir.display()
        );
    }
    Ok(())
}
