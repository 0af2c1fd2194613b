//! The full BAQ pipeline: dataset, behavior cloning, offline CQL, then online
//! fine-tuning with prioritized replay and behavior-weighted critic losses.
//!
//! ```text
//! cargo run --release --example finetune_baq
//! ```

use baq::harness::{Algo, ExperimentConfig, Workbench};
use baq::mdp::Tier;

fn main() -> baq::Result<()> {
    let mut cfg = ExperimentConfig::desk("point-mass", Tier::Medium, "baq-cql".parse::<Algo>()?);
    cfg.offline_steps = 3000;
    cfg.online_steps = 3000;
    cfg.eval_every = 500;
    println!(
        "k_q = {}, k_rho = {}, sampling {:?}, weighted {}",
        cfg.k_q(),
        cfg.k_rho(),
        cfg.sampling(),
        cfg.weighted()
    );

    let mut bench = Workbench::new();
    let out = bench.run(&cfg, 0)?;
    for row in &out.record.series {
        println!(
            "step {:>5}: return {:>9.2}  normalized {:>6.2}",
            row.step, row.mean_return, row.normalized_score
        );
    }
    println!(
        "{} priority-sampled batches, {} critic and {} actor updates",
        out.batches_consumed, out.critic_updates, out.actor_updates
    );
    Ok(())
}
