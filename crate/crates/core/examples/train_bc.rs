//! Behavior cloning on a medium-expert dataset, then the action-MSE
//! diagnostic comparing the BC policy with an offline-trained CQL actor.
//!
//! ```text
//! cargo run --release --example train_bc
//! ```

use baq::bc::{bc_action_mse, train_bc, BcConfig};
use baq::envs::{generate_dataset, EnvKind, QualityTier};
use baq::harness::{run_offline_on, Algo, ExperimentConfig};
use baq::mdp::Tier;

fn main() -> baq::Result<()> {
    let kind = EnvKind::by_name("point-mass")?;
    let ds = generate_dataset(&kind, &QualityTier::medium_expert(), 5000, 0)?;
    let spec = kind.spec()?;

    let cfg = BcConfig {
        steps: 3000,
        batch_size: 64,
        hidden: vec![32, 32],
        log_every: 500,
        action_bounds: Some((spec.action_low.clone(), spec.action_high.clone())),
        ..BcConfig::default()
    };
    let bc = train_bc(&ds, &cfg, 0)?;
    for (step, nll) in &bc.loss_log {
        println!("bc step {step:>5}: nll {nll:.4}");
    }

    let mut exp = ExperimentConfig::desk("point-mass", Tier::MediumExpert, "cql".parse::<Algo>()?);
    exp.offline_steps = 3000;
    let offline = run_offline_on(&exp, &ds, 0)?;

    let (_, bc_mse) = bc_action_mse(&bc.policy, &ds)?;
    let (_, actor_mse) = bc_action_mse(&offline.agent, &ds)?;
    println!("action MSE vs dataset: pi_BC {bc_mse:.4}, offline CQL actor {actor_mse:.4}");
    Ok(())
}
