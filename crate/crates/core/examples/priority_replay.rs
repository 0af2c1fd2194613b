//! Priority replay over a mixed buffer: offline transitions at priority 1,
//! online transitions scored by their distance from the BC policy.
//!
//! ```text
//! cargo run --release --example priority_replay
//! ```

use baq::bc::{train_bc, BcConfig};
use baq::envs::{generate_dataset, EnvKind, QualityTier};
use baq::losses::{behavior_weight, WeightParams};
use baq::mdp::{seeded, Transition};
use baq::replay::{PriorityBuffer, PriorityParams};

fn main() -> baq::Result<()> {
    let kind = EnvKind::by_name("point-mass")?;
    let ds = generate_dataset(&kind, &QualityTier::expert(), 2000, 0)?;
    let bc = train_bc(
        &ds,
        &BcConfig {
            steps: 1500,
            hidden: vec![32, 32],
            batch_size: 64,
            ..BcConfig::default()
        },
        0,
    )?
    .policy;

    let pp = PriorityParams::new(2.0, 1.0)?;
    let wp = WeightParams::new(1.0)?;
    let mut buf = PriorityBuffer::new(ds.len() + 8)?;
    buf.push_offline(&ds)?;

    let state = vec![0.5, -0.5, 0.0, 0.0];
    let expert_like = bc.mean_action(&state)?;
    for (label, action) in [
        ("BC mean", expert_like),
        ("opposite corner", vec![1.0, -1.0]),
        ("zero", vec![0.0, 0.0]),
    ] {
        let t = Transition {
            state: state.clone(),
            action: action.clone(),
            reward: 0.0,
            next_state: state.clone(),
            done: false,
        };
        let w = behavior_weight(&bc, &state, &action, &wp)?;
        let rho = buf.push_online(t, &bc, &pp)?;
        println!("{label:>16}: rho {rho:.3}, weight {w:.3}");
    }

    let mut rng = seeded(7);
    let draws = 100_000;
    let idx = buf.sample_indices(draws, &mut rng)?;
    let online_hits = idx.iter().filter(|&&i| i >= buf.offline_len()).count();
    let expected = (buf.total_priority() - buf.offline_len() as f64) / buf.total_priority();
    println!(
        "online share of draws: {:.5} (expected {:.5})",
        online_hits as f64 / draws as f64,
        expected
    );
    Ok(())
}
