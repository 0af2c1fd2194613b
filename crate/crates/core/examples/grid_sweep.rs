//! A small (k_q, k_rho) sweep for BAQ-IQL, printed as a heatmap CSV.
//!
//! ```text
//! cargo run --release --example grid_sweep
//! ```

use baq::harness::{grid_sweep, Algo, ExperimentConfig, Workbench};
use baq::mdp::Tier;

fn main() -> baq::Result<()> {
    let mut cfg =
        ExperimentConfig::desk("point-mass", Tier::MediumExpert, "baq-iql".parse::<Algo>()?);
    cfg.offline_steps = 2000;
    cfg.online_steps = 1000;
    cfg.eval_every = 500;
    cfg.seeds = vec![0];

    let mut bench = Workbench::new();
    let map = grid_sweep(&mut bench, &cfg, &[0.5, 1.0, 2.0], &[0.5, 2.0])?;
    print!("{}", map.to_csv());
    let (i, j) = map.best_cell();
    println!("best cell: k_q = {}, k_rho = {}", map.k_q[i], map.k_rho[j]);
    Ok(())
}
