//! Exact tabular oracles on the chain MDP: value iteration, then offline CQL
//! and IQL compared against it.
//!
//! ```text
//! cargo run --release --example chain_oracle
//! ```

use baq::envs::{generate_dataset, value_iteration, ChainConfig, ChainEnv, EnvKind, QualityTier};
use baq::harness::{run_offline_on, Algo, ExperimentConfig};
use baq::mdp::{argmax, Tier};
use ndarray::Array2;

fn main() -> baq::Result<()> {
    let env = ChainEnv::new(ChainConfig::default())?;
    let q_star = value_iteration(&env, 1e-10)?;
    for s in 0..env.n_states() {
        let row: Vec<String> = q_star.row(s).iter().map(|v| format!("{v:.2}")).collect();
        println!("s{s}: Q* = [{}]", row.join(", "));
    }

    let kind = EnvKind::by_name("chain")?;
    let ds = generate_dataset(&kind, &QualityTier::expert(), 2000, 0)?;
    for tag in ["cql", "iql"] {
        let mut cfg = ExperimentConfig::desk("chain", Tier::Expert, tag.parse::<Algo>()?);
        cfg.offline_steps = 3000;
        let out = run_offline_on(&cfg, &ds, 0)?;
        let (n, m) = (env.n_states(), env.n_actions());
        let mut states = Array2::zeros((n * m, n));
        let mut actions = Array2::zeros((n * m, m));
        for s in 0..n {
            for a in 0..m {
                states[[s * m + a, s]] = 1.0;
                actions[[s * m + a, a]] = 1.0;
            }
        }
        let q = out.agent.q_values(&states, &actions)?;
        let greedy: Vec<usize> = q.chunks(m).map(argmax).collect();
        let q0: Vec<f64> = q.chunks(m).map(|row| row[0]).collect();
        println!("{tag}: greedy actions {greedy:?}");
        let q0: Vec<String> = q0.iter().map(|v| format!("{v:.2}")).collect();
        println!("{tag}: Q(s, right) [{}]", q0.join(", "));
    }
    Ok(())
}
