//! Early fine-tuning of BAQ against SO2, SUF and the plain base algorithm from
//! one shared offline checkpoint, written out as an SVG chart and CSV.
//!
//! ```text
//! cargo run --release --example compare_baselines
//! ```

use baq::harness::{emit_plot, Algo, ExperimentConfig, Workbench};
use baq::mdp::Tier;

fn main() -> baq::Result<()> {
    let mut bench = Workbench::new();
    let mut records = Vec::new();
    for tag in ["iql", "baq-iql", "so2-iql", "suf-iql"] {
        let mut cfg =
            ExperimentConfig::desk("point-mass", Tier::MediumExpert, tag.parse::<Algo>()?);
        cfg.offline_steps = 3000;
        cfg.online_steps = 1000;
        cfg.eval_every = 250;
        cfg.seeds = vec![0, 1];
        let runs = bench.run_seeds(&cfg)?;
        let early: f64 = runs
            .iter()
            .map(|r| r.mean_return_until(1000).unwrap_or(f64::NAN))
            .sum::<f64>()
            / runs.len() as f64;
        println!("{tag:>8}: mean eval return over the first 1k steps {early:.2}");
        records.extend(runs);
    }
    let svg = std::env::temp_dir().join("baq-compare.svg");
    let csv = emit_plot(&records, &svg)?;
    println!("wrote {} and {}", svg.display(), csv.display());
    Ok(())
}
