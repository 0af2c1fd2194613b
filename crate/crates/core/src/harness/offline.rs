use std::time::Instant;

use super::agent::{Agent, AgentParams};
use super::config::ExperimentConfig;
use super::record::{at_step, derive_seed, evaluate, RunRecord, STREAM_EVAL, STREAM_OFFLINE};
use crate::bc::sample_dataset_batch;
use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::mdp::{dataset_load, seeded, Dataset, MetricsRow};

/// Pretrained agent plus the record of its offline phase.
#[derive(Clone, Debug)]
pub struct OfflineOutcome {
    pub agent: Agent,
    pub record: RunRecord,
}

/// Loads the dataset named by `cfg.data_path`.
pub fn load_configured_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    let path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| Error::config("no dataset configured (set 'data')"))?;
    if !path.exists() {
        return Err(Error::config(format!(
            "dataset {} does not exist",
            path.display()
        )));
    }
    dataset_load(path)
}

/// [`run_offline_on`] with the dataset from `cfg.data_path`.
pub fn run_offline(cfg: &ExperimentConfig, seed: u64) -> Result<OfflineOutcome> {
    let ds = load_configured_dataset(cfg)?;
    run_offline_on(cfg, &ds, seed)
}

/// Trains the base algorithm of `cfg.algo` on a static dataset for
/// `cfg.offline_steps` uniformly sampled minibatches, then evaluates once.
pub fn run_offline_on(cfg: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<OfflineOutcome> {
    cfg.validate()?;
    ds.require_non_empty()?;
    let kind = EnvKind::by_name(&cfg.env)?;
    let spec = kind.spec()?;
    if (ds.state_dim, ds.action_dim) != (spec.state_dim, spec.action_dim) {
        return Err(Error::config(format!(
            "dataset is {}x{}, environment {} is {}x{}",
            ds.state_dim, ds.action_dim, cfg.env, spec.state_dim, spec.action_dim
        )));
    }
    let started = Instant::now();
    let mut rng = seeded(derive_seed(seed, STREAM_OFFLINE));
    let params = AgentParams::from_config(cfg, &spec);
    let mut agent = Agent::new(cfg.algo.base, spec, params, &mut rng)?;
    for step in 0..cfg.offline_steps {
        let batch = sample_dataset_batch(ds, cfg.batch_size, &mut rng)?;
        agent
            .critic_update(&batch, None, None, &mut rng)
            .map_err(|e| at_step(e, "offline", step))?;
        agent
            .actor_update(&batch, &mut rng)
            .map_err(|e| at_step(e, "offline", step))?;
    }
    let anchors = kind.anchors()?;
    let report = evaluate(
        &agent,
        &kind,
        cfg.eval_episodes,
        derive_seed(seed, STREAM_EVAL),
        &anchors,
    )?;
    let record = RunRecord {
        label: format!("{}-offline", cfg.algo.base.as_str()),
        seed,
        config: cfg.to_text(),
        series: vec![MetricsRow::new(cfg.offline_steps as u64, &report)],
        wall_clock_secs: started.elapsed().as_secs_f64(),
        checkpoints: Vec::new(),
    };
    Ok(OfflineOutcome { agent, record })
}
