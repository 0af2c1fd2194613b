use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::config::ExperimentConfig;
use super::finetune::{run_finetune, FinetuneOutcome};
use super::offline::{load_configured_dataset, run_offline_on, OfflineOutcome};
use super::record::{derive_seed, RunRecord, STREAM_BC};
use crate::bc::{train_bc, BcConfig};
use crate::envs::{generate_dataset, EnvKind, QualityTier};
use crate::error::{Error, Result};
use crate::mdp::Dataset;
use crate::nn::GaussianPolicy;

/// Memoizes datasets, behavior-cloning policies and pretrained agents so
/// that many fine-tuning variants can share one offline phase per seed.
///
/// Cache keys cover every setting that influences the cached artifact, so
/// configurations that differ only in fine-tuning knobs share entries.
#[derive(Default)]
pub struct Workbench {
    datasets: HashMap<String, Dataset>,
    bc: HashMap<String, GaussianPolicy>,
    offline: HashMap<String, OfflineOutcome>,
}

fn dataset_key(cfg: &ExperimentConfig) -> String {
    format!(
        "{}|{}|{}|{}|{:?}",
        cfg.env, cfg.tier, cfg.dataset_size, cfg.data_seed, cfg.data_path
    )
}

fn bc_key(cfg: &ExperimentConfig, seed: u64) -> String {
    format!(
        "{}|{}|{}|{}|{:?}|{seed}",
        dataset_key(cfg),
        cfg.bc_steps,
        cfg.batch_size,
        cfg.learning_rate,
        cfg.hidden
    )
}

fn offline_key(cfg: &ExperimentConfig, seed: u64) -> String {
    format!(
        "{}|{}|{}|{}|{}|{:?}|{}|{:?}|{:?}|{:?}|{}|{seed}",
        dataset_key(cfg),
        cfg.algo.base.as_str(),
        cfg.offline_steps,
        cfg.batch_size,
        cfg.learning_rate,
        cfg.hidden,
        cfg.polyak,
        cfg.gamma,
        cfg.cql,
        cfg.iql,
        cfg.eval_episodes,
    )
}

/// Behavior-cloning settings derived from an experiment configuration; the
/// cloned mean is clipped to the environment's action box.
pub fn bc_config(cfg: &ExperimentConfig) -> Result<BcConfig> {
    let spec = EnvKind::by_name(&cfg.env)?.spec()?;
    Ok(BcConfig {
        steps: cfg.bc_steps,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        hidden: cfg.hidden.clone(),
        log_every: 1000,
        action_bounds: Some((spec.action_low, spec.action_high)),
    })
}

impl Workbench {
    pub fn new() -> Self {
        Self::default()
    }

    /// The configured dataset file, or a freshly generated one for
    /// `(env, tier, dataset_size, data_seed)`.
    pub fn dataset(&mut self, cfg: &ExperimentConfig) -> Result<&Dataset> {
        let key = dataset_key(cfg);
        if !self.datasets.contains_key(&key) {
            let ds = if cfg.data_path.is_some() {
                load_configured_dataset(cfg)?
            } else {
                let kind = EnvKind::by_name(&cfg.env)?;
                let n = if cfg.dataset_size == 0 {
                    QualityTier::default_size(cfg.tier)
                } else {
                    cfg.dataset_size
                };
                generate_dataset(&kind, &QualityTier::for_tier(cfg.tier), n, cfg.data_seed)?
            };
            self.datasets.insert(key.clone(), ds);
        }
        Ok(&self.datasets[&key])
    }

    pub fn bc_policy(&mut self, cfg: &ExperimentConfig, seed: u64) -> Result<GaussianPolicy> {
        let key = bc_key(cfg, seed);
        if let Some(p) = self.bc.get(&key) {
            return Ok(p.clone());
        }
        let bc_cfg = bc_config(cfg)?;
        let ds = self.dataset(cfg)?;
        let policy = train_bc(ds, &bc_cfg, derive_seed(seed, STREAM_BC))?.policy;
        self.bc.insert(key, policy.clone());
        Ok(policy)
    }

    pub fn pretrained(&mut self, cfg: &ExperimentConfig, seed: u64) -> Result<OfflineOutcome> {
        let key = offline_key(cfg, seed);
        if let Some(o) = self.offline.get(&key) {
            return Ok(o.clone());
        }
        let ds = self.dataset(cfg)?.clone();
        let outcome = run_offline_on(cfg, &ds, seed)?;
        self.offline.insert(key, outcome.clone());
        Ok(outcome)
    }

    /// Offline pretraining (cached) followed by fine-tuning for one seed.
    pub fn run(&mut self, cfg: &ExperimentConfig, seed: u64) -> Result<FinetuneOutcome> {
        let pretrained = self.pretrained(cfg, seed)?;
        let needs_bc = cfg.weighted() || cfg.sampling() == super::config::Sampling::Priority;
        let bc = if needs_bc {
            Some(self.bc_policy(cfg, seed)?)
        } else {
            None
        };
        let ds = self.dataset(cfg)?.clone();
        run_finetune(cfg, pretrained.agent, bc.as_ref(), &ds, seed)
    }

    /// [`Workbench::run`] for every configured seed.
    pub fn run_seeds(&mut self, cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
        cfg.seeds
            .iter()
            .map(|&s| self.run(cfg, s).map(|o| o.record))
            .collect()
    }
}

/// Mean final normalized score per `(k_q, k_rho)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub k_q: Vec<f64>,
    pub k_rho: Vec<f64>,
    /// `scores[i][j]` is the mean over seeds for `k_q[i]`, `k_rho[j]`.
    pub scores: Vec<Vec<f64>>,
    /// Per-seed final scores behind each cell.
    pub per_seed: Vec<Vec<Vec<f64>>>,
}

impl Heatmap {
    /// `(i, j)` of the highest-scoring cell.
    pub fn best_cell(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.scores.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v > self.scores[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Matrix CSV: header `k_q\k_rho,<k_rho values>`, one row per `k_q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_q\\k_rho");
        for r in &self.k_rho {
            out.push_str(&format!(",{r}"));
        }
        out.push('\n');
        for (q, row) in self.k_q.iter().zip(&self.scores) {
            out.push_str(&q.to_string());
            for v in row {
                out.push_str(&format!(",{v:.4}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Fine-tunes every `(k_q, k_rho)` combination for every seed, sharing the
/// offline phase and behavior-cloning policy of each seed across cells.
pub fn grid_sweep(
    bench: &mut Workbench,
    cfg: &ExperimentConfig,
    k_q_values: &[f64],
    k_rho_values: &[f64],
) -> Result<Heatmap> {
    if k_q_values.is_empty() || k_rho_values.is_empty() {
        return Err(Error::config("sweep value lists must be non-empty"));
    }
    let mut scores = Vec::with_capacity(k_q_values.len());
    let mut per_seed = Vec::with_capacity(k_q_values.len());
    for &kq in k_q_values {
        let mut row = Vec::with_capacity(k_rho_values.len());
        let mut row_seeds = Vec::with_capacity(k_rho_values.len());
        for &kr in k_rho_values {
            let cell = ExperimentConfig {
                k_q: Some(kq),
                k_rho: Some(kr),
                ..cfg.clone()
            };
            let finals: Vec<f64> = bench
                .run_seeds(&cell)?
                .iter()
                .map(|r| r.final_score().unwrap_or(f64::NAN))
                .collect();
            row.push(finals.iter().sum::<f64>() / finals.len() as f64);
            row_seeds.push(finals);
        }
        scores.push(row);
        per_seed.push(row_seeds);
    }
    Ok(Heatmap {
        k_q: k_q_values.to_vec(),
        k_rho: k_rho_values.to_vec(),
        scores,
        per_seed,
    })
}
