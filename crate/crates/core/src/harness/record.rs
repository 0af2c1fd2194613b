use std::fs;
use std::path::{Path, PathBuf};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::mdp::{rollout, write_metrics_csv, Actor, EvalReport, MetricsRow, ScoreAnchors};

/// Outcome of one training run: configuration snapshot and evaluation series.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    /// Algorithm tag, used to group runs in plots.
    pub label: String,
    pub seed: u64,
    /// `key = value` snapshot of the configuration.
    pub config: String,
    /// Evaluations in increasing step order.
    pub series: Vec<MetricsRow>,
    pub wall_clock_secs: f64,
    pub checkpoints: Vec<PathBuf>,
}

impl RunRecord {
    pub fn final_score(&self) -> Option<f64> {
        self.series.last().map(|r| r.normalized_score)
    }

    /// Mean return over evaluations taken at or before `step`.
    pub fn mean_return_until(&self, step: u64) -> Option<f64> {
        let rows: Vec<f64> = self
            .series
            .iter()
            .filter(|r| r.step <= step)
            .map(|r| r.mean_return)
            .collect();
        (!rows.is_empty()).then(|| rows.iter().sum::<f64>() / rows.len() as f64)
    }

    /// Writes `metrics.csv`, `config.txt` and `run.txt` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_metrics_csv(dir.join("metrics.csv"), &self.series)?;
        let cfg = dir.join("config.txt");
        fs::write(&cfg, &self.config).map_err(|e| Error::io(&cfg, e))?;
        let mut run = format!(
            "label = {}\nseed = {}\nwall_clock_secs = {}\n",
            self.label, self.seed, self.wall_clock_secs
        );
        for p in &self.checkpoints {
            run.push_str(&format!("checkpoint = {}\n", p.display()));
        }
        let run_path = dir.join("run.txt");
        fs::write(&run_path, run).map_err(|e| Error::io(&run_path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let run_path = dir.join("run.txt");
        let run = fs::read_to_string(&run_path).map_err(|e| Error::io(&run_path, e))?;
        let mut record = RunRecord {
            label: String::new(),
            seed: 0,
            config: String::new(),
            series: Vec::new(),
            wall_clock_secs: 0.0,
            checkpoints: Vec::new(),
        };
        for line in run.lines() {
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let v = v.trim();
            let bad = || Error::config(format!("{}: bad value '{v}'", run_path.display()));
            match k.trim() {
                "label" => record.label = v.to_string(),
                "seed" => record.seed = v.parse().map_err(|_| bad())?,
                "wall_clock_secs" => record.wall_clock_secs = v.parse().map_err(|_| bad())?,
                "checkpoint" => record.checkpoints.push(PathBuf::from(v)),
                _ => {}
            }
        }
        let cfg = dir.join("config.txt");
        record.config = fs::read_to_string(&cfg).unwrap_or_default();
        let metrics = dir.join("metrics.csv");
        let mut reader = csv::Reader::from_path(&metrics)
            .map_err(|e| Error::io(&metrics, std::io::Error::other(e.to_string())))?;
        for row in reader.deserialize() {
            record
                .series
                .push(row.map_err(|e| Error::io(&metrics, std::io::Error::other(e.to_string())))?);
        }
        Ok(record)
    }
}

/// Deterministic-policy evaluation on a fresh environment instance.
pub fn evaluate(
    actor: &dyn Actor,
    kind: &EnvKind,
    episodes: usize,
    seed: u64,
    anchors: &ScoreAnchors,
) -> Result<EvalReport> {
    let mut env = kind.make()?;
    Ok(rollout(env.as_mut(), actor, episodes, true, seed, Some(anchors))?.1)
}

/// Independent stream seeds for the phases of one experiment seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17)
        ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)
}

pub(crate) const STREAM_BC: u64 = 1;
pub(crate) const STREAM_OFFLINE: u64 = 2;
pub(crate) const STREAM_ONLINE: u64 = 3;
pub(crate) const STREAM_EVAL: u64 = 4;

/// Adds the phase and step to numeric errors raised inside a training loop.
pub(crate) fn at_step(e: Error, phase: &str, step: usize) -> Error {
    match e {
        Error::Numeric { context, detail } => {
            Error::numeric(format!("{phase} step {step}: {context}"), detail)
        }
        other => other,
    }
}
