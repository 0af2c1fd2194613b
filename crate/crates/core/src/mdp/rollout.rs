use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{one_hot, ActionKind, Actor, EnvSpec, Environment, EvalReport, Prng, Transition};
use crate::error::{Error, Result};

/// Reference returns that pin a normalized score of 0 (random) and 100 (expert).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreAnchors {
    pub random_return: f64,
    pub expert_return: f64,
}

impl ScoreAnchors {
    /// Normalization that reports raw returns unchanged.
    pub const IDENTITY: ScoreAnchors = ScoreAnchors {
        random_return: 0.0,
        expert_return: 100.0,
    };

    pub fn new(random_return: f64, expert_return: f64) -> Result<Self> {
        if !(expert_return > random_return) {
            return Err(Error::config(format!(
                "expert return {expert_return} must exceed random return {random_return}"
            )));
        }
        Ok(Self {
            random_return,
            expert_return,
        })
    }

    /// Rolls out a uniform-random actor and `expert` for `episodes` episodes each.
    pub fn compute(
        env: &mut dyn Environment,
        expert: &dyn Actor,
        episodes: usize,
        seed: u64,
    ) -> Result<Self> {
        let random = RandomActor::new(env.spec().clone());
        let (_, r) = rollout(env, &random, episodes, true, seed, None)?;
        let (_, e) = rollout(env, expert, episodes, true, seed, None)?;
        Self::new(r.mean_return, e.mean_return)
    }

    pub fn normalize(&self, ret: f64) -> f64 {
        100.0 * (ret - self.random_return) / (self.expert_return - self.random_return)
    }
}

pub fn normalized_score(ret: f64, random_ret: f64, expert_ret: f64) -> Result<f64> {
    Ok(ScoreAnchors::new(random_ret, expert_ret)?.normalize(ret))
}

/// Uniform actions over the box, or a uniformly chosen vertex for one-hot spaces.
#[derive(Clone, Debug)]
pub struct RandomActor {
    spec: EnvSpec,
}

impl RandomActor {
    pub fn new(spec: EnvSpec) -> Self {
        Self { spec }
    }
}

impl Actor for RandomActor {
    fn act(&self, _state: &[f64], _deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        match self.spec.action_kind {
            ActionKind::Box => self
                .spec
                .action_low
                .iter()
                .zip(&self.spec.action_high)
                .map(|(&lo, &hi)| rng.random_range(lo..hi))
                .collect(),
            ActionKind::OneHot => one_hot(
                rng.random_range(0..self.spec.action_dim),
                self.spec.action_dim,
            ),
        }
    }
}

/// Runs `episodes` full episodes of `actor` in `env`.
///
/// Returned transitions store the executed (canonical) action and are
/// contiguous episodes. Episodes cut by the step limit end with
/// `done = false`. `anchors = None` reports the raw mean return as the
/// normalized score.
pub fn rollout(
    env: &mut dyn Environment,
    actor: &dyn Actor,
    episodes: usize,
    deterministic: bool,
    seed: u64,
    anchors: Option<&ScoreAnchors>,
) -> Result<(Vec<Transition>, EvalReport)> {
    if episodes == 0 {
        return Err(Error::config("rollout needs at least one episode"));
    }
    let spec = env.spec().clone();
    spec.validate()?;
    let mut rng = super::seeded(seed);
    let mut transitions = Vec::with_capacity(episodes * spec.max_episode_steps);
    let mut returns = Vec::with_capacity(episodes);
    let mut global_step = 0usize;

    for _ in 0..episodes {
        let mut state = env.reset(&mut rng);
        if state.len() != spec.state_dim {
            return Err(Error::config(format!(
                "environment state dim {} != spec {}",
                state.len(),
                spec.state_dim
            )));
        }
        let mut ret = 0.0;
        for _ in 0..spec.max_episode_steps {
            let raw = actor.act(&state, deterministic, &mut rng);
            if raw.len() != spec.action_dim {
                return Err(Error::config(format!(
                    "policy produced action of dim {} but env expects {}",
                    raw.len(),
                    spec.action_dim
                )));
            }
            if raw.iter().any(|a| a.is_nan()) {
                return Err(Error::numeric(
                    format!("rollout step {global_step}"),
                    "policy produced a NaN action",
                ));
            }
            let action = spec.canonical_action(&raw);
            let out = env.step(&action, &mut rng);
            ret += out.reward;
            global_step += 1;
            transitions.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: out.reward,
                next_state: out.next_state.clone(),
                done: out.terminal,
            });
            state = out.next_state;
            if out.terminal {
                break;
            }
        }
        returns.push(ret);
    }

    let n = returns.len() as f64;
    let mean_return = returns.iter().sum::<f64>() / n;
    let var = returns
        .iter()
        .map(|r| (r - mean_return).powi(2))
        .sum::<f64>()
        / n;
    let normalized_score = anchors
        .copied()
        .unwrap_or(ScoreAnchors::IDENTITY)
        .normalize(mean_return);
    let report = EvalReport {
        mean_return,
        std_return: var.sqrt(),
        normalized_score,
        episodes,
    };
    Ok((transitions, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub mean_return: f64,
    pub std_return: f64,
    pub normalized_score: f64,
}

impl MetricsRow {
    pub fn new(step: u64, report: &EvalReport) -> Self {
        Self {
            step,
            mean_return: report.mean_return,
            std_return: report.std_return,
            normalized_score: report.normalized_score,
        }
    }
}

/// Writes `step,mean_return,std_return,normalized_score` rows.
pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[MetricsRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    if rows.is_empty() {
        w.write_record(["step", "mean_return", "std_return", "normalized_score"])
            .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e.to_string()))
}
