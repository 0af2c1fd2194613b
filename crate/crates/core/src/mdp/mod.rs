//! MDP domain types: transitions, datasets, environment and actor interfaces,
//! rollouts and score normalization.

mod dataset;
mod rollout;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::SeedableRng;

use crate::error::{Error, Result};

pub use dataset::{
    dataset_from_bytes, dataset_load, dataset_save, dataset_to_bytes, DATASET_MAGIC,
};
pub use rollout::{
    normalized_score, rollout, write_metrics_csv, MetricsRow, RandomActor, ScoreAnchors,
};

/// Seeded generator used throughout; ChaCha keeps streams stable across platforms.
pub type Prng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Prng {
    Prng::seed_from_u64(seed)
}

/// One `(s, a, r, s', done)` sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub done: bool,
}

impl Transition {
    pub fn check(&self, state_dim: usize, action_dim: usize) -> Result<()> {
        if self.state.len() != state_dim || self.next_state.len() != state_dim {
            return Err(Error::config(format!(
                "transition state dims ({}, {}) != {state_dim}",
                self.state.len(),
                self.next_state.len()
            )));
        }
        if self.action.len() != action_dim {
            return Err(Error::config(format!(
                "transition action dim {} != {action_dim}",
                self.action.len()
            )));
        }
        let finite = self
            .state
            .iter()
            .chain(&self.action)
            .chain(&self.next_state)
            .chain(std::iter::once(&self.reward))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::numeric("transition", "non-finite entry"));
        }
        Ok(())
    }
}

/// Provenance label of an offline dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tier {
    Expert,
    Medium,
    MediumReplay,
    MediumExpert,
    Custom,
}

impl Tier {
    pub const ALL: [Tier; 5] = [
        Tier::Expert,
        Tier::Medium,
        Tier::MediumReplay,
        Tier::MediumExpert,
        Tier::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Expert => "expert",
            Tier::Medium => "medium",
            Tier::MediumReplay => "medium-replay",
            Tier::MediumExpert => "medium-expert",
            Tier::Custom => "custom",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        Tier::ALL.iter().position(|&t| t == self).unwrap() as u8
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Tier> {
        Tier::ALL.get(tag as usize).copied()
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown dataset tier '{s}'")))
    }
}

/// Ordered transition collection with fixed dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub transitions: Vec<Transition>,
    pub state_dim: usize,
    pub action_dim: usize,
    pub tier: Tier,
}

impl Dataset {
    pub fn new(state_dim: usize, action_dim: usize, tier: Tier) -> Self {
        Self {
            transitions: Vec::new(),
            state_dim,
            action_dim,
            tier,
        }
    }

    pub fn from_transitions(
        transitions: Vec<Transition>,
        state_dim: usize,
        action_dim: usize,
        tier: Tier,
    ) -> Result<Self> {
        let ds = Self {
            transitions,
            state_dim,
            action_dim,
            tier,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::config("dataset dimensions must be positive"));
        }
        for (i, t) in self.transitions.iter().enumerate() {
            t.check(self.state_dim, self.action_dim)
                .map_err(|e| match e {
                    Error::Config(m) => Error::config(format!("transition {i}: {m}")),
                    other => other,
                })?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::config("dataset is empty"))
        } else {
            Ok(())
        }
    }

    pub fn mean_reward(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.transitions.iter().map(|t| t.reward).sum::<f64>() / self.len() as f64
    }
}

/// How continuous action vectors are interpreted by an environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionKind {
    /// Real-valued actions in the box `[action_low, action_high]`.
    Box,
    /// `d_a`-way discrete choice encoded one-hot; any vector decodes by argmax.
    OneHot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub max_episode_steps: usize,
    pub gamma: f64,
    pub action_kind: ActionKind,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.action_dim == 0 {
            return Err(Error::config("env dimensions must be positive"));
        }
        if self.action_low.len() != self.action_dim || self.action_high.len() != self.action_dim {
            return Err(Error::config("action bounds length != action_dim"));
        }
        if self
            .action_low
            .iter()
            .zip(&self.action_high)
            .any(|(lo, hi)| !(lo < hi))
        {
            return Err(Error::config(
                "action_low must be < action_high elementwise",
            ));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::config("max_episode_steps must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::config(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        Ok(())
    }

    /// Maps an arbitrary action vector to the action the environment executes:
    /// clipped into the box, or snapped to the argmax vertex for one-hot spaces.
    pub fn canonical_action(&self, action: &[f64]) -> Vec<f64> {
        match self.action_kind {
            ActionKind::Box => action
                .iter()
                .zip(self.action_low.iter().zip(&self.action_high))
                .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
                .collect(),
            ActionKind::OneHot => one_hot(argmax(action), self.action_dim),
        }
    }

    pub fn box_volume_log(&self) -> f64 {
        self.action_low
            .iter()
            .zip(&self.action_high)
            .map(|(lo, hi)| (hi - lo).ln())
            .sum()
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot(index: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[index] = 1.0;
    v
}

pub struct StepOutcome {
    pub next_state: Vec<f64>,
    pub reward: f64,
    /// True environment termination. Timeouts are handled by the caller.
    pub terminal: bool,
}

pub trait Environment {
    fn spec(&self) -> &EnvSpec;
    fn reset(&mut self, rng: &mut Prng) -> Vec<f64>;
    /// Executes the canonical form of `action`.
    fn step(&mut self, action: &[f64], rng: &mut Prng) -> StepOutcome;
}

/// Anything that picks actions from states.
pub trait Actor {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64>;
}

impl<A: Actor + ?Sized> Actor for &A {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        (**self).act(state, deterministic, rng)
    }
}

impl<A: Actor + ?Sized> Actor for Box<A> {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        (**self).act(state, deterministic, rng)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub mean_return: f64,
    pub std_return: f64,
    pub normalized_score: f64,
    pub episodes: usize,
}

/// A minibatch with one row per transition, ready for the dense-network kernels.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions<'a, I>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Transition>,
    {
        let items: Vec<&Transition> = items.into_iter().collect();
        let first = items
            .first()
            .ok_or_else(|| Error::config("batch must be non-empty"))?;
        let (ds, da) = (first.state.len(), first.action.len());
        let n = items.len();
        let mut states = Array2::zeros((n, ds));
        let mut actions = Array2::zeros((n, da));
        let mut next_states = Array2::zeros((n, ds));
        let mut rewards = Array1::zeros(n);
        let mut dones = Vec::with_capacity(n);
        for (i, t) in items.iter().enumerate() {
            t.check(ds, da)?;
            states.row_mut(i).assign(&ndarray::aview1(&t.state));
            actions.row_mut(i).assign(&ndarray::aview1(&t.action));
            next_states
                .row_mut(i)
                .assign(&ndarray::aview1(&t.next_state));
            rewards[i] = t.reward;
            dones.push(t.done);
        }
        Ok(Self {
            states,
            actions,
            rewards,
            next_states,
            dones,
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}
