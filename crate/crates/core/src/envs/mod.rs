//! Desk-scale environments, graded behavior policies, offline dataset
//! generation and exact tabular oracles.

mod chain;
mod point_mass;

use rand_distr::{Distribution, Normal};

pub use chain::{
    bellman_backup, value_iteration, ChainConfig, ChainEnv, GreedyTableActor, QTable, StartState,
};
pub use point_mass::{PdController, PointMassConfig, PointMassEnv};

use crate::error::{Error, Result};
use crate::mdp::{
    seeded, Actor, Dataset, EnvSpec, Environment, Prng, RandomActor, ScoreAnchors, Tier, Transition,
};

/// Seed and episode count used for normalization anchors.
pub const ANCHOR_SEED: u64 = 0x5eed;
pub const ANCHOR_EPISODES: usize = 100;

const VI_TOL: f64 = 1e-10;

/// A named environment family with its fixed configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvKind {
    PointMass(PointMassConfig),
    Chain(ChainConfig),
}

/// Behavior quality levels used to build datasets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Skill {
    Expert,
    NearExpert,
    Medium,
    Random,
}

impl EnvKind {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "point-mass" | "pointmass" => Ok(EnvKind::PointMass(PointMassConfig::default())),
            "chain" => Ok(EnvKind::Chain(ChainConfig::default())),
            _ => Err(Error::config(format!(
                "unknown environment '{name}' (expected point-mass or chain)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::PointMass(_) => "point-mass",
            EnvKind::Chain(_) => "chain",
        }
    }

    pub fn make(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            EnvKind::PointMass(c) => Box::new(PointMassEnv::new(c.clone())),
            EnvKind::Chain(c) => Box::new(ChainEnv::new(c.clone())?),
        })
    }

    pub fn spec(&self) -> Result<EnvSpec> {
        Ok(self.make()?.spec().clone())
    }

    /// Oracle expert: PD controller, or greedy over value-iteration `Q*`.
    pub fn expert(&self) -> Result<Box<dyn Actor>> {
        self.behavior(Skill::Expert)
    }

    pub fn behavior(&self, skill: Skill) -> Result<Box<dyn Actor>> {
        Ok(match self {
            EnvKind::PointMass(c) => match skill {
                Skill::Expert => Box::new(PdController::new(c.expert_gains, c.goal)),
                Skill::NearExpert => Box::new(PdController::new(c.near_expert_gains, c.goal)),
                Skill::Medium => Box::new(PdController::new(c.medium_gains, c.goal)),
                Skill::Random => Box::new(RandomActor::new(self.spec()?)),
            },
            EnvKind::Chain(c) => match skill {
                // Chain quality differences come from the tier's action noise.
                Skill::Expert | Skill::NearExpert | Skill::Medium => {
                    let env = ChainEnv::new(c.clone())?;
                    Box::new(GreedyTableActor {
                        table: value_iteration(&env, VI_TOL)?,
                    })
                }
                Skill::Random => Box::new(RandomActor::new(self.spec()?)),
            },
        })
    }

    /// Random and expert mean returns over [`ANCHOR_EPISODES`] at [`ANCHOR_SEED`].
    pub fn anchors(&self) -> Result<ScoreAnchors> {
        let mut env = self.make()?;
        let expert = self.expert()?;
        ScoreAnchors::compute(env.as_mut(), expert.as_ref(), ANCHOR_EPISODES, ANCHOR_SEED)
    }
}

/// Convenience wrapper for [`EnvKind::expert`].
pub fn expert_policy(kind: &EnvKind) -> Result<Box<dyn Actor>> {
    kind.expert()
}

/// Adds `N(0, noise_std)` to every action of `inner` unless asked to act
/// deterministically.
pub struct NoisyActor<A> {
    pub inner: A,
    pub noise_std: f64,
}

impl<A: Actor> Actor for NoisyActor<A> {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        let mut a = self.inner.act(state, deterministic, rng);
        if !deterministic && self.noise_std > 0.0 {
            let normal = Normal::new(0.0, self.noise_std).expect("finite std");
            for v in &mut a {
                *v += normal.sample(rng);
            }
        }
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BehaviorSpec {
    pub skill: Skill,
    pub noise_std: f64,
}

/// Recipe for an offline dataset: a mixture of noisy behavior policies.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityTier {
    pub tier: Tier,
    pub mixture: Vec<(BehaviorSpec, f64)>,
}

impl QualityTier {
    pub fn new(tier: Tier, mixture: Vec<(BehaviorSpec, f64)>) -> Result<Self> {
        let sum: f64 = mixture.iter().map(|(_, f)| f).sum();
        if mixture.is_empty() || (sum - 1.0).abs() > 1e-9 || mixture.iter().any(|(_, f)| *f < 0.0) {
            return Err(Error::config(format!(
                "mixture fractions must be non-negative and sum to 1 (got {sum})"
            )));
        }
        Ok(Self { tier, mixture })
    }

    fn single(tier: Tier, skill: Skill, noise_std: f64) -> Self {
        Self {
            tier,
            mixture: vec![(BehaviorSpec { skill, noise_std }, 1.0)],
        }
    }

    pub fn expert() -> Self {
        Self::single(Tier::Expert, Skill::Expert, 0.1)
    }

    pub fn medium() -> Self {
        Self::single(Tier::Medium, Skill::Medium, 0.5)
    }

    /// Checkpoints of an improving controller: mostly poor, some good.
    pub fn medium_replay() -> Self {
        Self {
            tier: Tier::MediumReplay,
            mixture: vec![
                (
                    BehaviorSpec {
                        skill: Skill::Random,
                        noise_std: 0.0,
                    },
                    0.5,
                ),
                (
                    BehaviorSpec {
                        skill: Skill::Medium,
                        noise_std: 0.5,
                    },
                    0.3,
                ),
                (
                    BehaviorSpec {
                        skill: Skill::NearExpert,
                        noise_std: 0.2,
                    },
                    0.2,
                ),
            ],
        }
    }

    /// Even split between the expert and medium recipes.
    pub fn medium_expert() -> Self {
        Self {
            tier: Tier::MediumExpert,
            mixture: vec![
                (
                    BehaviorSpec {
                        skill: Skill::Expert,
                        noise_std: 0.1,
                    },
                    0.5,
                ),
                (
                    BehaviorSpec {
                        skill: Skill::Medium,
                        noise_std: 0.5,
                    },
                    0.5,
                ),
            ],
        }
    }

    /// Uniformly random actions; with uniform starts this covers every
    /// state-action pair of a small chain.
    pub fn uniform() -> Self {
        Self::single(Tier::Custom, Skill::Random, 0.0)
    }

    pub fn for_tier(tier: Tier) -> Self {
        match tier {
            Tier::Expert => Self::expert(),
            Tier::Medium => Self::medium(),
            Tier::MediumReplay => Self::medium_replay(),
            Tier::MediumExpert => Self::medium_expert(),
            Tier::Custom => Self::uniform(),
        }
    }

    /// Desk-scale dataset size, keeping roughly a 10:1 ratio between the large
    /// and the replay-sized tiers.
    pub fn default_size(tier: Tier) -> usize {
        match tier {
            Tier::Expert | Tier::MediumExpert => 20_000,
            Tier::Medium | Tier::Custom => 10_000,
            Tier::MediumReplay => 2_000,
        }
    }
}

fn collect(
    env: &mut dyn Environment,
    actor: &dyn Actor,
    n: usize,
    rng: &mut Prng,
    out: &mut Vec<Transition>,
) {
    let spec = env.spec().clone();
    let mut state = env.reset(rng);
    let mut t = 0;
    for _ in 0..n {
        let action = spec.canonical_action(&actor.act(&state, false, rng));
        let step = env.step(&action, rng);
        out.push(Transition {
            state: std::mem::take(&mut state),
            action,
            reward: step.reward,
            next_state: step.next_state.clone(),
            done: step.terminal,
        });
        t += 1;
        if step.terminal || t == spec.max_episode_steps {
            state = env.reset(rng);
            t = 0;
        } else {
            state = step.next_state;
        }
    }
}

/// Samples `n` transitions from the tier's behavior mixture. Each component
/// contributes a contiguous block of `fraction * n` transitions.
pub fn generate_dataset(
    kind: &EnvKind,
    tier: &QualityTier,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::config("dataset size must be at least 1"));
    }
    let mut env = kind.make()?;
    let spec = env.spec().clone();
    let mut rng = seeded(seed);
    let mut transitions = Vec::with_capacity(n);
    let k = tier.mixture.len();
    let mut assigned = 0;
    for (i, (behavior, fraction)) in tier.mixture.iter().enumerate() {
        let quota = if i + 1 == k {
            n - assigned
        } else {
            ((fraction * n as f64).round() as usize).min(n - assigned)
        };
        assigned += quota;
        let actor = NoisyActor {
            inner: kind.behavior(behavior.skill)?,
            noise_std: behavior.noise_std,
        };
        collect(env.as_mut(), &actor, quota, &mut rng, &mut transitions);
    }
    Dataset::from_transitions(transitions, spec.state_dim, spec.action_dim, tier.tier)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_has_requested_size_and_dims() {
        let kind = EnvKind::by_name("point-mass").unwrap();
        let ds = generate_dataset(&kind, &QualityTier::medium(), 1000, 1).unwrap();
        assert_eq!(ds.len(), 1000);
        assert_eq!((ds.state_dim, ds.action_dim), (4, 2));
        assert_eq!(ds.tier, Tier::Medium);
        let chain = EnvKind::by_name("chain").unwrap();
        let ds = generate_dataset(&chain, &QualityTier::medium_replay(), 333, 1).unwrap();
        assert_eq!(ds.len(), 333);
        assert!(ds
            .transitions
            .iter()
            .all(|t| t.action.iter().filter(|&&a| a == 1.0).count() == 1));
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let kind = EnvKind::by_name("point-mass").unwrap();
        let a = generate_dataset(&kind, &QualityTier::medium_expert(), 500, 7).unwrap();
        let b = generate_dataset(&kind, &QualityTier::medium_expert(), 500, 7).unwrap();
        let c = generate_dataset(&kind, &QualityTier::medium_expert(), 500, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dataset_actions_stay_in_the_box() {
        let kind = EnvKind::by_name("point-mass").unwrap();
        let ds = generate_dataset(&kind, &QualityTier::medium(), 2000, 3).unwrap();
        assert!(ds
            .transitions
            .iter()
            .all(|t| t.action.iter().all(|a| (-1.0..=1.0).contains(a))));
    }

    #[test]
    fn bad_mixture_is_rejected() {
        let b = BehaviorSpec {
            skill: Skill::Expert,
            noise_std: 0.0,
        };
        assert!(QualityTier::new(Tier::Custom, vec![(b, 0.4), (b, 0.4)]).is_err());
        assert!(QualityTier::new(Tier::Custom, vec![]).is_err());
        assert!(generate_dataset(
            &EnvKind::by_name("chain").unwrap(),
            &QualityTier::expert(),
            0,
            0
        )
        .is_err());
    }
}
