use rand::Rng;

use crate::mdp::{ActionKind, Actor, EnvSpec, Environment, Prng, StepOutcome};

/// Fixed physical constants and controller gains for the point-mass task.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMassConfig {
    pub dt: f64,
    pub damping: f64,
    pub max_episode_steps: usize,
    /// Start positions are uniform over `[-start_half_width, start_half_width]^2`.
    pub start_half_width: f64,
    pub goal: [f64; 2],
    pub velocity_limit: f64,
    pub action_cost: f64,
    pub gamma: f64,
    pub expert_gains: (f64, f64),
    pub medium_gains: (f64, f64),
    pub near_expert_gains: (f64, f64),
}

impl Default for PointMassConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            damping: 0.1,
            max_episode_steps: 200,
            start_half_width: 1.0,
            goal: [0.0, 0.0],
            velocity_limit: 5.0,
            action_cost: 0.01,
            gamma: 0.99,
            expert_gains: (3.0, 2.5),
            medium_gains: (0.5, 0.1),
            near_expert_gains: (1.5, 1.5),
        }
    }
}

/// 2-D point mass driven by a bounded acceleration toward a goal.
///
/// State is `(px, py, vx, vy)`; reward is `-(|pos - goal|^2 + c |a|^2)` at the
/// post-step position. The task never terminates; episodes end by timeout.
#[derive(Clone, Debug)]
pub struct PointMassEnv {
    cfg: PointMassConfig,
    spec: EnvSpec,
    pos: [f64; 2],
    vel: [f64; 2],
}

impl PointMassEnv {
    pub fn new(cfg: PointMassConfig) -> Self {
        let spec = EnvSpec {
            state_dim: 4,
            action_dim: 2,
            action_low: vec![-1.0; 2],
            action_high: vec![1.0; 2],
            max_episode_steps: cfg.max_episode_steps,
            gamma: cfg.gamma,
            action_kind: ActionKind::Box,
        };
        Self {
            cfg,
            spec,
            pos: [0.0; 2],
            vel: [0.0; 2],
        }
    }

    pub fn config(&self) -> &PointMassConfig {
        &self.cfg
    }

    pub fn observation(&self) -> Vec<f64> {
        vec![self.pos[0], self.pos[1], self.vel[0], self.vel[1]]
    }

    /// Places the mass at an explicit state (for tests and scripted starts).
    pub fn set_state(&mut self, pos: [f64; 2], vel: [f64; 2]) {
        self.pos = pos;
        self.vel = vel;
    }
}

impl Default for PointMassEnv {
    fn default() -> Self {
        Self::new(PointMassConfig::default())
    }
}

impl Environment for PointMassEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Prng) -> Vec<f64> {
        let w = self.cfg.start_half_width;
        for k in 0..2 {
            self.pos[k] = self.cfg.goal[k] + rng.random_range(-w..=w);
        }
        self.vel = [0.0; 2];
        self.observation()
    }

    fn step(&mut self, action: &[f64], _rng: &mut Prng) -> StepOutcome {
        let a = self.spec.canonical_action(action);
        let c = &self.cfg;
        let mut dist2 = 0.0;
        for k in 0..2 {
            self.pos[k] += c.dt * self.vel[k];
            self.vel[k] = (self.vel[k] + c.dt * (a[k] - c.damping * self.vel[k]))
                .clamp(-c.velocity_limit, c.velocity_limit);
            dist2 += (self.pos[k] - c.goal[k]).powi(2);
        }
        let reward = -(dist2 + c.action_cost * (a[0] * a[0] + a[1] * a[1]));
        StepOutcome {
            next_state: self.observation(),
            reward,
            terminal: false,
        }
    }
}

/// PD controller `a = clip(-kp (pos - goal) - kd vel)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PdController {
    pub kp: f64,
    pub kd: f64,
    pub goal: [f64; 2],
}

impl PdController {
    pub fn new(gains: (f64, f64), goal: [f64; 2]) -> Self {
        Self {
            kp: gains.0,
            kd: gains.1,
            goal,
        }
    }
}

impl Actor for PdController {
    fn act(&self, s: &[f64], _deterministic: bool, _rng: &mut Prng) -> Vec<f64> {
        (0..2)
            .map(|k| (-self.kp * (s[k] - self.goal[k]) - self.kd * s[2 + k]).clamp(-1.0, 1.0))
            .collect()
    }
}
