use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{argmax, one_hot, ActionKind, Actor, EnvSpec, Environment, Prng, StepOutcome};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StartState {
    Fixed(usize),
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainConfig {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub max_episode_steps: usize,
    pub start: StartState,
    /// Probability that a transition lands on a uniformly random state instead.
    pub slip: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            n_states: 8,
            n_actions: 4,
            gamma: 0.9,
            max_episode_steps: 200,
            start: StartState::Fixed(0),
            slip: 0.0,
        }
    }
}

/// Tabular MDP with one-hot states and one-hot actions.
///
/// `transition[(s * A + a) * S + s']` holds `P(s' | s, a)` and
/// `reward[s * A + a]` holds `R(s, a)`.
#[derive(Clone, Debug)]
pub struct ChainEnv {
    n_states: usize,
    n_actions: usize,
    transition: Vec<f64>,
    reward: Vec<f64>,
    start: StartState,
    spec: EnvSpec,
    state: usize,
}

impl ChainEnv {
    /// The standard chain: action 0 moves right, 1 left, 2 stays, 3 returns to
    /// the first state and any further action `k` jumps `k` states ahead.
    /// Rewards grow toward the right end: `1 + target / (n - 1)`, with
    /// staying put costing an extra 0.25.
    pub fn new(cfg: ChainConfig) -> Result<Self> {
        let (n, m) = (cfg.n_states, cfg.n_actions);
        if n < 2 || m < 1 {
            return Err(Error::config("chain needs at least 2 states and 1 action"));
        }
        if !(0.0..=1.0).contains(&cfg.slip) {
            return Err(Error::config("slip must be a probability"));
        }
        let mut transition = vec![0.0; n * m * n];
        let mut reward = vec![0.0; n * m];
        for s in 0..n {
            for a in 0..m {
                let target = match a {
                    0 => (s + 1).min(n - 1),
                    1 => s.saturating_sub(1),
                    2 => s,
                    3 => 0,
                    k => (s + k) % n,
                };
                let row = &mut transition[(s * m + a) * n..(s * m + a + 1) * n];
                for p in row.iter_mut() {
                    *p = cfg.slip / n as f64;
                }
                row[target] += 1.0 - cfg.slip;
                let stay_cost = if a == 2 { 0.25 } else { 0.0 };
                reward[s * m + a] = 1.0 + target as f64 / (n - 1) as f64 - stay_cost;
            }
        }
        Self::from_tables(
            n,
            m,
            transition,
            reward,
            cfg.gamma,
            cfg.start,
            cfg.max_episode_steps,
        )
    }

    /// Random deterministic transitions with rewards uniform in `[1, 2)`.
    pub fn random(cfg: ChainConfig, seed: u64) -> Result<Self> {
        let (n, m) = (cfg.n_states, cfg.n_actions);
        let mut rng = crate::mdp::seeded(seed);
        let mut transition = vec![0.0; n * m * n];
        let mut reward = vec![0.0; n * m];
        for sa in 0..n * m {
            transition[sa * n + rng.random_range(0..n)] = 1.0;
            reward[sa] = rng.random_range(1.0..2.0);
        }
        Self::from_tables(
            n,
            m,
            transition,
            reward,
            cfg.gamma,
            cfg.start,
            cfg.max_episode_steps,
        )
    }

    pub fn from_tables(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        start: StartState,
        max_episode_steps: usize,
    ) -> Result<Self> {
        if transition.len() != n_states * n_actions * n_states
            || reward.len() != n_states * n_actions
        {
            return Err(Error::config("chain tables have the wrong size"));
        }
        for (sa, row) in transition.chunks(n_states).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "transition row for (s={}, a={}) is not a distribution (sum {sum})",
                    sa / n_actions,
                    sa % n_actions
                )));
            }
        }
        if reward.iter().any(|r| !r.is_finite()) {
            return Err(Error::config("chain rewards must be finite"));
        }
        if let StartState::Fixed(s) = start {
            if s >= n_states {
                return Err(Error::config(format!("start state {s} out of range")));
            }
        }
        let spec = EnvSpec {
            state_dim: n_states,
            action_dim: n_actions,
            action_low: vec![0.0; n_actions],
            action_high: vec![1.0; n_actions],
            max_episode_steps,
            gamma,
            action_kind: ActionKind::OneHot,
        };
        spec.validate()?;
        Ok(Self {
            n_states,
            n_actions,
            transition,
            reward,
            start,
            spec,
            state: 0,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.spec.gamma
    }

    pub fn prob(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn encode_state(&self, s: usize) -> Vec<f64> {
        one_hot(s, self.n_states)
    }

    pub fn decode_state(&self, obs: &[f64]) -> usize {
        argmax(obs)
    }

    pub fn set_state(&mut self, s: usize) {
        self.state = s;
    }
}

impl Environment for ChainEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut Prng) -> Vec<f64> {
        self.state = match self.start {
            StartState::Fixed(s) => s,
            StartState::Uniform => rng.random_range(0..self.n_states),
        };
        self.encode_state(self.state)
    }

    fn step(&mut self, action: &[f64], rng: &mut Prng) -> StepOutcome {
        let a = argmax(action);
        let s = self.state;
        let row = &self.transition[(s * self.n_actions + a) * self.n_states..][..self.n_states];
        let next = if row.contains(&1.0) {
            row.iter().position(|&p| p == 1.0).unwrap()
        } else {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = self.n_states - 1;
            for (k, &p) in row.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            pick
        };
        self.state = next;
        StepOutcome {
            next_state: self.encode_state(next),
            reward: self.reward(s, a),
            terminal: false,
        }
    }
}

/// Optimal action values of a tabular MDP.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub n_states: usize,
    pub n_actions: usize,
    pub values: Vec<f64>,
}

impl QTable {
    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn state_value(&self, s: usize) -> f64 {
        self.row(s)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s))
    }
}

/// One Bellman optimality backup `(TQ)(s,a) = R + gamma * sum_s' P max_a' Q`.
pub fn bellman_backup(env: &ChainEnv, q: &QTable) -> QTable {
    let (n, m) = (env.n_states, env.n_actions);
    let v: Vec<f64> = (0..n).map(|s| q.state_value(s)).collect();
    let mut values = vec![0.0; n * m];
    for s in 0..n {
        for a in 0..m {
            let ev: f64 = (0..n).map(|t| env.prob(s, a, t) * v[t]).sum();
            values[s * m + a] = env.reward(s, a) + env.gamma() * ev;
        }
    }
    QTable {
        n_states: n,
        n_actions: m,
        values,
    }
}

/// Iterates the optimality backup until the sup-norm residual drops below `tol`.
pub fn value_iteration(env: &ChainEnv, tol: f64) -> Result<QTable> {
    if !(tol > 0.0) {
        return Err(Error::config("value iteration tolerance must be positive"));
    }
    let mut q = QTable {
        n_states: env.n_states,
        n_actions: env.n_actions,
        values: vec![0.0; env.n_states * env.n_actions],
    };
    loop {
        let next = bellman_backup(env, &q);
        let residual = next
            .values
            .iter()
            .zip(&q.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        q = next;
        if residual < tol {
            return Ok(q);
        }
    }
}

/// Greedy one-hot policy over a Q table.
#[derive(Clone, Debug)]
pub struct GreedyTableActor {
    pub table: QTable,
}

impl Actor for GreedyTableActor {
    fn act(&self, state: &[f64], _deterministic: bool, _rng: &mut Prng) -> Vec<f64> {
        one_hot(self.table.greedy(argmax(state)), self.table.n_actions)
    }
}
