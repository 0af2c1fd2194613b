//! SO2 (perturbed value backups with more frequent critic updates) and SUF
//! (separate critic and actor update-to-data ratios) fine-tuning baselines.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::losses::soft_bellman_targets;
use crate::mdp::{Batch, EnvSpec, Prng};
use crate::nn::{DenseNet, GaussianPolicy};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct So2Params {
    pub sigma: f64,
    pub clip_c: f64,
    /// Critic updates per environment step.
    pub n_upc: usize,
    /// Entropy coefficient in the perturbed backup.
    pub beta: f64,
}

impl Default for So2Params {
    fn default() -> Self {
        Self {
            sigma: 0.3,
            clip_c: 0.6,
            n_upc: 10,
            beta: 0.0,
        }
    }
}

impl So2Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !(self.clip_c > 0.0) || self.n_upc == 0 || !(self.beta >= 0.0) {
            return Err(Error::config(
                "so2 needs sigma >= 0, clip_c > 0, n_upc >= 1 and beta >= 0",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SufParams {
    pub g_critic: usize,
    pub g_actor: f64,
}

impl Default for SufParams {
    fn default() -> Self {
        Self {
            g_critic: 20,
            g_actor: 0.25,
        }
    }
}

impl SufParams {
    pub fn validate(&self) -> Result<()> {
        if self.g_critic == 0 || !(self.g_actor > 0.0 && self.g_actor <= 1.0) {
            return Err(Error::config(
                "suf needs g_critic >= 1 and 0 < g_actor <= 1",
            ));
        }
        Ok(())
    }

    /// Environment steps between actor updates, `round(1 / g_actor)`.
    pub fn actor_period(&self) -> u64 {
        (1.0 / self.g_actor).round().max(1.0) as u64
    }
}

/// `clip(N(0, sigma), -c, c)` per coordinate.
pub fn clipped_noise(d_a: usize, p: &So2Params, rng: &mut Prng) -> Vec<f64> {
    (0..d_a)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            (p.sigma * z).clamp(-p.clip_c, p.clip_c)
        })
        .collect()
}

/// Adds clipped noise to every action row and clips the result to the action box.
pub fn perturb_actions(actions: &mut Array2<f64>, p: &So2Params, spec: &EnvSpec, rng: &mut Prng) {
    let d = actions.ncols();
    for mut row in actions.rows_mut() {
        let eps = clipped_noise(d, p, rng);
        for j in 0..d {
            row[j] = (row[j] + eps[j]).clamp(spec.action_low[j], spec.action_high[j]);
        }
    }
}

/// Single-transition perturbed target
/// `r + (1 - done) * gamma * (min_k Q_target_k(s', a' + eps) - beta * log pi(a'|s'))`.
#[allow(clippy::too_many_arguments)]
pub fn so2_bellman_target(
    q_targets: &[&DenseNet],
    policy: &GaussianPolicy,
    reward: f64,
    next_state: &[f64],
    done: bool,
    gamma: f64,
    p: &So2Params,
    spec: &EnvSpec,
    rng: &mut Prng,
) -> Result<f64> {
    let row =
        Array2::from_shape_vec((1, next_state.len()), next_state.to_vec()).expect("row vector");
    let batch = Batch {
        states: row.clone(),
        actions: Array2::zeros((1, spec.action_dim)),
        rewards: Array1::from(vec![reward]),
        next_states: row,
        dones: vec![done],
    };
    Ok(soft_bellman_targets(q_targets, policy, &batch, gamma, p.beta, spec, Some(p), rng)?[0])
}

/// Critic updates to run at `env_step` and whether the actor updates too.
pub fn suf_schedule(env_step: u64, p: &SufParams) -> (usize, bool) {
    (p.g_critic, env_step.is_multiple_of(p.actor_period()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::seeded;

    #[test]
    fn zero_sigma_gives_zero_noise() {
        let p = So2Params {
            sigma: 0.0,
            ..Default::default()
        };
        assert!(clipped_noise(5, &p, &mut seeded(1))
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn schedule_matches_defaults() {
        let p = SufParams::default();
        let actors: Vec<u64> = (0..8).filter(|&s| suf_schedule(s, &p).1).collect();
        assert_eq!(actors, vec![0, 4]);
        assert!((0..8).all(|s| suf_schedule(s, &p).0 == 20));
        let every = SufParams { g_actor: 1.0, ..p };
        assert!((0..8).all(|s| suf_schedule(s, &every).1));
    }
}
