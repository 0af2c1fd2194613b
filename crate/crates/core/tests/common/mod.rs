#![allow(dead_code)]

use baq::mdp::{seeded, ActionKind, Batch, EnvSpec, Prng, Transition};
use baq::nn::{Activation, DenseNet, GaussianPolicy, Params};
use rand::Rng;

pub const STATE_DIM: usize = 4;
pub const ACTION_DIM: usize = 4;
pub const HIDDEN: usize = 8;

/// Central-difference step for `f64` parameters.
pub const FD_STEP: f64 = 1e-5;

pub fn box_spec() -> EnvSpec {
    EnvSpec {
        state_dim: STATE_DIM,
        action_dim: ACTION_DIM,
        action_low: vec![-1.0; ACTION_DIM],
        action_high: vec![1.0; ACTION_DIM],
        max_episode_steps: 50,
        gamma: 0.9,
        action_kind: ActionKind::Box,
    }
}

/// Tanh hidden units keep every loss smooth, so the difference quotient is
/// not corrupted by ReLU kinks.
pub fn smooth_net(sizes: &[usize], rng: &mut Prng) -> DenseNet {
    DenseNet::new(sizes, Activation::Tanh, rng).unwrap()
}

pub fn policy(squash: bool, rng: &mut Prng) -> GaussianPolicy {
    let net = smooth_net(&[STATE_DIM, HIDDEN, ACTION_DIM], rng);
    let log_std = (0..ACTION_DIM)
        .map(|_| rng.random_range(-1.0..0.5))
        .collect();
    GaussianPolicy::from_parts(
        net,
        log_std,
        squash,
        vec![-1.0; ACTION_DIM],
        vec![1.0; ACTION_DIM],
    )
    .unwrap()
}

pub fn critic(rng: &mut Prng) -> DenseNet {
    smooth_net(&[STATE_DIM + ACTION_DIM, HIDDEN, 1], rng)
}

pub fn value_net(rng: &mut Prng) -> DenseNet {
    smooth_net(&[STATE_DIM, HIDDEN, 1], rng)
}

/// Actions strictly inside the box, so squashed log-densities stay finite.
pub fn random_batch(n: usize, rng: &mut Prng) -> Batch {
    let ts: Vec<Transition> = (0..n)
        .map(|_| Transition {
            state: (0..STATE_DIM)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            action: (0..ACTION_DIM)
                .map(|_| rng.random_range(-0.9..0.9))
                .collect(),
            reward: rng.random_range(-1.0..1.0),
            next_state: (0..STATE_DIM)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
            done: rng.random_bool(0.2),
        })
        .collect();
    Batch::from_transitions(&ts).unwrap()
}

pub fn random_weights(n: usize, rng: &mut Prng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.05..1.0)).collect()
}

/// Central finite-difference gradient of `f` at `p`.
pub fn fd_gradient<P, F>(p: &P, f: F) -> Vec<f64>
where
    P: Params + Clone,
    F: Fn(&P) -> f64,
{
    let base = p.flat();
    let mut probe = p.clone();
    let mut grad = Vec::with_capacity(base.len());
    let mut x = base.clone();
    for i in 0..base.len() {
        x[i] = base[i] + FD_STEP;
        probe.set_flat(&x);
        let up = f(&probe);
        x[i] = base[i] - FD_STEP;
        probe.set_flat(&x);
        let down = f(&probe);
        x[i] = base[i];
        grad.push((up - down) / (2.0 * FD_STEP));
    }
    grad
}

/// Norm-wise relative error `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

pub fn rng(seed: u64) -> Prng {
    seeded(seed)
}
pub mod gradcheck;
