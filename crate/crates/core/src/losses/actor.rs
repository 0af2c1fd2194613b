use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use super::cql::q_input;
use crate::error::{Error, Result};
use crate::mdp::Prng;
use crate::nn::{DenseNet, GaussianPolicy, PolicyGrads};

/// Reparameterized actor objective `E_s[beta * log pi(a~|s) - min_k Q_k(s, a~)]`
/// for a fixed standard-normal draw `noise` (one row per state).
pub fn sac_actor_loss_with_noise(
    policy: &GaussianPolicy,
    critics: &[&DenseNet],
    states: ArrayView2<f64>,
    entropy_coeff: f64,
    noise: Array2<f64>,
) -> Result<(f64, PolicyGrads)> {
    let n = states.nrows();
    if n == 0 || critics.is_empty() {
        return Err(Error::config(
            "actor loss needs states and at least one critic",
        ));
    }
    let sample = policy.rsample(states, noise)?;
    let x = q_input(states, sample.actions.view());
    let mut passes = Vec::with_capacity(critics.len());
    for q in critics {
        passes.push(q.forward_cached(x.clone())?);
    }
    let mut owner = vec![0usize; n];
    let mut loss = 0.0;
    for i in 0..n {
        for k in 1..passes.len() {
            if passes[k].0[[i, 0]] < passes[owner[i]].0[[i, 0]] {
                owner[i] = k;
            }
        }
        loss += entropy_coeff * sample.log_probs[i] - passes[owner[i]].0[[i, 0]];
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("actor loss", format!("loss is {loss}")));
    }
    let d_s = states.ncols();
    let d_a = sample.actions.ncols();
    let mut d_actions = Array2::zeros((n, d_a));
    for (k, (q, (_, cache))) in critics.iter().zip(&passes).enumerate() {
        let upstream =
            Array2::from_shape_fn(
                (n, 1),
                |(i, _)| {
                    if owner[i] == k {
                        -1.0 / n as f64
                    } else {
                        0.0
                    }
                },
            );
        let (_, dx) = q.backward(cache, upstream.view())?;
        for i in 0..n {
            for j in 0..d_a {
                d_actions[[i, j]] += dx[[i, d_s + j]];
            }
        }
    }
    let d_log_probs = vec![entropy_coeff / n as f64; n];
    let grads = policy.rsample_backward(&sample, d_actions.view(), &d_log_probs)?;
    Ok((loss, grads))
}

/// [`sac_actor_loss_with_noise`] with a fresh draw from `rng`.
pub fn sac_actor_loss(
    policy: &GaussianPolicy,
    critics: &[&DenseNet],
    states: ArrayView2<f64>,
    entropy_coeff: f64,
    rng: &mut Prng,
) -> Result<(f64, PolicyGrads)> {
    let noise = Array2::from_shape_simple_fn((states.nrows(), policy.action_dim()), || {
        StandardNormal.sample(rng)
    });
    sac_actor_loss_with_noise(policy, critics, states, entropy_coeff, noise)
}
