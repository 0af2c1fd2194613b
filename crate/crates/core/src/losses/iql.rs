use ndarray::{Array2, ArrayView2};

use super::cql::{min_q, q_input, weight_at};
use super::weight::{expectile_grad, expectile_loss};
use crate::error::{Error, Result};
use crate::mdp::Batch;
use crate::nn::{DenseNet, GaussianPolicy, NetGrads, PolicyGrads};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IqlParams {
    pub tau: f64,
    pub awr_lambda: f64,
    pub awr_clip: f64,
}

impl Default for IqlParams {
    fn default() -> Self {
        Self {
            tau: 0.7,
            awr_lambda: 1.0 / 3.0,
            awr_clip: 100.0,
        }
    }
}

impl IqlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::config(format!(
                "tau must lie in (0, 1), got {}",
                self.tau
            )));
        }
        if !(self.awr_lambda > 0.0) || !(self.awr_clip > 0.0) {
            return Err(Error::config("awr_lambda and awr_clip must be positive"));
        }
        Ok(())
    }
}

fn check_batch(n: usize, len: usize, weights: Option<&[f64]>) -> Result<()> {
    if n == 0 || len != n {
        return Err(Error::config(format!("{len} values for a batch of {n}")));
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::config(format!(
                "{} weights for a batch of {n}",
                w.len()
            )));
        }
    }
    Ok(())
}

/// `E[w * L_tau(q - V(s))]` against fixed regression values `q`.
pub fn expectile_value_loss(
    v: &DenseNet,
    states: ArrayView2<f64>,
    q_values: &[f64],
    tau: f64,
    weights: Option<&[f64]>,
) -> Result<(f64, NetGrads)> {
    let n = states.nrows();
    check_batch(n, q_values.len(), weights)?;
    let (out, cache) = v.forward_cached(states.to_owned())?;
    let mut loss = 0.0;
    let mut upstream = Array2::zeros((n, 1));
    for i in 0..n {
        let w = weight_at(weights, i);
        let u = q_values[i] - out[[i, 0]];
        loss += w * expectile_loss(u, tau);
        upstream[[i, 0]] = -w * expectile_grad(u, tau) / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("value loss", format!("loss is {loss}")));
    }
    let (grads, _) = v.backward(&cache, upstream.view())?;
    Ok((loss, grads))
}

/// Expectile regression of `V(s)` onto `min_k Q_target_k(s, a)` over dataset actions.
pub fn iql_value_loss(
    v: &DenseNet,
    q_targets: &[&DenseNet],
    batch: &Batch,
    p: &IqlParams,
    weights: Option<&[f64]>,
) -> Result<(f64, NetGrads)> {
    let q = min_q(q_targets, batch.states.view(), batch.actions.view())?;
    expectile_value_loss(v, batch.states.view(), &q, p.tau, weights)
}

/// `r + (1 - done) * gamma * V(s')`.
pub fn iql_q_targets(v: &DenseNet, batch: &Batch, gamma: f64) -> Result<Vec<f64>> {
    let next = v.forward_batch(batch.next_states.view())?;
    Ok((0..batch.len())
        .map(|i| {
            if batch.dones[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + gamma * next[[i, 0]]
            }
        })
        .collect())
}

/// `E[w (r + (1 - done) gamma V(s') - Q(s, a))^2]`.
pub fn iql_q_loss(
    q: &DenseNet,
    v: &DenseNet,
    batch: &Batch,
    gamma: f64,
    weights: Option<&[f64]>,
) -> Result<(f64, NetGrads)> {
    let n = batch.len();
    let targets = iql_q_targets(v, batch, gamma)?;
    check_batch(n, targets.len(), weights)?;
    let (out, cache) = q.forward_cached(q_input(batch.states.view(), batch.actions.view()))?;
    let mut loss = 0.0;
    let mut upstream = Array2::zeros((n, 1));
    for i in 0..n {
        let w = weight_at(weights, i);
        let u = targets[i] - out[[i, 0]];
        loss += w * u * u;
        upstream[[i, 0]] = -2.0 * w * u / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("q loss", format!("loss is {loss}")));
    }
    let (grads, _) = q.backward(&cache, upstream.view())?;
    Ok((loss, grads))
}

/// Advantage-weighted regression: `E[-min(exp((Q - V) / lambda), clip) * log pi(a|s)]`
/// with `Q = min_k Q_target_k(s, a)`.
pub fn awr_policy_loss(
    policy: &GaussianPolicy,
    q_targets: &[&DenseNet],
    v: &DenseNet,
    batch: &Batch,
    p: &IqlParams,
) -> Result<(f64, PolicyGrads)> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::config("awr loss on an empty batch"));
    }
    let q = min_q(q_targets, batch.states.view(), batch.actions.view())?;
    let vs = v.forward_batch(batch.states.view())?;
    let coeffs: Vec<f64> = (0..n)
        .map(|i| ((q[i] - vs[[i, 0]]) / p.awr_lambda).exp().min(p.awr_clip))
        .collect();
    let (log_probs, mut grads) =
        policy.log_prob_with_grad(batch.states.view(), batch.actions.view(), &coeffs)?;
    let loss = -coeffs
        .iter()
        .zip(&log_probs)
        .map(|(c, l)| c * l)
        .sum::<f64>()
        / n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("awr loss", format!("loss is {loss}")));
    }
    grads.scale(-1.0 / n as f64);
    Ok((loss, grads))
}
