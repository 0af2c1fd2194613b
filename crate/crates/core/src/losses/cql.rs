use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::baselines::{perturb_actions, So2Params};
use crate::error::{Error, Result};
use crate::mdp::{one_hot, ActionKind, Batch, EnvSpec, Prng};
use crate::nn::{DenseNet, GaussianPolicy, NetGrads};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CqlParams {
    pub alpha: f64,
    pub n_action_samples: usize,
    pub entropy_coeff: f64,
}

impl Default for CqlParams {
    fn default() -> Self {
        Self {
            alpha: 5.0,
            n_action_samples: 10,
            entropy_coeff: 0.2,
        }
    }
}

impl CqlParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.entropy_coeff >= 0.0) || self.n_action_samples == 0 {
            return Err(Error::config(
                "cql needs alpha >= 0, entropy_coeff >= 0 and n_action_samples >= 1",
            ));
        }
        Ok(())
    }
}

/// Critic objective value, its parts and the parameter gradient.
#[derive(Clone, Debug)]
pub struct CriticLoss {
    pub total: f64,
    pub conservative: f64,
    pub td: f64,
    pub grads: NetGrads,
}

/// `[s | a]` rows, the input layout of every Q network.
pub fn q_input(states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate![Axis(1), states, actions]
}

/// Elementwise minimum over critics of `Q(s_i, a_i)`.
pub fn min_q(
    critics: &[&DenseNet],
    states: ArrayView2<f64>,
    actions: ArrayView2<f64>,
) -> Result<Vec<f64>> {
    let (first, rest) = critics
        .split_first()
        .ok_or_else(|| Error::config("at least one critic is required"))?;
    let x = q_input(states, actions);
    let mut out = first.forward_batch(x.view())?.column(0).to_vec();
    for q in rest {
        for (m, v) in out.iter_mut().zip(q.forward_batch(x.view())?.column(0)) {
            *m = m.min(*v);
        }
    }
    Ok(out)
}

/// Candidate actions for the log-sum-exp penalty: `per_state` rows for every
/// state (row `i * per_state + j`), each with an additive log correction, plus
/// a constant `offset` added to every state's log-sum-exp.
#[derive(Clone, Debug)]
pub struct PenaltyActions {
    pub actions: Array2<f64>,
    pub corrections: Vec<f64>,
    pub per_state: usize,
    pub offset: f64,
}

impl PenaltyActions {
    /// Exact enumeration over one-hot vertices, or `n` uniform-box samples
    /// and `n` policy samples with their importance corrections.
    pub fn draw(
        policy: &GaussianPolicy,
        states: ArrayView2<f64>,
        n: usize,
        spec: &EnvSpec,
        rng: &mut Prng,
    ) -> Result<Self> {
        let b = states.nrows();
        let d = spec.action_dim;
        match spec.action_kind {
            ActionKind::OneHot => {
                let mut actions = Array2::zeros((b * d, d));
                for i in 0..b {
                    for k in 0..d {
                        actions[[i * d + k, k]] = 1.0;
                    }
                }
                Ok(Self {
                    actions,
                    corrections: vec![0.0; b * d],
                    per_state: d,
                    offset: 0.0,
                })
            }
            ActionKind::Box => {
                let k = 2 * n;
                let log_vol = spec.box_volume_log();
                let mut actions = Array2::zeros((b * k, d));
                let mut corrections = vec![0.0; b * k];
                for i in 0..b {
                    for j in 0..n {
                        for c in 0..d {
                            actions[[i * k + j, c]] =
                                rng.random_range(spec.action_low[c]..spec.action_high[c]);
                        }
                        corrections[i * k + j] = log_vol;
                    }
                }
                for j in 0..n {
                    let (a, logp) = policy.sample_batch(states, rng)?;
                    for i in 0..b {
                        actions.row_mut(i * k + n + j).assign(&a.row(i));
                        corrections[i * k + n + j] = -logp[i];
                    }
                }
                Ok(Self {
                    actions,
                    corrections,
                    per_state: k,
                    offset: -(k as f64).ln(),
                })
            }
        }
    }

    pub fn len_states(&self) -> usize {
        self.corrections.len() / self.per_state
    }
}

/// Soft Bellman targets `r + (1 - done) * gamma * (min_k Q_k(s', a') - beta * log pi(a'|s'))`
/// with one policy sample `a'` per next state, optionally perturbed by clipped
/// noise. One-hot action spaces back up the greedy vertex of the minimum
/// target critic instead, with no entropy term.
pub fn soft_bellman_targets(
    q_targets: &[&DenseNet],
    policy: &GaussianPolicy,
    batch: &Batch,
    gamma: f64,
    beta: f64,
    spec: &EnvSpec,
    noise: Option<&So2Params>,
    rng: &mut Prng,
) -> Result<Vec<f64>> {
    let n = batch.len();
    let bootstrap: Vec<f64> = match spec.action_kind {
        ActionKind::OneHot => {
            let d = spec.action_dim;
            let mut best = vec![f64::NEG_INFINITY; n];
            for k in 0..d {
                let a = Array2::from_shape_fn((n, d), |(_, c)| one_hot(k, d)[c]);
                let q = min_q(q_targets, batch.next_states.view(), a.view())?;
                for (b, v) in best.iter_mut().zip(q) {
                    *b = b.max(v);
                }
            }
            best
        }
        ActionKind::Box => {
            let (mut next_actions, logp) = policy.sample_batch(batch.next_states.view(), rng)?;
            if let Some(p) = noise {
                perturb_actions(&mut next_actions, p, spec, rng);
            }
            let q = min_q(q_targets, batch.next_states.view(), next_actions.view())?;
            q.iter().zip(&logp).map(|(q, lp)| q - beta * lp).collect()
        }
    };
    let targets: Vec<f64> = (0..n)
        .map(|i| {
            if batch.dones[i] {
                batch.rewards[i]
            } else {
                batch.rewards[i] + gamma * bootstrap[i]
            }
        })
        .collect();
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(Error::numeric(
            "bellman target",
            format!("sample {i} is {}", targets[i]),
        ));
    }
    Ok(targets)
}

fn check_weights(weights: Option<&[f64]>, n: usize) -> Result<()> {
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

pub(crate) fn weight_at(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

fn td_parts(
    q: &DenseNet,
    batch: &Batch,
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<(Vec<f64>, f64, NetGrads)> {
    let n = batch.len();
    if n == 0 || targets.len() != n {
        return Err(Error::config(
            "td loss needs a non-empty batch with one target per sample",
        ));
    }
    check_weights(weights, n)?;
    let (out, cache) = q.forward_cached(q_input(batch.states.view(), batch.actions.view()))?;
    let values = out.column(0).to_vec();
    let mut loss = 0.0;
    let mut upstream = Array2::zeros((n, 1));
    for i in 0..n {
        let w = weight_at(weights, i);
        let u = values[i] - targets[i];
        loss += 0.5 * w * u * u;
        upstream[[i, 0]] = w * u / n as f64;
    }
    loss /= n as f64;
    if !loss.is_finite() {
        return Err(Error::numeric("td term", format!("loss is {loss}")));
    }
    let (grads, _) = q.backward(&cache, upstream.view())?;
    Ok((values, loss, grads))
}

/// `1/2 * E[w (Q(s,a) - y)^2]`.
pub fn td_loss(
    q: &DenseNet,
    batch: &Batch,
    targets: &[f64],
    weights: Option<&[f64]>,
) -> Result<(f64, NetGrads)> {
    let (_, loss, grads) = td_parts(q, batch, targets, weights)?;
    Ok((loss, grads))
}

/// `alpha * E[logsumexp_a' Q(s,a') - Q(s,a)] + 1/2 * E[w (Q(s,a) - y)^2]`.
pub fn cql_loss(
    q: &DenseNet,
    batch: &Batch,
    targets: &[f64],
    penalty: &PenaltyActions,
    alpha: f64,
    weights: Option<&[f64]>,
) -> Result<CriticLoss> {
    let n = batch.len();
    let (values, td, mut grads) = td_parts(q, batch, targets, weights)?;
    if penalty.len_states() != n {
        return Err(Error::config(format!(
            "penalty actions cover {} states, batch has {n}",
            penalty.len_states()
        )));
    }
    let k = penalty.per_state;
    let states = batch.states.view();
    let rep = Array2::from_shape_fn((n * k, states.ncols()), |(r, c)| states[[r / k, c]]);
    let (out, cache) = q.forward_cached(q_input(rep.view(), penalty.actions.view()))?;
    let mut conservative = 0.0;
    let mut upstream = Array2::zeros((n * k, 1));
    let mut data_upstream = Array2::zeros((n, 1));
    for i in 0..n {
        let z: Vec<f64> = (0..k)
            .map(|j| out[[i * k + j, 0]] + penalty.corrections[i * k + j])
            .collect();
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = z.iter().map(|v| (v - m).exp()).sum();
        conservative += m + sum.ln() + penalty.offset - values[i];
        for j in 0..k {
            upstream[[i * k + j, 0]] = alpha * (z[j] - m).exp() / sum / n as f64;
        }
        data_upstream[[i, 0]] = -alpha / n as f64;
    }
    conservative /= n as f64;
    if !conservative.is_finite() {
        return Err(Error::numeric(
            "conservative term",
            format!("penalty is {conservative}"),
        ));
    }
    let (g_pen, _) = q.backward(&cache, upstream.view())?;
    grads.add_assign(&g_pen);
    let data_cache = q
        .forward_cached(q_input(batch.states.view(), batch.actions.view()))?
        .1;
    let (g_data, _) = q.backward(&data_cache, data_upstream.view())?;
    grads.add_assign(&g_data);
    Ok(CriticLoss {
        total: alpha * conservative + td,
        conservative,
        td,
        grads,
    })
}
