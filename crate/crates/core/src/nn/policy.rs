use std::f64::consts::LN_2;

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, StandardNormal};

use super::dense::{layer_block_label, ForwardCache, NetGrads};
use super::{Activation, DenseNet, Params};
use crate::error::{Error, Result};
use crate::mdp::{Actor, Prng};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian policy with a state-independent log standard deviation.
///
/// With `squash` the sample `u ~ N(mean(s), std)` is mapped into the action
/// box as `mid + half * tanh(u)`; otherwise `u` is the action and only the
/// deterministic action is clipped to the box.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicy {
    mean_net: DenseNet,
    log_std: Vec<f64>,
    squash: bool,
    low: Vec<f64>,
    high: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyGrads {
    pub mean: NetGrads,
    pub log_std: Vec<f64>,
}

/// Reparameterized batch sample together with what its backward pass needs.
#[derive(Clone, Debug)]
pub struct Reparam {
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pre_squash: Array2<f64>,
    noise: Array2<f64>,
    cache: ForwardCache,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

impl GaussianPolicy {
    pub fn new(
        state_dim: usize,
        hidden: &[usize],
        low: Vec<f64>,
        high: Vec<f64>,
        squash: bool,
        rng: &mut Prng,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(state_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(low.len());
        let mut mean_net = DenseNet::new(&sizes, Activation::Relu, rng)?;
        mean_net.scale_output_layer(1e-2);
        let d_a = low.len();
        Self::from_parts(mean_net, vec![0.0; d_a], squash, low, high)
    }

    pub fn from_parts(
        mean_net: DenseNet,
        log_std: Vec<f64>,
        squash: bool,
        low: Vec<f64>,
        high: Vec<f64>,
    ) -> Result<Self> {
        let d_a = mean_net.output_dim();
        if log_std.len() != d_a || low.len() != d_a || high.len() != d_a {
            return Err(Error::config(format!(
                "policy head has {d_a} outputs but log_std/low/high have {}/{}/{}",
                log_std.len(),
                low.len(),
                high.len()
            )));
        }
        if low.iter().zip(&high).any(|(l, h)| !(l < h)) {
            return Err(Error::config(
                "policy action bounds must satisfy low < high",
            ));
        }
        let mut p = Self {
            mean_net,
            log_std,
            squash,
            low,
            high,
        };
        p.project();
        Ok(p)
    }

    pub fn state_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.mean_net.output_dim()
    }

    pub fn squash(&self) -> bool {
        self.squash
    }

    pub fn mean_net(&self) -> &DenseNet {
        &self.mean_net
    }

    pub fn mean_net_mut(&mut self) -> &mut DenseNet {
        &mut self.mean_net
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.low, &self.high)
    }

    pub fn set_log_std(&mut self, log_std: &[f64]) {
        self.log_std.copy_from_slice(log_std);
        self.project();
    }

    /// Clamps `log_std` back into `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn project(&mut self) {
        for v in &mut self.log_std {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    fn mid_half(&self, j: usize) -> (f64, f64) {
        (
            0.5 * (self.high[j] + self.low[j]),
            0.5 * (self.high[j] - self.low[j]),
        )
    }

    /// Raw network output (pre-squash location of the Gaussian).
    pub fn mean(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.mean_net.forward(state)
    }

    fn to_action(&self, j: usize, u: f64) -> f64 {
        let (mid, half) = self.mid_half(j);
        if self.squash {
            mid + half * u.tanh()
        } else {
            u.clamp(self.low[j], self.high[j])
        }
    }

    /// Deterministic action: squashed mean, or the mean clipped into the box.
    pub fn mean_action(&self, state: &[f64]) -> Result<Vec<f64>> {
        let m = self.mean(state)?;
        Ok(m.iter()
            .enumerate()
            .map(|(j, &u)| self.to_action(j, u))
            .collect())
    }

    pub fn mean_actions(&self, states: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut m = self.mean_net.forward_batch(states)?;
        for mut row in m.rows_mut() {
            for (j, u) in row.iter_mut().enumerate() {
                *u = self.to_action(j, *u);
            }
        }
        Ok(m)
    }

    fn gaussian_log_density(&self, u: &[f64], mean: &[f64]) -> f64 {
        u.iter()
            .zip(mean)
            .zip(&self.log_std)
            .map(|((&u, &m), &ls)| {
                let z = (u - m) / ls.exp();
                -0.5 * z * z - ls - HALF_LN_2PI
            })
            .sum()
    }

    fn squash_correction(&self, u: &[f64]) -> f64 {
        u.iter()
            .enumerate()
            .map(|(j, &u)| self.mid_half(j).1.ln() + log_one_minus_tanh_sq(u))
            .sum()
    }

    /// Pre-squash coordinates of `action`; fails on or outside the box edge.
    fn unsquash(&self, action: &[f64]) -> Result<Vec<f64>> {
        if !self.squash {
            return Ok(action.to_vec());
        }
        action
            .iter()
            .enumerate()
            .map(|(j, &a)| {
                let (mid, half) = self.mid_half(j);
                let y = (a - mid) / half;
                if y.abs() >= 1.0 || y.is_nan() {
                    Err(Error::numeric(
                        "log_prob",
                        format!("action {a} on or outside the squash boundary of dim {j}"),
                    ))
                } else {
                    Ok(y.atanh())
                }
            })
            .collect()
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::config(format!(
                "action dim {} != policy dim {}",
                action.len(),
                self.action_dim()
            )));
        }
        let mean = self.mean(state)?;
        let u = self.unsquash(action)?;
        let mut lp = self.gaussian_log_density(&u, &mean);
        if self.squash {
            lp -= self.squash_correction(&u);
        }
        Ok(lp)
    }

    /// Draws `mean + std * xi` (squashed if configured) and its log-density.
    pub fn sample_action(&self, state: &[f64], rng: &mut Prng) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(state)?;
        let noise: Vec<f64> = (0..mean.len())
            .map(|_| StandardNormal.sample(rng))
            .collect();
        Ok(self.action_from_noise(&mean, &noise))
    }

    fn action_from_noise(&self, mean: &[f64], noise: &[f64]) -> (Vec<f64>, f64) {
        let mut lp = 0.0;
        let mut action = Vec::with_capacity(mean.len());
        for j in 0..mean.len() {
            let ls = self.log_std[j];
            let u = mean[j] + ls.exp() * noise[j];
            lp += -0.5 * noise[j] * noise[j] - ls - HALF_LN_2PI;
            if self.squash {
                let (mid, half) = self.mid_half(j);
                lp -= half.ln() + log_one_minus_tanh_sq(u);
                action.push(mid + half * u.tanh());
            } else {
                action.push(u);
            }
        }
        (action, lp)
    }

    /// Batch samples without gradient bookkeeping.
    pub fn sample_batch(
        &self,
        states: ArrayView2<f64>,
        rng: &mut Prng,
    ) -> Result<(Array2<f64>, Vec<f64>)> {
        let means = self.mean_net.forward_batch(states)?;
        let (n, d) = means.dim();
        let mut actions = Array2::zeros((n, d));
        let mut log_probs = Vec::with_capacity(n);
        let mut noise = vec![0.0; d];
        for (i, m) in means.rows().into_iter().enumerate() {
            for xi in noise.iter_mut() {
                *xi = StandardNormal.sample(rng);
            }
            let (a, lp) = self.action_from_noise(m.as_slice().unwrap(), &noise);
            actions.row_mut(i).assign(&ndarray::aview1(&a));
            log_probs.push(lp);
        }
        Ok((actions, log_probs))
    }

    /// Reparameterized samples `a = f(mean(s) + std * noise)` for a batch.
    pub fn rsample(&self, states: ArrayView2<f64>, noise: Array2<f64>) -> Result<Reparam> {
        let (means, cache) = self.mean_net.forward_cached(states.to_owned())?;
        if noise.dim() != means.dim() {
            return Err(Error::config(format!(
                "noise shape {:?} != action batch shape {:?}",
                noise.dim(),
                means.dim()
            )));
        }
        let (n, d) = means.dim();
        let mut actions = Array2::zeros((n, d));
        let mut pre_squash = Array2::zeros((n, d));
        let mut log_probs = Vec::with_capacity(n);
        for i in 0..n {
            let mean = means.row(i);
            let xi = noise.row(i);
            let (a, lp) = self.action_from_noise(mean.as_slice().unwrap(), xi.as_slice().unwrap());
            for j in 0..d {
                pre_squash[[i, j]] = mean[j] + self.log_std[j].exp() * xi[j];
            }
            actions.row_mut(i).assign(&ndarray::aview1(&a));
            log_probs.push(lp);
        }
        Ok(Reparam {
            actions,
            log_probs,
            pre_squash,
            noise,
            cache,
        })
    }

    /// Gradient of a loss given dL/d(action) and dL/d(log_prob) per sample.
    pub fn rsample_backward(
        &self,
        sample: &Reparam,
        d_actions: ArrayView2<f64>,
        d_log_probs: &[f64],
    ) -> Result<PolicyGrads> {
        let (n, d) = sample.actions.dim();
        if d_actions.dim() != (n, d) || d_log_probs.len() != n {
            return Err(Error::config("reparameterized backward: shape mismatch"));
        }
        let mut d_mean = Array2::zeros((n, d));
        let mut d_log_std = vec![0.0; d];
        for i in 0..n {
            for j in 0..d {
                let u = sample.pre_squash[[i, j]];
                let du = if self.squash {
                    let t = u.tanh();
                    let half = self.mid_half(j).1;
                    d_actions[[i, j]] * half * (1.0 - t * t) + d_log_probs[i] * 2.0 * t
                } else {
                    d_actions[[i, j]]
                };
                d_mean[[i, j]] = du;
                d_log_std[j] += du * self.log_std[j].exp() * sample.noise[[i, j]] - d_log_probs[i];
            }
        }
        let (mean, _) = self.mean_net.backward(&sample.cache, d_mean.view())?;
        Ok(PolicyGrads {
            mean,
            log_std: d_log_std,
        })
    }

    /// Log-densities of `actions` and the gradient of `sum_i coeffs[i] * log_prob_i`.
    pub fn log_prob_with_grad(
        &self,
        states: ArrayView2<f64>,
        actions: ArrayView2<f64>,
        coeffs: &[f64],
    ) -> Result<(Vec<f64>, PolicyGrads)> {
        let (means, cache) = self.mean_net.forward_cached(states.to_owned())?;
        let (n, d) = means.dim();
        if actions.dim() != (n, d) || coeffs.len() != n {
            return Err(Error::config(format!(
                "log_prob batch: actions {:?} / coeffs {} vs means {:?}",
                actions.dim(),
                coeffs.len(),
                means.dim()
            )));
        }
        let mut d_mean = Array2::zeros((n, d));
        let mut d_log_std = vec![0.0; d];
        let mut log_probs = Vec::with_capacity(n);
        for i in 0..n {
            let u = self.unsquash(&actions.row(i).to_vec())?;
            let mut lp = 0.0;
            for j in 0..d {
                let ls = self.log_std[j];
                let std = ls.exp();
                let z = (u[j] - means[[i, j]]) / std;
                lp += -0.5 * z * z - ls - HALF_LN_2PI;
                d_mean[[i, j]] = coeffs[i] * z / std;
                d_log_std[j] += coeffs[i] * (z * z - 1.0);
            }
            if self.squash {
                lp -= self.squash_correction(&u);
            }
            log_probs.push(lp);
        }
        let (mean, _) = self.mean_net.backward(&cache, d_mean.view())?;
        Ok((
            log_probs,
            PolicyGrads {
                mean,
                log_std: d_log_std,
            },
        ))
    }
}

impl Actor for GaussianPolicy {
    fn act(&self, state: &[f64], deterministic: bool, rng: &mut Prng) -> Vec<f64> {
        let out = if deterministic {
            self.mean_action(state)
        } else {
            self.sample_action(state, rng).map(|(a, _)| a)
        };
        // Shape errors surface as NaN actions, which rollout reports with a step index.
        out.unwrap_or_else(|_| vec![f64::NAN; self.action_dim()])
    }
}

impl PolicyGrads {
    pub fn zeros_like(policy: &GaussianPolicy) -> Self {
        Self {
            mean: NetGrads::zeros_like(&policy.mean_net),
            log_std: vec![0.0; policy.action_dim()],
        }
    }

    pub fn add_assign(&mut self, other: &PolicyGrads) {
        self.mean.add_assign(&other.mean);
        for (a, b) in self.log_std.iter_mut().zip(&other.log_std) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.mean.scale(factor);
        for v in &mut self.log_std {
            *v *= factor;
        }
    }
}

fn policy_label(index: usize, n_net_blocks: usize) -> String {
    if index < n_net_blocks {
        format!("mean {}", layer_block_label(index))
    } else {
        "log_std".to_string()
    }
}

impl Params for GaussianPolicy {
    fn blocks(&self) -> Vec<&[f64]> {
        let mut b = self.mean_net.blocks();
        b.push(&self.log_std);
        b
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut b = self.mean_net.blocks_mut();
        b.push(&mut self.log_std);
        b
    }

    fn block_label(&self, index: usize) -> String {
        policy_label(index, 2 * self.mean_net.num_layers())
    }
}

impl Params for PolicyGrads {
    fn blocks(&self) -> Vec<&[f64]> {
        let mut b = self.mean.blocks();
        b.push(&self.log_std);
        b
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut b = self.mean.blocks_mut();
        b.push(&mut self.log_std);
        b
    }

    fn block_label(&self, index: usize) -> String {
        policy_label(index, self.mean.weights.len() * 2)
    }
}
