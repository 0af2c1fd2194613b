//! Behavior cloning of the offline data-collection policy.

use ndarray::ArrayView2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{seeded, Actor, Batch, Dataset, Prng};
use crate::nn::{Adam, GaussianPolicy, PolicyGrads, DEFAULT_HIDDEN};

#[derive(Clone, Debug, PartialEq)]
pub struct BcConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    /// Loss is averaged and recorded once per this many steps.
    pub log_every: usize,
    /// Box the cloned mean is clipped to; `None` uses the dataset's action range.
    pub action_bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self {
            steps: 100_000,
            batch_size: 256,
            learning_rate: 3e-4,
            hidden: DEFAULT_HIDDEN.to_vec(),
            log_every: 1000,
            action_bounds: None,
        }
    }
}

impl BcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.log_every == 0 {
            return Err(Error::config(
                "bc batch_size and log_every must be positive",
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("bc learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Trained reference policy plus its loss log as `(step, windowed mean NLL)`.
#[derive(Clone, Debug)]
pub struct BcOutcome {
    pub policy: GaussianPolicy,
    pub loss_log: Vec<(usize, f64)>,
}

/// Mean negative log-likelihood of `actions` and its parameter gradient.
pub fn bc_loss(
    policy: &GaussianPolicy,
    states: ArrayView2<f64>,
    actions: ArrayView2<f64>,
) -> Result<(f64, PolicyGrads)> {
    let n = states.nrows();
    if n == 0 {
        return Err(Error::config("bc loss on an empty batch"));
    }
    let (log_probs, mut grads) = policy.log_prob_with_grad(states, actions, &vec![1.0; n])?;
    let loss = -log_probs.iter().sum::<f64>() / n as f64;
    grads.scale(-1.0 / n as f64);
    Ok((loss, grads))
}

fn dataset_bounds(ds: &Dataset) -> (Vec<f64>, Vec<f64>) {
    let d = ds.action_dim;
    let mut low = vec![f64::INFINITY; d];
    let mut high = vec![f64::NEG_INFINITY; d];
    for t in &ds.transitions {
        for j in 0..d {
            low[j] = low[j].min(t.action[j]);
            high[j] = high[j].max(t.action[j]);
        }
    }
    for j in 0..d {
        if high[j] - low[j] < 1e-6 {
            low[j] -= 0.5;
            high[j] += 0.5;
        }
    }
    (low, high)
}

/// Uniform minibatch of dataset transitions.
pub(crate) fn sample_dataset_batch(ds: &Dataset, size: usize, rng: &mut Prng) -> Result<Batch> {
    let n = ds.len();
    Batch::from_transitions((0..size).map(|_| &ds.transitions[rng.random_range(0..n)]))
}

/// Fits an unsquashed Gaussian policy to the dataset by maximum likelihood.
pub fn train_bc(ds: &Dataset, cfg: &BcConfig, seed: u64) -> Result<BcOutcome> {
    cfg.validate()?;
    ds.require_non_empty()?;
    let mut rng = seeded(seed);
    let (low, high) = cfg
        .action_bounds
        .clone()
        .unwrap_or_else(|| dataset_bounds(ds));
    let mut policy = GaussianPolicy::new(ds.state_dim, &cfg.hidden, low, high, false, &mut rng)?;
    let mut opt = Adam::new(&policy, cfg.learning_rate);
    let mut loss_log = Vec::new();
    let mut window = 0.0;
    for step in 0..cfg.steps {
        let batch = sample_dataset_batch(ds, cfg.batch_size, &mut rng)?;
        let (loss, grads) = bc_loss(&policy, batch.states.view(), batch.actions.view())?;
        if !loss.is_finite() {
            return Err(Error::numeric(
                "bc",
                format!("loss is {loss} at step {step}"),
            ));
        }
        opt.step(&mut policy, &grads)
            .map_err(|e| Error::numeric("bc", format!("step {step}: {e}")))?;
        policy.project();
        window += loss;
        if (step + 1) % cfg.log_every == 0 {
            loss_log.push((step + 1, window / cfg.log_every as f64));
            window = 0.0;
        }
    }
    Ok(BcOutcome { policy, loss_log })
}

/// Per-pair mean squared action error of the actor's deterministic action,
/// and the average over pairs.
pub fn bc_action_mse(actor: &dyn Actor, ds: &Dataset) -> Result<(Vec<f64>, f64)> {
    ds.require_non_empty()?;
    let mut rng = seeded(0);
    let mut per_pair = Vec::with_capacity(ds.len());
    for (i, t) in ds.transitions.iter().enumerate() {
        let a = actor.act(&t.state, true, &mut rng);
        if a.len() != t.action.len() {
            return Err(Error::config(format!(
                "actor returned {} action dims for pair {i}, dataset has {}",
                a.len(),
                t.action.len()
            )));
        }
        let mse = a
            .iter()
            .zip(&t.action)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            / a.len() as f64;
        per_pair.push(mse);
    }
    let mean = per_pair.iter().sum::<f64>() / per_pair.len() as f64;
    Ok((per_pair, mean))
}
