use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::nn::GaussianPolicy;

/// Sensitivity of the behavior weight to action divergence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightParams {
    pub k_q: f64,
}

impl WeightParams {
    /// `k_q = +inf` is allowed and makes every weight exactly 1.
    pub fn new(k_q: f64) -> Result<Self> {
        if !(k_q > 0.0) {
            return Err(Error::config(format!("k_q must be positive, got {k_q}")));
        }
        Ok(Self { k_q })
    }
}

/// Mean over action coordinates of `(mean_j - a_j)^2`.
pub fn action_mse(mean: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(action)
        .map(|(m, a)| (m - a).powi(2))
        .sum::<f64>()
        / mean.len() as f64
}

/// `exp(-mse / k_q)` for a precomputed action MSE.
pub fn weight_from_mse(mse: f64, wp: &WeightParams) -> f64 {
    (-mse / wp.k_q).exp()
}

/// `w(s, a) = exp(-mean_j (pi_bc(s)_j - a_j)^2 / k_q)`, using the clipped BC mean.
pub fn behavior_weight(
    pi_bc: &GaussianPolicy,
    state: &[f64],
    action: &[f64],
    wp: &WeightParams,
) -> Result<f64> {
    if action.len() != pi_bc.action_dim() {
        return Err(Error::config(format!(
            "action dim {} != policy dim {}",
            action.len(),
            pi_bc.action_dim()
        )));
    }
    let mean = pi_bc.mean_action(state)?;
    Ok(weight_from_mse(action_mse(&mean, action), wp))
}

pub fn behavior_weights(
    pi_bc: &GaussianPolicy,
    states: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    wp: &WeightParams,
) -> Result<Vec<f64>> {
    let means = pi_bc.mean_actions(states)?;
    if means.dim() != actions.dim() {
        return Err(Error::config(format!(
            "weight batch: actions {:?} vs means {:?}",
            actions.dim(),
            means.dim()
        )));
    }
    Ok(means
        .rows()
        .into_iter()
        .zip(actions.rows())
        .map(|(m, a)| {
            let mse = m.iter().zip(a).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / m.len() as f64;
            weight_from_mse(mse, wp)
        })
        .collect())
}

/// Asymmetric squared loss `|tau - 1(u < 0)| * u^2`.
pub fn expectile_loss(u: f64, tau: f64) -> f64 {
    let k = if u < 0.0 { 1.0 - tau } else { tau };
    k * u * u
}

/// Derivative of [`expectile_loss`] in `u`.
pub fn expectile_grad(u: f64, tau: f64) -> f64 {
    let k = if u < 0.0 { 1.0 - tau } else { tau };
    2.0 * k * u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_expectiles() {
        assert_eq!(expectile_loss(2.0, 0.5), 2.0);
        assert!((expectile_loss(-1.0, 0.9) - 0.1).abs() < 1e-15);
        assert_eq!(expectile_loss(1.0, 0.9), 0.9);
    }

    #[test]
    fn closed_form_weights() {
        let mse = action_mse(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(mse, 1.0);
        let w2 = weight_from_mse(mse, &WeightParams { k_q: 2.0 });
        let w1 = weight_from_mse(mse, &WeightParams { k_q: 1.0 });
        assert!((w2 - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((w1 - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert_eq!(
            weight_from_mse(0.7, &WeightParams { k_q: f64::INFINITY }),
            1.0
        );
        assert!(WeightParams::new(0.0).is_err());
    }
}
