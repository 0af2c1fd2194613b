use super::Params;
use crate::error::{Error, Result};

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<P: Params>(params: &P, learning_rate: f64) -> Self {
        Self::with_betas(params, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas<P: Params>(
        params: &P,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. Gradients are validated before anything is mutated.
    pub fn step<P: Params, G: Params>(&mut self, params: &mut P, grads: &G) -> Result<()> {
        let gblocks = grads.blocks();
        if gblocks.len() != self.first.len()
            || gblocks
                .iter()
                .zip(&self.first)
                .any(|(g, m)| g.len() != m.len())
        {
            return Err(Error::config(
                "optimizer: gradient shape does not match parameters",
            ));
        }
        for (i, g) in gblocks.iter().enumerate() {
            if let Some(k) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::numeric(
                    format!("optimizer step {}", self.step + 1),
                    format!(
                        "non-finite gradient in {} at index {k}",
                        grads.block_label(i)
                    ),
                ));
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut pblocks = params.blocks_mut();
        if pblocks.len() != gblocks.len() {
            return Err(Error::config("optimizer: parameter block count changed"));
        }
        for (b, p) in pblocks.iter_mut().enumerate() {
            let (g, m, v) = (gblocks[b], &mut self.first[b], &mut self.second[b]);
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
