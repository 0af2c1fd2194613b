//! Small dense-network engine: MLPs with hand-written reverse-mode gradients,
//! Gaussian policy heads, an Adam optimizer and a binary checkpoint format.
//!
//! Everything is `f64`. Parameters of any trainable object are exposed as a
//! list of flat blocks through [`Params`], which is what the optimizer,
//! target-network averaging and checkpoints operate on.

mod checkpoint;
mod dense;
mod optim;
mod policy;

pub use checkpoint::{
    load_net, load_policy, net_from_bytes, net_to_bytes, policy_from_bytes, policy_to_bytes,
    save_net, save_policy, CHECKPOINT_MAGIC,
};
pub use dense::{Activation, DenseNet, ForwardCache, NetGrads};
pub use optim::Adam;
pub use policy::{GaussianPolicy, PolicyGrads, Reparam, LOG_STD_MAX, LOG_STD_MIN};

/// Default hidden layout for every network.
pub const DEFAULT_HIDDEN: [usize; 2] = [256, 256];

/// Default Polyak coefficient for target networks.
pub const DEFAULT_POLYAK: f64 = 0.005;

/// Trainable parameters viewed as contiguous blocks.
pub trait Params {
    fn blocks(&self) -> Vec<&[f64]>;
    fn blocks_mut(&mut self) -> Vec<&mut [f64]>;
    /// Human-readable name of block `index`, used in error messages.
    fn block_label(&self, index: usize) -> String;

    fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    fn flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    fn set_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_params(), "flat parameter length");
        let mut offset = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&values[offset..offset + block.len()]);
            offset += block.len();
        }
    }

    fn all_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// `target <- (1 - tau) * target + tau * source`.
pub fn soft_update<P: Params>(target: &mut P, source: &P, tau: f64) {
    for (t, s) in target.blocks_mut().into_iter().zip(source.blocks()) {
        for (tv, sv) in t.iter_mut().zip(s) {
            *tv = (1.0 - tau) * *tv + tau * sv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::seeded;

    #[test]
    fn soft_update_interpolates() {
        let src = DenseNet::new(&[2, 3, 1], Activation::Relu, &mut seeded(0)).unwrap();
        let mut tgt = DenseNet::zeros(&[2, 3, 1], Activation::Relu).unwrap();
        soft_update(&mut tgt, &src, 0.25);
        for (t, s) in tgt.flat().iter().zip(src.flat()) {
            assert!((t - 0.25 * s).abs() < 1e-15);
        }
        soft_update(&mut tgt, &src, 1.0);
        assert_eq!(tgt, src);
    }
}
