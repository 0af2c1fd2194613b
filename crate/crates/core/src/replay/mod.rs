//! Replay buffer mixing never-evicted offline data with a FIFO ring of online
//! transitions, sampled in proportion to BC-divergence priorities.

mod sum_tree;

use rand::Rng;

pub use sum_tree::SumTree;

use crate::error::{Error, Result};
use crate::mdp::{Batch, Dataset, Prng, Transition};
use crate::nn::GaussianPolicy;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorityParams {
    pub k_rho: f64,
    /// Priority exponent.
    pub alpha_p: f64,
}

impl PriorityParams {
    pub fn new(k_rho: f64, alpha_p: f64) -> Result<Self> {
        if !(k_rho > 0.0) || !(alpha_p > 0.0) {
            return Err(Error::config(format!(
                "k_rho and alpha_p must be positive, got {k_rho} and {alpha_p}"
            )));
        }
        Ok(Self { k_rho, alpha_p })
    }
}

/// `(distance / k_rho + 1)^alpha_p` for a Euclidean action distance.
pub fn priority_from_distance(distance: f64, pp: &PriorityParams) -> f64 {
    (distance / pp.k_rho + 1.0).powf(pp.alpha_p)
}

/// `rho = (||pi_bc(s) - a||_2 / k_rho + 1)^alpha_p`, using the clipped BC mean.
pub fn compute_priority(
    pi_bc: &GaussianPolicy,
    state: &[f64],
    action: &[f64],
    pp: &PriorityParams,
) -> Result<f64> {
    if action.len() != pi_bc.action_dim() {
        return Err(Error::config(format!(
            "action dim {} != policy dim {}",
            action.len(),
            pi_bc.action_dim()
        )));
    }
    let mean = pi_bc.mean_action(state)?;
    let dist = mean
        .iter()
        .zip(action)
        .map(|(m, a)| (m - a).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(priority_from_distance(dist, pp))
}

#[derive(Clone, Debug)]
pub struct PriorityBuffer {
    capacity: usize,
    entries: Vec<Transition>,
    tree: SumTree,
    n_offline: usize,
    online_len: usize,
    /// Next online slot to overwrite once the ring is full.
    cursor: usize,
}

impl PriorityBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::config("buffer capacity must be positive"));
        }
        Ok(Self {
            capacity,
            entries: Vec::new(),
            tree: SumTree::new(capacity),
            n_offline: 0,
            online_len: 0,
            cursor: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn offline_len(&self) -> usize {
        self.n_offline
    }

    pub fn online_len(&self) -> usize {
        self.online_len
    }

    pub fn online_capacity(&self) -> usize {
        self.capacity - self.n_offline
    }

    pub fn total_priority(&self) -> f64 {
        self.tree.total()
    }

    pub fn get(&self, index: usize) -> Option<(&Transition, f64)> {
        self.entries.get(index).map(|t| (t, self.tree.get(index)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Transition, f64)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, t)| (t, self.tree.get(i)))
    }

    /// Inserts every dataset transition with priority 1. At least one slot
    /// must remain for online data.
    pub fn push_offline(&mut self, ds: &Dataset) -> Result<()> {
        if ds.is_empty() {
            return Ok(());
        }
        if self.online_len > 0 {
            return Err(Error::State(
                "offline data must be loaded before any online transition".into(),
            ));
        }
        if self.n_offline + ds.len() >= self.capacity {
            return Err(Error::config(format!(
                "capacity {} cannot hold {} offline transitions plus online headroom",
                self.capacity,
                self.n_offline + ds.len()
            )));
        }
        for t in &ds.transitions {
            self.tree.set(self.entries.len(), 1.0);
            self.entries.push(t.clone());
        }
        self.n_offline += ds.len();
        Ok(())
    }

    /// Inserts with an explicit priority, evicting the oldest online entry
    /// when the ring is full.
    pub fn push_with_priority(&mut self, t: Transition, rho: f64) -> Result<()> {
        if !(rho >= 1.0) || !rho.is_finite() {
            return Err(Error::config(format!(
                "priority must be finite and >= 1, got {rho}"
            )));
        }
        let ring = self.online_capacity();
        if self.online_len < ring {
            self.tree.set(self.entries.len(), rho);
            self.entries.push(t);
            self.online_len += 1;
        } else {
            let slot = self.n_offline + self.cursor;
            self.entries[slot] = t;
            self.tree.set(slot, rho);
            self.cursor = (self.cursor + 1) % ring;
        }
        Ok(())
    }

    /// Inserts an online transition with its BC-divergence priority, which is returned.
    pub fn push_online(
        &mut self,
        t: Transition,
        pi_bc: &GaussianPolicy,
        pp: &PriorityParams,
    ) -> Result<f64> {
        let rho = compute_priority(pi_bc, &t.state, &t.action, pp)?;
        self.push_with_priority(t, rho)?;
        Ok(rho)
    }

    /// `n` indices drawn with replacement, `P(i) = rho_i / sum_j rho_j`.
    pub fn sample_indices(&self, n: usize, rng: &mut Prng) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::State("cannot sample from an empty buffer".into()));
        }
        let total = self.tree.total();
        let last = self.len() - 1;
        Ok((0..n)
            .map(|_| self.tree.find(rng.random::<f64>() * total).min(last))
            .collect())
    }

    /// `n` indices drawn uniformly with replacement.
    pub fn sample_uniform_indices(&self, n: usize, rng: &mut Prng) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::State("cannot sample from an empty buffer".into()));
        }
        Ok((0..n).map(|_| rng.random_range(0..self.len())).collect())
    }

    pub fn sample_batch(&self, n: usize, rng: &mut Prng) -> Result<Vec<(&Transition, f64)>> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| (&self.entries[i], self.tree.get(i)))
            .collect())
    }

    pub fn sample_uniform(&self, n: usize, rng: &mut Prng) -> Result<Vec<(&Transition, f64)>> {
        Ok(self
            .sample_uniform_indices(n, rng)?
            .into_iter()
            .map(|i| (&self.entries[i], self.tree.get(i)))
            .collect())
    }

    pub fn batch(&self, indices: &[usize]) -> Result<Batch> {
        Batch::from_transitions(indices.iter().map(|&i| &self.entries[i]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{seeded, Tier};

    fn tr(x: f64) -> Transition {
        Transition {
            state: vec![x],
            action: vec![0.0],
            reward: x,
            next_state: vec![x],
            done: false,
        }
    }

    fn offline(n: usize) -> Dataset {
        Dataset::from_transitions((0..n).map(|i| tr(i as f64)).collect(), 1, 1, Tier::Custom)
            .unwrap()
    }

    #[test]
    fn priority_closed_forms() {
        let p1 = PriorityParams::new(2.0, 1.0).unwrap();
        let p2 = PriorityParams::new(1.0, 2.0).unwrap();
        assert_eq!(priority_from_distance(0.0, &p1), 1.0);
        assert_eq!(priority_from_distance(2.0, &p1), 2.0);
        assert_eq!(priority_from_distance(2.0, &p2), 9.0);
    }

    #[test]
    fn mass_accounting_and_fifo_eviction() {
        let mut buf = PriorityBuffer::new(5).unwrap();
        buf.push_offline(&offline(3)).unwrap();
        assert_eq!(buf.total_priority(), 3.0);
        buf.push_with_priority(tr(10.0), 2.0).unwrap();
        assert_eq!(buf.total_priority(), 5.0);
        buf.push_with_priority(tr(11.0), 1.0).unwrap();
        buf.push_with_priority(tr(12.0), 1.0).unwrap();
        assert_eq!(buf.total_priority(), 5.0);
        assert!(buf.iter().all(|(t, _)| t.reward != 10.0));
        assert_eq!(buf.len(), 5);
    }

    #[test]
    fn offline_capacity_and_ordering_errors() {
        let mut buf = PriorityBuffer::new(3).unwrap();
        assert!(matches!(
            buf.push_offline(&offline(3)),
            Err(Error::Config(_))
        ));
        buf.push_offline(&Dataset::new(1, 1, Tier::Custom)).unwrap();
        assert!(buf.is_empty());
        assert!(matches!(
            buf.sample_batch(1, &mut seeded(0)),
            Err(Error::State(_))
        ));
        buf.push_with_priority(tr(0.0), 1.0).unwrap();
        assert!(matches!(
            buf.push_offline(&offline(1)),
            Err(Error::State(_))
        ));
        assert!(buf.push_with_priority(tr(0.0), 0.5).is_err());
    }

    #[test]
    fn single_entry_is_always_sampled() {
        let mut buf = PriorityBuffer::new(2).unwrap();
        buf.push_with_priority(tr(7.0), 3.0).unwrap();
        let draws = buf.sample_batch(50, &mut seeded(4)).unwrap();
        assert!(draws.iter().all(|(t, rho)| t.reward == 7.0 && *rho == 3.0));
    }
}
