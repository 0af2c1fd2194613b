use baq::mdp::{seeded, Dataset, Tier, Transition};
use baq::nn::{Activation, DenseNet, GaussianPolicy};
use baq::replay::{
    compute_priority, priority_from_distance, PriorityBuffer, PriorityParams, SumTree,
};
use proptest::prelude::*;

fn tr(tag: f64) -> Transition {
    Transition {
        state: vec![tag],
        action: vec![0.0],
        reward: tag,
        next_state: vec![tag],
        done: false,
    }
}

fn offline(n: usize) -> Dataset {
    Dataset::from_transitions((0..n).map(|i| tr(i as f64)).collect(), 1, 1, Tier::Custom).unwrap()
}

fn frequencies(buf: &PriorityBuffer, draws: usize, seed: u64) -> Vec<f64> {
    let mut counts = vec![0usize; buf.len()];
    for i in buf.sample_indices(draws, &mut seeded(seed)).unwrap() {
        counts[i] += 1;
    }
    counts.iter().map(|&c| c as f64 / draws as f64).collect()
}

#[test]
fn offline_push_sets_unit_mass() {
    let mut buf = PriorityBuffer::new(10).unwrap();
    buf.push_offline(&Dataset::new(1, 1, Tier::Custom)).unwrap();
    assert!(buf.is_empty());
    assert_eq!(buf.total_priority(), 0.0);
    buf.push_offline(&offline(3)).unwrap();
    assert_eq!(buf.total_priority(), 3.0);
    assert!(buf.iter().all(|(_, rho)| rho == 1.0));
}

#[test]
fn offline_only_sampling_is_uniform() {
    let mut buf = PriorityBuffer::new(10).unwrap();
    buf.push_offline(&offline(3)).unwrap();
    for f in frequencies(&buf, 100_000, 1) {
        assert!((f * 3.0 - 1.0).abs() < 0.05, "{f}");
    }
}

#[test]
fn online_mass_accounting_and_fifo_eviction() {
    let mut buf = PriorityBuffer::new(5).unwrap();
    buf.push_offline(&offline(3)).unwrap();
    buf.push_with_priority(tr(10.0), 2.0).unwrap();
    assert_eq!(buf.total_priority(), 5.0);
    buf.push_with_priority(tr(11.0), 1.5).unwrap();
    assert_eq!(buf.total_priority(), 6.5);
    buf.push_with_priority(tr(12.0), 1.0).unwrap();
    assert_eq!(buf.total_priority(), 5.5);
    assert!(buf.iter().all(|(t, _)| t.reward != 10.0));
    assert_eq!(buf.offline_len(), 3);
    assert_eq!(buf.len(), 5);
}

#[test]
fn proportional_sampling_matches_priorities() {
    let mut buf = PriorityBuffer::new(3).unwrap();
    for (i, rho) in [1.0, 1.0, 2.0].into_iter().enumerate() {
        buf.push_with_priority(tr(i as f64), rho).unwrap();
    }
    let f = frequencies(&buf, 100_000, 2);
    for (fi, p) in f.iter().zip([0.25, 0.25, 0.5]) {
        assert!((fi - p).abs() < 0.01);
    }
}

#[test]
fn equal_priorities_pass_a_chi_square_test() {
    let mut buf = PriorityBuffer::new(100).unwrap();
    for i in 0..100 {
        buf.push_with_priority(tr(i as f64), 3.0).unwrap();
    }
    let draws = 100_000;
    let expected = draws as f64 / 100.0;
    let chi2: f64 = frequencies(&buf, draws, 3)
        .iter()
        .map(|f| (f * draws as f64 - expected).powi(2) / expected)
        .sum();
    // Upper 1% point of the chi-square distribution with 99 degrees of freedom.
    assert!(chi2 < 134.642, "chi-square {chi2}");
}

#[test]
fn bad_priorities_are_rejected() {
    let mut buf = PriorityBuffer::new(4).unwrap();
    assert!(buf.push_with_priority(tr(0.0), 0.5).is_err());
    assert!(buf.push_with_priority(tr(0.0), f64::NAN).is_err());
    assert!(buf.sample_indices(3, &mut seeded(0)).is_err());
    assert!(PriorityParams::new(0.0, 1.0).is_err());
    assert!(PriorityParams::new(1.0, -1.0).is_err());
}

#[test]
fn online_priority_uses_bc_distance() {
    let mut net = DenseNet::zeros(&[1, 2], Activation::Identity).unwrap();
    net.biases_mut()[0][0] = 0.5;
    let pi =
        GaussianPolicy::from_parts(net, vec![0.0; 2], false, vec![-1.0; 2], vec![1.0; 2]).unwrap();
    let pp = PriorityParams::new(0.5, 2.0).unwrap();
    let mut buf = PriorityBuffer::new(2).unwrap();
    let mut t = tr(0.0);
    t.action = vec![0.5, 1.0];
    let rho = buf.push_online(t, &pi, &pp).unwrap();
    assert!((rho - 9.0).abs() < 1e-12);
    assert_eq!(
        rho,
        compute_priority(&pi, &[0.0], &[0.5, 1.0], &pp).unwrap()
    );
}

#[derive(Clone, Debug)]
enum Op {
    Push(f64),
    Sample(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        (1.0f64..20.0).prop_map(Op::Push),
        (1usize..16).prop_map(Op::Sample),
    ]
}

proptest! {
    #[test]
    fn buffer_invariants_hold_under_any_sequence(
        n_off in 0usize..6,
        extra in 1usize..8,
        ops in prop::collection::vec(op(), 0..60),
        seed in 0u64..1000,
    ) {
        let mut buf = PriorityBuffer::new(n_off + extra).unwrap();
        buf.push_offline(&offline(n_off)).unwrap();
        let mut rng = seeded(seed);
        let mut online = std::collections::VecDeque::new();
        for (k, o) in ops.into_iter().enumerate() {
            match o {
                Op::Push(rho) => {
                    buf.push_with_priority(tr(100.0 + k as f64), rho).unwrap();
                    online.push_back(rho);
                    if online.len() > extra {
                        online.pop_front();
                    }
                }
                Op::Sample(n) if !buf.is_empty() => {
                    let before: Vec<f64> = buf.iter().map(|(_, r)| r).collect();
                    let idx = buf.sample_indices(n, &mut rng).unwrap();
                    prop_assert!(idx.iter().all(|&i| i < buf.len()));
                    let after: Vec<f64> = buf.iter().map(|(_, r)| r).collect();
                    prop_assert_eq!(before, after);
                }
                Op::Sample(_) => {}
            }
            let sum: f64 = buf.iter().map(|(_, r)| r).sum();
            prop_assert!((buf.total_priority() - sum).abs() < 1e-9);
            prop_assert!(buf.len() <= buf.capacity());
            prop_assert!(buf.iter().all(|(_, r)| r >= 1.0));
            prop_assert_eq!(buf.offline_len(), n_off);
            prop_assert_eq!(buf.online_len(), online.len());
            let expected: f64 = n_off as f64 + online.iter().sum::<f64>();
            prop_assert!((buf.total_priority() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn sum_tree_root_tracks_leaves(
        size in 1usize..64,
        writes in prop::collection::vec((0usize..64, 0.0f64..10.0), 0..100),
    ) {
        let mut tree = SumTree::new(size);
        let mut leaves = vec![0.0; size];
        for (i, v) in writes {
            let i = i % size;
            tree.set(i, v);
            leaves[i] = v;
            prop_assert!((tree.total() - leaves.iter().sum::<f64>()).abs() < 1e-9);
            prop_assert_eq!(tree.get(i), v);
        }
    }

    #[test]
    fn priority_is_monotone_in_distance(
        d in 0.0f64..100.0, dd in 1e-6f64..10.0, k in 0.1f64..10.0, a in 0.1f64..4.0,
    ) {
        let pp = PriorityParams::new(k, a).unwrap();
        let lo = priority_from_distance(d, &pp);
        prop_assert!(lo >= 1.0);
        prop_assert!(priority_from_distance(d + dd, &pp) > lo);
    }
}
