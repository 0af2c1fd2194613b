mod common;

use baq::bc::bc_loss;
use baq::losses::{
    action_mse, awr_policy_loss, behavior_weight, cql_loss, expectile_loss, expectile_value_loss,
    iql_q_loss, sac_actor_loss, sac_actor_loss_with_noise, soft_bellman_targets, weight_from_mse,
    IqlParams, PenaltyActions, WeightParams,
};
use baq::mdp::{one_hot, seeded, ActionKind, Batch, EnvSpec, Transition};
use baq::nn::{Activation, Adam, DenseNet, GaussianPolicy, Params};
use ndarray::Array2;
use proptest::prelude::*;

fn constant_net(inputs: usize, value: f64) -> DenseNet {
    let mut net = DenseNet::zeros(&[inputs, 1], Activation::Identity).unwrap();
    net.biases_mut()[0][0] = value;
    net
}

fn constant_policy(state_dim: usize, mean: &[f64]) -> GaussianPolicy {
    let mut net = DenseNet::zeros(&[state_dim, mean.len()], Activation::Identity).unwrap();
    net.biases_mut()[0]
        .as_slice_mut()
        .unwrap()
        .copy_from_slice(mean);
    let d = mean.len();
    GaussianPolicy::from_parts(net, vec![0.0; d], false, vec![-10.0; d], vec![10.0; d]).unwrap()
}

fn one(state: Vec<f64>, action: Vec<f64>, reward: f64, next: Vec<f64>, done: bool) -> Transition {
    Transition {
        state,
        action,
        reward,
        next_state: next,
        done,
    }
}

fn discrete_spec(n_actions: usize) -> EnvSpec {
    EnvSpec {
        state_dim: 1,
        action_dim: n_actions,
        action_low: vec![0.0; n_actions],
        action_high: vec![1.0; n_actions],
        max_episode_steps: 10,
        gamma: 0.9,
        action_kind: ActionKind::OneHot,
    }
}

#[test]
fn behavior_weight_closed_forms() {
    let pi = constant_policy(1, &[1.0, 0.0]);
    let w2 = behavior_weight(&pi, &[0.0], &[0.0, 1.0], &WeightParams::new(2.0).unwrap()).unwrap();
    let w1 = behavior_weight(&pi, &[0.0], &[0.0, 1.0], &WeightParams::new(1.0).unwrap()).unwrap();
    assert!((w2 - (-0.5f64).exp()).abs() < 1e-15);
    assert!((w1 - (-1.0f64).exp()).abs() < 1e-15);
    assert_eq!(
        behavior_weight(&pi, &[0.0], &[1.0, 0.0], &WeightParams::new(1.0).unwrap()).unwrap(),
        1.0
    );
    assert_eq!(
        weight_from_mse(3.0, &WeightParams::new(f64::INFINITY).unwrap()),
        1.0
    );
}

#[test]
fn cql_on_flat_two_action_q_is_ln_two() {
    let q = DenseNet::zeros(&[3, 1], Activation::Identity).unwrap();
    let batch =
        Batch::from_transitions(&[one(vec![1.0], one_hot(0, 2), 0.0, vec![1.0], false)]).unwrap();
    let pi = constant_policy(1, &[0.0, 0.0]);
    let pen = PenaltyActions::draw(
        &pi,
        batch.states.view(),
        10,
        &discrete_spec(2),
        &mut seeded(0),
    )
    .unwrap();
    let out = cql_loss(&q, &batch, &[0.0], &pen, 1.0, None).unwrap();
    assert!((out.total - std::f64::consts::LN_2).abs() < 1e-15);
}

#[test]
fn zero_weights_leave_only_the_conservative_term() {
    let mut r = common::rng(5);
    let pi = common::policy(true, &mut r);
    let q = common::critic(&mut r);
    let b = common::random_batch(8, &mut r);
    let y = vec![0.7; 8];
    let pen = PenaltyActions::draw(&pi, b.states.view(), 4, &common::box_spec(), &mut r).unwrap();
    let out = cql_loss(&q, &b, &y, &pen, 2.5, Some(&[0.0; 8])).unwrap();
    assert_eq!(out.td, 0.0);
    assert_eq!(out.total, 2.5 * out.conservative);
}

#[test]
fn expectile_value_closed_forms() {
    let v = constant_net(2, 0.0);
    let s = Array2::zeros((1, 2));
    let (loss, _) = expectile_value_loss(&v, s.view(), &[1.0], 0.7, None).unwrap();
    assert!((loss - 0.7).abs() < 1e-15);

    let v = constant_net(2, 1.3);
    let s = Array2::zeros((3, 2));
    let (loss, g) = expectile_value_loss(&v, s.view(), &[1.3; 3], 0.9, None).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.flat().iter().all(|&x| x == 0.0));
}

#[test]
fn halving_weights_halves_value_loss_and_gradient() {
    let mut r = common::rng(9);
    let v = common::value_net(&mut r);
    let b = common::random_batch(6, &mut r);
    let q: Vec<f64> = (0..6).map(|i| i as f64 * 0.3 - 0.8).collect();
    let w = common::random_weights(6, &mut r);
    let half: Vec<f64> = w.iter().map(|x| x / 2.0).collect();
    let (l1, g1) = expectile_value_loss(&v, b.states.view(), &q, 0.7, Some(&w)).unwrap();
    let (l2, g2) = expectile_value_loss(&v, b.states.view(), &q, 0.7, Some(&half)).unwrap();
    assert!((l2 - l1 / 2.0).abs() < 1e-15);
    for (a, b) in g1.flat().iter().zip(g2.flat()) {
        assert!((b - a / 2.0).abs() < 1e-15);
    }
}

#[test]
fn iql_q_loss_vanishes_at_the_bellman_fixpoint() {
    let q = constant_net(2, 1.9);
    let v = constant_net(1, 1.0);
    let batch =
        Batch::from_transitions(&[one(vec![0.0], vec![0.0], 1.0, vec![0.0], false)]).unwrap();
    let (loss, g) = iql_q_loss(&q, &v, &batch, 0.9, None).unwrap();
    assert!(loss.abs() < 1e-28);
    assert!(g.flat().iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn zero_weight_sample_contributes_nothing() {
    let mut r = common::rng(12);
    let q = common::critic(&mut r);
    let v = common::value_net(&mut r);
    let mut b = common::random_batch(4, &mut r);
    let w = [0.4, 1.0, 0.0, 0.8];
    let (l1, g1) = iql_q_loss(&q, &v, &b, 0.9, Some(&w)).unwrap();
    b.rewards[2] += 100.0;
    b.actions[[2, 0]] = -0.5;
    let (l2, g2) = iql_q_loss(&q, &v, &b, 0.9, Some(&w)).unwrap();
    assert_eq!(l1, l2);
    assert_eq!(g1.flat(), g2.flat());
}

#[test]
fn awr_with_zero_advantage_is_behavior_cloning() {
    let mut r = common::rng(3);
    let pi = common::policy(false, &mut r);
    let b = common::random_batch(7, &mut r);
    let q = constant_net(common::STATE_DIM + common::ACTION_DIM, 2.0);
    let v = constant_net(common::STATE_DIM, 2.0);
    let (la, ga) = awr_policy_loss(&pi, &[&q, &q], &v, &b, &IqlParams::default()).unwrap();
    let (lb, gb) = bc_loss(&pi, b.states.view(), b.actions.view()).unwrap();
    assert!((la - lb).abs() < 1e-12);
    assert!(common::relative_error(&ga.flat(), &gb.flat()) < 1e-12);

    let q_hi = constant_net(common::STATE_DIM + common::ACTION_DIM, 1e4);
    let (lc, _) = awr_policy_loss(&pi, &[&q_hi], &v, &b, &IqlParams::default()).unwrap();
    assert!((lc - 100.0 * lb).abs() < 1e-9 * lc.abs());
}

#[test]
fn actor_gradient_vanishes_for_action_independent_q_without_entropy() {
    let mut r = common::rng(4);
    let pi = common::policy(true, &mut r);
    let q = constant_net(common::STATE_DIM + common::ACTION_DIM, -3.0);
    let b = common::random_batch(5, &mut r);
    let (_, g) = sac_actor_loss(&pi, &[&q], b.states.view(), 0.0, &mut r).unwrap();
    assert!(g.flat().iter().all(|&x| x == 0.0));
}

/// `Q(a) = tanh(2(a - a*) + 1) - tanh(2(a - a*) - 1)`, a bump centred at `a*`.
fn bump_critic(peak: f64) -> DenseNet {
    let mut q = DenseNet::zeros(&[2, 2, 1], Activation::Tanh).unwrap();
    q.weights_mut()[0][[1, 0]] = 2.0;
    q.weights_mut()[0][[1, 1]] = 2.0;
    q.biases_mut()[0][0] = 1.0 - 2.0 * peak;
    q.biases_mut()[0][1] = -1.0 - 2.0 * peak;
    q.weights_mut()[1][[0, 0]] = 1.0;
    q.weights_mut()[1][[1, 0]] = -1.0;
    q
}

#[test]
fn actor_climbs_a_quadratic_bump() {
    let q = bump_critic(0.5);
    let mut net = DenseNet::zeros(&[1, 1], Activation::Identity).unwrap();
    net.biases_mut()[0][0] = -0.8;
    let mut pi = GaussianPolicy::from_parts(net, vec![-1.0], true, vec![-1.0], vec![1.0]).unwrap();
    let mut opt = Adam::new(&pi, 1e-2);
    let states = Array2::zeros((64, 1));
    let mut r = seeded(1);
    let start = (pi.mean_action(&[0.0]).unwrap()[0] - 0.5).abs();
    for _ in 0..400 {
        let (_, g) = sac_actor_loss(&pi, &[&q], states.view(), 0.0, &mut r).unwrap();
        opt.step(&mut pi, &g).unwrap();
        pi.project();
    }
    let end = (pi.mean_action(&[0.0]).unwrap()[0] - 0.5).abs();
    assert!(
        end < 0.05 && end < start / 10.0,
        "distance {start} -> {end}"
    );
}

#[test]
fn terminal_targets_are_the_reward_and_discrete_backups_are_greedy() {
    let q = DenseNet::zeros(&[3, 1], Activation::Identity).unwrap();
    let mut q = q;
    q.weights_mut()[0][[2, 0]] = 4.0; // Q(s, a1) = 4, Q(s, a0) = 0
    let pi = constant_policy(1, &[0.0, 0.0]);
    let batch = Batch::from_transitions(&[
        one(vec![0.0], one_hot(0, 2), 1.5, vec![0.0], true),
        one(vec![0.0], one_hot(0, 2), 1.0, vec![0.0], false),
    ])
    .unwrap();
    let y = soft_bellman_targets(
        &[&q],
        &pi,
        &batch,
        0.5,
        0.2,
        &discrete_spec(2),
        None,
        &mut seeded(0),
    )
    .unwrap();
    assert_eq!(y, vec![1.5, 3.0]);
}

#[test]
fn fixed_noise_actor_loss_is_deterministic() {
    let mut r = common::rng(6);
    let pi = common::policy(true, &mut r);
    let q = common::critic(&mut r);
    let b = common::random_batch(3, &mut r);
    let noise = Array2::from_elem((3, common::ACTION_DIM), 0.3);
    let a = sac_actor_loss_with_noise(&pi, &[&q], b.states.view(), 0.2, noise.clone()).unwrap();
    let c = sac_actor_loss_with_noise(&pi, &[&q], b.states.view(), 0.2, noise).unwrap();
    assert_eq!(a.0.to_bits(), c.0.to_bits());
}

proptest! {
    // Keeps mse / k_q below the f64 underflow point of exp.
    #[test]
    fn weight_is_in_unit_interval_and_monotone(
        m1 in 0.0f64..50.0, dm in 1e-6f64..10.0, k in 0.1f64..10.0, dk in 1e-3f64..10.0,
    ) {
        let wp = WeightParams::new(k).unwrap();
        let w = weight_from_mse(m1, &wp);
        prop_assert!(w > 0.0 && w <= 1.0);
        prop_assert!(weight_from_mse(m1 + dm, &wp) < w);
        if m1 > 0.0 {
            prop_assert!(weight_from_mse(m1, &WeightParams::new(k + dk).unwrap()) > w);
        }
    }

    #[test]
    fn expectile_loss_symmetries(u in -1e3f64..1e3, tau in 0.0f64..1.0) {
        prop_assert_eq!(expectile_loss(u, 0.5), 0.5 * u * u);
        let a = expectile_loss(u, tau);
        let b = expectile_loss(-u, 1.0 - tau);
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn action_mse_is_mean_squared_difference(
        xs in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8),
    ) {
        let (m, a): (Vec<f64>, Vec<f64>) = xs.iter().copied().unzip();
        let expect = xs.iter().map(|(p, q)| (p - q).powi(2)).sum::<f64>() / xs.len() as f64;
        prop_assert!((action_mse(&m, &a) - expect).abs() < 1e-12);
    }
}
