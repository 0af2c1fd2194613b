mod common;

use baq::baselines::{
    clipped_noise, perturb_actions, so2_bellman_target, suf_schedule, So2Params, SufParams,
};
use baq::losses::soft_bellman_targets;
use baq::mdp::{seeded, Batch, Transition};
use baq::nn::{Activation, DenseNet};
use ndarray::Array2;
use proptest::prelude::*;

fn constant_q(inputs: usize, value: f64) -> DenseNet {
    let mut net = DenseNet::zeros(&[inputs, 1], Activation::Identity).unwrap();
    net.biases_mut()[0][0] = value;
    net
}

fn quiet() -> So2Params {
    So2Params {
        sigma: 0.0,
        beta: 0.0,
        ..So2Params::default()
    }
}

#[test]
fn clipped_noise_matches_the_clipped_gaussian_std() {
    let p = So2Params::default();
    let (sigma, c) = (p.sigma, p.clip_c);
    let k = c / sigma;
    let tail = 0.022_750_131_948_179_2; // P(Z < -2)
    let pdf = (-0.5 * k * k).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let second_moment = sigma * sigma * ((1.0 - 2.0 * tail) - 2.0 * k * pdf) + 2.0 * c * c * tail;
    let exact_std = second_moment.sqrt();

    let mut r = seeded(17);
    let n = 1_000_000;
    let mut sum2 = 0.0;
    for _ in 0..n / 2 {
        for e in clipped_noise(2, &p, &mut r) {
            assert!(e.abs() <= c);
            sum2 += e * e;
        }
    }
    let std = (sum2 / n as f64).sqrt();
    assert!((std / exact_std - 1.0).abs() < 0.01, "{std} vs {exact_std}");
}

#[test]
fn perturbed_actions_stay_in_the_box() {
    let p = So2Params::default();
    let mut a = Array2::from_elem((50, common::ACTION_DIM), 0.95);
    perturb_actions(&mut a, &p, &common::box_spec(), &mut seeded(1));
    assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    assert!(a.iter().any(|&v| v < 0.95));
}

#[test]
fn so2_target_closed_forms() {
    let mut r = common::rng(2);
    let pi = common::policy(true, &mut r);
    let q = constant_q(common::STATE_DIM + common::ACTION_DIM, 2.0);
    let spec = common::box_spec();
    let s = [0.1; common::STATE_DIM];
    let y = so2_bellman_target(&[&q], &pi, 1.0, &s, false, 0.99, &quiet(), &spec, &mut r).unwrap();
    assert!((y - 2.98).abs() < 1e-12);
    let done = so2_bellman_target(
        &[&q],
        &pi,
        1.0,
        &s,
        true,
        0.99,
        &So2Params::default(),
        &spec,
        &mut r,
    )
    .unwrap();
    assert_eq!(done, 1.0);
}

#[test]
fn so2_target_is_reproducible_and_reduces_without_noise() {
    let mut r = common::rng(3);
    let pi = common::policy(true, &mut r);
    let (q1, q2) = (common::critic(&mut r), common::critic(&mut r));
    let spec = common::box_spec();
    let s = [0.3, -0.2, 0.5, 0.1];
    let p = So2Params::default();
    let a = so2_bellman_target(
        &[&q1, &q2],
        &pi,
        0.5,
        &s,
        false,
        0.9,
        &p,
        &spec,
        &mut seeded(4),
    )
    .unwrap();
    let b = so2_bellman_target(
        &[&q1, &q2],
        &pi,
        0.5,
        &s,
        false,
        0.9,
        &p,
        &spec,
        &mut seeded(4),
    )
    .unwrap();
    assert_eq!(a.to_bits(), b.to_bits());

    let batch = Batch::from_transitions(&[Transition {
        state: s.to_vec(),
        action: vec![0.0; common::ACTION_DIM],
        reward: 0.5,
        next_state: s.to_vec(),
        done: false,
    }])
    .unwrap();
    let plain = soft_bellman_targets(
        &[&q1, &q2],
        &pi,
        &batch,
        0.9,
        0.0,
        &spec,
        None,
        &mut seeded(4),
    )
    .unwrap()[0];
    let reduced = so2_bellman_target(
        &[&q1, &q2],
        &pi,
        0.5,
        &s,
        false,
        0.9,
        &quiet(),
        &spec,
        &mut seeded(4),
    )
    .unwrap();
    assert_eq!(plain.to_bits(), reduced.to_bits());
}

#[test]
fn suf_actor_cadence() {
    let p = SufParams::default();
    let actor_steps: Vec<u64> = (0..8).filter(|&t| suf_schedule(t, &p).1).collect();
    assert_eq!(actor_steps, vec![0, 4]);
    assert!((0..8).all(|t| suf_schedule(t, &p).0 == 20));
    let every = SufParams { g_actor: 1.0, ..p };
    assert!((0..8).all(|t| suf_schedule(t, &every).1));
}

#[test]
fn invalid_baseline_params_are_rejected() {
    assert!(So2Params {
        sigma: -0.1,
        ..So2Params::default()
    }
    .validate()
    .is_err());
    assert!(So2Params {
        n_upc: 0,
        ..So2Params::default()
    }
    .validate()
    .is_err());
    assert!(SufParams {
        g_actor: 0.0,
        ..SufParams::default()
    }
    .validate()
    .is_err());
    assert!(SufParams {
        g_critic: 0,
        ..SufParams::default()
    }
    .validate()
    .is_err());
}

proptest! {
    #[test]
    fn noise_support_is_exact(seed in 0u64..10_000, sigma in 0.0f64..5.0, c in 0.01f64..2.0) {
        let p = So2Params { sigma, clip_c: c, ..So2Params::default() };
        for e in clipped_noise(3, &p, &mut seeded(seed)) {
            prop_assert!(e.abs() <= c);
        }
    }

    #[test]
    fn suf_window_counts(start in 0u64..10_000, n in 1u64..500) {
        let p = SufParams::default();
        let (mut critic, mut actor) = (0u64, 0u64);
        for t in start..start + n {
            let (c, a) = suf_schedule(t, &p);
            critic += c as u64;
            actor += a as u64;
        }
        prop_assert_eq!(critic, 20 * n);
        let ideal = (n as f64 * p.g_actor).floor() as i64;
        prop_assert!((actor as i64 - ideal).abs() <= 1);
    }
}
