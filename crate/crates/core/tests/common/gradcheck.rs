use baq::bc::bc_loss;
use baq::losses::{
    awr_policy_loss, cql_loss, iql_q_loss, iql_value_loss, sac_actor_loss_with_noise, td_loss,
    IqlParams, PenaltyActions,
};
use baq::nn::Params;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::*;

pub const BATCH: usize = 6;

pub type Case = fn(u64) -> f64;

/// Every differentiable objective, named by the quantity it trains.
pub const CASES: &[(&str, Case)] = &[
    ("bc negative log-likelihood", bc_nll),
    ("cql critic", cql_plain),
    ("weighted cql critic", cql_weighted),
    ("td regression", td_plain),
    ("iql expectile value", iql_value_plain),
    ("weighted iql expectile value", iql_value_weighted),
    ("iql q regression", iql_q_plain),
    ("weighted iql q regression", iql_q_weighted),
    ("awr policy", awr),
    ("sac actor", sac_actor),
];

fn targets(n: usize, rng: &mut Prng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

pub fn bc_nll(seed: u64) -> f64 {
    let mut r = rng(seed);
    let pi = policy(false, &mut r);
    let b = random_batch(BATCH, &mut r);
    let (_, g) = bc_loss(&pi, b.states.view(), b.actions.view()).unwrap();
    let fd = fd_gradient(&pi, |p| {
        bc_loss(p, b.states.view(), b.actions.view()).unwrap().0
    });
    relative_error(&g.flat(), &fd)
}

fn cql_case(seed: u64, weighted: bool) -> f64 {
    let mut r = rng(seed);
    let pi = policy(true, &mut r);
    let q = critic(&mut r);
    let b = random_batch(BATCH, &mut r);
    let y = targets(BATCH, &mut r);
    let w = weighted.then(|| random_weights(BATCH, &mut r));
    let pen = PenaltyActions::draw(&pi, b.states.view(), 3, &box_spec(), &mut r).unwrap();
    let out = cql_loss(&q, &b, &y, &pen, 1.7, w.as_deref()).unwrap();
    let fd = fd_gradient(&q, |n| {
        cql_loss(n, &b, &y, &pen, 1.7, w.as_deref()).unwrap().total
    });
    relative_error(&out.grads.flat(), &fd)
}

pub fn cql_plain(seed: u64) -> f64 {
    cql_case(seed, false)
}

pub fn cql_weighted(seed: u64) -> f64 {
    cql_case(seed, true)
}

pub fn td_plain(seed: u64) -> f64 {
    let mut r = rng(seed);
    let q = critic(&mut r);
    let b = random_batch(BATCH, &mut r);
    let y = targets(BATCH, &mut r);
    let (_, g) = td_loss(&q, &b, &y, None).unwrap();
    let fd = fd_gradient(&q, |n| td_loss(n, &b, &y, None).unwrap().0);
    relative_error(&g.flat(), &fd)
}

fn iql_value_case(seed: u64, weighted: bool) -> f64 {
    let mut r = rng(seed);
    let v = value_net(&mut r);
    let (q1, q2) = (critic(&mut r), critic(&mut r));
    let b = random_batch(BATCH, &mut r);
    let w = weighted.then(|| random_weights(BATCH, &mut r));
    let p = IqlParams {
        tau: 0.8,
        ..IqlParams::default()
    };
    let (_, g) = iql_value_loss(&v, &[&q1, &q2], &b, &p, w.as_deref()).unwrap();
    let fd = fd_gradient(&v, |n| {
        iql_value_loss(n, &[&q1, &q2], &b, &p, w.as_deref())
            .unwrap()
            .0
    });
    relative_error(&g.flat(), &fd)
}

pub fn iql_value_plain(seed: u64) -> f64 {
    iql_value_case(seed, false)
}

pub fn iql_value_weighted(seed: u64) -> f64 {
    iql_value_case(seed, true)
}

fn iql_q_case(seed: u64, weighted: bool) -> f64 {
    let mut r = rng(seed);
    let q = critic(&mut r);
    let v = value_net(&mut r);
    let b = random_batch(BATCH, &mut r);
    let w = weighted.then(|| random_weights(BATCH, &mut r));
    let (_, g) = iql_q_loss(&q, &v, &b, 0.9, w.as_deref()).unwrap();
    let fd = fd_gradient(&q, |n| iql_q_loss(n, &v, &b, 0.9, w.as_deref()).unwrap().0);
    relative_error(&g.flat(), &fd)
}

pub fn iql_q_plain(seed: u64) -> f64 {
    iql_q_case(seed, false)
}

pub fn iql_q_weighted(seed: u64) -> f64 {
    iql_q_case(seed, true)
}

pub fn awr(seed: u64) -> f64 {
    let mut r = rng(seed);
    let pi = policy(false, &mut r);
    let (q1, q2) = (critic(&mut r), critic(&mut r));
    let v = value_net(&mut r);
    let b = random_batch(BATCH, &mut r);
    let p = IqlParams::default();
    let (_, g) = awr_policy_loss(&pi, &[&q1, &q2], &v, &b, &p).unwrap();
    let fd = fd_gradient(&pi, |n| {
        awr_policy_loss(n, &[&q1, &q2], &v, &b, &p).unwrap().0
    });
    relative_error(&g.flat(), &fd)
}

pub fn sac_actor(seed: u64) -> f64 {
    let mut r = rng(seed);
    let pi = policy(true, &mut r);
    let (q1, q2) = (critic(&mut r), critic(&mut r));
    let b = random_batch(BATCH, &mut r);
    let noise = Array2::from_shape_simple_fn((BATCH, ACTION_DIM), || r.sample(StandardNormal));
    let loss = |p: &baq::nn::GaussianPolicy| {
        sac_actor_loss_with_noise(p, &[&q1, &q2], b.states.view(), 0.3, noise.clone()).unwrap()
    };
    let (_, g) = loss(&pi);
    let fd = fd_gradient(&pi, |p| loss(p).0);
    relative_error(&g.flat(), &fd)
}
