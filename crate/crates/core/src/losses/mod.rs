//! Critic, value and policy objectives as pure loss-and-gradient functions
//! over minibatches.
//!
//! Optional per-sample weights default to 1; supplying behavior weights turns
//! each loss into its behavior-adaptive variant.

mod actor;
mod cql;
mod iql;
mod weight;

pub use actor::{sac_actor_loss, sac_actor_loss_with_noise};
pub use cql::{
    cql_loss, min_q, q_input, soft_bellman_targets, td_loss, CqlParams, CriticLoss, PenaltyActions,
};
pub use iql::{
    awr_policy_loss, expectile_value_loss, iql_q_loss, iql_q_targets, iql_value_loss, IqlParams,
};
pub use weight::{
    action_mse, behavior_weight, behavior_weights, expectile_grad, expectile_loss, weight_from_mse,
    WeightParams,
};
