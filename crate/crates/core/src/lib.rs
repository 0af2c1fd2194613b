#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::too_many_arguments,
    clippy::needless_range_loop
)]

pub mod baselines;
pub mod bc;
pub mod envs;
pub mod error;
pub mod harness;
pub mod losses;
pub mod mdp;
pub mod nn;
pub mod replay;

mod codec;

pub use error::{Error, FormatError, Result};
