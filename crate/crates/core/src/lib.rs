//! Barrier certification and explicit finite-difference solving for
//! Trudinger's equation `Δ_p u = (p-1) u^{p-2} u_t` and its log form
//! `Δ_p η + (p-1)|Dη|^p - (p-1) η_t = 0`, `η = log u`.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barriers;
pub mod calculus;
pub mod cli;
pub mod domain;
pub mod error;
pub mod expr;
pub mod problem;
pub mod sampling;
pub mod solver;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
