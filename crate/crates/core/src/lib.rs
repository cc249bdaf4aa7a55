//! Stochastic analysis on finite path spaces driven by obtuse random walks:
//! chaos expansions, gradient and divergence, Clark–Ocone formulas, the
//! Ornstein–Uhlenbeck semigroup and hedging in complete discrete markets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod error;
pub mod integrals;
pub mod malliavin;
pub mod market;
pub mod omega;
pub mod ou;
pub mod walk;

pub use error::{Error, Result};
