//! Bayesian machine games: games whose players are machines and whose
//! utilities depend on both the actions taken and the cost of computing them.

pub mod bits;
pub mod catalog;
pub mod cli;
pub mod coins;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod game;
pub mod machine;
pub mod mediated;
pub mod rational;
pub mod repeated;
pub mod report;

pub use bits::{Action, BitString};
pub use error::{Error, Result};
pub use machine::{Budgets, Machine, RunTrace, StaticMetrics};
pub use rational::{Dyadic, DyadicDist, Q};
