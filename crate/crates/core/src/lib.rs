//! Core of a federated UCBVI simulator for heterogeneous tabular episodic MDPs.
//!
//! The crate is `no_std` with `alloc`: everything here is pure computation
//! over in-memory tables. File formats, the sweep runner and the CLI live in
//! the `feducbvi` companion crate.
//!
//! Layout:
//!
//! - [`mdp`]: finite-horizon MDPs, backward induction, policy evaluation and
//!   trajectory sampling.
//! - [`env`]: heterogeneous agent fleets (mixture kernels, reward spread) and
//!   the GridWorld / synthetic / two-state lower-bound environments.
//! - [`learner`]: confidence functions, empirical kernels, local Q estimates,
//!   pooled variance, Bernstein bonus and weighted aggregation.
//! - [`protocol`]: client and server state machines, the two-tier
//!   synchronization rule, message accounting and lockstep rounds.
//! - [`harness`]: end-to-end runs measuring common regret against exact
//!   oracles.
#![cfg_attr(not(test), no_std)]
// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod mdp;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
