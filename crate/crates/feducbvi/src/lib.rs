//! Std side of the simulator: JSON and CSV formats, sweeps, the invariant
//! battery and the command-line front end. All numerics live in
//! [`feducbvi_core`].

pub mod check;
pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;
pub mod output;
pub mod sweep;

pub use error::{AppError, AppResult};
