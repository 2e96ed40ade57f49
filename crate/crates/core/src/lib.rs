//! Noncooperative energy-efficiency game for D2D communications underlaying
//! a cellular uplink.
//!
//! Module map:
//! - [`net_model`]: SINR, rates, power consumption and utilities.
//! - [`ee_solver`]: per-player EE maximization (Dinkelbach + dual water-filling).
//! - [`se_solver`]: per-player rate maximization baseline.
//! - [`game`]: sequential best-response dynamics and equilibrium checks.
//! - [`analysis`]: EE/SE gaps, tradeoff sweeps, price of anarchy.
//! - [`harness`]: scenario generation, Monte Carlo campaigns, result files.

pub mod error;
pub mod net_model;
pub mod ee_solver;
pub mod se_solver;
pub mod game;
pub mod analysis;
pub mod harness;

pub use error::{Error, Result};
