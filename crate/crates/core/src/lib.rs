//! Agent-based simulator and numerical toolkit for a trust game in which
//! buyers (donators) must spend with exactly `K` sellers (rewarders) and
//! sellers imitate the value-for-money of more profitable peers.
//!
//! * [`model`]: population state and the microscopic update rules.
//! * [`engine`]: time stepping, observables and parallel sweeps.
//! * [`stability`]: linearized dynamics around the all-`w = 1` state and the
//!   critical update rate `a_c(K)`.
//! * [`master_eq`]: deterministic integration of the `P(k, w)` master equation.
//! * [`analysis`]: variance, Welch spectra and power-law tail estimation.

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod error;
pub mod io;
pub mod master_eq;
pub mod model;
pub mod stability;

pub use engine::{run, sweep, DegreeHistogram, RunResult, Simulation, SweepGrid, SweepRow, TimeSeries};
pub use error::{Error, Result};
pub use model::{InitialW, Population, SimParams};
