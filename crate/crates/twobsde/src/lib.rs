//! Numerical solvers for second-order backward SDEs (2BSDEs) under
//! volatility uncertainty.
//!
//! The value of interest is `Y0 = sup` over volatility regimes `a` in a
//! compact interval `A = [a_lo, a_hi]` of solutions to backward equations
//! driven by controlled discrete-time martingales.  The driving increments
//! `H(a, u)` carry a moment contract (mean zero, variance `a·Δt`, bounded
//! `2+δ` moment) that makes the discrete values converge to the
//! continuous-time object.
//!
//! Four solvers share the same model interface:
//!
//! * [`tree`] — exact dynamic programming on the full trinomial path tree,
//!   implicit or explicit in the generator; the small-`n` oracle.
//! * [`fd`] — monotone explicit finite differences on the reduced `(x, m)`
//!   state, where `m = ∫ x dt` carries the Asian-style terminal condition.
//! * [`proba`] — regression Monte Carlo with second-order weights: simulate
//!   under a base diffusion `a0`, extract curvature from weighted
//!   regressions, maximize a per-step Hamiltonian over the control grid.
//! * [`pde`] — splitting finite-difference benchmark for the equivalent
//!   degenerate HJB PDE (advection in `m`, diffusion/optimization in `x`).
//!
//! [`models`] ships the two worked example problems (a differential-game
//! generator and a robust-utility generator with an Asian call-spread
//! terminal condition), [`increments`] the admissible increment families
//! and their moment validators, and [`harness`] the sweep/validation
//! front end used by the `twobsde` binary.
//!
//! ```
//! use twobsde::models::ModelConfig;
//! use twobsde::types::TimeGrid;
//! use twobsde::fd::{fd_solve, LatticeConfig};
//!
//! let model = ModelConfig::f1_default();
//! let grid = TimeGrid::new(model.horizon, 20).unwrap();
//! let lattice = LatticeConfig::for_model(&model);
//! let result = fd_solve(
//!     &model.generator(),
//!     &model.terminal(),
//!     &model.control_set().unwrap(),
//!     &grid,
//!     model.x0,
//!     &lattice,
//! )
//! .unwrap();
//! assert!((result.y0 - 0.147).abs() < 0.01);
//! ```

pub mod config;
pub mod error;
pub mod fd;
pub mod harness;
pub mod increments;
pub mod math;
pub mod models;
pub mod parallel;
pub mod pde;
pub mod proba;
pub mod tree;
pub mod types;

pub use error::{Result, SolverError};
pub use types::{ControlSet, Generator, Scheme, SolveResult, TerminalCondition, TimeGrid};
