//! Quasi-dynamic energy flow simulation for coupled heat/electricity
//! networks.
//!
//! The solver converts the governing nonlinear partial-differential-algebraic
//! system into linear recursions over Taylor (differential-transformation)
//! coefficients. Each time window needs one factorization of a constant
//! coefficient matrix and a fixed number of convolution passes, after which
//! every variable has a closed-form polynomial over the window.
//!
//! Module map:
//! - [`network`]: topology, incidence/loop matrices, compound nodes, reversal
//! - [`dt`]: series arithmetic, driver trajectories, root finding
//! - [`pde`]: semi-discrete TVD pipe discretization and its DT recursion
//! - [`assembly`]: per-order linear systems `A₀·Y(k) = C` over the registry
//! - [`control`]: embedded error estimate and adaptive window sizing
//! - [`sas`]: the per-window three-step recursion and the simulation driver
//! - [`reference`]: finite-difference and Runge-Kutta baselines, error metrics
//! - [`trajectory`]: sampled outputs, CSV schema, residual reports
//!
//! All numerics are generic over [`Scalar`]; the `*64` aliases below pin the
//! common double-precision instantiations.

pub mod assembly;
pub mod control;
pub mod dt;
pub mod error;
pub mod network;
pub mod pde;
pub mod reference;
pub mod sas;
pub mod scalar;
pub mod trajectory;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Double-precision series.
pub type DtSeries64 = dt::DtSeries<f64>;
/// Single-precision series.
pub type DtSeries32 = dt::DtSeries<f32>;
/// Double-precision driver profile.
pub type DriverProfile64 = dt::DriverProfile<f64>;
/// Double-precision coupled system.
pub type CoupledSystem64 = network::CoupledSystem<f64>;
/// Double-precision heat network.
pub type HeatNetwork64 = network::HeatNetwork<f64>;
/// Double-precision adaptive controller configuration.
pub type AdaptiveConfig64 = control::AdaptiveConfig<f64>;
