//! Semi-discrete TVD discretization of the pipe thermal PDE and its DT
//! recursion.
//!
//! The transport equation
//! `∂τ/∂t + (ṁ/γρ)·∂τ/∂x + (λ/γρC_p)·(τ − τ_amb) = 0`
//! is discretized in space only; the minmod-limited slope selections are
//! frozen per window from the window-start values, which turns each pipe
//! into a fixed linear stencil whose DT recursion is evaluated order by
//! order.

mod exact;
mod grid;
mod single_pipe;

pub use exact::{ExactPipeProblem, reference_exact};
pub use grid::{PipeGrid, SlopeChoice, minmod};
pub use single_pipe::{PipeWindow, SinglePipeResult, SinglePipeStats, simulate_single_pipe};

#[cfg(test)]
mod tests;
