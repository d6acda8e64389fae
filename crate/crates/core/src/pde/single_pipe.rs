//! Adaptive DT simulation of a single pipe with known boundary and flow.
//!
//! Exercises the discretization and window controller without the coupled
//! algebraic system: the boundary temperature and the mass flow are known
//! drivers, so each window is a pure Step-1 recursion.

use nalgebra::DVector;

use super::grid::PipeGrid;
use crate::control::{AdaptiveConfig, error_estimate, needs_degenerate_guard, next_step_size};
use crate::dt::{DriverProfile, DtSeries, derive_driver_dt};
use crate::error::{CoreError, Result};
use crate::network::PipeParams;
use crate::scalar::{Scalar, lit};

/// Accepted window of a single-pipe run.
#[derive(Debug, Clone)]
pub struct PipeWindow<T> {
    pub t_start: T,
    pub dt: T,
    /// Output order `K`: evaluation truncates here.
    pub order: usize,
    /// Grid temperature coefficients per DT order (length ≥ `order + 1`).
    pub coeffs: Vec<DVector<T>>,
}

impl<T: Scalar> PipeWindow<T> {
    /// Grid temperatures at absolute time `t` (must lie in the window).
    pub fn sample(&self, t: T) -> DVector<T> {
        let local = t - self.t_start;
        let mut acc = DVector::zeros(self.coeffs[0].len());
        for k in (0..=self.order.min(self.coeffs.len() - 1)).rev() {
            acc = acc * local + &self.coeffs[k];
        }
        acc
    }

    pub fn t_end(&self) -> T {
        self.t_start + self.dt
    }
}

/// Run counters.
#[derive(Debug, Clone, Default)]
pub struct SinglePipeStats {
    pub windows: usize,
    pub rejections: usize,
    /// Windows whose error estimate had to fall back to order `K+2`.
    pub degenerate_guards: usize,
    /// Largest accepted error (should stay ≤ 1).
    pub max_accepted_err: f64,
}

/// Result of a single-pipe run: accepted windows covering `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct SinglePipeResult<T> {
    pub windows: Vec<PipeWindow<T>>,
    pub stats: SinglePipeStats,
    pub grid_positions: Vec<T>,
}

impl<T: Scalar> SinglePipeResult<T> {
    /// Grid temperatures at absolute time `t`.
    pub fn sample(&self, t: T) -> DVector<T> {
        let window = self
            .windows
            .iter()
            .find(|w| t <= w.t_end())
            .unwrap_or_else(|| self.windows.last().expect("at least one window"));
        window.sample(t)
    }
}

/// Simulate one pipe over `[0, horizon]` with adaptive windows.
pub fn simulate_single_pipe<T: Scalar>(
    pipe: &PipeParams<T>,
    ambient: T,
    boundary: &DriverProfile<T>,
    mdot: &DriverProfile<T>,
    initial: &dyn Fn(T) -> T,
    dx_request: T,
    horizon: T,
    config: &AdaptiveConfig<T>,
) -> Result<SinglePipeResult<T>> {
    config.validate()?;
    let order = config.order;
    let mut grid = PipeGrid::new(pipe, ambient, config.theta, dx_request);
    let positions = grid.positions();
    let initial_values =
        DVector::from_iterator(positions.len(), positions.iter().map(|x| initial(*x)));
    grid.reset_state(initial_values);

    let mut stats = SinglePipeStats::default();
    let mut windows: Vec<PipeWindow<T>> = Vec::new();
    let mut t = T::zero();
    let mut dt = config.dt_init.min(config.dt_max);
    let eps_horizon = horizon * lit::<T>(1e-12);

    while horizon - t > eps_horizon {
        // Expand drivers at the window start; coefficients do not depend on
        // Δt, so rejected attempts reuse the whole recursion.
        let boundary_series = derive_driver_dt(boundary, t, order + 2);
        let mdot_series = derive_driver_dt(mdot, t, order + 2);
        if mdot_series.coeff(0) <= T::zero() {
            return Err(CoreError::Validation {
                subject: "single-pipe simulation".into(),
                reason: "mass flow must stay positive".into(),
            });
        }
        grid.freeze_slopes();
        let mut state0 = grid.state().clone();
        state0[0] = boundary_series.coeff(0);
        grid.reset_state(state0);
        for k in 1..=order + 2 {
            let mut coeffs = grid.compute_order(k, mdot_prefix(&mdot_series, k))?;
            coeffs[0] = boundary_series.coeff(k);
            grid.push_order(coeffs);
        }

        // Monitored variables: the computed nodes (the boundary is known).
        let v0: Vec<T> = grid.state().iter().skip(1).copied().collect();
        let top: Vec<T> = grid.temps[order + 1].iter().skip(1).copied().collect();
        let below: Vec<T> = grid.temps[order].iter().skip(1).copied().collect();
        let extra: Vec<T> = grid.temps[order + 2].iter().skip(1).copied().collect();

        let mut guard_counted = false;
        loop {
            let clipped = clip_step(t, dt, horizon, config, &[boundary, mdot]);
            let v_end: Vec<T> = grid.evaluate(clipped, order).iter().skip(1).copied().collect();
            let guard =
                needs_degenerate_guard(&top, &below, &v0, &v_end, clipped, order + 1, config);
            if guard && !guard_counted {
                stats.degenerate_guards += 1;
                guard_counted = true;
            }
            let eff_order = if guard { order + 1 } else { order };
            let coeffs = if guard { &extra } else { &top };
            let err = error_estimate(coeffs, &v0, &v_end, clipped, eff_order + 1, config);
            if err <= T::one() {
                windows.push(PipeWindow {
                    t_start: t,
                    dt: clipped,
                    order,
                    coeffs: grid.temps.clone(),
                });
                stats.windows += 1;
                stats.max_accepted_err =
                    stats.max_accepted_err.max(err.to_f64().unwrap_or(f64::NAN));
                let carry = grid.evaluate(clipped, order);
                t += clipped;
                grid.reset_state(carry);
                dt = next_step_size(clipped, err, eff_order, config);
                break;
            }
            stats.rejections += 1;
            if clipped <= config.dt_min {
                return Err(CoreError::StepUnderflow {
                    time_s: t.to_f64().unwrap_or(f64::NAN),
                    dt_s: clipped.to_f64().unwrap_or(f64::NAN),
                    err: err.to_f64().unwrap_or(f64::NAN),
                });
            }
            dt = next_step_size(clipped, err, eff_order, config);
        }
    }

    Ok(SinglePipeResult { windows, stats, grid_positions: positions })
}

fn mdot_prefix<T: Scalar>(series: &DtSeries<T>, k: usize) -> &[T] {
    &series.coeffs()[..k]
}

/// Clip a proposed window so it honors the horizon, the configured maximum
/// and the next driver breakpoint.
fn clip_step<T: Scalar>(
    t: T,
    dt: T,
    horizon: T,
    config: &AdaptiveConfig<T>,
    drivers: &[&DriverProfile<T>],
) -> T {
    let mut clipped = dt.min(config.dt_max).min(horizon - t);
    for driver in drivers {
        if let Some(bp) = driver.next_breakpoint(t) {
            if bp - t > T::zero() {
                clipped = clipped.min(bp - t);
            }
        }
    }
    clipped
}
