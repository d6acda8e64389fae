//! Adaptive time-window control.
//!
//! The highest retained coefficient acts as an embedded error estimate: the
//! difference between the order-`K` and order-`K+1` polynomials over a
//! window of size `Δt` is `x̃ = X(K+1)·Δt^{K+1}`, the Lagrange-remainder
//! shape. Each component is weighed against a mixed tolerance and the RMS
//! of the weighted components decides acceptance and the next step size.

use crate::error::{CoreError, Result};
use crate::scalar::{Scalar, count, lit};

/// Ratio below which the top-order estimate counts as degenerate (zero)
/// while the order below is live; see [`needs_degenerate_guard`]. A healthy
/// series never drops six orders of magnitude between consecutive terms, and
/// a spurious trigger merely upgrades the estimate by one order.
pub const DEGENERATE_RATIO: f64 = 1e-6;

/// Controller settings for the adaptive window loop.
#[derive(Debug, Clone)]
pub struct AdaptiveConfig<T> {
    /// Series order `K`: the accepted polynomial keeps `K+1` terms.
    pub order: usize,
    /// Absolute error tolerance.
    pub atol: T,
    /// Relative error tolerance.
    pub rtol: T,
    /// Conservative factor applied to every step proposal.
    pub fac: T,
    /// Lower bound on the step shrink ratio per update.
    pub fac_min: T,
    /// Upper bound on the step growth ratio per update.
    pub fac_max: T,
    /// Initial window length, s.
    pub dt_init: T,
    /// Smallest admissible window, s; shrinking past it aborts the run.
    pub dt_min: T,
    /// Largest admissible window, s.
    pub dt_max: T,
    /// Slope-limiter parameter θ ∈ [1, 2].
    pub theta: T,
}

impl<T: Scalar> Default for AdaptiveConfig<T> {
    fn default() -> Self {
        Self {
            order: 6,
            atol: lit(1e-9),
            rtol: lit(1e-9),
            fac: lit(0.9),
            fac_min: lit(0.5),
            fac_max: lit(2.0),
            dt_init: lit(10.0),
            dt_min: lit(1e-3),
            dt_max: lit(900.0),
            theta: lit(1.0),
        }
    }
}

impl<T: Scalar> AdaptiveConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| CoreError::Validation {
            subject: "adaptive config".into(),
            reason: reason.to_string(),
        };
        if self.order < 1 {
            return Err(bad("order K must be at least 1"));
        }
        if !(self.fac > T::zero() && self.fac < T::one()) {
            return Err(bad("fac must lie in (0, 1)"));
        }
        if self.fac_max < T::one() {
            return Err(bad("fac_max must be at least 1"));
        }
        if !(self.fac_min > T::zero() && self.fac_min < T::one()) {
            return Err(bad("fac_min must lie in (0, 1)"));
        }
        if !(self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(bad("dt_min ≤ dt_init ≤ dt_max violated"));
        }
        if self.theta < T::one() || self.theta > lit(2.0) {
            return Err(bad("theta must lie in [1, 2]"));
        }
        if self.atol <= T::zero() || self.rtol < T::zero() {
            return Err(bad("atol must be positive and rtol non-negative"));
        }
        Ok(())
    }

    /// Tolerance for one component: `Atol + min(|v0|, |v_end|)·Rtol`.
    ///
    /// Using the smaller endpoint magnitude makes both ends of the window
    /// satisfy the relative tolerance.
    pub fn component_tolerance(&self, v0: T, v_end: T) -> T {
        self.atol + v0.abs().min(v_end.abs()) * self.rtol
    }
}

/// Root-mean-square of the tolerance-weighted remainder estimate.
///
/// `top_coeffs` holds the estimate-order coefficients `X(m)` of every
/// monitored variable, `v0`/`v_end` the window endpoint values used for the
/// mixed tolerance, and `est_order` the order `m` whose term plays the role
/// of the remainder: `err = sqrt(1/n · Σ (X_i(m)·Δt^m / ε_i)²)`.
pub fn error_estimate<T: Scalar>(
    top_coeffs: &[T],
    v0: &[T],
    v_end: &[T],
    dt: T,
    est_order: usize,
    config: &AdaptiveConfig<T>,
) -> T {
    assert_eq!(top_coeffs.len(), v0.len());
    assert_eq!(top_coeffs.len(), v_end.len());
    if top_coeffs.is_empty() {
        return T::zero();
    }
    let dt_pow = dt.powi(est_order as i32);
    let mut sum = T::zero();
    for ((c, a), b) in top_coeffs.iter().zip(v0).zip(v_end) {
        let eps = config.component_tolerance(*a, *b);
        let scaled = *c * dt_pow / eps;
        sum += scaled * scaled;
    }
    (sum / count::<T>(top_coeffs.len())).sqrt()
}

/// Next window length from the current length and error.
///
/// `Δt' = Δt·fac·(1/err)^(1/(order+1))`, clamped to
/// `[fac_min·Δt, fac_max·Δt]` and then to `[dt_min, dt_max]`. A vanishing
/// error maps to maximal growth.
pub fn next_step_size<T: Scalar>(
    dt: T,
    err: T,
    est_order: usize,
    config: &AdaptiveConfig<T>,
) -> T {
    let proposal = if err == T::zero() {
        config.fac_max * dt
    } else {
        let exponent = T::one() / count::<T>(est_order + 1);
        dt * config.fac * (T::one() / err).powf(exponent)
    };
    let clamped = proposal
        .max(config.fac_min * dt)
        .min(config.fac_max * dt);
    clamped.max(config.dt_min).min(config.dt_max)
}

/// Whether the remainder estimate degenerated: the order-`K+1` coefficients
/// vanish (relative to tolerance) while the order-`K` ones do not.
///
/// This happens when a sinusoidal driver is windowed at a phase where one
/// parity of Taylor terms is zero; the caller then computes one more
/// recursion level and estimates from order `K+2`.
pub fn needs_degenerate_guard<T: Scalar>(
    coeffs_top: &[T],
    coeffs_below: &[T],
    v0: &[T],
    v_end: &[T],
    dt: T,
    top_order: usize,
    config: &AdaptiveConfig<T>,
) -> bool {
    let top = error_estimate(coeffs_top, v0, v_end, dt, top_order, config);
    let below = error_estimate(coeffs_below, v0, v_end, dt, top_order - 1, config);
    below > T::zero() && top <= lit::<T>(DEGENERATE_RATIO) * below
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn config() -> AdaptiveConfig<f64> {
        AdaptiveConfig::default()
    }

    #[test]
    fn default_config_is_valid() {
        config().validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = config();
        c.fac = 1.0;
        assert!(c.validate().is_err());
        let mut c = config();
        c.order = 0;
        assert!(c.validate().is_err());
        let mut c = config();
        c.dt_init = c.dt_max * 2.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_component_ratio() {
        // x̃ = 1e−10 against ε = 1e−9 gives err = 0.1 (atol-only tolerance).
        let mut c = config();
        c.atol = 1e-9;
        c.rtol = 0.0;
        let err = error_estimate(&[1e-10], &[0.0], &[0.0], 1.0, 1, &c);
        assert_relative_eq!(err, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn zero_coefficients_give_zero_error() {
        let err = error_estimate(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 5.0, 7, &config());
        assert_eq!(err, 0.0);
    }

    #[test]
    fn error_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = config();
        for _ in 0..20 {
            let n = 6;
            let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e-6..1e-6)).collect();
            let v0: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let v1: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let dt: f64 = rng.gen_range(0.1..5.0);
            let k = 4usize;
            let expect = {
                let mut s = 0.0;
                for i in 0..n {
                    let eps = c.atol + v0[i].abs().min(v1[i].abs()) * c.rtol;
                    s += (coeffs[i] * dt.powi(k as i32) / eps).powi(2);
                }
                (s / n as f64).sqrt()
            };
            let got = error_estimate(&coeffs, &v0, &v1, dt, k, &c);
            assert_relative_eq!(got, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn unit_error_shrinks_by_fac() {
        let c = config();
        let next = next_step_size(10.0, 1.0, 6, &c);
        assert_relative_eq!(next, 9.0, epsilon = 1e-12);
    }

    #[test]
    fn tiny_error_hits_growth_clamp() {
        let c = config();
        let next = next_step_size(10.0, 1e-14, 6, &c);
        assert_relative_eq!(next, 20.0, epsilon = 1e-12);
        // err = 0 is treated as maximal growth too.
        assert_relative_eq!(next_step_size(10.0, 0.0, 6, &c), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn large_error_proposal_matches_power_law() {
        // err = 100, K+1 = 7, fac = 0.9 → 0.9·(0.01)^{1/7} ≈ 0.4662 of Δt.
        let mut c = config();
        c.fac_min = 0.1; // keep the clamp out of the way
        let next = next_step_size(1.0, 100.0, 6, &c);
        assert_relative_eq!(next, 0.9 * 0.01f64.powf(1.0 / 7.0), epsilon = 1e-12);
        assert_relative_eq!(next, 0.466152, epsilon = 1e-6);
        // With the default fac_min = 0.5 the shrink clamp takes over.
        let clamped = next_step_size(1.0, 100.0, 6, &config());
        assert_relative_eq!(clamped, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn step_stays_within_dt_bounds() {
        let c = config();
        assert_eq!(next_step_size(800.0, 1e-16, 6, &c), c.dt_max);
        assert_eq!(next_step_size(1.5e-3, 1e6, 6, &c), c.dt_min);
    }

    #[test]
    fn guard_triggers_on_vanishing_top_order() {
        let c = config();
        let ok = needs_degenerate_guard(
            &[0.0, 0.0],
            &[1e-4, -2e-4],
            &[1.0, 1.0],
            &[1.0, 1.0],
            1.0,
            7,
            &c,
        );
        assert!(ok, "exact zero top order with live K order must trigger");
    }

    #[test]
    fn guard_stays_inactive_for_generic_coefficients() {
        let c = config();
        let triggered = needs_degenerate_guard(
            &[1e-5, 2e-5],
            &[1e-4, -2e-4],
            &[1.0, 1.0],
            &[1.0, 1.0],
            1.0,
            7,
            &c,
        );
        assert!(!triggered);
    }

    #[test]
    fn guard_stays_inactive_at_equilibrium() {
        let c = config();
        let triggered =
            needs_degenerate_guard(&[0.0], &[0.0], &[1.0], &[1.0], 1.0, 7, &c);
        assert!(!triggered, "all-zero coefficients are equilibrium, not degeneracy");
    }
}
