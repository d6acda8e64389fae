//! Known-variable trajectories and their window-local DT expansions.

use super::DtSeries;
use crate::scalar::{Scalar, count};

/// Time profile of a known (driver) variable.
///
/// All profiles are piecewise smooth; the window controller never lets a
/// window straddle one of the breakpoints reported by
/// [`DriverProfile::breakpoints`], so inside a window every profile has a
/// plain Taylor expansion.
#[derive(Debug, Clone, PartialEq)]
pub enum DriverProfile<T> {
    /// Constant value.
    Constant { value: T },
    /// Piecewise constant: `values[i]` holds on `[breakpoints[i-1], breakpoints[i])`,
    /// with `values.len() == breakpoints.len() + 1`. At a breakpoint the new
    /// value applies.
    Step { breakpoints: Vec<T>, values: Vec<T> },
    /// Piecewise linear through `(t, v)` points, held constant outside the
    /// covered range.
    PiecewiseLinear { points: Vec<(T, T)> },
    /// `offset + amplitude·sin(2π(t−start)/period + phase)` on `[start, end]`,
    /// held at the boundary value outside the active range.
    Sinusoid {
        offset: T,
        amplitude: T,
        period: T,
        phase: T,
        start: Option<T>,
        end: Option<T>,
    },
    /// Polynomial in absolute time, `Σ coeffs[k]·t^k`.
    Polynomial { coeffs: Vec<T> },
}

impl<T: Scalar> DriverProfile<T> {
    /// Value of the profile at absolute time `t`.
    pub fn value(&self, t: T) -> T {
        match self {
            Self::Constant { value } => *value,
            Self::Step { breakpoints, values } => {
                let idx = breakpoints.iter().take_while(|b| **b <= t).count();
                values[idx]
            }
            Self::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return T::zero();
                }
                if t <= points[0].0 {
                    return points[0].1;
                }
                for pair in points.windows(2) {
                    let (t0, v0) = pair[0];
                    let (t1, v1) = pair[1];
                    if t < t1 {
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                points[points.len() - 1].1
            }
            Self::Sinusoid { offset, amplitude, period, phase, start, end } => {
                let t0 = start.unwrap_or_else(T::zero);
                let t_clamped = clamp_to_range(t, *start, *end);
                let omega = T::two_pi() / *period;
                *offset + *amplitude * (omega * (t_clamped - t0) + *phase).sin()
            }
            Self::Polynomial { coeffs } => {
                let mut acc = T::zero();
                for c in coeffs.iter().rev() {
                    acc = acc * t + *c;
                }
                acc
            }
        }
    }

    /// Breakpoints where the profile is not smooth, in increasing order.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            Self::Constant { .. } | Self::Polynomial { .. } => Vec::new(),
            Self::Step { breakpoints, .. } => breakpoints.clone(),
            Self::PiecewiseLinear { points } => points.iter().map(|(t, _)| *t).collect(),
            Self::Sinusoid { start, end, .. } => {
                let mut out = Vec::new();
                if let Some(s) = start {
                    out.push(*s);
                }
                if let Some(e) = end {
                    out.push(*e);
                }
                out
            }
        }
    }

    /// Smallest breakpoint strictly greater than `t`.
    pub fn next_breakpoint(&self, t: T) -> Option<T> {
        self.breakpoints().into_iter().find(|b| *b > t)
    }

    /// Validate structural invariants (monotone breakpoints, positive period).
    pub fn validate(&self) -> Result<(), String> {
        match self {
            Self::Step { breakpoints, values } => {
                if values.len() != breakpoints.len() + 1 {
                    return Err("step profile needs breakpoints+1 values".into());
                }
                if !strictly_increasing(breakpoints) {
                    return Err("step breakpoints must be strictly increasing".into());
                }
            }
            Self::PiecewiseLinear { points } => {
                if points.is_empty() {
                    return Err("piecewise-linear profile needs at least one point".into());
                }
                let times: Vec<T> = points.iter().map(|(t, _)| *t).collect();
                if !strictly_increasing(&times) {
                    return Err("piecewise-linear times must be strictly increasing".into());
                }
            }
            Self::Sinusoid { period, start, end, .. } => {
                if *period <= T::zero() {
                    return Err("sinusoid period must be positive".into());
                }
                if let (Some(s), Some(e)) = (start, end) {
                    if e <= s {
                        return Err("sinusoid end must exceed start".into());
                    }
                }
            }
            Self::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err("polynomial profile needs at least one coefficient".into());
                }
            }
            Self::Constant { .. } => {}
        }
        Ok(())
    }
}

fn clamp_to_range<T: Scalar>(t: T, start: Option<T>, end: Option<T>) -> T {
    let mut out = t;
    if let Some(s) = start {
        out = out.max(s);
    }
    if let Some(e) = end {
        out = out.min(e);
    }
    out
}

fn strictly_increasing<T: Scalar>(values: &[T]) -> bool {
    values.windows(2).all(|w| w[0] < w[1])
}

/// Window-local DT coefficients `W(0..=kmax)` of a driver expanded at
/// `window_start`.
///
/// The caller guarantees the window does not straddle a breakpoint (the
/// window controller clips `Δt` beforehand), so the expansion of the active
/// smooth piece is valid for the whole window.
pub fn derive_driver_dt<T: Scalar>(
    profile: &DriverProfile<T>,
    window_start: T,
    kmax: usize,
) -> DtSeries<T> {
    let mut coeffs = vec![T::zero(); kmax + 1];
    match profile {
        DriverProfile::Constant { .. } | DriverProfile::Step { .. } => {
            coeffs[0] = profile.value(window_start);
        }
        DriverProfile::PiecewiseLinear { points } => {
            coeffs[0] = profile.value(window_start);
            if kmax >= 1 {
                coeffs[1] = piecewise_linear_slope(points, window_start);
            }
        }
        DriverProfile::Sinusoid { offset, amplitude, period, phase, start, end } => {
            let t0 = start.unwrap_or_else(T::zero);
            let active = start.map_or(true, |s| window_start >= s)
                && end.map_or(true, |e| window_start < e);
            if !active {
                coeffs[0] = profile.value(window_start);
            } else {
                let omega = T::two_pi() / *period;
                let angle = omega * (window_start - t0) + *phase;
                // sin/cos share one recursion: S(k+1) = ω·C(k)/(k+1),
                // C(k+1) = −ω·S(k)/(k+1).
                let mut s = angle.sin();
                let mut c = angle.cos();
                coeffs[0] = *offset + *amplitude * s;
                for k in 0..kmax {
                    let s_next = omega * c / count::<T>(k + 1);
                    let c_next = -omega * s / count::<T>(k + 1);
                    coeffs[k + 1] = *amplitude * s_next;
                    s = s_next;
                    c = c_next;
                }
            }
        }
        DriverProfile::Polynomial { coeffs: global } => {
            // Taylor shift: W(k) = Σ_{j≥k} c_j · C(j,k) · s^{j−k}.
            for k in 0..=kmax {
                let mut acc = T::zero();
                for (j, c) in global.iter().enumerate().skip(k) {
                    acc += *c * binomial::<T>(j, k) * pow_usize(window_start, j - k);
                }
                coeffs[k] = acc;
            }
        }
    }
    DtSeries::new(coeffs)
}

fn piecewise_linear_slope<T: Scalar>(points: &[(T, T)], t: T) -> T {
    if points.len() < 2 || t < points[0].0 || t >= points[points.len() - 1].0 {
        return T::zero();
    }
    for pair in points.windows(2) {
        let (t0, v0) = pair[0];
        let (t1, v1) = pair[1];
        if t >= t0 && t < t1 {
            return (v1 - v0) / (t1 - t0);
        }
    }
    T::zero()
}

fn binomial<T: Scalar>(n: usize, k: usize) -> T {
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * count::<T>(n - i) / count::<T>(i + 1);
    }
    acc
}

fn pow_usize<T: Scalar>(base: T, exp: usize) -> T {
    let mut acc = T::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}
