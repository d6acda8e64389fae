//! Differential-transformation series arithmetic.
//!
//! A [`DtSeries`] stores the Taylor coefficients `X(0..=K)` of a scalar
//! variable expanded at the start of the current time window, so that
//! `x(t) = Σ X(k)·t^k` for window-local `t`. Nonlinear relations between
//! time functions become linear recursions between coefficients: sums map
//! coefficient-wise, products map to convolutions, and differentiation maps
//! to `(k+1)·X(k+1)`.

mod driver;

pub use driver::{DriverProfile, derive_driver_dt};

use crate::error::{CoreError, Result};
use crate::scalar::{Scalar, count};

/// Number of equal subintervals scanned for sign changes by
/// [`first_root_in_window`]. Roots closer together than `Δt/64` require the
/// caller to shrink the window.
pub const ROOT_SCAN_INTERVALS: usize = 64;

/// Taylor coefficients of one scalar variable over the current window.
#[derive(Debug, Clone, PartialEq)]
pub struct DtSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> DtSeries<T> {
    /// Build a series from explicit coefficients `X(0), X(1), …`.
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least X(0)");
        Self { coeffs }
    }

    /// Series of a constant: `c` at order zero, zeros above.
    pub fn constant(value: T, order: usize) -> Self {
        let mut coeffs = vec![T::zero(); order + 1];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// All-zero series of the given order.
    pub fn zeros(order: usize) -> Self {
        Self { coeffs: vec![T::zero(); order + 1] }
    }

    /// Highest stored order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient `X(k)`, zero beyond the stored order.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).copied().unwrap_or_else(T::zero)
    }

    /// All stored coefficients.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient-wise sum. Errors if the orders differ.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(CoreError::DimensionMismatch(format!(
                "series orders {} vs {}",
                self.order(),
                other.order()
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| *a + *b)
            .collect();
        Ok(Self { coeffs })
    }

    /// Scale every coefficient by a constant.
    pub fn scale(&self, factor: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| *c * factor).collect() }
    }

    /// `k`-th coefficient of the product series, i.e. the convolution
    /// `Σ_{m=0..k} X(m)·Y(k−m)`.
    pub fn product_coeff(&self, other: &Self, k: usize) -> T {
        convolve_at(&self.coeffs, &other.coeffs, k)
    }

    /// Full product series up to the retained order of `self`.
    pub fn product(&self, other: &Self) -> Self {
        let order = self.order().min(other.order());
        let coeffs = (0..=order).map(|k| self.product_coeff(other, k)).collect();
        Self { coeffs }
    }

    /// Series of the time derivative: `B(k) = (k+1)·A(k+1)`, one order shorter.
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zeros(0);
        }
        let coeffs = self.coeffs[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| *c * count::<T>(k + 1))
            .collect();
        Self { coeffs }
    }

    /// Evaluate the polynomial at window-local time `t` (Horner form).
    pub fn evaluate(&self, t: T) -> T {
        let mut acc = T::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + *c;
        }
        acc
    }

    /// Evaluate the truncation `Σ_{k=0..=order} X(k)·t^k`.
    pub fn evaluate_truncated(&self, t: T, order: usize) -> T {
        let top = order.min(self.order());
        let mut acc = T::zero();
        for k in (0..=top).rev() {
            acc = acc * t + self.coeffs[k];
        }
        acc
    }
}

/// Convolution coefficient `Σ_{m=0..k} a(m)·b(k−m)` with implicit zeros
/// beyond either slice.
pub fn convolve_at<T: Scalar>(a: &[T], b: &[T], k: usize) -> T {
    let mut acc = T::zero();
    for m in 0..=k {
        let x = a.get(m).copied().unwrap_or_else(T::zero);
        let y = b.get(k - m).copied().unwrap_or_else(T::zero);
        acc += x * y;
    }
    acc
}

/// Smallest root of the series polynomial in `(0, Δt]`, if any.
///
/// The interval is scanned in [`ROOT_SCAN_INTERVALS`] equal pieces for a
/// sign change, then bisected until the residual drops below
/// `1e−12·max|X(k)|` or the bracket collapses. Absence of a sign change is a
/// valid result (`None`), not an error.
pub fn first_root_in_window<T: Scalar>(series: &DtSeries<T>, dt: T) -> Option<T> {
    if dt <= T::zero() {
        return None;
    }
    let scale = series
        .coeffs()
        .iter()
        .fold(T::zero(), |acc, c| acc.max(c.abs()));
    if scale == T::zero() {
        return None; // identically zero: no isolated root to report
    }
    let res_tol = scale * lit_eps::<T>();
    let n = count::<T>(ROOT_SCAN_INTERVALS);
    let mut t_prev = T::zero();
    let mut f_prev = series.evaluate(t_prev);
    for i in 1..=ROOT_SCAN_INTERVALS {
        let t_next = dt * count::<T>(i) / n;
        let f_next = series.evaluate(t_next);
        if f_next.abs() <= res_tol {
            return Some(t_next);
        }
        if f_prev != T::zero() && (f_prev * f_next) < T::zero() {
            return Some(bisect(series, t_prev, t_next, f_prev, res_tol));
        }
        t_prev = t_next;
        f_prev = f_next;
    }
    None
}

fn bisect<T: Scalar>(series: &DtSeries<T>, mut a: T, mut b: T, f_a: T, res_tol: T) -> T {
    let mut sign_a = f_a;
    // 200 halvings exhaust f64 precision long before the loop bound.
    for _ in 0..200 {
        let mid = (a + b) * lit::<T>(0.5);
        if mid == a || mid == b {
            return mid;
        }
        let f_mid = series.evaluate(mid);
        if f_mid.abs() <= res_tol {
            return mid;
        }
        if sign_a * f_mid < T::zero() {
            b = mid;
        } else {
            a = mid;
            sign_a = f_mid;
        }
    }
    (a + b) * lit::<T>(0.5)
}

#[inline]
fn lit<T: Scalar>(v: f64) -> T {
    crate::scalar::lit(v)
}

#[inline]
fn lit_eps<T: Scalar>() -> T {
    crate::scalar::lit(1e-12)
}
