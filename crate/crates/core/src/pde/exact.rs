//! Closed-form pipe solution along characteristics for constant mass flow.

use crate::dt::DriverProfile;
use crate::error::{CoreError, Result};
use crate::network::PipeParams;
use crate::scalar::Scalar;

/// Single-pipe problem with constant mass flow, solvable exactly along
/// characteristics.
pub struct ExactPipeProblem<'a, T> {
    pub pipe: &'a PipeParams<T>,
    /// Constant mass flow over the whole horizon, kg/s.
    pub mdot: T,
    /// Ambient temperature, °C.
    pub ambient: T,
    /// Inlet boundary trajectory `τ(0, t)`.
    pub boundary: &'a DriverProfile<T>,
    /// Initial profile `τ(x, 0)`.
    pub initial: &'a dyn Fn(T) -> T,
}

/// Exact temperature at position `x` and time `t`.
///
/// The boundary value transported along the characteristic through `(x, t)`
/// relaxes toward the ambient with rate `λ/(C_p·ṁ)` per unit length:
/// `τ(x,t) = (1−e^{−λx/(C_p ṁ)})·τ_amb + e^{−λx/(C_p ṁ)}·τ(0, t−γρx/ṁ)`.
/// Characteristics that start inside the pipe carry the initial condition
/// instead, attenuated over the path actually travelled.
pub fn reference_exact<T: Scalar>(problem: &ExactPipeProblem<'_, T>, x: T, t: T) -> Result<T> {
    if problem.mdot <= T::zero() {
        return Err(CoreError::Validation {
            subject: "exact pipe solution".into(),
            reason: "mass flow must be positive".into(),
        });
    }
    let p = problem.pipe;
    let velocity = problem.mdot / (p.area * p.density);
    let transit = x / velocity; // = γρx/ṁ
    if t >= transit {
        let decay = (-p.heat_transfer * x / (p.heat_capacity * problem.mdot)).exp();
        Ok((T::one() - decay) * problem.ambient + decay * problem.boundary.value(t - transit))
    } else {
        // Path length travelled since t = 0 is v·t; the foot of the
        // characteristic sits at x − v·t.
        let decay = (-p.heat_transfer * velocity * t / (p.heat_capacity * problem.mdot)).exp();
        let origin = x - velocity * t;
        Ok((T::one() - decay) * problem.ambient + decay * (problem.initial)(origin))
    }
}
