//! Per-pipe spatial grid, slope limiting and the order-by-order recursion.

use nalgebra::DVector;

use crate::error::{CoreError, Result};
use crate::network::PipeParams;
use crate::scalar::{Scalar, count, lit};

/// Slope formula selected by the minmod limiter for one grid node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeChoice {
    /// `θ·(τ_j − τ_{j−1})/Δx`
    Left,
    /// `(τ_{j+1} − τ_{j−1})/(2Δx)`
    Central,
    /// `θ·(τ_{j+1} − τ_j)/Δx`
    Right,
    /// Limiter returned zero (mixed signs).
    Zero,
}

/// Minmod limiter: smallest candidate if all positive, largest if all
/// negative, zero otherwise.
pub fn minmod<T: Scalar>(x1: T, x2: T, x3: T) -> T {
    if x1 > T::zero() && x2 > T::zero() && x3 > T::zero() {
        x1.min(x2).min(x3)
    } else if x1 < T::zero() && x2 < T::zero() && x3 < T::zero() {
        x1.max(x2).max(x3)
    } else {
        T::zero()
    }
}

/// Spatial discretization of one pipe (one network side).
///
/// Grid node 0 is the inlet boundary; nodes `1..M-1` carry the recursion.
/// Temperatures are stored as one vector per DT order.
#[derive(Debug, Clone)]
pub struct PipeGrid<T> {
    /// Grid spacing, m.
    pub dx: T,
    /// Grid node count `M` (covers exactly `[0, H]`).
    pub node_count: usize,
    /// Limiter parameter θ ∈ [1, 2].
    pub theta: T,
    /// Advection factor `1/(γρΔx)`.
    advect: T,
    /// Relaxation rate `λ/(γρC_p)`, 1/s.
    relax: T,
    /// Ambient temperature, °C.
    pub ambient: T,
    /// Frozen slope selections per node (index aligned with grid nodes;
    /// meaningful for nodes with two neighbors).
    selections: Vec<SlopeChoice>,
    /// Frozen stencil per computed node `1..M-1`: the bracket
    /// `τ_{j−1} + Δx/2·(τ_{j−1})_x − τ_j − Δx/2·(τ_j)_x` as sparse
    /// coefficients over grid indices.
    stencils: Vec<Vec<(usize, T)>>,
    /// Temperature coefficients per order: `temps[k][j] = T_j(k)`.
    pub temps: Vec<DVector<T>>,
}

impl<T: Scalar> PipeGrid<T> {
    /// Discretize a physical pipe so that the actual spacing does not exceed
    /// `dx_request`.
    pub fn new(params: &PipeParams<T>, ambient: T, theta: T, dx_request: T) -> Self {
        let intervals = (params.length / dx_request).ceil().max(T::one());
        let intervals_usize = num_traits::ToPrimitive::to_usize(&intervals).unwrap_or(1).max(1);
        let node_count = intervals_usize + 1;
        let dx = params.length / count::<T>(intervals_usize);
        let advect = T::one() / (params.area * params.density * dx);
        let relax = params.heat_transfer / (params.area * params.density * params.heat_capacity);
        Self {
            dx,
            node_count,
            theta,
            advect,
            relax,
            ambient,
            selections: vec![SlopeChoice::Zero; node_count],
            stencils: Vec::new(),
            temps: Vec::new(),
        }
    }

    /// Positions of the grid nodes measured from the current inlet.
    pub fn positions(&self) -> Vec<T> {
        (0..self.node_count).map(|j| self.dx * count::<T>(j)).collect()
    }

    /// Drop all stored orders and restart from the given window-start values.
    pub fn reset_state(&mut self, values: DVector<T>) {
        assert_eq!(values.len(), self.node_count);
        self.temps = vec![values];
    }

    /// Window-start values (order 0).
    pub fn state(&self) -> &DVector<T> {
        &self.temps[0]
    }

    /// Frozen selections (for inspection and tests).
    pub fn selections(&self) -> &[SlopeChoice] {
        &self.selections
    }

    /// Reverse the grid in place: the outlet becomes the inlet. Slope
    /// selections are invalidated and must be re-frozen.
    pub fn reverse(&mut self) {
        for coeffs in &mut self.temps {
            let reversed: Vec<T> = coeffs.iter().rev().copied().collect();
            *coeffs = DVector::from_vec(reversed);
        }
        self.stencils.clear();
    }

    /// Select slope formulas from the window-start values and freeze the
    /// resulting stencils for the whole window.
    pub fn freeze_slopes(&mut self) {
        let values = self.temps[0].clone();
        self.freeze_slopes_from(&values);
    }

    /// Same as [`PipeGrid::freeze_slopes`] but from explicit values.
    pub fn freeze_slopes_from(&mut self, values: &DVector<T>) {
        self.selections = select_slopes(values, self.theta, self.dx);
        self.stencils = build_stencils(&self.selections, self.theta, self.node_count);
    }

    /// Compute the order-`k` coefficients `T_j(k)` for all computed nodes
    /// `j ≥ 1` from orders `≤ k−1`; element 0 of the result is left zero for
    /// the caller to fill with the boundary coefficient.
    ///
    /// `mdot` holds the mass-flow DT coefficients `Ṁ(0..)`; at least `k`
    /// entries must be present.
    pub fn compute_order(&self, k: usize, mdot: &[T]) -> Result<DVector<T>> {
        if k == 0 || self.temps.len() < k {
            return Err(CoreError::OrderOverflow { requested: k, allocated: self.temps.len() });
        }
        if self.stencils.len() != self.node_count - 1 {
            return Err(CoreError::Validation {
                subject: "pipe grid".into(),
                reason: "slopes must be frozen before the recursion".into(),
            });
        }
        let mut out = DVector::zeros(self.node_count);
        for node in 1..self.node_count {
            let stencil = &self.stencils[node - 1];
            // Convolution Σ_{m=0..k−1} Ṁ(m) · S(k−1−m) of flow with the
            // frozen bracket, plus the relaxation term at order k−1.
            let mut conv = T::zero();
            for m in 0..k {
                let bracket = stencil
                    .iter()
                    .fold(T::zero(), |acc, (idx, c)| acc + *c * self.temps[k - 1 - m][*idx]);
                conv += mdot[m] * bracket;
            }
            let delta = if k - 1 == 0 { self.ambient } else { T::zero() };
            let relax_term = self.relax * (self.temps[k - 1][node] - delta);
            out[node] = (self.advect * conv - relax_term) / count::<T>(k);
        }
        Ok(out)
    }

    /// Append the order-`k` coefficient vector (boundary entry already set).
    pub fn push_order(&mut self, coeffs: DVector<T>) {
        assert_eq!(coeffs.len(), self.node_count);
        self.temps.push(coeffs);
    }

    /// Evaluate all node temperatures at window-local `t`, truncated at
    /// `order`.
    pub fn evaluate(&self, t: T, order: usize) -> DVector<T> {
        let top = order.min(self.temps.len().saturating_sub(1));
        let mut acc = DVector::zeros(self.node_count);
        for k in (0..=top).rev() {
            acc = acc * t + &self.temps[k];
        }
        acc
    }

    /// Time derivative of the frozen semi-discrete system at the given
    /// values (boundary node derivative is reported as zero; the boundary is
    /// externally driven).
    pub fn rhs_frozen(&self, values: &DVector<T>, mdot: T) -> DVector<T> {
        let mut out = DVector::zeros(self.node_count);
        for node in 1..self.node_count {
            let bracket = self.stencils[node - 1]
                .iter()
                .fold(T::zero(), |acc, (idx, c)| acc + *c * values[*idx]);
            out[node] = self.advect * mdot * bracket - self.relax * (values[node] - self.ambient);
        }
        out
    }

    /// Time derivative of the true TVD semi-discrete system: slope
    /// selections are re-evaluated at the given values.
    pub fn rhs_dynamic(&self, values: &DVector<T>, mdot: T) -> DVector<T> {
        let selections = select_slopes(values, self.theta, self.dx);
        let stencils = build_stencils(&selections, self.theta, self.node_count);
        let mut out = DVector::zeros(self.node_count);
        for node in 1..self.node_count {
            let bracket = stencils[node - 1]
                .iter()
                .fold(T::zero(), |acc, (idx, c)| acc + *c * values[*idx]);
            out[node] = self.advect * mdot * bracket - self.relax * (values[node] - self.ambient);
        }
        out
    }

    /// Relaxation rate `λ/(γρC_p)`.
    pub fn relaxation_rate(&self) -> T {
        self.relax
    }
}

/// Evaluate the limiter at every node with two neighbors.
fn select_slopes<T: Scalar>(values: &DVector<T>, theta: T, dx: T) -> Vec<SlopeChoice> {
    let m = values.len();
    let mut selections = vec![SlopeChoice::Zero; m];
    for i in 1..m.saturating_sub(1) {
        let x1 = theta * (values[i] - values[i - 1]) / dx;
        let x2 = (values[i + 1] - values[i - 1]) / (dx * lit::<T>(2.0));
        let x3 = theta * (values[i + 1] - values[i]) / dx;
        let m_val = minmod(x1, x2, x3);
        selections[i] = if m_val == T::zero() {
            SlopeChoice::Zero
        } else if m_val == x2 {
            // Ties prefer the second-order branch.
            SlopeChoice::Central
        } else if m_val == x1 {
            SlopeChoice::Left
        } else {
            SlopeChoice::Right
        };
    }
    selections
}

/// Expand the bracket of each computed node into sparse coefficients.
///
/// The first and last computed nodes use the zero-slope simplification
/// (plain upwind); interior nodes add `±Δx/2` times the selected slope
/// formulas, whose `Δx` factors cancel into constants.
fn build_stencils<T: Scalar>(
    selections: &[SlopeChoice],
    theta: T,
    node_count: usize,
) -> Vec<Vec<(usize, T)>> {
    let half_theta = theta * lit::<T>(0.5);
    let quarter = lit::<T>(0.25);
    let mut stencils = Vec::with_capacity(node_count - 1);
    for node in 1..node_count {
        let mut entries: Vec<(usize, T)> = Vec::with_capacity(6);
        let mut add = |idx: usize, c: T| {
            if let Some(slot) = entries.iter_mut().find(|(i, _)| *i == idx) {
                slot.1 += c;
            } else {
                entries.push((idx, c));
            }
        };
        add(node - 1, T::one());
        add(node, -T::one());
        if node != 1 && node != node_count - 1 {
            // +Δx/2 · (τ_{node−1})_x
            apply_slope(&mut add, selections[node - 1], node - 1, half_theta, quarter, false);
            // −Δx/2 · (τ_node)_x
            apply_slope(&mut add, selections[node], node, half_theta, quarter, true);
        }
        stencils.push(entries);
    }
    stencils
}

fn apply_slope<T: Scalar>(
    add: &mut impl FnMut(usize, T),
    choice: SlopeChoice,
    i: usize,
    half_theta: T,
    quarter: T,
    negate: bool,
) {
    let sign = if negate { -T::one() } else { T::one() };
    match choice {
        SlopeChoice::Left => {
            add(i, sign * half_theta);
            add(i - 1, -sign * half_theta);
        }
        SlopeChoice::Central => {
            add(i + 1, sign * quarter);
            add(i - 1, -sign * quarter);
        }
        SlopeChoice::Right => {
            add(i + 1, sign * half_theta);
            add(i, -sign * half_theta);
        }
        SlopeChoice::Zero => {}
    }
}
