//! Per-order linear systems over the unknown registry.
//!
//! Every algebraic relation of the coupled system is bilinear at worst, so
//! its DT at order `k` is linear in the order-`k` coefficients with a
//! coefficient matrix `A₀` built purely from zeroth-order values: in a
//! convolution `Σ a(m)·b(k−m)` the order-`k` unknowns only ever multiply
//! order-0 partners. Each equation is therefore stored once as a list of
//! bilinear and linear terms over semantic [`Quantity`]s, and the same term
//! list yields the window matrix, the order-`k` right-hand side, the
//! time-domain residual and the steady-state Jacobian structure.

mod equations;
mod matrix;

pub use equations::{build_equations, convolution_without_unknown_top, matrix_at, rhs_at_order};
pub use matrix::WindowMatrix;

use std::collections::BTreeMap;

use crate::dt::DriverProfile;
use crate::error::{CoreError, Result};
use crate::network::{BusKind, CoupledSystem, NodeKind};
use crate::scalar::Scalar;

/// One scalar variable of the coupled system at a given instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Quantity {
    /// Pipe mass flow ṁ, kg/s.
    PipeMdot(usize),
    /// Node injection mass flow ṁⁱⁿ, kg/s.
    NodeInjection(usize),
    /// Node supply temperature τˢ, °C.
    NodeSupplyTemp(usize),
    /// Node return temperature τʳ, °C.
    NodeReturnTemp(usize),
    /// Node heat power φ, W.
    NodePower(usize),
    /// Supply-pipe outlet temperature τ^out,s, °C.
    PipeOutletSupply(usize),
    /// Return-pipe outlet temperature τ^out,r, °C.
    PipeOutletReturn(usize),
    /// Supply-pipe inlet temperature τ^in,s, °C.
    PipeInletSupply(usize),
    /// Return-pipe inlet temperature τ^in,r, °C.
    PipeInletReturn(usize),
    /// Bus voltage real part e, p.u.
    BusVoltageReal(usize),
    /// Bus voltage imaginary part f, p.u.
    BusVoltageImag(usize),
    /// Bus active power p, p.u.
    BusActive(usize),
    /// Bus reactive power q, p.u.
    BusReactive(usize),
}

/// Equation families, used for labels and residual reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EquationFamily {
    Continuity,
    LoopPressure,
    MixingSupply,
    MixingReturn,
    NodePower,
    ImplicitIdentity,
    ActivePower,
    ReactivePower,
    PvMagnitude,
    Coupling,
}

impl EquationFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Continuity => "continuity",
            Self::LoopPressure => "loop_pressure",
            Self::MixingSupply => "mixing_supply",
            Self::MixingReturn => "mixing_return",
            Self::NodePower => "node_power",
            Self::ImplicitIdentity => "implicit_identity",
            Self::ActivePower => "active_power",
            Self::ReactivePower => "reactive_power",
            Self::PvMagnitude => "pv_magnitude",
            Self::Coupling => "coupling",
        }
    }
}

/// One scalar equation as constant-coefficient terms:
/// `Σ c·a·b  +  Σ c·v  +  constant = 0`.
#[derive(Debug, Clone)]
pub struct Equation<T> {
    pub label: String,
    pub family: EquationFamily,
    pub bilinear: Vec<(T, Quantity, Quantity)>,
    pub linear: Vec<(T, Quantity)>,
    pub constant: T,
}

/// Anything that can report DT coefficients of quantities.
pub trait CoeffSource<T> {
    /// Coefficient of `q` at order `k` (order 0 = instantaneous value).
    fn coeff(&self, q: Quantity, k: usize) -> T;
}

/// Flat instantaneous values, used for residual evaluation.
#[derive(Debug, Clone, Default)]
pub struct ValueMap<T> {
    values: BTreeMap<Quantity, T>,
}

impl<T: Scalar> ValueMap<T> {
    pub fn new() -> Self {
        Self { values: BTreeMap::new() }
    }

    pub fn set(&mut self, q: Quantity, value: T) {
        self.values.insert(q, value);
    }

    pub fn get(&self, q: Quantity) -> Option<T> {
        self.values.get(&q).copied()
    }
}

impl<T: Scalar> CoeffSource<T> for ValueMap<T> {
    fn coeff(&self, q: Quantity, k: usize) -> T {
        if k == 0 {
            *self
                .values
                .get(&q)
                .unwrap_or_else(|| panic!("value map misses {q:?}"))
        } else {
            T::zero()
        }
    }
}

impl<T: Scalar> Equation<T> {
    /// Time-domain residual at instantaneous values.
    pub fn residual(&self, source: &impl CoeffSource<T>) -> T {
        let mut acc = self.constant;
        for (c, a, b) in &self.bilinear {
            acc += *c * source.coeff(*a, 0) * source.coeff(*b, 0);
        }
        for (c, v) in &self.linear {
            acc += *c * source.coeff(*v, 0);
        }
        acc
    }

    /// Largest magnitude among the equation's individual terms; the natural
    /// scale against which its residual should be judged.
    pub fn term_scale(&self, source: &impl CoeffSource<T>) -> T {
        let mut scale = self.constant.abs();
        for (c, a, b) in &self.bilinear {
            scale = scale.max((*c * source.coeff(*a, 0) * source.coeff(*b, 0)).abs());
        }
        for (c, v) in &self.linear {
            scale = scale.max((*c * source.coeff(*v, 0)).abs());
        }
        scale
    }
}

/// Ordered registry mapping each unknown scalar to a column of `A₀` and the
/// differential/assigned series to their bookkeeping slots.
#[derive(Debug, Clone)]
pub struct Registry {
    /// Step-2 unknowns in column order, with display names.
    pub columns: Vec<(Quantity, String)>,
    index: BTreeMap<Quantity, usize>,
    /// Differential entries: `(pipe, side, grid node)` with display names;
    /// side 0 = supply, 1 = return. The last grid node of a pipe is its
    /// outlet.
    pub x_entries: Vec<XEntry>,
    /// Step-3 assigned series (pipe inlet temperatures) with display names.
    pub z_entries: Vec<(Quantity, String)>,
}

/// One differential (grid temperature) entry.
#[derive(Debug, Clone)]
pub struct XEntry {
    pub pipe: usize,
    pub side: usize,
    pub grid_node: usize,
    pub name: String,
}

impl Registry {
    /// Column of an unknown, `None` for known or differential quantities.
    pub fn column(&self, q: Quantity) -> Option<usize> {
        self.index.get(&q).copied()
    }

    /// Number of Step-2 unknowns (matrix dimension).
    pub fn unknown_count(&self) -> usize {
        self.columns.len()
    }

    /// Total registry size: differential + algebraic + assigned entries.
    pub fn total_len(&self) -> usize {
        self.x_entries.len() + self.columns.len() + self.z_entries.len()
    }
}

/// Scenario override targets for known-variable trajectories.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DriverTarget {
    SupplyTemp(String),
    ReturnTemp(String),
    HeatPower(String),
    BusActive(String),
    BusReactive(String),
}

/// Known (driver) variables with their trajectories.
#[derive(Debug, Clone)]
pub struct KnownSet<T> {
    /// Slot order is deterministic (quantity order).
    pub slots: Vec<(Quantity, DriverProfile<T>)>,
    index: BTreeMap<Quantity, usize>,
}

impl<T: Scalar> KnownSet<T> {
    pub fn slot(&self, q: Quantity) -> Option<usize> {
        self.index.get(&q).copied()
    }

    pub fn profile(&self, q: Quantity) -> Option<&DriverProfile<T>> {
        self.slot(q).map(|i| &self.slots[i].1)
    }

    /// Known value at absolute time `t`.
    pub fn value(&self, q: Quantity, t: T) -> Option<T> {
        self.profile(q).map(|p| p.value(t))
    }

    /// Earliest breakpoint of any driver strictly after `t`.
    pub fn next_breakpoint(&self, t: T) -> Option<T> {
        self.slots
            .iter()
            .filter_map(|(_, p)| p.next_breakpoint(t))
            .min_by(|a, b| a.partial_cmp(b).expect("breakpoints are finite"))
    }
}

/// Compiled model: topology + registry + equations + driver bindings.
#[derive(Debug, Clone)]
pub struct SystemModel<T> {
    pub system: CoupledSystem<T>,
    pub registry: Registry,
    pub equations: Vec<Equation<T>>,
    pub knowns: KnownSet<T>,
}

impl<T: Scalar> SystemModel<T> {
    /// Compile a coupled system with driver overrides for known variables.
    ///
    /// The system must already be compound-node expanded; a node that mixes
    /// junction and load/source roles is rejected here.
    pub fn new(
        system: CoupledSystem<T>,
        overrides: &[(DriverTarget, DriverProfile<T>)],
    ) -> Result<Self> {
        reject_compound_nodes(&system)?;
        let registry = build_registry(&system);
        let knowns = build_knowns(&system, overrides)?;
        let equations = build_equations(&system);
        if equations.len() != registry.unknown_count() {
            return Err(CoreError::Validation {
                subject: "coupled system".into(),
                reason: format!(
                    "{} equations vs {} unknowns: system is not square",
                    equations.len(),
                    registry.unknown_count()
                ),
            });
        }
        Ok(Self { system, registry, equations, knowns })
    }

    /// Refresh the equation set after a topology change (flow reversal).
    pub fn rebuild_equations(&mut self) {
        self.equations = build_equations(&self.system);
    }

    /// Display name of a column.
    pub fn column_name(&self, col: usize) -> &str {
        &self.registry.columns[col].1
    }
}

fn reject_compound_nodes<T: Scalar>(system: &CoupledSystem<T>) -> Result<()> {
    let heat = &system.heat;
    for (idx, node) in heat.nodes().iter().enumerate() {
        let passes_on = heat.pipes().iter().any(|p| !p.implicit && p.inlet_node() == idx);
        let receives = heat.pipes().iter().any(|p| !p.implicit && p.outlet_node() == idx);
        let compound = match node.kind {
            NodeKind::Load => passes_on,
            NodeKind::Source => receives,
            _ => false,
        };
        if compound {
            return Err(CoreError::Validation {
                subject: format!("node `{}`", node.id),
                reason: "compound node: run expand_compound_nodes before building the model".into(),
            });
        }
    }
    Ok(())
}

/// Display name of a quantity.
pub fn quantity_name<T: Scalar>(system: &CoupledSystem<T>, q: Quantity) -> String {
    let node = |i: usize| system.heat.nodes()[i].id.clone();
    let pipe = |j: usize| system.heat.pipes()[j].id.clone();
    let bus = |b: usize| system.electric.buses()[b].id.clone();
    match q {
        Quantity::PipeMdot(j) => format!("mdot:{}", pipe(j)),
        Quantity::NodeInjection(i) => format!("mdot_in:{}", node(i)),
        Quantity::NodeSupplyTemp(i) => format!("Ts:{}", node(i)),
        Quantity::NodeReturnTemp(i) => format!("Tr:{}", node(i)),
        Quantity::NodePower(i) => format!("phi:{}", node(i)),
        Quantity::PipeOutletSupply(j) => format!("Tout_s:{}", pipe(j)),
        Quantity::PipeOutletReturn(j) => format!("Tout_r:{}", pipe(j)),
        Quantity::PipeInletSupply(j) => format!("Tin_s:{}", pipe(j)),
        Quantity::PipeInletReturn(j) => format!("Tin_r:{}", pipe(j)),
        Quantity::BusVoltageReal(b) => format!("e:{}", bus(b)),
        Quantity::BusVoltageImag(b) => format!("f:{}", bus(b)),
        Quantity::BusActive(b) => format!("p:{}", bus(b)),
        Quantity::BusReactive(b) => format!("q:{}", bus(b)),
    }
}

/// Build the deterministic unknown registry: hydraulic unknowns first (pipe
/// flows, then injections), thermal next (supply, return, implicit-pipe
/// outlets), then heat powers, then the electric block.
fn build_registry<T: Scalar>(system: &CoupledSystem<T>) -> Registry {
    let heat = &system.heat;
    let electric = &system.electric;
    let mut columns: Vec<(Quantity, String)> = Vec::new();
    let push = |q: Quantity, cols: &mut Vec<(Quantity, String)>| {
        cols.push((q, quantity_name(system, q)));
    };

    for j in 0..heat.pipes().len() {
        push(Quantity::PipeMdot(j), &mut columns);
    }
    for (i, node) in heat.nodes().iter().enumerate() {
        if node.kind.is_injection() {
            push(Quantity::NodeInjection(i), &mut columns);
        }
    }
    for (i, node) in heat.nodes().iter().enumerate() {
        if matches!(node.kind, NodeKind::Load | NodeKind::Intermediate) {
            push(Quantity::NodeSupplyTemp(i), &mut columns);
        }
    }
    for (i, node) in heat.nodes().iter().enumerate() {
        if matches!(node.kind, NodeKind::Slack | NodeKind::Source | NodeKind::Intermediate) {
            push(Quantity::NodeReturnTemp(i), &mut columns);
        }
    }
    for (j, pipe) in heat.pipes().iter().enumerate() {
        if pipe.implicit {
            push(Quantity::PipeOutletSupply(j), &mut columns);
            push(Quantity::PipeOutletReturn(j), &mut columns);
        }
    }
    for (i, node) in heat.nodes().iter().enumerate() {
        let coupled = system.coupling_at_node(i).is_some();
        if node.kind == NodeKind::Slack || (node.kind.is_injection() && coupled) {
            push(Quantity::NodePower(i), &mut columns);
        }
    }
    for (b, bus) in electric.buses().iter().enumerate() {
        if bus.kind != BusKind::Slack {
            push(Quantity::BusVoltageReal(b), &mut columns);
        }
    }
    for (b, bus) in electric.buses().iter().enumerate() {
        if bus.kind != BusKind::Slack {
            push(Quantity::BusVoltageImag(b), &mut columns);
        }
    }
    for (b, bus) in electric.buses().iter().enumerate() {
        if bus.kind == BusKind::Slack || system.coupling_at_bus(b).is_some() {
            push(Quantity::BusActive(b), &mut columns);
        }
    }
    for (b, bus) in electric.buses().iter().enumerate() {
        if matches!(bus.kind, BusKind::Slack | BusKind::Pv) {
            push(Quantity::BusReactive(b), &mut columns);
        }
    }

    let index = columns
        .iter()
        .enumerate()
        .map(|(col, (q, _))| (*q, col))
        .collect();

    // Differential entries depend on the grid sizes, which the simulation
    // state owns; they are filled by `set_grid_layout`.
    let x_entries = Vec::new();

    let mut z_entries = Vec::new();
    for (j, _pipe) in heat.pipes().iter().enumerate() {
        z_entries.push((
            Quantity::PipeInletSupply(j),
            quantity_name(system, Quantity::PipeInletSupply(j)),
        ));
        z_entries.push((
            Quantity::PipeInletReturn(j),
            quantity_name(system, Quantity::PipeInletReturn(j)),
        ));
    }

    Registry { columns, index, x_entries, z_entries }
}

impl Registry {
    /// Fill the differential entries once grid sizes are known.
    /// `grid_nodes[j]` is the node count of pipe `j` (`None` for implicit).
    pub fn set_grid_layout<T: Scalar>(
        &mut self,
        system: &CoupledSystem<T>,
        grid_nodes: &[Option<usize>],
    ) {
        self.x_entries.clear();
        for (j, nodes) in grid_nodes.iter().enumerate() {
            let Some(m) = nodes else { continue };
            let pipe_id = &system.heat.pipes()[j].id;
            for side in 0..2 {
                let tag = if side == 0 { "s" } else { "r" };
                for grid_node in 1..*m {
                    let name = if grid_node == m - 1 {
                        format!("Tout_{tag}:{pipe_id}")
                    } else {
                        format!("Tgrid_{tag}:{pipe_id}:{grid_node}")
                    };
                    self.x_entries.push(XEntry { pipe: j, side, grid_node, name });
                }
            }
        }
    }
}

fn build_knowns<T: Scalar>(
    system: &CoupledSystem<T>,
    overrides: &[(DriverTarget, DriverProfile<T>)],
) -> Result<KnownSet<T>> {
    let heat = &system.heat;
    let electric = &system.electric;
    let mut slots: Vec<(Quantity, DriverProfile<T>)> = Vec::new();

    for (i, node) in heat.nodes().iter().enumerate() {
        let coupled = system.coupling_at_node(i).is_some();
        match node.kind {
            NodeKind::Slack => {
                slots.push((
                    Quantity::NodeSupplyTemp(i),
                    DriverProfile::Constant { value: node.supply_temp.expect("validated") },
                ));
            }
            NodeKind::Source => {
                slots.push((
                    Quantity::NodeSupplyTemp(i),
                    DriverProfile::Constant { value: node.supply_temp.expect("validated") },
                ));
                if !coupled {
                    slots.push((
                        Quantity::NodePower(i),
                        DriverProfile::Constant { value: node.power.expect("validated") },
                    ));
                }
            }
            NodeKind::Load => {
                slots.push((
                    Quantity::NodeReturnTemp(i),
                    DriverProfile::Constant { value: node.return_temp.expect("validated") },
                ));
                if !coupled {
                    slots.push((
                        Quantity::NodePower(i),
                        DriverProfile::Constant { value: node.power.expect("validated") },
                    ));
                }
            }
            NodeKind::Intermediate => {}
        }
    }
    for (b, bus) in electric.buses().iter().enumerate() {
        let coupled = system.coupling_at_bus(b).is_some();
        match bus.kind {
            BusKind::Slack => {
                slots.push((
                    Quantity::BusVoltageReal(b),
                    DriverProfile::Constant { value: bus.e_sp.expect("validated") },
                ));
                slots.push((
                    Quantity::BusVoltageImag(b),
                    DriverProfile::Constant { value: bus.f_sp.expect("validated") },
                ));
            }
            BusKind::Pv => {
                if !coupled {
                    slots.push((
                        Quantity::BusActive(b),
                        DriverProfile::Constant { value: bus.p.expect("validated") },
                    ));
                }
            }
            BusKind::Pq => {
                if !coupled {
                    slots.push((
                        Quantity::BusActive(b),
                        DriverProfile::Constant { value: bus.p.expect("validated") },
                    ));
                }
                slots.push((
                    Quantity::BusReactive(b),
                    DriverProfile::Constant { value: bus.q.expect("validated") },
                ));
            }
        }
    }

    // Apply overrides: the target must resolve to a known slot.
    for (target, profile) in overrides {
        profile.validate().map_err(|reason| CoreError::Validation {
            subject: format!("driver for {target:?}"),
            reason,
        })?;
        let q = match target {
            DriverTarget::SupplyTemp(id) => Quantity::NodeSupplyTemp(heat.node_index(id)?),
            DriverTarget::ReturnTemp(id) => Quantity::NodeReturnTemp(heat.node_index(id)?),
            DriverTarget::HeatPower(id) => Quantity::NodePower(heat.node_index(id)?),
            DriverTarget::BusActive(id) => Quantity::BusActive(electric.bus_index(id)?),
            DriverTarget::BusReactive(id) => Quantity::BusReactive(electric.bus_index(id)?),
        };
        let slot = slots.iter_mut().find(|(slot_q, _)| *slot_q == q);
        match slot {
            Some((_, p)) => *p = profile.clone(),
            None => {
                return Err(CoreError::Validation {
                    subject: format!("driver for {target:?}"),
                    reason: "target is not a known variable of this system".into(),
                })
            }
        }
    }

    let index = slots
        .iter()
        .enumerate()
        .map(|(i, (q, _))| (*q, i))
        .collect();
    Ok(KnownSet { slots, index })
}
