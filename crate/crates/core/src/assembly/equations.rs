//! Equation-family construction over the coupled network.
//!
//! Row order is deterministic: hydraulic continuity first, loop pressure,
//! supply/return mixing, node power, implicit-pipe identities, then the
//! electric block and the coupling rows. Coefficients read the current
//! incidence matrices, so the set must be rebuilt after a flow reversal.

use super::{Equation, EquationFamily, Quantity};
use crate::network::{BusKind, CoupledSystem, CouplingKind, NodeKind};
use crate::scalar::Scalar;

pub fn build_equations<T: Scalar>(system: &CoupledSystem<T>) -> Vec<Equation<T>> {
    let mut equations = Vec::new();
    continuity_rows(system, &mut equations);
    loop_rows(system, &mut equations);
    mixing_rows(system, &mut equations);
    node_power_rows(system, &mut equations);
    implicit_identity_rows(system, &mut equations);
    power_flow_rows(system, &mut equations);
    coupling_rows(system, &mut equations);
    equations
}

/// `V_{R,S}·ṁ + ṁⁱⁿ_{R,S} = 0`, `V_L·ṁ − ṁⁱⁿ_L = 0`, `V_I·ṁ = 0`.
///
/// The sign split keeps injections positive at sources and loads alike:
/// sources push flow out through pipes, loads absorb it.
fn continuity_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let heat = &system.heat;
    let v = heat.incidence();
    for (i, node) in heat.nodes().iter().enumerate() {
        let mut linear: Vec<(T, Quantity)> = Vec::new();
        for j in 0..heat.pipes().len() {
            let c = v[(i, j)];
            if c != T::zero() {
                linear.push((c, Quantity::PipeMdot(j)));
            }
        }
        match node.kind {
            NodeKind::Slack | NodeKind::Source => linear.push((T::one(), Quantity::NodeInjection(i))),
            NodeKind::Load => linear.push((-T::one(), Quantity::NodeInjection(i))),
            NodeKind::Intermediate => {}
        }
        out.push(Equation {
            label: format!("continuity:{}", node.id),
            family: EquationFamily::Continuity,
            bilinear: Vec::new(),
            linear,
            constant: T::zero(),
        });
    }
}

/// `L·diag(K)·diag(ṁ)·ṁ = 0` per loop.
fn loop_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let heat = &system.heat;
    let loops = heat.loop_matrix();
    for row in 0..loops.nrows() {
        let mut bilinear = Vec::new();
        for (j, pipe) in heat.pipes().iter().enumerate() {
            let c = loops[(row, j)] * pipe.params.resistance;
            if c != T::zero() {
                bilinear.push((c, Quantity::PipeMdot(j), Quantity::PipeMdot(j)));
            }
        }
        out.push(Equation {
            label: format!("loop_pressure:{row}"),
            family: EquationFamily::LoopPressure,
            bilinear,
            linear: Vec::new(),
            constant: T::zero(),
        });
    }
}

/// Supply mixing for load/intermediate nodes, return mixing for
/// slack/source/intermediate nodes:
/// `diag(τ)·V^±·ṁ = V^±·diag(τ^out)·ṁ`.
fn mixing_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let heat = &system.heat;
    let v_plus = heat.incidence_positive();
    let v_minus = heat.incidence_negative();
    for (i, node) in heat.nodes().iter().enumerate() {
        if matches!(node.kind, NodeKind::Load | NodeKind::Intermediate) {
            let mut bilinear = Vec::new();
            for j in 0..heat.pipes().len() {
                let c = v_plus[(i, j)];
                if c != T::zero() {
                    bilinear.push((c, Quantity::NodeSupplyTemp(i), Quantity::PipeMdot(j)));
                    bilinear.push((-c, Quantity::PipeOutletSupply(j), Quantity::PipeMdot(j)));
                }
            }
            out.push(Equation {
                label: format!("mixing_supply:{}", node.id),
                family: EquationFamily::MixingSupply,
                bilinear,
                linear: Vec::new(),
                constant: T::zero(),
            });
        }
    }
    for (i, node) in heat.nodes().iter().enumerate() {
        if matches!(node.kind, NodeKind::Slack | NodeKind::Source | NodeKind::Intermediate) {
            let mut bilinear = Vec::new();
            for j in 0..heat.pipes().len() {
                let c = v_minus[(i, j)];
                if c != T::zero() {
                    bilinear.push((c, Quantity::NodeReturnTemp(i), Quantity::PipeMdot(j)));
                    bilinear.push((-c, Quantity::PipeOutletReturn(j), Quantity::PipeMdot(j)));
                }
            }
            out.push(Equation {
                label: format!("mixing_return:{}", node.id),
                family: EquationFamily::MixingReturn,
                bilinear,
                linear: Vec::new(),
                constant: T::zero(),
            });
        }
    }
}

/// `φ = C_p·diag(ṁⁱⁿ)·(τˢ − τʳ)` for slack/source/load nodes.
fn node_power_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let heat = &system.heat;
    let cp = heat.cp;
    for (i, node) in heat.nodes().iter().enumerate() {
        if !node.kind.is_injection() {
            continue;
        }
        out.push(Equation {
            label: format!("node_power:{}", node.id),
            family: EquationFamily::NodePower,
            bilinear: vec![
                (-cp, Quantity::NodeInjection(i), Quantity::NodeSupplyTemp(i)),
                (cp, Quantity::NodeInjection(i), Quantity::NodeReturnTemp(i)),
            ],
            linear: vec![(T::one(), Quantity::NodePower(i))],
            constant: T::zero(),
        });
    }
}

/// Zero-length pipes transport without delay or loss:
/// `τ^out,s = τˢ(inlet node)` and `τ^out,r = τʳ(outlet node)`.
fn implicit_identity_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let heat = &system.heat;
    for (j, pipe) in heat.pipes().iter().enumerate() {
        if !pipe.implicit {
            continue;
        }
        out.push(Equation {
            label: format!("implicit_supply:{}", pipe.id),
            family: EquationFamily::ImplicitIdentity,
            bilinear: Vec::new(),
            linear: vec![
                (T::one(), Quantity::PipeOutletSupply(j)),
                (-T::one(), Quantity::NodeSupplyTemp(pipe.inlet_node())),
            ],
            constant: T::zero(),
        });
        out.push(Equation {
            label: format!("implicit_return:{}", pipe.id),
            family: EquationFamily::ImplicitIdentity,
            bilinear: Vec::new(),
            linear: vec![
                (T::one(), Quantity::PipeOutletReturn(j)),
                (-T::one(), Quantity::NodeReturnTemp(pipe.outlet_node())),
            ],
            constant: T::zero(),
        });
    }
}

/// Rectangular power flow:
/// `p = diag(e)(Ge−Bf) + diag(f)(Be+Gf)`,
/// `q = diag(f)(Ge−Bf) − diag(e)(Be+Gf)`,
/// plus the PV magnitude rows `e²+f² = (U^SP)²`.
fn power_flow_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    let electric = &system.electric;
    let g = electric.conductance();
    let b = electric.susceptance();
    let n = electric.buses().len();
    for (i, bus) in electric.buses().iter().enumerate() {
        let mut bilinear = Vec::new();
        for j in 0..n {
            let gij = g[(i, j)];
            let bij = b[(i, j)];
            if gij != T::zero() {
                bilinear.push((-gij, Quantity::BusVoltageReal(i), Quantity::BusVoltageReal(j)));
                bilinear.push((-gij, Quantity::BusVoltageImag(i), Quantity::BusVoltageImag(j)));
            }
            if bij != T::zero() {
                bilinear.push((bij, Quantity::BusVoltageReal(i), Quantity::BusVoltageImag(j)));
                bilinear.push((-bij, Quantity::BusVoltageImag(i), Quantity::BusVoltageReal(j)));
            }
        }
        out.push(Equation {
            label: format!("active_power:{}", bus.id),
            family: EquationFamily::ActivePower,
            bilinear,
            linear: vec![(T::one(), Quantity::BusActive(i))],
            constant: T::zero(),
        });
    }
    for (i, bus) in electric.buses().iter().enumerate() {
        let mut bilinear = Vec::new();
        for j in 0..n {
            let gij = g[(i, j)];
            let bij = b[(i, j)];
            if gij != T::zero() {
                bilinear.push((-gij, Quantity::BusVoltageImag(i), Quantity::BusVoltageReal(j)));
                bilinear.push((gij, Quantity::BusVoltageReal(i), Quantity::BusVoltageImag(j)));
            }
            if bij != T::zero() {
                bilinear.push((bij, Quantity::BusVoltageImag(i), Quantity::BusVoltageImag(j)));
                bilinear.push((bij, Quantity::BusVoltageReal(i), Quantity::BusVoltageReal(j)));
            }
        }
        out.push(Equation {
            label: format!("reactive_power:{}", bus.id),
            family: EquationFamily::ReactivePower,
            bilinear,
            linear: vec![(T::one(), Quantity::BusReactive(i))],
            constant: T::zero(),
        });
    }
    for (i, bus) in electric.buses().iter().enumerate() {
        if bus.kind != BusKind::Pv {
            continue;
        }
        let u = bus.voltage_sp.expect("validated");
        out.push(Equation {
            label: format!("pv_magnitude:{}", bus.id),
            family: EquationFamily::PvMagnitude,
            bilinear: vec![
                (T::one(), Quantity::BusVoltageReal(i), Quantity::BusVoltageReal(i)),
                (T::one(), Quantity::BusVoltageImag(i), Quantity::BusVoltageImag(i)),
            ],
            linear: Vec::new(),
            constant: -u * u,
        });
    }
}

/// `p = −φ/Z + η_e·F_in` (extraction steam turbine) and `φ = c_m1·p`
/// (gas turbine).
fn coupling_rows<T: Scalar>(system: &CoupledSystem<T>, out: &mut Vec<Equation<T>>) {
    for unit in &system.couplings {
        let h = system.heat.node_index(&unit.heat_node).expect("validated");
        let b = system.electric.bus_index(&unit.bus).expect("validated");
        let equation = match &unit.kind {
            CouplingKind::ExtractionSteamTurbine { z, eta_e, fuel_input } => Equation {
                label: format!("coupling:{}", unit.id),
                family: EquationFamily::Coupling,
                bilinear: Vec::new(),
                linear: vec![
                    (T::one(), Quantity::BusActive(b)),
                    (T::one() / *z, Quantity::NodePower(h)),
                ],
                constant: -*eta_e * *fuel_input,
            },
            CouplingKind::GasTurbine { heat_to_power } => Equation {
                label: format!("coupling:{}", unit.id),
                family: EquationFamily::Coupling,
                bilinear: Vec::new(),
                linear: vec![
                    (T::one(), Quantity::NodePower(h)),
                    (-*heat_to_power, Quantity::BusActive(b)),
                ],
                constant: T::zero(),
            },
        };
        out.push(equation);
    }
}

/// Convolution of two quantity series at order `k`, with the order-`k`
/// contribution of unknowns suppressed (those belong on the left-hand side).
pub fn convolution_without_unknown_top<T: Scalar>(
    a: Quantity,
    b: Quantity,
    k: usize,
    source: &impl super::CoeffSource<T>,
    registry: &super::Registry,
) -> T {
    let mut acc = T::zero();
    for m in 0..=k {
        let a_val = if m == k && k > 0 && registry.column(a).is_some() {
            T::zero()
        } else {
            source.coeff(a, m)
        };
        if a_val == T::zero() {
            continue;
        }
        let b_val = if m == 0 && k > 0 && registry.column(b).is_some() {
            T::zero()
        } else {
            source.coeff(b, k - m)
        };
        acc += a_val * b_val;
    }
    acc
}

/// Order-`k` right-hand side entry of one equation: all known and
/// lower-order contributions moved right with a sign flip.
pub fn rhs_at_order<T: Scalar>(
    equation: &Equation<T>,
    k: usize,
    source: &impl super::CoeffSource<T>,
    registry: &super::Registry,
) -> T {
    let mut acc = T::zero();
    for (c, a, b) in &equation.bilinear {
        acc += *c * convolution_without_unknown_top(*a, *b, k, source, registry);
    }
    for (c, v) in &equation.linear {
        if registry.column(*v).is_none() {
            acc += *c * source.coeff(*v, k);
        }
    }
    let delta = if k == 0 { T::one() } else { T::zero() };
    acc += equation.constant * delta;
    -acc
}

/// Coefficient matrix over the registry unknowns, evaluated at the
/// zeroth-order values of `source`. For the bilinear system this is both the
/// order-`k` coefficient matrix (any `k ≥ 1`) and the Jacobian of the
/// residuals with respect to the unknowns.
pub fn matrix_at<T: Scalar>(
    equations: &[Equation<T>],
    source: &impl super::CoeffSource<T>,
    registry: &super::Registry,
) -> nalgebra::DMatrix<T> {
    let n = registry.unknown_count();
    assert_eq!(equations.len(), n, "system must be square");
    let mut matrix = nalgebra::DMatrix::zeros(n, n);
    for (row, equation) in equations.iter().enumerate() {
        for (c, a, b) in &equation.bilinear {
            if let Some(col) = registry.column(*a) {
                matrix[(row, col)] += *c * source.coeff(*b, 0);
            }
            if let Some(col) = registry.column(*b) {
                matrix[(row, col)] += *c * source.coeff(*a, 0);
            }
        }
        for (c, v) in &equation.linear {
            if let Some(col) = registry.column(*v) {
                matrix[(row, col)] += *c;
            }
        }
    }
    matrix
}
