//! Coupled network topology: heat-network graph, electric network and
//! coupling units, with incidence/loop matrices and orientation bookkeeping.

mod schema;

pub use schema::{
    BranchSpec, BusSpec, CouplingSpec, HeatNodeSpec, NetworkSpec, PipeSpec, load_network_file,
};

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Role of a heat-network node. The role fixes which of `{φ, τˢ, τʳ, ṁⁱⁿ}`
/// are known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Temperature reference; balances the network heat power.
    Slack,
    /// Produces heat at known power and known supply temperature.
    Source,
    /// Consumes heat at known power and known return temperature.
    Load,
    /// Pure junction: zero power, zero injection.
    Intermediate,
}

impl NodeKind {
    pub fn is_injection(self) -> bool {
        matches!(self, NodeKind::Slack | NodeKind::Source | NodeKind::Load)
    }
}

/// Heat-network node with its nominal boundary data.
///
/// The nominal values seed the known-variable trajectories; scenario driver
/// profiles may override them over time.
#[derive(Debug, Clone)]
pub struct HeatNode<T> {
    pub id: String,
    pub kind: NodeKind,
    /// Nominal supply temperature (Slack, Source), °C.
    pub supply_temp: Option<T>,
    /// Nominal return temperature (Load), °C.
    pub return_temp: Option<T>,
    /// Nominal heat power (Source, Load), W.
    pub power: Option<T>,
}

/// Physical parameters of a pipe.
#[derive(Debug, Clone)]
pub struct PipeParams<T> {
    /// Length `H`, m.
    pub length: T,
    /// Cross section `γ`, m².
    pub area: T,
    /// Density `ρ`, kg/m³.
    pub density: T,
    /// Heat capacity `C_p`, J/(kg·K).
    pub heat_capacity: T,
    /// Heat transfer coefficient `λ`, W/(m·K).
    pub heat_transfer: T,
    /// Head-loss resistance `K`, s²/(kg·m).
    pub resistance: T,
}

/// Directed pipe of the supply network; the return pipe mirrors it with
/// opposite flow.
#[derive(Debug, Clone)]
pub struct Pipe<T> {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub params: PipeParams<T>,
    /// Flow currently runs `to → from` instead of `from → to`.
    pub reversed: bool,
    /// Zero-length pipe created by compound-node expansion: no PDE grid,
    /// excluded from head-loss terms, handled by identity equations.
    pub implicit: bool,
}

impl<T: Scalar> Pipe<T> {
    /// Node index the flow currently enters from.
    pub fn inlet_node(&self) -> usize {
        if self.reversed { self.to } else { self.from }
    }

    /// Node index the flow currently leaves into.
    pub fn outlet_node(&self) -> usize {
        if self.reversed { self.from } else { self.to }
    }
}

/// Incrementally assembles a [`HeatNetwork`]; endpoints are referenced by id
/// and resolved against the canonical (lexicographic) node order at build
/// time.
pub struct HeatNetworkBuilder<T> {
    nodes: Vec<HeatNode<T>>,
    pipes: Vec<(String, String, String, PipeParams<T>)>,
    ambient: T,
    cp: T,
    temp_base: Option<T>,
}

impl<T: Scalar> HeatNetworkBuilder<T> {
    pub fn new(ambient: T, cp: T) -> Self {
        Self { nodes: Vec::new(), pipes: Vec::new(), ambient, cp, temp_base: None }
    }

    pub fn temp_base(mut self, base: T) -> Self {
        self.temp_base = Some(base);
        self
    }

    pub fn node(mut self, node: HeatNode<T>) -> Self {
        self.nodes.push(node);
        self
    }

    pub fn pipe(mut self, id: &str, from: &str, to: &str, params: PipeParams<T>) -> Self {
        self.pipes
            .push((id.to_string(), from.to_string(), to.to_string(), params));
        self
    }

    pub fn build(self) -> Result<HeatNetwork<T>> {
        let Self { mut nodes, pipes, ambient, cp, temp_base } = self;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        check_unique_ids(nodes.iter().map(|n| n.id.as_str()))?;
        let index_of = |id: &str, pipe: &str| {
            nodes
                .iter()
                .position(|n| n.id == id)
                .ok_or_else(|| CoreError::DanglingEndpoint {
                    pipe: pipe.to_string(),
                    node: id.to_string(),
                })
        };
        let mut resolved = Vec::with_capacity(pipes.len());
        for (id, from, to, params) in pipes {
            let from = index_of(&from, &id)?;
            let to = index_of(&to, &id)?;
            resolved.push(Pipe { id, from, to, params, reversed: false, implicit: false });
        }
        resolved.sort_by(|a, b| a.id.cmp(&b.id));
        check_unique_ids(resolved.iter().map(|p| p.id.as_str()))?;
        HeatNetwork::from_sorted(nodes, resolved, ambient, cp, temp_base)
    }
}

/// Node-typed directed pipe graph with incidence and loop matrices.
#[derive(Debug, Clone)]
pub struct HeatNetwork<T> {
    nodes: Vec<HeatNode<T>>,
    pipes: Vec<Pipe<T>>,
    /// Node incidence matrix: `+1` pipe flows into node, `−1` out, `0` otherwise.
    v: DMatrix<T>,
    /// Fundamental loop incidence matrix (one row per independent cycle).
    loops: DMatrix<T>,
    /// Ambient temperature, °C.
    pub ambient: T,
    /// Fluid heat capacity used by the node power balance, J/(kg·K).
    pub cp: T,
    /// Optional display normalization base for temperatures.
    pub temp_base: Option<T>,
}

impl<T: Scalar> HeatNetwork<T> {
    pub fn builder(ambient: T, cp: T) -> HeatNetworkBuilder<T> {
        HeatNetworkBuilder::new(ambient, cp)
    }

    /// `nodes` and `pipes` must already be id-sorted with pipe endpoints
    /// resolved against that order.
    fn from_sorted(
        nodes: Vec<HeatNode<T>>,
        pipes: Vec<Pipe<T>>,
        ambient: T,
        cp: T,
        temp_base: Option<T>,
    ) -> Result<Self> {
        validate_nodes(&nodes)?;
        validate_pipes(&nodes, &pipes)?;
        // build_incidence works on effective endpoints, so recorded
        // orientation survives rebuilds.
        let (v, loops) = build_incidence(&nodes, &pipes)?;
        Ok(Self { nodes, pipes, v, loops, ambient, cp, temp_base })
    }

    pub fn nodes(&self) -> &[HeatNode<T>] {
        &self.nodes
    }

    pub fn pipes(&self) -> &[Pipe<T>] {
        &self.pipes
    }

    /// Node incidence matrix `V`.
    pub fn incidence(&self) -> &DMatrix<T> {
        &self.v
    }

    /// Loop incidence matrix `L` (rows = independent cycles).
    pub fn loop_matrix(&self) -> &DMatrix<T> {
        &self.loops
    }

    /// `V⁺ = max(0, V)`: picks pipes flowing into each node.
    pub fn incidence_positive(&self) -> DMatrix<T> {
        self.v.map(|x| x.max(T::zero()))
    }

    /// `V⁻ = min(0, V)`: picks pipes flowing out of each node.
    pub fn incidence_negative(&self) -> DMatrix<T> {
        self.v.map(|x| x.min(T::zero()))
    }

    pub fn node_index(&self, id: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n.id == id)
            .ok_or_else(|| CoreError::UnknownId(id.to_string()))
    }

    pub fn pipe_index(&self, id: &str) -> Result<usize> {
        self.pipes
            .iter()
            .position(|p| p.id == id)
            .ok_or_else(|| CoreError::UnknownId(id.to_string()))
    }

    /// Split every node that carries both a junction role and a load/source
    /// role: the load/source moves to a new virtual node attached through a
    /// zero-length implicit pipe, and the original node becomes intermediate.
    ///
    /// Idempotent: expanded networks come back unchanged.
    pub fn expand_compound_nodes(self) -> Result<Self> {
        let Self { mut nodes, mut pipes, ambient, cp, temp_base, .. } = self;
        let mut additions: Vec<(HeatNode<T>, usize, PipeParams<T>)> = Vec::new();
        for (idx, node) in nodes.iter_mut().enumerate() {
            let passes_flow_on = pipes.iter().any(|p| p.inlet_node() == idx);
            let receives_flow = pipes.iter().any(|p| p.outlet_node() == idx);
            let compound = match node.kind {
                NodeKind::Load => passes_flow_on,
                NodeKind::Source => receives_flow,
                NodeKind::Slack | NodeKind::Intermediate => false,
            };
            if !compound {
                continue;
            }
            let template = pipes
                .iter()
                .find(|p| p.from == idx || p.to == idx)
                .expect("compound node has incident pipes")
                .params
                .clone();
            let virt = HeatNode {
                id: format!("{}__virt", node.id),
                kind: node.kind,
                supply_temp: node.supply_temp.take(),
                return_temp: node.return_temp.take(),
                power: node.power.take(),
            };
            node.kind = NodeKind::Intermediate;
            additions.push((virt, idx, template));
        }
        if !additions.is_empty() {
            for (virt, junction_idx, template) in additions {
                let virt_kind = virt.kind;
                let virt_id = virt.id.clone();
                nodes.push(virt);
                let virt_idx = nodes.len() - 1;
                // Supply flow runs toward a load and away from a source.
                let (from, to) = match virt_kind {
                    NodeKind::Load => (junction_idx, virt_idx),
                    _ => (virt_idx, junction_idx),
                };
                pipes.push(Pipe {
                    id: format!("{virt_id}__pipe"),
                    from,
                    to,
                    params: PipeParams {
                        length: T::zero(),
                        heat_transfer: T::zero(),
                        resistance: T::zero(),
                        ..template
                    },
                    reversed: false,
                    implicit: true,
                });
            }
            // Restore canonical id order and remap endpoint indices.
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            order.sort_by(|a, b| nodes[*a].id.cmp(&nodes[*b].id));
            let mut remap = vec![0usize; nodes.len()];
            for (new_idx, old_idx) in order.iter().enumerate() {
                remap[*old_idx] = new_idx;
            }
            let mut sorted_nodes = Vec::with_capacity(nodes.len());
            for old_idx in &order {
                sorted_nodes.push(nodes[*old_idx].clone());
            }
            nodes = sorted_nodes;
            for pipe in &mut pipes {
                pipe.from = remap[pipe.from];
                pipe.to = remap[pipe.to];
            }
            pipes.sort_by(|a, b| a.id.cmp(&b.id));
        }
        check_unique_ids(nodes.iter().map(|n| n.id.as_str()))?;
        check_unique_ids(pipes.iter().map(|p| p.id.as_str()))?;
        Self::from_sorted(nodes, pipes, ambient, cp, temp_base)
    }

    /// Negate the `V`/`L` columns of the listed pipes and toggle their
    /// orientation flag. Applying the same set twice restores the network.
    pub fn reverse_pipes(&mut self, pipe_ids: &[String]) -> Result<()> {
        for id in pipe_ids {
            let j = self.pipe_index(id)?;
            self.pipes[j].reversed = !self.pipes[j].reversed;
            for i in 0..self.v.nrows() {
                self.v[(i, j)] = -self.v[(i, j)];
            }
            for i in 0..self.loops.nrows() {
                self.loops[(i, j)] = -self.loops[(i, j)];
            }
        }
        Ok(())
    }
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CoreError::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

fn validate_nodes<T: Scalar>(nodes: &[HeatNode<T>]) -> Result<()> {
    let slack_count = nodes.iter().filter(|n| n.kind == NodeKind::Slack).count();
    if !nodes.is_empty() && slack_count != 1 {
        return Err(CoreError::Validation {
            subject: "heat network".into(),
            reason: format!("exactly one slack node required, found {slack_count}"),
        });
    }
    for node in nodes {
        let missing = |field: &str| CoreError::Validation {
            subject: format!("node `{}`", node.id),
            reason: format!("{field} required for {:?} nodes", node.kind),
        };
        match node.kind {
            NodeKind::Slack => {
                if node.supply_temp.is_none() {
                    return Err(missing("supply temperature"));
                }
            }
            NodeKind::Source => {
                if node.supply_temp.is_none() {
                    return Err(missing("supply temperature"));
                }
                if node.power.is_none() {
                    return Err(missing("power"));
                }
            }
            NodeKind::Load => {
                if node.return_temp.is_none() {
                    return Err(missing("return temperature"));
                }
                if node.power.is_none() {
                    return Err(missing("power"));
                }
            }
            NodeKind::Intermediate => {}
        }
    }
    Ok(())
}

fn validate_pipes<T: Scalar>(nodes: &[HeatNode<T>], pipes: &[Pipe<T>]) -> Result<()> {
    for pipe in pipes {
        if pipe.from >= nodes.len() || pipe.to >= nodes.len() {
            return Err(CoreError::DanglingEndpoint {
                pipe: pipe.id.clone(),
                node: format!("#{}", pipe.from.max(pipe.to)),
            });
        }
        let bad = |reason: &str| CoreError::Validation {
            subject: format!("pipe `{}`", pipe.id),
            reason: reason.to_string(),
        };
        let p = &pipe.params;
        if p.length < T::zero() || (p.length == T::zero() && !pipe.implicit) {
            return Err(bad("length must be positive (zero only for implicit pipes)"));
        }
        if p.area <= T::zero() || p.density <= T::zero() || p.heat_capacity <= T::zero() {
            return Err(bad("area, density and heat capacity must be positive"));
        }
        if p.heat_transfer < T::zero() || p.resistance < T::zero() {
            return Err(bad("heat transfer and resistance must be non-negative"));
        }
    }
    Ok(())
}

/// Build the node incidence matrix `V` and a fundamental loop basis `L`.
///
/// The basis comes from a breadth-first spanning tree rooted at the first
/// node, with incident pipes explored in id order; each chord contributes
/// one loop row oriented along the chord's flow direction.
pub fn build_incidence<T: Scalar>(
    nodes: &[HeatNode<T>],
    pipes: &[Pipe<T>],
) -> Result<(DMatrix<T>, DMatrix<T>)> {
    let n = nodes.len();
    let m = pipes.len();
    let mut v = DMatrix::zeros(n, m);
    for (j, pipe) in pipes.iter().enumerate() {
        v[(pipe.outlet_node(), j)] = T::one();
        v[(pipe.inlet_node(), j)] = -T::one();
    }
    if n == 0 {
        return Ok((v, DMatrix::zeros(0, m)));
    }

    // Breadth-first spanning tree; pipes are id-sorted, so exploring in
    // index order is deterministic.
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, pipe) in pipes.iter().enumerate() {
        adjacency[pipe.from].push(j);
        adjacency[pipe.to].push(j);
    }
    let mut parent_edge: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut in_tree = vec![false; m];
    let mut queue = VecDeque::new();
    visited[0] = true;
    queue.push_back(0usize);
    while let Some(node) = queue.pop_front() {
        for &j in &adjacency[node] {
            let pipe = &pipes[j];
            let other = if pipe.from == node { pipe.to } else { pipe.from };
            if !visited[other] {
                visited[other] = true;
                parent_edge[other] = Some(j);
                in_tree[j] = true;
                queue.push_back(other);
            }
        }
    }
    if let Some(unreached) = visited.iter().position(|x| !*x) {
        return Err(CoreError::DisconnectedGraph {
            root: nodes[0].id.clone(),
            node: nodes[unreached].id.clone(),
        });
    }

    let chords: Vec<usize> = (0..m).filter(|j| !in_tree[*j]).collect();
    let mut loops = DMatrix::zeros(chords.len(), m);
    for (row, &chord) in chords.iter().enumerate() {
        loops[(row, chord)] = T::one();
        let path_inlet = tree_path_to_root(pipes[chord].inlet_node(), pipes, &parent_edge);
        let path_outlet = tree_path_to_root(pipes[chord].outlet_node(), pipes, &parent_edge);
        let (path_inlet, path_outlet) = strip_common_tail(path_inlet, path_outlet);
        // Cycle traversal: through the chord (inlet→outlet), up from the
        // outlet to the common ancestor, then down to the inlet.
        for (edge, flow_child_to_parent) in path_outlet {
            loops[(row, edge)] += orientation_sign::<T>(flow_child_to_parent, true);
        }
        for (edge, flow_child_to_parent) in path_inlet {
            loops[(row, edge)] += orientation_sign::<T>(flow_child_to_parent, false);
        }
    }
    Ok((v, loops))
}

/// Tree edges from `start` up to the root, as
/// `(edge index, flow runs child→parent)` pairs.
fn tree_path_to_root<T: Scalar>(
    start: usize,
    pipes: &[Pipe<T>],
    parent_edge: &[Option<usize>],
) -> Vec<(usize, bool)> {
    let mut node = start;
    let mut path = Vec::new();
    while let Some(edge) = parent_edge[node] {
        let pipe = &pipes[edge];
        let parent = if pipe.from == node { pipe.to } else { pipe.from };
        let flow_child_to_parent = pipe.inlet_node() == node;
        path.push((edge, flow_child_to_parent));
        node = parent;
    }
    path
}

fn strip_common_tail(
    mut a: Vec<(usize, bool)>,
    mut b: Vec<(usize, bool)>,
) -> (Vec<(usize, bool)>, Vec<(usize, bool)>) {
    while let (Some(x), Some(y)) = (a.last(), b.last()) {
        if x.0 == y.0 {
            a.pop();
            b.pop();
        } else {
            break;
        }
    }
    (a, b)
}

fn orientation_sign<T: Scalar>(flow_child_to_parent: bool, traverse_child_to_parent: bool) -> T {
    if flow_child_to_parent == traverse_child_to_parent {
        T::one()
    } else {
        -T::one()
    }
}

// ---------------------------------------------------------------------------
// Electric network
// ---------------------------------------------------------------------------

/// Bus role in the power flow problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

/// Electric bus with nominal boundary data (per unit).
#[derive(Debug, Clone)]
pub struct Bus<T> {
    pub id: String,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (PV buses).
    pub voltage_sp: Option<T>,
    /// Slack voltage real part.
    pub e_sp: Option<T>,
    /// Slack voltage imaginary part.
    pub f_sp: Option<T>,
    /// Nominal active power (PV, PQ buses).
    pub p: Option<T>,
    /// Nominal reactive power (PQ buses).
    pub q: Option<T>,
}

/// Electric power system in rectangular coordinates.
#[derive(Debug, Clone)]
pub struct ElectricNetwork<T> {
    buses: Vec<Bus<T>>,
    g: DMatrix<T>,
    b: DMatrix<T>,
}

impl<T: Scalar> ElectricNetwork<T> {
    /// Empty electric side (heat-only studies).
    pub fn empty() -> Self {
        Self { buses: Vec::new(), g: DMatrix::zeros(0, 0), b: DMatrix::zeros(0, 0) }
    }

    /// Build from buses and explicit (symmetric) G/B matrices.
    pub fn new(mut buses: Vec<Bus<T>>, g: DMatrix<T>, b: DMatrix<T>) -> Result<Self> {
        buses.sort_by(|a, b| a.id.cmp(&b.id));
        check_unique_ids(buses.iter().map(|b| b.id.as_str()))?;
        let n = buses.len();
        if g.nrows() != n || g.ncols() != n || b.nrows() != n || b.ncols() != n {
            return Err(CoreError::Validation {
                subject: "electric network".into(),
                reason: "G/B dimensions must match the bus count".into(),
            });
        }
        let tol = crate::scalar::lit::<T>(1e-9);
        for i in 0..n {
            for j in 0..i {
                if (g[(i, j)] - g[(j, i)]).abs() > tol || (b[(i, j)] - b[(j, i)]).abs() > tol {
                    return Err(CoreError::Validation {
                        subject: "electric network".into(),
                        reason: "G and B must be symmetric".into(),
                    });
                }
            }
        }
        let slack_count = buses.iter().filter(|b| b.kind == BusKind::Slack).count();
        if !buses.is_empty() && slack_count != 1 {
            return Err(CoreError::Validation {
                subject: "electric network".into(),
                reason: format!("exactly one slack bus required, found {slack_count}"),
            });
        }
        for bus in &buses {
            let missing = |field: &str| CoreError::Validation {
                subject: format!("bus `{}`", bus.id),
                reason: format!("{field} required for {:?} buses", bus.kind),
            };
            match bus.kind {
                BusKind::Slack => {
                    if bus.e_sp.is_none() || bus.f_sp.is_none() {
                        return Err(missing("slack voltage parts"));
                    }
                }
                BusKind::Pv => {
                    match bus.voltage_sp {
                        Some(u) if u > T::zero() => {}
                        _ => return Err(missing("positive voltage setpoint")),
                    }
                    if bus.p.is_none() {
                        return Err(missing("active power"));
                    }
                }
                BusKind::Pq => {
                    if bus.p.is_none() || bus.q.is_none() {
                        return Err(missing("active and reactive power"));
                    }
                }
            }
        }
        Ok(Self { buses, g, b })
    }

    /// Assemble G/B from branch data `(from, to, r, x, total line charging)`
    /// and build the network.
    pub fn from_branches(
        buses: Vec<Bus<T>>,
        branches: &[(String, String, T, T, T)],
    ) -> Result<Self> {
        let mut sorted = buses;
        sorted.sort_by(|a, b| a.id.cmp(&b.id));
        let index = |id: &str| {
            sorted
                .iter()
                .position(|b| b.id == id)
                .ok_or_else(|| CoreError::UnknownId(id.to_string()))
        };
        let n = sorted.len();
        let mut g = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        let half = crate::scalar::lit::<T>(0.5);
        for (from, to, r, x, charging) in branches {
            let i = index(from)?;
            let j = index(to)?;
            let denom = *r * *r + *x * *x;
            if denom <= T::zero() {
                return Err(CoreError::Validation {
                    subject: format!("branch `{from}`-`{to}`"),
                    reason: "series impedance must be nonzero".into(),
                });
            }
            let g_ser = *r / denom;
            let b_ser = -*x / denom;
            g[(i, i)] += g_ser;
            g[(j, j)] += g_ser;
            g[(i, j)] -= g_ser;
            g[(j, i)] -= g_ser;
            b[(i, i)] += b_ser + *charging * half;
            b[(j, j)] += b_ser + *charging * half;
            b[(i, j)] -= b_ser;
            b[(j, i)] -= b_ser;
        }
        Self::new(sorted, g, b)
    }

    pub fn buses(&self) -> &[Bus<T>] {
        &self.buses
    }

    pub fn conductance(&self) -> &DMatrix<T> {
        &self.g
    }

    pub fn susceptance(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn bus_index(&self, id: &str) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == id)
            .ok_or_else(|| CoreError::UnknownId(id.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Coupling units and the coupled system
// ---------------------------------------------------------------------------

/// Heat/electricity conversion characteristics of a coupling unit.
#[derive(Debug, Clone)]
pub enum CouplingKind<T> {
    /// `p = −φ/Z + η_e·F_in`: electric output trades off against extracted heat.
    ExtractionSteamTurbine { z: T, eta_e: T, fuel_input: T },
    /// `φ = c_m1·p`: heat output proportional to electric output.
    GasTurbine { heat_to_power: T },
}

/// A unit tying one heat node's power to one bus's active power.
#[derive(Debug, Clone)]
pub struct CouplingUnit<T> {
    pub id: String,
    pub heat_node: String,
    pub bus: String,
    pub kind: CouplingKind<T>,
}

/// Joined heat network, electric network and coupling units.
#[derive(Debug, Clone)]
pub struct CoupledSystem<T> {
    pub heat: HeatNetwork<T>,
    pub electric: ElectricNetwork<T>,
    pub couplings: Vec<CouplingUnit<T>>,
}

impl<T: Scalar> CoupledSystem<T> {
    pub fn new(
        heat: HeatNetwork<T>,
        electric: ElectricNetwork<T>,
        mut couplings: Vec<CouplingUnit<T>>,
    ) -> Result<Self> {
        couplings.sort_by(|a, b| a.id.cmp(&b.id));
        check_unique_ids(couplings.iter().map(|c| c.id.as_str()))?;
        for unit in &couplings {
            let node_idx = heat.node_index(&unit.heat_node)?;
            let bus_idx = electric.bus_index(&unit.bus)?;
            let node = &heat.nodes()[node_idx];
            let bus = &electric.buses()[bus_idx];
            match &unit.kind {
                CouplingKind::ExtractionSteamTurbine { z, .. } => {
                    if *z <= T::zero() {
                        return Err(CoreError::Validation {
                            subject: format!("coupling `{}`", unit.id),
                            reason: "steam turbine trade-off Z must be positive".into(),
                        });
                    }
                }
                CouplingKind::GasTurbine { heat_to_power } => {
                    if *heat_to_power <= T::zero() {
                        return Err(CoreError::Validation {
                            subject: format!("coupling `{}`", unit.id),
                            reason: "gas turbine heat-to-power ratio must be positive".into(),
                        });
                    }
                }
            }
            if node.kind == NodeKind::Intermediate {
                return Err(CoreError::Validation {
                    subject: format!("coupling `{}`", unit.id),
                    reason: "coupled heat node must produce or consume power".into(),
                });
            }
            // The coupling equation replaces exactly one previously known
            // quantity; both-known is overdetermined, both-unknown
            // underdetermined.
            let phi_was_known = matches!(node.kind, NodeKind::Source | NodeKind::Load);
            let p_was_known = matches!(bus.kind, BusKind::Pv | BusKind::Pq);
            if phi_was_known == p_was_known {
                return Err(CoreError::Validation {
                    subject: format!("coupling `{}`", unit.id),
                    reason: format!(
                        "exactly one of node power (known: {phi_was_known}) and bus power \
                         (known: {p_was_known}) must be a previously known quantity"
                    ),
                });
            }
        }
        let mut seen_nodes = std::collections::BTreeSet::new();
        let mut seen_buses = std::collections::BTreeSet::new();
        for unit in &couplings {
            if !seen_nodes.insert(unit.heat_node.clone()) || !seen_buses.insert(unit.bus.clone()) {
                return Err(CoreError::Validation {
                    subject: format!("coupling `{}`", unit.id),
                    reason: "each heat node and bus may carry at most one coupling".into(),
                });
            }
        }
        Ok(Self { heat, electric, couplings })
    }

    /// Coupling unit attached to this heat node, if any.
    pub fn coupling_at_node(&self, node_idx: usize) -> Option<&CouplingUnit<T>> {
        let id = &self.heat.nodes()[node_idx].id;
        self.couplings.iter().find(|c| &c.heat_node == id)
    }

    /// Coupling unit attached to this bus, if any.
    pub fn coupling_at_bus(&self, bus_idx: usize) -> Option<&CouplingUnit<T>> {
        let id = &self.electric.buses()[bus_idx].id;
        self.couplings.iter().find(|c| &c.bus == id)
    }
}

#[cfg(test)]
mod tests;
