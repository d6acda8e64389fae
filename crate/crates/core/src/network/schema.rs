//! JSON exchange format for coupled networks.
//!
//! A network file is a single JSON document with arrays `heat_nodes`,
//! `pipes`, `buses`, `branches` and `couplings`; ids are strings, units as
//! in the type definitions (SI on the heat side, per-unit on the electric
//! side).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Bus, BusKind, CoupledSystem, CouplingKind, CouplingUnit, ElectricNetwork, HeatNetwork,
    HeatNode, NodeKind, PipeParams,
};
use crate::error::{CoreError, Result};
use crate::scalar::{Scalar, lit};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub heat_nodes: Vec<HeatNodeSpec>,
    pub pipes: Vec<PipeSpec>,
    #[serde(default)]
    pub buses: Vec<BusSpec>,
    #[serde(default)]
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub couplings: Vec<CouplingSpec>,
    /// Ambient temperature, °C.
    pub ambient_temp_c: f64,
    /// Fluid heat capacity, J/(kg·K).
    pub fluid_cp_j_per_kg_k: f64,
    /// Optional temperature normalization base for display.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temp_base_c: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatNodeSpec {
    pub id: String,
    /// One of `slack`, `source`, `load`, `intermediate`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply_temp_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub return_temp_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipeSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub area_m2: f64,
    pub density_kg_per_m3: f64,
    pub cp_j_per_kg_k: f64,
    pub heat_transfer_w_per_m_k: f64,
    /// Head-loss resistance, s²/(kg·m).
    pub resistance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BusSpec {
    pub id: String,
    /// One of `slack`, `pv`, `pq`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_sp_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e_sp_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_sp_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_pu: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchSpec {
    pub from: String,
    pub to: String,
    pub resistance_pu: f64,
    pub reactance_pu: f64,
    #[serde(default)]
    pub charging_pu: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub id: String,
    /// One of `extraction_steam_turbine`, `gas_turbine`.
    pub kind: String,
    pub heat_node: String,
    pub bus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_input_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heat_to_power: Option<f64>,
}

impl NetworkSpec {
    /// Parse a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Instantiate the typed coupled system in the working scalar type.
    pub fn build<T: Scalar>(&self) -> Result<CoupledSystem<T>> {
        let nodes = self
            .heat_nodes
            .iter()
            .map(|spec| {
                Ok(HeatNode {
                    id: spec.id.clone(),
                    kind: parse_node_kind(&spec.id, &spec.kind)?,
                    supply_temp: spec.supply_temp_c.map(lit),
                    return_temp: spec.return_temp_c.map(lit),
                    power: spec.power_w.map(lit),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut builder = HeatNetwork::builder(lit(self.ambient_temp_c), lit(self.fluid_cp_j_per_kg_k));
        if let Some(base) = self.temp_base_c {
            builder = builder.temp_base(lit(base));
        }
        for node in nodes {
            builder = builder.node(node);
        }
        for pipe in &self.pipes {
            builder = builder.pipe(
                &pipe.id,
                &pipe.from,
                &pipe.to,
                PipeParams {
                    length: lit(pipe.length_m),
                    area: lit(pipe.area_m2),
                    density: lit(pipe.density_kg_per_m3),
                    heat_capacity: lit(pipe.cp_j_per_kg_k),
                    heat_transfer: lit(pipe.heat_transfer_w_per_m_k),
                    resistance: lit(pipe.resistance),
                },
            );
        }
        let heat = builder.build()?.expand_compound_nodes()?;

        let buses = self
            .buses
            .iter()
            .map(|spec| {
                Ok(Bus {
                    id: spec.id.clone(),
                    kind: parse_bus_kind(&spec.id, &spec.kind)?,
                    voltage_sp: spec.voltage_sp_pu.map(lit),
                    e_sp: spec.e_sp_pu.map(lit),
                    f_sp: spec.f_sp_pu.map(lit),
                    p: spec.p_pu.map(lit),
                    q: spec.q_pu.map(lit),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let branches: Vec<(String, String, T, T, T)> = self
            .branches
            .iter()
            .map(|b| {
                (
                    b.from.clone(),
                    b.to.clone(),
                    lit(b.resistance_pu),
                    lit(b.reactance_pu),
                    lit(b.charging_pu),
                )
            })
            .collect();
        let electric = if buses.is_empty() {
            ElectricNetwork::empty()
        } else {
            ElectricNetwork::from_branches(buses, &branches)?
        };

        let couplings = self
            .couplings
            .iter()
            .map(|spec| {
                let kind = match spec.kind.as_str() {
                    "extraction_steam_turbine" => CouplingKind::ExtractionSteamTurbine {
                        z: lit(required(spec.z, &spec.id, "z")?),
                        eta_e: lit(required(spec.eta_e, &spec.id, "eta_e")?),
                        fuel_input: lit(required(spec.fuel_input_w, &spec.id, "fuel_input_w")?),
                    },
                    "gas_turbine" => CouplingKind::GasTurbine {
                        heat_to_power: lit(required(spec.heat_to_power, &spec.id, "heat_to_power")?),
                    },
                    other => {
                        return Err(CoreError::Schema(format!(
                            "coupling `{}`: unknown kind `{other}`",
                            spec.id
                        )))
                    }
                };
                Ok(CouplingUnit {
                    id: spec.id.clone(),
                    heat_node: spec.heat_node.clone(),
                    bus: spec.bus.clone(),
                    kind,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        CoupledSystem::new(heat, electric, couplings)
    }
}

fn required(value: Option<f64>, id: &str, field: &str) -> Result<f64> {
    value.ok_or_else(|| CoreError::Schema(format!("coupling `{id}`: missing field `{field}`")))
}

fn parse_node_kind(id: &str, kind: &str) -> Result<NodeKind> {
    match kind {
        "slack" => Ok(NodeKind::Slack),
        "source" => Ok(NodeKind::Source),
        "load" => Ok(NodeKind::Load),
        "intermediate" => Ok(NodeKind::Intermediate),
        other => Err(CoreError::Schema(format!(
            "node `{id}`: unknown kind `{other}` (expected slack/source/load/intermediate)"
        ))),
    }
}

fn parse_bus_kind(id: &str, kind: &str) -> Result<BusKind> {
    match kind {
        "slack" => Ok(BusKind::Slack),
        "pv" => Ok(BusKind::Pv),
        "pq" => Ok(BusKind::Pq),
        other => Err(CoreError::Schema(format!(
            "bus `{id}`: unknown kind `{other}` (expected slack/pv/pq)"
        ))),
    }
}

/// Load and instantiate a network file.
pub fn load_network_file<T: Scalar>(path: &Path) -> Result<CoupledSystem<T>> {
    let text = std::fs::read_to_string(path)?;
    let spec = NetworkSpec::from_json(&text)?;
    spec.build()
}
