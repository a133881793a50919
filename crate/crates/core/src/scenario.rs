//! Scenario files: system parameters, the RSU graph and the endpoints.
//!
//! A scenario is a TOML file. Every section is optional; missing values
//! fall back to the 3×3 grid defaults.
//!
//! ```toml
//! seed = 4
//! source = 0
//! destination = 8
//! arrival_interval = [0.05, 0.3]
//! max_hops = 6
//!
//! [params]
//! hop_duration = 20.0
//! trial_duration = 0.1
//! decode_error = 0.001
//! rate_v2v = 2.0
//! rate_v2i = 1.5
//! rate_cellular = 1.0
//! alpha = 0.5
//!
//! [grid]
//! rows = 3
//! cols = 3
//! block_m = 250.0
//! ```
//!
//! A `[topology]` table with explicit `nodes`, `edges` and `backhaul_links`
//! replaces the generated grid.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{NodeId, SystemParams};
use crate::routing::{enumerate_routes, RouteSet, Topology};
use crate::simulator::BroadcastTable;

/// Seed of the default scenario's arrival-rate draw.
pub const DEFAULT_SEED: u64 = 4;
pub const DEFAULT_ARRIVAL: (f64, f64) = (0.05, 0.3);
pub const DEFAULT_BLOCK_M: f64 = 250.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Metres between neighbouring crossroads.
    pub block_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rows: 3,
            cols: 3,
            block_m: DEFAULT_BLOCK_M,
        }
    }
}

/// The on-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Defaults to the upper-left crossroad.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<NodeId>,
    /// Defaults to the lower-right crossroad.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<NodeId>,
    #[serde(default = "default_arrival")]
    pub arrival_interval: (f64, f64),
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_hops: Option<usize>,
    /// Link every pair of street-adjacent RSUs by backhaul.
    #[serde(default)]
    pub full_backhaul: bool,
    #[serde(default)]
    pub params: SystemParams,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub broadcast: BroadcastTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<Topology>,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_arrival() -> (f64, f64) {
    DEFAULT_ARRIVAL
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            source: None,
            destination: None,
            arrival_interval: DEFAULT_ARRIVAL,
            max_hops: None,
            full_backhaul: false,
            params: SystemParams::default(),
            grid: GridSpec::default(),
            broadcast: BroadcastTable::default(),
            topology: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

/// A fully built scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub topology: Topology,
    pub params: SystemParams,
    pub source: NodeId,
    pub destination: NodeId,
    pub arrival_interval: (f64, f64),
    pub seed: u64,
    pub route_filter: Option<usize>,
    pub broadcast: BroadcastTable,
}

/// `rows × cols` grid with the source at the upper-left and the destination
/// at the lower-right crossroad.
pub fn build_grid_scenario(
    rows: usize,
    cols: usize,
    block_m: f64,
    params: SystemParams,
    seed: u64,
) -> Result<Scenario> {
    let topology = Topology::grid(rows, cols, block_m, DEFAULT_ARRIVAL, seed)?;
    Scenario::new(
        topology,
        params,
        0,
        (rows * cols - 1) as NodeId,
        DEFAULT_ARRIVAL,
        seed,
        None,
    )
}

impl Default for Scenario {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default()).expect("default scenario is valid")
    }
}

impl Scenario {
    pub fn new(
        topology: Topology,
        params: SystemParams,
        source: NodeId,
        destination: NodeId,
        arrival_interval: (f64, f64),
        seed: u64,
        route_filter: Option<usize>,
    ) -> Result<Self> {
        let s = Self {
            topology,
            params,
            source,
            destination,
            arrival_interval,
            seed,
            route_filter,
            broadcast: BroadcastTable::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.topology.validate()?;
        let (lo, hi) = self.arrival_interval;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "arrival interval must satisfy 0 < min <= max, got [{lo}, {hi}]"
            )));
        }
        if self.source == self.destination {
            return Err(Error::InvalidParameter("source and destination coincide".into()));
        }
        for id in [self.source, self.destination] {
            if !self.topology.contains(id) {
                return Err(Error::InvalidParameter(format!("unknown node {id}")));
            }
        }
        if self.route_filter == Some(0) {
            return Err(Error::InvalidParameter("max_hops must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let topology = match &cfg.topology {
            Some(t) => t.clone(),
            None => Topology::grid(
                cfg.grid.rows,
                cfg.grid.cols,
                cfg.grid.block_m,
                cfg.arrival_interval,
                cfg.seed,
            )?,
        };
        let topology = if cfg.full_backhaul {
            topology.with_full_backhaul()
        } else {
            topology
        };
        let first = topology.nodes.iter().map(|n| n.id).min();
        let last = topology.nodes.iter().map(|n| n.id).max();
        let (Some(first), Some(last)) = (first, last) else {
            return Err(Error::InvalidTopology("no nodes".into()));
        };
        let mut s = Self::new(
            topology,
            cfg.params,
            cfg.source.unwrap_or(first),
            cfg.destination.unwrap_or(last),
            cfg.arrival_interval,
            cfg.seed,
            cfg.max_hops,
        )?;
        s.broadcast = cfg.broadcast;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(&ScenarioConfig::load(path)?)
    }

    /// The candidate routes `Γ` between source and destination.
    pub fn routes(&self) -> Result<RouteSet> {
        enumerate_routes(&self.topology, self.source, self.destination, self.route_filter)
    }
}
