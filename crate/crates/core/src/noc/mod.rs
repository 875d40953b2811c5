//! Inter-CE network-on-chip: topologies, a flit-level wormhole simulator
//! and the analytic model for the one-router-per-node baseline.

mod baseline;
mod sim;
mod topology;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{
    baseline_analytic, baseline_topology, baseline_traces, BaselineEstimate,
    BASELINE_SIM_MAX_ROUTERS,
};
pub use sim::simulate;
pub use topology::{route_metrics, route_xy, Topology};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NocError {
    #[error("noc config: {0}")]
    InvalidConfig(String),
    #[error("router {router} outside a {routers}-router topology")]
    RouterOutOfRange { router: usize, routers: usize },
    #[error("packet {index} has zero size")]
    EmptyPacket { index: usize },
    #[error("simulation exceeded {cap} cycles with {pending_flits} flits undelivered")]
    CycleCap { cap: u64, pending_flits: u64 },
    #[error("invariant violated at cycle {cycle}: {msg}")]
    Invariant { cycle: u64, msg: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NocConfig {
    pub topology: Topology,
    pub bus_width_bits: u32,
    /// Must match the topology: 5 for a mesh, 9 with express links.
    pub router_ports: u32,
    pub router_pipeline_cycles: u64,
    pub link_cycles: u64,
    pub credit_cycles: u64,
    pub input_buffer_flits: u32,
    pub clock_hz: f64,
    pub max_cycles: u64,
    /// Check buffer and credit invariants every cycle.
    pub check_invariants: bool,
    /// Per-router energy multiplier; defaults to the port-count ratio
    /// relative to a 5-port mesh router.
    pub router_energy_weight: Option<f64>,
}

impl Default for NocConfig {
    fn default() -> Self {
        Self {
            topology: Topology::default(),
            bus_width_bits: 32,
            router_ports: 5,
            router_pipeline_cycles: 2,
            link_cycles: 1,
            credit_cycles: 1,
            input_buffer_flits: 8,
            clock_hz: 1e9,
            max_cycles: 500_000_000,
            check_invariants: false,
            router_energy_weight: None,
        }
    }
}

impl NocConfig {
    /// Same parameters on another topology, with the port count adjusted.
    pub fn with_topology(&self, topology: Topology) -> Self {
        Self { topology, router_ports: topology.port_count() as u32, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), NocError> {
        let bad = |m: &str| Err(NocError::InvalidConfig(m.to_string()));
        self.topology.validate().map_err(NocError::InvalidConfig)?;
        if self.bus_width_bits == 0 {
            return bad("bus_width_bits must be positive");
        }
        if self.router_ports as usize != self.topology.port_count() {
            return Err(NocError::InvalidConfig(format!(
                "router_ports is {}, topology {} needs {}",
                self.router_ports,
                self.topology,
                self.topology.port_count()
            )));
        }
        if self.input_buffer_flits == 0 {
            return bad("input_buffer_flits must be at least 1");
        }
        if self.link_cycles == 0 || self.credit_cycles == 0 {
            return bad("link_cycles and credit_cycles must be at least 1");
        }
        if !(self.clock_hz.is_finite() && self.clock_hz > 0.0) {
            return bad("clock_hz must be positive");
        }
        if let Some(w) = self.router_energy_weight {
            if !(w.is_finite() && w >= 0.0) {
                return bad("router_energy_weight must be non-negative");
            }
        }
        Ok(())
    }

    pub fn router_weight(&self) -> f64 {
        self.router_energy_weight
            .unwrap_or(self.topology.port_count() as f64 / 5.0)
    }

    pub fn flits(&self, size_bits: u64) -> u64 {
        size_bits.div_ceil(u64::from(self.bus_width_bits))
    }
}

/// Contention-free latency from generation to tail ejection.
pub fn zero_load_latency(size_bits: u64, src: usize, dst: usize, cfg: &NocConfig) -> u64 {
    let (hops, _) = route_metrics(src, dst, &cfg.topology);
    hops * (cfg.router_pipeline_cycles + cfg.link_cycles) + cfg.flits(size_bits).max(1) - 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NocReport {
    /// Cycle at which the last tail flit is ejected; 0 for an empty trace.
    pub total_cycles: u64,
    /// Per packet, in trace order: tail ejection cycle minus generation cycle.
    pub latencies: Vec<u64>,
    /// Σ size_bits × hops.
    pub bit_hop_count: u64,
    /// Σ size_bits × summed link length.
    pub bit_link_length: u64,
    /// Σ size_bits × routers traversed (hops + 1).
    pub bit_router_traversals: u64,
    /// Flits switched by each router, ejection included.
    pub router_flits: Vec<u64>,
    pub injected_flits: u64,
    pub ejected_flits: u64,
    pub avg_latency: f64,
    pub max_latency: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_load_examples() {
        let cfg = NocConfig::default();
        assert_eq!(zero_load_latency(32, 0, 1, &cfg), 3);
        assert_eq!(zero_load_latency(512, 0, 15, &cfg), 33);
        assert_eq!(zero_load_latency(512, 6, 6, &cfg), 15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = NocConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.input_buffer_flits = 0;
        assert!(cfg.validate().is_err());
        let cm = NocConfig::default().with_topology(Topology::Cmesh { width: 4, height: 4, express_span: 2 });
        assert!(cm.validate().is_ok());
        assert!((cm.router_weight() - 1.8).abs() < 1e-12);
        let mismatched = NocConfig { topology: cm.topology, ..NocConfig::default() };
        assert!(mismatched.validate().is_err());
    }

    #[test]
    fn config_json_rejects_unknown_keys() {
        let text = r#"{"topology":{"kind":"mesh","width":3,"height":2},"bus_width_bits":64}"#;
        let cfg: NocConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.topology.num_routers(), 6);
        assert!(serde_json::from_str::<NocConfig>(r#"{"bus":1}"#).is_err());
    }
}
