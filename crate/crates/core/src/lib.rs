//! Communication-aware design-space exploration for in-memory-computing GCN
//! accelerators.
//!
//! The pipeline: pick a CE count ([`optimizer`]), map adjacency slices and
//! weights to crossbars ([`mapper`]), derive per-layer inter-CE traffic
//! ([`dataflow`]), run it through a cycle-level mesh model ([`noc`]) and
//! turn the counts into energy, latency and EDP ([`energy`]).

pub mod cli;
pub mod config;
pub mod dataflow;
pub mod energy;
pub mod graph;
pub mod mapper;
pub mod noc;
pub mod optimizer;

pub use dataflow::{infer, mult_count, IntMatrix, LayerTensors, Order, Packet, Trace, TrafficPolicy};
pub use energy::{
    compare_architectures, mesh_sweep, Architecture, EnergyConstants, MeshSweep, RunOptions,
    SimReport,
};
pub use graph::{preset, DatasetPreset, GcnDims, Graph, Partition};
pub use mapper::{map_gcn, HardwareConfig, MappingPlan};
pub use noc::{simulate, zero_load_latency, NocConfig, NocReport, Topology};
pub use optimizer::{minimize, verify_convexity, ObjectiveParams, OptResult};
