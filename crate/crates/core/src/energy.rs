//! Energy, latency and EDP accounting, architecture comparison and
//! mesh-size sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataflow::{generate_traces_for, DataflowError, TraceOptions};
use crate::graph::{partition_contiguous, Graph, GraphError, Partition};
use crate::mapper::{map_gcn, HardwareConfig, MapError, MappingPlan};
use crate::noc::{
    baseline_analytic, baseline_topology, baseline_traces, simulate, NocConfig, NocError,
    NocReport, Topology, BASELINE_SIM_MAX_ROUTERS,
};

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Dataflow(#[from] DataflowError),
    #[error(transparent)]
    Noc(#[from] NocError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryTech {
    #[default]
    Rram,
    Sram,
}

/// Energies in joules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConstants {
    /// One crossbar activation: array read, ADC and shift-add.
    pub e_crossbar_read: f64,
    /// Per bit inside a CE holding one node; scaled by sqrt(N/k).
    pub e_bit_intra_base: f64,
    pub e_bit_link: f64,
    pub e_bit_router: f64,
    pub sram_rram_ratio: f64,
    pub memory: MemoryTech,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        Self {
            e_crossbar_read: 260e-12,
            e_bit_intra_base: 1.75e-12,
            e_bit_link: 0.1055e-12,
            e_bit_router: 0.1055e-12,
            sram_rram_ratio: 2.1,
            memory: MemoryTech::Rram,
        }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("e_crossbar_read", self.e_crossbar_read),
            ("e_bit_intra_base", self.e_bit_intra_base),
            ("e_bit_link", self.e_bit_link),
            ("e_bit_router", self.e_bit_router),
            ("sram_rram_ratio", self.sram_rram_ratio),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// Every energy constant multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            e_crossbar_read: self.e_crossbar_read * c,
            e_bit_intra_base: self.e_bit_intra_base * c,
            e_bit_link: self.e_bit_link * c,
            e_bit_router: self.e_bit_router * c,
            ..self.clone()
        }
    }
}

pub fn compute_energy(activations: u64, constants: &EnergyConstants) -> f64 {
    let tech = match constants.memory {
        MemoryTech::Rram => 1.0,
        MemoryTech::Sram => constants.sram_rram_ratio,
    };
    activations as f64 * constants.e_crossbar_read * tech
}

/// Bit volumes feeding the communication energy model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CommVolumes {
    pub intra_bits: u64,
    pub bit_link_length: u64,
    pub bit_router_traversals: u64,
}

impl CommVolumes {
    pub fn from_report(intra_bits: u64, report: &NocReport) -> Self {
        Self {
            intra_bits,
            bit_link_length: report.bit_link_length,
            bit_router_traversals: report.bit_router_traversals,
        }
    }
}

/// `(intra, inter)` in joules.
pub fn comm_energy(
    volumes: &CommVolumes,
    k: u64,
    num_nodes: u64,
    constants: &EnergyConstants,
    router_weight: f64,
) -> (f64, f64) {
    let intra = if volumes.intra_bits == 0 {
        0.0
    } else {
        volumes.intra_bits as f64 * constants.e_bit_intra_base * (num_nodes as f64 / k as f64).sqrt()
    };
    let inter = volumes.bit_link_length as f64 * constants.e_bit_link
        + volumes.bit_router_traversals as f64 * constants.e_bit_router * router_weight;
    (intra, inter)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Architecture {
    Coin { width: u32, height: u32 },
    /// One router per node on a square mesh.
    Baseline,
    Cmesh { width: u32, height: u32, express_span: u32 },
}

impl Architecture {
    pub fn coin(k: u32) -> Self {
        let (width, height) = mesh_dims_for(k);
        Architecture::Coin { width, height }
    }

    pub fn cmesh(k: u32) -> Self {
        let (width, height) = mesh_dims_for(k);
        Architecture::Cmesh { width, height, express_span: 2 }
    }

    pub fn label(&self) -> String {
        match *self {
            Architecture::Coin { width, height } => format!("coin-{width}x{height}"),
            Architecture::Baseline => "baseline".into(),
            Architecture::Cmesh { width, height, .. } => format!("cmesh-{width}x{height}"),
        }
    }
}

/// Most nearly square `w x h = k` with `w >= h`.
pub fn mesh_dims_for(k: u32) -> (u32, u32) {
    let mut h = (f64::from(k.max(1))).sqrt() as u32;
    while h > 1 && k % h != 0 {
        h -= 1;
    }
    let h = h.max(1);
    (k.max(1) / h, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    pub trace: TraceOptions,
    /// Cycle-simulate the baseline when its mesh has at most this many routers.
    pub baseline_sim_max_routers: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { trace: TraceOptions::default(), baseline_sim_max_routers: BASELINE_SIM_MAX_ROUTERS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: u32,
    pub compute_energy: f64,
    pub intra_ce_energy: f64,
    pub inter_ce_energy: f64,
    pub total_energy: f64,
    pub crossbar_activations: u64,
    pub compute_cycles: u64,
    pub noc_cycles: u64,
    pub latency_cycles: u64,
    pub latency_seconds: f64,
    pub edp: f64,
    pub intra_bits: u64,
    pub inter_bits: u64,
    pub bit_hop_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub architecture: String,
    pub dataset: String,
    pub num_nodes: u64,
    pub num_edges: u64,
    pub k: u64,
    pub noc: String,
    /// False when the NoC figures come from the analytic bound.
    pub noc_simulated: bool,
    pub layers: Vec<LayerReport>,
    pub compute_energy: f64,
    pub intra_ce_energy: f64,
    pub inter_ce_energy: f64,
    pub total_energy: f64,
    pub latency_cycles: u64,
    pub latency_seconds: f64,
    pub edp: f64,
    /// (intra + inter) / total.
    pub communication_share: f64,
    pub bit_hop_count: u64,
    pub mapping: Option<MappingPlan>,
    pub config: HardwareConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl SimReport {
    pub fn communication_energy(&self) -> f64 {
        self.intra_ce_energy + self.inter_ce_energy
    }

    /// Recomputes derived fields from their parts and reports the first
    /// mismatch.
    pub fn check_consistency(&self) -> Result<(), String> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        let sum = |f: fn(&LayerReport) -> f64| self.layers.iter().map(f).sum::<f64>();
        let checks = [
            ("compute_energy", self.compute_energy, sum(|l| l.compute_energy)),
            ("intra_ce_energy", self.intra_ce_energy, sum(|l| l.intra_ce_energy)),
            ("inter_ce_energy", self.inter_ce_energy, sum(|l| l.inter_ce_energy)),
            (
                "total_energy",
                self.total_energy,
                self.compute_energy + self.intra_ce_energy + self.inter_ce_energy,
            ),
            ("edp", self.edp, self.total_energy * self.latency_seconds),
        ];
        for (name, got, want) in checks {
            if !close(got, want) {
                return Err(format!("{name}: {got} != {want}"));
            }
        }
        if self.latency_cycles != self.layers.iter().map(|l| l.latency_cycles).sum::<u64>() {
            return Err("latency_cycles is not the sum of layer latencies".into());
        }
        for l in &self.layers {
            if l.latency_cycles != l.compute_cycles + l.noc_cycles {
                return Err(format!("layer {} latency", l.layer));
            }
            let parts = l.compute_energy + l.intra_ce_energy + l.inter_ce_energy;
            if !close(l.total_energy, parts) || !close(l.edp, l.total_energy * l.latency_seconds) {
                return Err(format!("layer {} energy", l.layer));
            }
        }
        let all = [self.compute_energy, self.intra_ce_energy, self.inter_ce_energy, self.edp];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err("negative or non-finite quantity".into());
        }
        Ok(())
    }
}

struct LayerInputs {
    activations: u64,
    compute_cycles: u64,
    intra_bits: u64,
    inter_bits: u64,
    noc: NocOutcome,
}

struct NocOutcome {
    cycles: u64,
    bit_hop_count: u64,
    bit_link_length: u64,
    bit_router_traversals: u64,
}

impl From<&NocReport> for NocOutcome {
    fn from(r: &NocReport) -> Self {
        Self {
            cycles: r.total_cycles,
            bit_hop_count: r.bit_hop_count,
            bit_link_length: r.bit_link_length,
            bit_router_traversals: r.bit_router_traversals,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    architecture: String,
    dataset: &str,
    graph: &Graph,
    k: u64,
    noc: &NocConfig,
    noc_simulated: bool,
    inputs: Vec<LayerInputs>,
    mapping: Option<MappingPlan>,
    hw: &HardwareConfig,
) -> SimReport {
    let n = graph.num_nodes() as u64;
    let c = &hw.energy;
    let layers: Vec<LayerReport> = inputs
        .into_iter()
        .enumerate()
        .map(|(i, li)| {
            let volumes = CommVolumes {
                intra_bits: li.intra_bits,
                bit_link_length: li.noc.bit_link_length,
                bit_router_traversals: li.noc.bit_router_traversals,
            };
            let (intra, inter) = comm_energy(&volumes, k, n, c, noc.router_weight());
            let compute = compute_energy(li.activations, c);
            let total = compute + intra + inter;
            let latency_cycles = li.compute_cycles + li.noc.cycles;
            let latency_seconds = latency_cycles as f64 / hw.clock_hz;
            LayerReport {
                layer: i as u32 + 1,
                compute_energy: compute,
                intra_ce_energy: intra,
                inter_ce_energy: inter,
                total_energy: total,
                crossbar_activations: li.activations,
                compute_cycles: li.compute_cycles,
                noc_cycles: li.noc.cycles,
                latency_cycles,
                latency_seconds,
                edp: total * latency_seconds,
                intra_bits: li.intra_bits,
                inter_bits: li.inter_bits,
                bit_hop_count: li.noc.bit_hop_count,
            }
        })
        .collect();
    let compute_energy = layers.iter().map(|l| l.compute_energy).sum::<f64>();
    let intra_ce_energy = layers.iter().map(|l| l.intra_ce_energy).sum::<f64>();
    let inter_ce_energy = layers.iter().map(|l| l.inter_ce_energy).sum::<f64>();
    let total_energy = compute_energy + intra_ce_energy + inter_ce_energy;
    let latency_cycles = layers.iter().map(|l| l.latency_cycles).sum::<u64>();
    let latency_seconds = latency_cycles as f64 / hw.clock_hz;
    let mut config = hw.clone();
    config.noc = noc.clone();
    SimReport {
        architecture,
        dataset: dataset.to_string(),
        num_nodes: n,
        num_edges: graph.num_edges() as u64,
        k,
        noc: noc.topology.to_string(),
        noc_simulated,
        bit_hop_count: layers.iter().map(|l| l.bit_hop_count).sum(),
        layers,
        compute_energy,
        intra_ce_energy,
        inter_ce_energy,
        total_energy,
        latency_cycles,
        latency_seconds,
        edp: total_energy * latency_seconds,
        communication_share: if total_energy > 0.0 {
            (intra_ce_energy + inter_ce_energy) / total_energy
        } else {
            0.0
        },
        mapping,
        config,
        timestamp: None,
    }
}

/// Bits moved inside CEs after `layer`: both endpoints of every intra-CE
/// edge exchange one output row.
fn intra_bits(partition: &Partition, graph: &Graph, layer: usize, hw: &HardwareConfig) -> u64 {
    let dims = graph.feature_dims();
    if layer >= dims.len() - 1 {
        return 0;
    }
    2 * partition.edge_counts.intra_total() * dims[layer] as u64 * u64::from(hw.activation_bits)
}

/// COIN (mesh or express-link mesh) with one CE per router and a contiguous
/// node partition.
pub fn simulate_partitioned(
    graph: &Graph,
    dataset: &str,
    hw: &HardwareConfig,
    topology: Topology,
    options: &RunOptions,
) -> Result<SimReport, EnergyError> {
    hw.validate()?;
    let noc = hw.noc.with_topology(topology);
    noc.validate()?;
    let k = topology.num_routers();
    let partition = partition_contiguous(graph, k)?;
    let dims = graph.dims();
    let plan = map_gcn(&dims, k as u64, hw)?;
    let mut trace_hw = hw.clone();
    trace_hw.noc = noc.clone();
    let traces = generate_traces_for(&dims, &partition, &trace_hw, &options.trace)?;
    let reports = traces
        .par_iter()
        .map(|t| simulate(&t.packets, &noc))
        .collect::<Result<Vec<_>, _>>()?;
    let act = u64::from(hw.activation_bits);
    let phase = hw.crossbar_phase_cycles;
    let max_ce = partition.ce_sizes.iter().copied().max().unwrap_or(0) as u64;
    let fd = graph.feature_dims();
    let inputs = (1..=graph.num_layers())
        .zip(&reports)
        .zip(&traces)
        .map(|((l, report), trace)| {
            let a_out = fd[l] as u64;
            let fe = dims.num_nodes * act * plan.crossbars_weights_per_layer[l - 1];
            let agg = k as u64 * a_out * act * plan.crossbars_adjacency_per_ce;
            LayerInputs {
                activations: fe + agg,
                compute_cycles: (max_ce + a_out) * act * phase,
                intra_bits: intra_bits(&partition, graph, l, hw),
                inter_bits: trace.total_bits(),
                noc: report.into(),
            }
        })
        .collect();
    let arch = match topology {
        Topology::Mesh { width, height } => Architecture::Coin { width, height },
        Topology::Cmesh { width, height, express_span } => {
            Architecture::Cmesh { width, height, express_span }
        }
    };
    Ok(assemble(arch.label(), dataset, graph, k as u64, &noc, true, inputs, Some(plan), hw))
}

/// One router and CE per node. Every node extracts its own features, then
/// sends its output row to each neighbour; aggregation sums the arrivals.
pub fn simulate_baseline(
    graph: &Graph,
    dataset: &str,
    hw: &HardwareConfig,
    options: &RunOptions,
) -> Result<SimReport, EnergyError> {
    hw.validate()?;
    let n = graph.num_nodes();
    let topology = baseline_topology(n);
    let noc = NocConfig { router_energy_weight: Some(1.0), ..hw.noc.with_topology(topology) };
    let act = u64::from(hw.activation_bits);
    let fd = graph.feature_dims();
    let simulated = topology.num_routers() <= options.baseline_sim_max_routers;
    let max_packet = options.trace.max_packet_bits;
    let outcomes: Vec<(u64, NocOutcome)> = (1..=graph.num_layers())
        .into_par_iter()
        .map(|l| -> Result<(u64, NocOutcome), EnergyError> {
            if l == graph.num_layers() {
                return Ok((0, NocOutcome { cycles: 0, bit_hop_count: 0, bit_link_length: 0, bit_router_traversals: 0 }));
            }
            let bits = fd[l] as u64 * act;
            let volume = 2 * graph.num_edges() as u64 * bits;
            if simulated {
                let trace = baseline_traces(graph, bits, l as u32, max_packet, &noc);
                Ok((volume, (&simulate(&trace.packets, &noc)?).into()))
            } else {
                let e = baseline_analytic(graph, bits, max_packet, &noc);
                Ok((
                    volume,
                    NocOutcome {
                        cycles: e.est_cycles,
                        bit_hop_count: e.bit_hop_count,
                        bit_link_length: e.bit_link_length,
                        bit_router_traversals: e.bit_router_traversals,
                    },
                ))
            }
        })
        .collect::<Result<_, _>>()?;
    let inputs = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, (inter_bits, noc))| {
            let xb = crate::mapper::crossbars_for_matrix(fd[i] as u64, fd[i + 1] as u64, hw.weight_bits, hw);
            LayerInputs {
                activations: n as u64 * act * xb,
                compute_cycles: act * hw.crossbar_phase_cycles,
                intra_bits: 0,
                inter_bits,
                noc,
            }
        })
        .collect();
    Ok(assemble(Architecture::Baseline.label(), dataset, graph, n as u64, &noc, simulated, inputs, None, hw))
}

pub fn simulate_architecture(
    graph: &Graph,
    dataset: &str,
    hw: &HardwareConfig,
    architecture: Architecture,
    options: &RunOptions,
) -> Result<SimReport, EnergyError> {
    match architecture {
        Architecture::Coin { width, height } => {
            simulate_partitioned(graph, dataset, hw, Topology::Mesh { width, height }, options)
        }
        Architecture::Cmesh { width, height, express_span } => simulate_partitioned(
            graph,
            dataset,
            hw,
            Topology::Cmesh { width, height, express_span },
            options,
        ),
        Architecture::Baseline => simulate_baseline(graph, dataset, hw, options),
    }
}

/// Runs `f` on a pool capped by `COIN_SIM_THREADS` when that is set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("COIN_SIM_THREADS").ok().and_then(|v| v.parse::<usize>().ok());
    match cap.filter(|&c| c > 0) {
        Some(threads) => match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

pub fn compare_architectures(
    graph: &Graph,
    dataset: &str,
    hw: &HardwareConfig,
    architectures: &[Architecture],
    options: &RunOptions,
) -> Result<Vec<SimReport>, EnergyError> {
    with_thread_cap(|| {
        architectures
            .par_iter()
            .map(|&a| simulate_architecture(graph, dataset, hw, a, options))
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub width: u32,
    pub height: u32,
    pub k: u64,
    pub intra_ce_energy: f64,
    pub inter_ce_energy: f64,
    pub communication_energy: f64,
    pub noc_cycles: u64,
    pub bit_hop_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSweep {
    pub dataset: String,
    pub points: Vec<SweepPoint>,
    /// Index into `points` of the lowest communication energy.
    pub best: usize,
}

impl MeshSweep {
    pub fn best_point(&self) -> &SweepPoint {
        &self.points[self.best]
    }
}

/// Square meshes from `lo x lo` to `hi x hi`.
pub fn square_sizes(lo: u32, hi: u32) -> Vec<(u32, u32)> {
    (lo..=hi).map(|s| (s, s)).collect()
}

pub fn mesh_sweep(
    graph: &Graph,
    dataset: &str,
    hw: &HardwareConfig,
    sizes: &[(u32, u32)],
    options: &RunOptions,
) -> Result<MeshSweep, EnergyError> {
    if sizes.is_empty() {
        return Err(EnergyError::Invalid("no mesh sizes requested".into()));
    }
    let points = with_thread_cap(|| {
        sizes
            .par_iter()
            .map(|&(width, height)| {
                let r = simulate_partitioned(graph, dataset, hw, Topology::Mesh { width, height }, options)?;
                Ok(SweepPoint {
                    width,
                    height,
                    k: r.k,
                    intra_ce_energy: r.intra_ce_energy,
                    inter_ce_energy: r.inter_ce_energy,
                    communication_energy: r.communication_energy(),
                    noc_cycles: r.layers.iter().map(|l| l.noc_cycles).sum(),
                    bit_hop_count: r.bit_hop_count,
                })
            })
            .collect::<Result<Vec<_>, EnergyError>>()
    })?;
    let best = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.communication_energy.total_cmp(&b.1.communication_energy))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(MeshSweep { dataset: dataset.to_string(), points, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::Packet;
    use crate::graph::generate_synthetic;
    use crate::noc::route_metrics;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_graph() -> Graph {
        generate_synthetic(400, 1600, vec![32, 16, 4], 11).unwrap()
    }

    #[test]
    fn compute_energy_examples() {
        let c = EnergyConstants { e_crossbar_read: 1e-12, ..EnergyConstants::default() };
        assert_eq!(compute_energy(0, &c), 0.0);
        assert_relative_eq!(compute_energy(1, &c), 1e-12);
        let sram = EnergyConstants { memory: MemoryTech::Sram, ..c.clone() };
        assert_relative_eq!(compute_energy(1000, &sram), 2.1 * compute_energy(1000, &c));
    }

    #[test]
    fn comm_energy_examples() {
        let c = EnergyConstants { e_bit_link: 1e-12, e_bit_router: 1e-12, ..EnergyConstants::default() };
        assert_eq!(comm_energy(&CommVolumes::default(), 16, 1000, &c, 1.0), (0.0, 0.0));
        let v = CommVolumes { intra_bits: 0, bit_link_length: 32 * 2, bit_router_traversals: 32 * 3 };
        assert_relative_eq!(comm_energy(&v, 16, 1000, &c, 1.0).1, 32.0 * 5.0 * 1e-12);
        let intra = CommVolumes { intra_bits: 10, ..CommVolumes::default() };
        assert_relative_eq!(comm_energy(&intra, 4, 400, &c, 1.0).0, 10.0 * 1.75e-12 * 10.0);
    }

    #[test]
    fn larger_mesh_costs_more_per_bit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = EnergyConstants::default();
        let energy = |side: u32, rng: &mut ChaCha8Rng| {
            let t = Topology::mesh(side, side);
            let n = t.num_routers();
            let mut v = CommVolumes::default();
            for _ in 0..2000 {
                let (s, d) = (rng.random_range(0..n), rng.random_range(0..n));
                let (hops, len) = route_metrics(s, d, &t);
                v.bit_link_length += 32 * len;
                v.bit_router_traversals += 32 * (hops + 1);
            }
            comm_energy(&v, n as u64, 1000, &c, 1.0).1
        };
        assert!(energy(4, &mut rng) < energy(10, &mut rng));
    }

    #[test]
    fn mesh_dims() {
        assert_eq!(mesh_dims_for(16), (4, 4));
        assert_eq!(mesh_dims_for(12), (4, 3));
        assert_eq!(mesh_dims_for(7), (7, 1));
        assert_eq!(mesh_dims_for(1), (1, 1));
    }

    #[test]
    fn reports_are_consistent_and_deterministic() {
        let g = small_graph();
        let hw = HardwareConfig::default();
        let opts = RunOptions::default();
        let archs = [Architecture::coin(16), Architecture::Baseline, Architecture::cmesh(16)];
        let a = compare_architectures(&g, "synthetic", &hw, &archs, &opts).unwrap();
        let b = compare_architectures(&g, "synthetic", &hw, &archs, &opts).unwrap();
        assert_eq!(a, b);
        for r in &a {
            r.check_consistency().unwrap();
            let json = serde_json::to_string(r).unwrap();
            assert_eq!(&serde_json::from_str::<SimReport>(&json).unwrap(), r);
        }
        assert_eq!(a[0].layers[1].inter_bits, 0);
        assert!(a[1].noc_simulated);
        assert!(a[1].bit_hop_count > a[0].bit_hop_count);
        assert!(a[2].inter_ce_energy >= a[0].inter_ce_energy);
    }

    #[test]
    fn scaling_constants_scales_energy() {
        let g = small_graph();
        let hw = HardwareConfig::default();
        let opts = RunOptions::default();
        let base = simulate_architecture(&g, "s", &hw, Architecture::coin(9), &opts).unwrap();
        let scaled_hw = HardwareConfig { energy: hw.energy.scaled(3.0), ..hw.clone() };
        let scaled = simulate_architecture(&g, "s", &scaled_hw, Architecture::coin(9), &opts).unwrap();
        assert_relative_eq!(scaled.total_energy, 3.0 * base.total_energy, max_relative = 1e-12);
        assert_relative_eq!(scaled.edp, 3.0 * base.edp, max_relative = 1e-12);
        let s1 = mesh_sweep(&g, "s", &hw, &square_sizes(2, 5), &opts).unwrap();
        let s3 = mesh_sweep(&g, "s", &scaled_hw, &square_sizes(2, 5), &opts).unwrap();
        assert_eq!(s1.best, s3.best);
    }

    #[test]
    fn analytic_baseline_agrees_on_volumes() {
        let g = small_graph();
        let hw = HardwareConfig::default();
        let sim = simulate_baseline(&g, "s", &hw, &RunOptions::default()).unwrap();
        let opts = RunOptions { baseline_sim_max_routers: 0, ..RunOptions::default() };
        let est = simulate_baseline(&g, "s", &hw, &opts).unwrap();
        assert!(!est.noc_simulated);
        assert_eq!(sim.bit_hop_count, est.bit_hop_count);
        assert_relative_eq!(sim.inter_ce_energy, est.inter_ce_energy, max_relative = 1e-12);
        assert!(est.latency_cycles <= sim.latency_cycles + 1);
    }

    #[test]
    fn single_size_sweep() {
        let g = small_graph();
        let s = mesh_sweep(&g, "s", &HardwareConfig::default(), &[(3, 3)], &RunOptions::default()).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.best, 0);
    }

    #[test]
    fn packet_type_is_shared_with_dataflow() {
        let p = Packet { layer: 1, src: 0, dst: 1, size_bits: 32, gen_cycle: 0 };
        let r = simulate(&[p], &NocConfig::default()).unwrap();
        let v = CommVolumes::from_report(0, &r);
        assert_eq!(v.bit_link_length, 32);
        assert_eq!(v.bit_router_traversals, 64);
    }
}
