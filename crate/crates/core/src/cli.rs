//! `coin-sim` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage
//! error, 3 infeasible optimization.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{parse_sizes, ConfigError, DatasetSource, OutputFormat, RunConfig};
use crate::dataflow::{generate_traces_for, read_traces, write_traces, Trace, TrafficPolicy};
use crate::energy::{
    compare_architectures, mesh_dims_for, mesh_sweep, simulate_architecture, Architecture,
    EnergyError, MeshSweep, SimReport,
};
use crate::graph::{partition_contiguous, Graph};
use crate::mapper::map_gcn;
use crate::noc::{simulate, NocReport, Topology};
use crate::optimizer::{
    minimize, verify_convexity, ConvexityReport, ObjectiveParams, OptError, OptResult,
};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible optimization: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<EnergyError> for CliError {
    fn from(e: EnergyError) -> Self {
        match e {
            EnergyError::Graph(_) | EnergyError::Map(_) | EnergyError::Invalid(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<OptError> for CliError {
    fn from(e: OptError) -> Self {
        match e {
            OptError::Probability { .. } | OptError::ActivationSum(_) => CliError::Config(e.to_string()),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "coin-sim", version, about = "Communication-aware IMC GCN accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Broadcast,
    Sparse,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ArchArg {
    Coin,
    Baseline,
    Cmesh,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset preset: cora, citeseer, pubmed, extended-cora, nell.
    #[arg(long, conflicts_with = "edge_list")]
    dataset: Option<String>,
    /// Edge list file (`u v` per line); needs --nodes and --dims.
    #[arg(long, requires = "dims")]
    edge_list: Option<PathBuf>,
    /// Node count (edge lists and uniform optimization).
    #[arg(long)]
    nodes: Option<u64>,
    /// Feature widths per layer boundary, e.g. 1433,16,7.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Leave the timestamp out of reports.
    #[arg(long)]
    no_timestamp: bool,
    #[arg(long, value_enum)]
    policy: Option<PolicyArg>,
    #[arg(long)]
    max_packet_bits: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Choose the CE count minimizing intra- plus inter-CE energy.
    Optimize {
        #[command(flatten)]
        common: Common,
        #[arg(long, requires = "uniform_p2")]
        uniform_p1: Option<f64>,
        #[arg(long, requires = "uniform_p1")]
        uniform_p2: Option<f64>,
        /// Σ exchanged activation bits per node.
        #[arg(long)]
        act_sum: Option<f64>,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        /// CE count whose mean measured probabilities drive the convexity check.
        #[arg(long)]
        reference_k: Option<u32>,
    },
    /// Crossbar, tile and chip allocation.
    Map {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Inter-CE packet traces.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<u32>,
        /// Only this layer (1-based).
        #[arg(long)]
        layer: Option<u32>,
    },
    /// Cycle-level NoC simulation of a trace file or a dataset's traces.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with_all = ["dataset", "edge_list"])]
        trace: Option<PathBuf>,
        /// Mesh shape, e.g. 4x4.
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        k: Option<u32>,
        /// Use express links of span 2.
        #[arg(long)]
        cmesh: bool,
    },
    /// COIN against the baseline and the express-link mesh.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum, value_delimiter = ',')]
        arch: Option<Vec<ArchArg>>,
    },
    /// Communication energy across mesh sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// e.g. 3x3..10x10 or 4x4,6x6.
        #[arg(long)]
        sizes: Option<String>,
    },
    /// Map, trace, simulate and report one architecture.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, value_enum, default_value = "coin")]
        arch: ArchArg,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub model: String,
    pub nodes: u64,
    pub act_sum_bits: f64,
    pub p1: f64,
    pub p2: f64,
    pub result: OptResult,
    pub convexity: ConvexityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNocReport {
    pub layer: u32,
    pub packets: u64,
    pub report: NocReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub topology: Topology,
    pub layers: Vec<LayerNocReport>,
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(name) = &common.dataset {
        cfg.dataset = Some(DatasetSource::Preset(name.clone()));
    }
    if let Some(path) = &common.edge_list {
        let nodes = common
            .nodes
            .ok_or_else(|| CliError::Config("--edge-list needs --nodes".into()))?;
        cfg.dataset = Some(DatasetSource::EdgeList {
            path: path.clone(),
            num_nodes: nodes as usize,
            feature_dims: common.dims.clone().unwrap_or_default(),
        });
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    if common.output.is_some() {
        cfg.output = common.output.clone();
    }
    cfg.no_timestamp |= common.no_timestamp;
    if let Some(p) = common.policy {
        cfg.run.trace.policy = match p {
            PolicyArg::Broadcast => TrafficPolicy::Broadcast,
            PolicyArg::Sparse => TrafficPolicy::Sparse,
        };
    }
    if let Some(b) = common.max_packet_bits {
        cfg.run.trace.max_packet_bits = b;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_graph(cfg: &RunConfig) -> Result<Graph, CliError> {
    Ok(cfg.dataset()?.load(cfg.seed).map_err(ConfigError::from)?)
}

fn timestamp(cfg: &RunConfig) -> Option<u64> {
    if cfg.no_timestamp {
        return None;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes through a sibling temporary file so a failed run never leaves a
/// partial output behind.
fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Config(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = std::fs::write(&tmp, content).and_then(|_| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::Runtime(format!("writing {}: {e}", path.display())));
    }
    Ok(())
}

fn emit(cfg: &RunConfig, content: &str) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => write_atomic(path, content),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn mesh_for(k: Option<u32>, cfg: &RunConfig) -> Result<u32, CliError> {
    let k = k.or(cfg.k).unwrap_or(16);
    if k == 0 {
        return Err(CliError::Config("k must be positive".into()));
    }
    Ok(k)
}

fn cmd_optimize(
    cfg: &RunConfig,
    uniform: Option<(f64, f64)>,
    act_sum: Option<f64>,
    bounds: (Option<u32>, Option<u32>),
    reference_k: Option<u32>,
) -> Result<String, CliError> {
    let opt = &cfg.optimize;
    let uniform = uniform.or(opt.uniform_p1.zip(opt.uniform_p2));
    let act_bits = f64::from(cfg.hardware.activation_bits);
    let (model, params, surrogate, p1, p2) = match uniform {
        Some((p1, p2)) => {
            let nodes = opt
                .nodes
                .ok_or_else(|| CliError::Config("uniform optimization needs --nodes".into()))?;
            let act = act_sum.or(opt.act_sum).ok_or_else(|| CliError::Config("uniform optimization needs --act-sum".into()))?;
            let params = ObjectiveParams::uniform(nodes, act, p1, p2);
            ("uniform", params.clone(), params, p1, p2)
        }
        None => {
            let graph = Arc::new(load_graph(cfg)?);
            let act = act_sum
                .or(opt.act_sum)
                .unwrap_or(graph.dims().exchanged_width_sum() as f64 * act_bits);
            let reference = reference_k.or(opt.reference_k).unwrap_or(16) as usize;
            let part = partition_contiguous(&graph, reference).map_err(ConfigError::from)?;
            let (p1, p2) = (part.mean_p1(), part.mean_p2());
            let nodes = graph.num_nodes() as u64;
            let params = ObjectiveParams::from_graph(graph, act);
            ("graph", params, ObjectiveParams::uniform(nodes, act, p1, p2), p1, p2)
        }
    };
    let (lo, hi) = (
        bounds.0.or(opt.k_min).unwrap_or(params.k_min),
        bounds.1.or(opt.k_max).unwrap_or(params.k_max),
    );
    let params = params.with_bounds(lo, hi);
    let surrogate = surrogate.with_bounds(lo, hi);
    let result = minimize(&params)?;
    let convexity = verify_convexity(&surrogate)?;
    eprintln!("k_star = {}", result.k_star);
    let report = OptimizeReport {
        model: model.to_string(),
        nodes: params.nodes,
        act_sum_bits: params.act_sum_bits,
        p1,
        p2,
        result: OptResult { convex_verified: convexity.is_convex(), ..result },
        convexity,
    };
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&report),
        OutputFormat::Csv => {
            let mut s = String::from("k,intra,inter,total\n");
            for p in &report.result.energy_curve {
                let _ = writeln!(s, "{},{},{},{}", p.k, p.intra, p.inter, p.total);
            }
            Ok(s)
        }
    }
}

fn cmd_map(cfg: &RunConfig, k: Option<u32>) -> Result<String, CliError> {
    let graph = load_graph(cfg)?;
    let k = mesh_for(k, cfg)?;
    let plan = map_gcn(&graph.dims(), u64::from(k), &cfg.hardware).map_err(|e| CliError::Config(e.to_string()))?;
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&plan),
        OutputFormat::Csv => Ok(format!(
            "k,adjacency_crossbars_per_ce,weight_crossbars_per_ce,tiles_per_ce,total_tiles,total_crossbars,chips_required,memory_bytes,utilization\n{},{},{},{},{},{},{},{},{}\n",
            plan.k,
            plan.crossbars_adjacency_per_ce,
            plan.crossbars_weights_per_ce(),
            plan.tiles_per_ce(),
            plan.total_tiles,
            plan.total_crossbars,
            plan.chips_required,
            plan.memory_bytes_used,
            plan.utilization
        )),
    }
}

fn dataset_traces(cfg: &RunConfig, graph: &Graph, topology: Topology) -> Result<Vec<Trace>, CliError> {
    let partition = partition_contiguous(graph, topology.num_routers()).map_err(ConfigError::from)?;
    let mut hw = cfg.hardware.clone();
    hw.noc = hw.noc.with_topology(topology);
    generate_traces_for(&graph.dims(), &partition, &hw, &cfg.run.trace).map_err(|e| CliError::Config(e.to_string()))
}

fn cmd_trace(cfg: &RunConfig, k: Option<u32>, layer: Option<u32>) -> Result<String, CliError> {
    let graph = load_graph(cfg)?;
    let (w, h) = mesh_dims_for(mesh_for(k, cfg)?);
    let mut traces = dataset_traces(cfg, &graph, Topology::mesh(w, h))?;
    if let Some(l) = layer {
        if l == 0 || l as usize > traces.len() {
            return Err(CliError::Config(format!("layer {l} outside 1..={}", traces.len())));
        }
        traces.retain(|t| t.layer == l);
    }
    for t in &traces {
        eprintln!("layer {}: {} packets, {} bits", t.layer, t.packets.len(), t.total_bits());
    }
    match cfg.format {
        Some(OutputFormat::Json) => json(&traces),
        _ => Ok(write_traces(&traces)),
    }
}

fn parse_mesh(spec: &str) -> Result<(u32, u32), CliError> {
    match parse_sizes(spec)?.as_slice() {
        [one] => Ok(*one),
        _ => Err(CliError::Config(format!("expected a single mesh size, got {spec:?}"))),
    }
}

fn cmd_simulate(
    cfg: &RunConfig,
    trace: Option<&Path>,
    mesh: Option<&str>,
    k: Option<u32>,
    cmesh: bool,
) -> Result<String, CliError> {
    let (w, h) = match (mesh, k.or(cfg.k)) {
        (Some(m), _) => parse_mesh(m)?,
        (None, Some(k)) => mesh_dims_for(k),
        (None, None) => (cfg.hardware.noc.topology.width(), cfg.hardware.noc.topology.height()),
    };
    let topology = if cmesh {
        Topology::Cmesh { width: w, height: h, express_span: 2 }
    } else {
        Topology::Mesh { width: w, height: h }
    };
    let traces = match trace {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            read_traces(file).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => dataset_traces(cfg, &load_graph(cfg)?, topology)?,
    };
    let noc = cfg.hardware.noc.with_topology(topology);
    let layers = traces
        .iter()
        .map(|t| {
            let report = simulate(&t.packets, &noc).map_err(|e| match e {
                crate::noc::NocError::RouterOutOfRange { .. } | crate::noc::NocError::InvalidConfig(_) => {
                    CliError::Config(e.to_string())
                }
                _ => CliError::Runtime(e.to_string()),
            })?;
            Ok(LayerNocReport { layer: t.layer, packets: t.packets.len() as u64, report })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = SimulateReport { topology, layers };
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&out),
        OutputFormat::Csv => {
            let mut s = String::from("layer,packets,total_cycles,avg_latency,max_latency,bit_hop_count,injected_flits\n");
            for l in &out.layers {
                let r = &l.report;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    l.layer, l.packets, r.total_cycles, r.avg_latency, r.max_latency, r.bit_hop_count, r.injected_flits
                );
            }
            Ok(s)
        }
    }
}

fn architecture(arch: ArchArg, k: u32) -> Architecture {
    match arch {
        ArchArg::Coin => Architecture::coin(k),
        ArchArg::Baseline => Architecture::Baseline,
        ArchArg::Cmesh => Architecture::cmesh(k),
    }
}

const REPORT_CSV_HEADER: &str = "dataset,architecture,k,noc,noc_simulated,compute_energy_j,intra_ce_energy_j,inter_ce_energy_j,total_energy_j,communication_share,latency_cycles,latency_s,edp_js,bit_hop_count\n";

fn report_csv_row(s: &mut String, r: &SimReport) {
    let _ = writeln!(
        s,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.dataset,
        r.architecture,
        r.k,
        r.noc,
        r.noc_simulated,
        r.compute_energy,
        r.intra_ce_energy,
        r.inter_ce_energy,
        r.total_energy,
        r.communication_share,
        r.latency_cycles,
        r.latency_seconds,
        r.edp,
        r.bit_hop_count
    );
}

fn cmd_compare(cfg: &RunConfig, k: Option<u32>, archs: Option<&[ArchArg]>) -> Result<String, CliError> {
    let graph = load_graph(cfg)?;
    let k = mesh_for(k, cfg)?;
    let archs: Vec<Architecture> = match (archs, &cfg.architectures) {
        (Some(a), _) => a.iter().map(|&a| architecture(a, k)).collect(),
        (None, Some(list)) => list.clone(),
        (None, None) => [ArchArg::Coin, ArchArg::Baseline, ArchArg::Cmesh]
            .into_iter()
            .map(|a| architecture(a, k))
            .collect(),
    };
    let mut reports = compare_architectures(&graph, &cfg.dataset()?.label(), &cfg.hardware, &archs, &cfg.run)?;
    let ts = timestamp(cfg);
    for r in &mut reports {
        r.timestamp = ts;
    }
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&reports),
        OutputFormat::Csv => {
            let mut s = String::from(REPORT_CSV_HEADER);
            reports.iter().for_each(|r| report_csv_row(&mut s, r));
            Ok(s)
        }
    }
}

fn cmd_sweep(cfg: &RunConfig, sizes: Option<&str>) -> Result<String, CliError> {
    let graph = load_graph(cfg)?;
    let spec = sizes.or(cfg.sizes.as_deref()).unwrap_or("3x3..10x10");
    let sizes = parse_sizes(spec)?;
    let sweep: MeshSweep = mesh_sweep(&graph, &cfg.dataset()?.label(), &cfg.hardware, &sizes, &cfg.run)?;
    let best = sweep.best_point();
    eprintln!("minimum communication energy at {}x{}", best.width, best.height);
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&sweep),
        OutputFormat::Csv => {
            let mut s = String::from("mesh,width,height,k,intra_ce_energy_j,inter_ce_energy_j,communication_energy_j,noc_cycles,bit_hop_count\n");
            for p in &sweep.points {
                let _ = writeln!(
                    s,
                    "{}x{},{},{},{},{},{},{},{},{}",
                    p.width,
                    p.height,
                    p.width,
                    p.height,
                    p.k,
                    p.intra_ce_energy,
                    p.inter_ce_energy,
                    p.communication_energy,
                    p.noc_cycles,
                    p.bit_hop_count
                );
            }
            Ok(s)
        }
    }
}

fn cmd_run(cfg: &RunConfig, k: Option<u32>, arch: ArchArg) -> Result<String, CliError> {
    let graph = load_graph(cfg)?;
    let k = mesh_for(k, cfg)?;
    let mut report = simulate_architecture(&graph, &cfg.dataset()?.label(), &cfg.hardware, architecture(arch, k), &cfg.run)?;
    report.timestamp = timestamp(cfg);
    match cfg.format.unwrap_or(OutputFormat::Json) {
        OutputFormat::Json => json(&report),
        OutputFormat::Csv => {
            let mut s = String::from("layer,compute_energy_j,intra_ce_energy_j,inter_ce_energy_j,total_energy_j,compute_cycles,noc_cycles,latency_cycles,latency_s,edp_js\n");
            for l in &report.layers {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    l.layer,
                    l.compute_energy,
                    l.intra_ce_energy,
                    l.inter_ce_energy,
                    l.total_energy,
                    l.compute_cycles,
                    l.noc_cycles,
                    l.latency_cycles,
                    l.latency_seconds,
                    l.edp
                );
            }
            let cycles: u64 = report.layers.iter().map(|l| l.compute_cycles).sum();
            let noc: u64 = report.layers.iter().map(|l| l.noc_cycles).sum();
            let _ = writeln!(
                s,
                "total,{},{},{},{},{},{},{},{},{}",
                report.compute_energy,
                report.intra_ce_energy,
                report.inter_ce_energy,
                report.total_energy,
                cycles,
                noc,
                report.latency_cycles,
                report.latency_seconds,
                report.edp
            );
            Ok(s)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let (cfg, text) = match command {
        Command::Optimize { common, uniform_p1, uniform_p2, act_sum, k_min, k_max, reference_k } => {
            let mut cfg = load_config(&common)?;
            if let Some(n) = common.nodes {
                cfg.optimize.nodes = Some(n);
            }
            let text = cmd_optimize(&cfg, uniform_p1.zip(uniform_p2), act_sum, (k_min, k_max), reference_k)?;
            (cfg, text)
        }
        Command::Map { common, k } => {
            let cfg = load_config(&common)?;
            let text = cmd_map(&cfg, k)?;
            (cfg, text)
        }
        Command::Trace { common, k, layer } => {
            let cfg = load_config(&common)?;
            let text = cmd_trace(&cfg, k, layer)?;
            (cfg, text)
        }
        Command::Simulate { common, trace, mesh, k, cmesh } => {
            let cfg = load_config(&common)?;
            let text = cmd_simulate(&cfg, trace.as_deref(), mesh.as_deref(), k, cmesh)?;
            (cfg, text)
        }
        Command::Compare { common, k, arch } => {
            let cfg = load_config(&common)?;
            let text = cmd_compare(&cfg, k, arch.as_deref())?;
            (cfg, text)
        }
        Command::Sweep { common, sizes } => {
            let cfg = load_config(&common)?;
            let text = cmd_sweep(&cfg, sizes.as_deref())?;
            (cfg, text)
        }
        Command::Run { common, k, arch } => {
            let cfg = load_config(&common)?;
            let text = cmd_run(&cfg, k, arch)?;
            (cfg, text)
        }
    };
    emit(&cfg, &text)
}

/// Parses `std::env::args`, runs the command and returns the exit code.
pub fn main() -> i32 {
    run(std::env::args_os())
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["coin-sim", "optimize", "--bogus"]), EXIT_CONFIG);
        assert_eq!(run(["coin-sim", "optimize", "--dataset", "nope"]), EXIT_CONFIG);
        assert_eq!(run(["coin-sim", "map"]), EXIT_CONFIG);
    }

    #[test]
    fn infeasible_bounds_exit_three() {
        let code = run([
            "coin-sim", "optimize", "--uniform-p1", "0.25", "--uniform-p2", "0.22", "--nodes", "6000",
            "--act-sum", "16", "--k-min", "50", "--k-max", "10",
        ]);
        assert_eq!(code, EXIT_INFEASIBLE);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "first").unwrap();
        write_atomic(&path, "second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("no/such/dir/out.json");
        assert!(write_atomic(&missing, "x").is_err());
    }
}
