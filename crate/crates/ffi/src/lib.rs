//! C ABI over `coin-sim`.
//!
//! Every fallible call returns a [`CoinStatus`]; on failure the message is
//! available from [`coin_last_error`] on the same thread. Handles returned
//! through out-pointers are owned by the caller and released with the
//! matching `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use coin_sim::dataflow::{mult_count, read_traces, Order};
use coin_sim::energy::{simulate_architecture, Architecture, RunOptions};
use coin_sim::graph::{preset, GcnDims, Graph};
use coin_sim::mapper::HardwareConfig;
use coin_sim::noc::{simulate, zero_load_latency, NocConfig, Topology};
use coin_sim::optimizer::{minimize, ObjectiveParams};
use coin_sim::SimReport;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Overflow = 4,
    Io = 5,
    Simulation = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinOrder {
    FeFirst = 0,
    AggFirst = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinArchKind {
    Coin = 0,
    Baseline = 1,
    Cmesh = 2,
}

/// `width`/`height` are ignored for the baseline; the express-link mesh
/// uses span 2.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CoinArchitecture {
    pub kind: CoinArchKind,
    pub width: u32,
    pub height: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CoinReportSummary {
    pub compute_energy: f64,
    pub intra_ce_energy: f64,
    pub inter_ce_energy: f64,
    pub total_energy: f64,
    pub communication_share: f64,
    pub latency_cycles: u64,
    pub latency_seconds: f64,
    pub edp: f64,
    pub bit_hop_count: u64,
}

/// Opaque graph handle.
pub struct CoinGraph {
    graph: Arc<Graph>,
}

/// Opaque simulation report handle.
pub struct CoinReport {
    report: SimReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(CoinStatus, String);

impl Failure {
    fn new(status: CoinStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CoinStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CoinStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(CoinStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(CoinStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

fn invalid(e: impl ToString) -> Failure {
    Failure::new(CoinStatus::InvalidArgument, e)
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn coin_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn coin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Synthesizes a preset graph (`cora`, `citeseer`, `pubmed`,
/// `extended-cora`, `nell`).
#[no_mangle]
pub unsafe extern "C" fn coin_graph_preset(
    name: *const c_char,
    seed: u64,
    out: *mut *mut CoinGraph,
) -> CoinStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = str_arg(name, "name")?;
        let graph = preset(name).and_then(|p| p.synthesize(seed)).map_err(invalid)?;
        *out = Box::into_raw(Box::new(CoinGraph { graph: Arc::new(graph) }));
        Ok(())
    })
}

/// Builds a graph from `num_edges` (u, v) pairs stored flat in `edges`.
#[no_mangle]
pub unsafe extern "C" fn coin_graph_from_edges(
    num_nodes: usize,
    edges: *const u32,
    num_edges: usize,
    feature_dims: *const usize,
    num_dims: usize,
    out: *mut *mut CoinGraph,
) -> CoinStatus {
    guard(|| {
        non_null(out, "out")?;
        let flat_len = num_edges
            .checked_mul(2)
            .ok_or_else(|| Failure::new(CoinStatus::Overflow, "edge count overflows"))?;
        let flat = slice_arg(edges, flat_len, "edges")?;
        let dims = slice_arg(feature_dims, num_dims, "feature_dims")?.to_vec();
        let pairs: Vec<(u32, u32)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let graph = Graph::new(num_nodes, pairs, dims).map_err(invalid)?;
        *out = Box::into_raw(Box::new(CoinGraph { graph: Arc::new(graph) }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn coin_graph_free(graph: *mut CoinGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

#[no_mangle]
pub unsafe extern "C" fn coin_graph_counts(
    graph: *const CoinGraph,
    out_nodes: *mut u64,
    out_edges: *mut u64,
) -> CoinStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out_nodes, "out_nodes")?;
        non_null(out_edges, "out_edges")?;
        let g = &(*graph).graph;
        *out_nodes = g.num_nodes() as u64;
        *out_edges = g.num_edges() as u64;
        Ok(())
    })
}

fn run_minimize(params: ObjectiveParams, out_k: *mut u32) -> Result<(), Failure> {
    let result = minimize(&params).map_err(|e| Failure::new(CoinStatus::Infeasible, e))?;
    unsafe { *out_k = result.k_star };
    Ok(())
}

/// Optimal CE count under uniform connection probabilities.
#[no_mangle]
pub unsafe extern "C" fn coin_optimize_uniform(
    nodes: u64,
    act_sum_bits: f64,
    p1: f64,
    p2: f64,
    k_min: u32,
    k_max: u32,
    out_k: *mut u32,
) -> CoinStatus {
    guard(|| {
        non_null(out_k, "out_k")?;
        run_minimize(ObjectiveParams::uniform(nodes, act_sum_bits, p1, p2).with_bounds(k_min, k_max), out_k)
    })
}

/// Optimal CE count with probabilities re-measured on `graph` at each k.
#[no_mangle]
pub unsafe extern "C" fn coin_optimize_graph(
    graph: *const CoinGraph,
    act_sum_bits: f64,
    k_min: u32,
    k_max: u32,
    out_k: *mut u32,
) -> CoinStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out_k, "out_k")?;
        let params = ObjectiveParams::from_graph((*graph).graph.clone(), act_sum_bits);
        run_minimize(params.with_bounds(k_min, k_max), out_k)
    })
}

/// Multiplications for a whole GCN; `COIN_STATUS_OVERFLOW` when the count
/// does not fit in 64 bits (see `coin_mult_count_wide`).
#[no_mangle]
pub unsafe extern "C" fn coin_mult_count(
    nodes: u64,
    feature_dims: *const u64,
    num_dims: usize,
    order: CoinOrder,
    out: *mut u64,
) -> CoinStatus {
    let mut lo = 0u64;
    let mut hi = 0u64;
    let status = coin_mult_count_wide(nodes, feature_dims, num_dims, order, &mut lo, &mut hi);
    if status != CoinStatus::Ok {
        return status;
    }
    guard(|| {
        non_null(out, "out")?;
        if hi != 0 {
            return Err(Failure::new(CoinStatus::Overflow, "count exceeds 64 bits"));
        }
        *out = lo;
        Ok(())
    })
}

/// 128-bit multiplication count split into low and high words.
#[no_mangle]
pub unsafe extern "C" fn coin_mult_count_wide(
    nodes: u64,
    feature_dims: *const u64,
    num_dims: usize,
    order: CoinOrder,
    out_lo: *mut u64,
    out_hi: *mut u64,
) -> CoinStatus {
    guard(|| {
        non_null(out_lo, "out_lo")?;
        non_null(out_hi, "out_hi")?;
        let dims = slice_arg(feature_dims, num_dims, "feature_dims")?.to_vec();
        if dims.len() < 2 {
            return Err(invalid("need at least two feature widths"));
        }
        let order = match order {
            CoinOrder::FeFirst => Order::FeFirst,
            CoinOrder::AggFirst => Order::AggFirst,
        };
        let n = mult_count(&GcnDims { num_nodes: nodes, feature_dims: dims }, order)
            .map_err(|e| Failure::new(CoinStatus::Overflow, e))?;
        *out_lo = n as u64;
        *out_hi = (n >> 64) as u64;
        Ok(())
    })
}

unsafe fn hardware_arg(json: *const c_char) -> Result<HardwareConfig, Failure> {
    let hw = if json.is_null() {
        HardwareConfig::default()
    } else {
        serde_json::from_str(str_arg(json, "hardware_json")?).map_err(invalid)?
    };
    hw.validate().map_err(invalid)?;
    Ok(hw)
}

/// Full pipeline for one architecture. `hardware_json` may be null for the
/// default hardware.
#[no_mangle]
pub unsafe extern "C" fn coin_run(
    graph: *const CoinGraph,
    architecture: CoinArchitecture,
    hardware_json: *const c_char,
    out: *mut *mut CoinReport,
) -> CoinStatus {
    guard(|| {
        non_null(graph, "graph")?;
        non_null(out, "out")?;
        let hw = hardware_arg(hardware_json)?;
        let (w, h) = (architecture.width, architecture.height);
        let arch = match architecture.kind {
            CoinArchKind::Coin => Architecture::Coin { width: w, height: h },
            CoinArchKind::Baseline => Architecture::Baseline,
            CoinArchKind::Cmesh => Architecture::Cmesh { width: w, height: h, express_span: 2 },
        };
        let report = simulate_architecture(&(*graph).graph, "ffi", &hw, arch, &RunOptions::default())
            .map_err(|e| Failure::new(CoinStatus::Simulation, e))?;
        *out = Box::into_raw(Box::new(CoinReport { report }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn coin_report_free(report: *mut CoinReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

#[no_mangle]
pub unsafe extern "C" fn coin_report_summary(
    report: *const CoinReport,
    out: *mut CoinReportSummary,
) -> CoinStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        let r = &(*report).report;
        *out = CoinReportSummary {
            compute_energy: r.compute_energy,
            intra_ce_energy: r.intra_ce_energy,
            inter_ce_energy: r.inter_ce_energy,
            total_energy: r.total_energy,
            communication_share: r.communication_share,
            latency_cycles: r.latency_cycles,
            latency_seconds: r.latency_seconds,
            edp: r.edp,
            bit_hop_count: r.bit_hop_count,
        };
        Ok(())
    })
}

/// JSON rendering of the report; release with `coin_string_free`.
#[no_mangle]
pub unsafe extern "C" fn coin_report_to_json(
    report: *const CoinReport,
    out: *mut *mut c_char,
) -> CoinStatus {
    guard(|| {
        non_null(report, "report")?;
        non_null(out, "out")?;
        let text = serde_json::to_string(&(*report).report).map_err(|e| Failure::new(CoinStatus::Internal, e))?;
        *out = CString::new(text).map_err(|e| Failure::new(CoinStatus::Internal, e))?.into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn coin_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Simulates every layer of a trace file on a `width x height` mesh and
/// reports the summed drain cycles.
#[no_mangle]
pub unsafe extern "C" fn coin_simulate_trace_file(
    path: *const c_char,
    width: u32,
    height: u32,
    out_total_cycles: *mut u64,
) -> CoinStatus {
    guard(|| {
        non_null(out_total_cycles, "out_total_cycles")?;
        let path = str_arg(path, "path")?;
        let file = std::fs::File::open(path).map_err(|e| Failure::new(CoinStatus::Io, format!("{path}: {e}")))?;
        let traces = read_traces(file).map_err(invalid)?;
        let cfg = NocConfig::default().with_topology(Topology::mesh(width, height));
        let mut total = 0u64;
        for t in &traces {
            total += simulate(&t.packets, &cfg)
                .map_err(|e| Failure::new(CoinStatus::Simulation, e))?
                .total_cycles;
        }
        *out_total_cycles = total;
        Ok(())
    })
}

/// Contention-free packet latency on a default-parameter mesh.
#[no_mangle]
pub unsafe extern "C" fn coin_zero_load_latency(
    size_bits: u64,
    src: u32,
    dst: u32,
    width: u32,
    height: u32,
    out_cycles: *mut u64,
) -> CoinStatus {
    guard(|| {
        non_null(out_cycles, "out_cycles")?;
        let cfg = NocConfig::default().with_topology(Topology::mesh(width, height));
        cfg.validate().map_err(invalid)?;
        cfg.topology.check(src as usize).map_err(invalid)?;
        cfg.topology.check(dst as usize).map_err(invalid)?;
        *out_cycles = zero_load_latency(size_bits, src as usize, dst as usize, &cfg);
        Ok(())
    })
}
