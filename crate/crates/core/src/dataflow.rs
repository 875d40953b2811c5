//! Layer-wise GCN execution, multiplication counts and inter-CE trace
//! generation.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GcnDims, Graph, Partition};
use crate::mapper::HardwareConfig;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DataflowError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("accumulator overflow in layer {layer}")]
    Overflow { layer: usize },
    #[error("value {value} outside the {bits}-bit quantization range of {what}")]
    Quantization {
        what: &'static str,
        value: i64,
        bits: u32,
    },
    #[error("multiplication count overflows 128 bits")]
    CountOverflow,
    #[error("partition has {got} CEs, hardware expects {expected}")]
    PartitionMismatch { got: usize, expected: usize },
    #[error("trace line {line}: {msg}")]
    TraceFormat { line: usize, msg: String },
    #[error("trace io: {0}")]
    Io(String),
}

/// Dense row-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self, DataflowError> {
        if data.len() != rows * cols {
            return Err(DataflowError::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn values(&self) -> &[i64] {
        &self.data
    }

    /// Exact product with 128-bit accumulation; overflow of the `i64`
    /// result is reported, never wrapped.
    pub fn checked_mul(&self, rhs: &IntMatrix, layer: usize) -> Result<IntMatrix, DataflowError> {
        if self.cols != rhs.rows {
            return Err(DataflowError::Dimension(format!(
                "layer {layer}: {}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        let mut acc = vec![0i128; rhs.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let lhs = self.get(r, k);
                if lhs == 0 {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (a, &w) in acc.iter_mut().zip(row) {
                    *a = a
                        .checked_add(i128::from(lhs) * i128::from(w))
                        .ok_or(DataflowError::Overflow { layer })?;
                }
            }
            for (c, &a) in acc.iter().enumerate() {
                out.data[r * rhs.cols + c] =
                    i64::try_from(a).map_err(|_| DataflowError::Overflow { layer })?;
            }
        }
        Ok(out)
    }

    fn relu_in_place(&mut self) {
        self.data.iter_mut().for_each(|v| *v = (*v).max(0));
    }
}

/// Adjacency, input features and per-layer weights of one inference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTensors {
    pub adjacency: IntMatrix,
    pub features: IntMatrix,
    pub weights: Vec<IntMatrix>,
}

impl LayerTensors {
    pub fn new(
        adjacency: IntMatrix,
        features: IntMatrix,
        weights: Vec<IntMatrix>,
    ) -> Result<Self, DataflowError> {
        let n = adjacency.rows();
        if adjacency.cols() != n {
            return Err(DataflowError::Dimension("adjacency must be square".into()));
        }
        if features.rows() != n {
            return Err(DataflowError::Dimension(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        if weights.is_empty() {
            return Err(DataflowError::Dimension("no layers".into()));
        }
        let mut width = features.cols();
        for (l, w) in weights.iter().enumerate() {
            if w.rows() != width {
                return Err(DataflowError::Dimension(format!(
                    "layer {}: weight has {} rows, input width is {width}",
                    l + 1,
                    w.rows()
                )));
            }
            width = w.cols();
        }
        Ok(Self { adjacency, features, weights })
    }

    /// Binary adjacency of `graph`, optionally with self-loops (`A + I`).
    pub fn adjacency_of(graph: &Graph, self_loops: bool) -> IntMatrix {
        let n = graph.num_nodes();
        let mut a = if self_loops { IntMatrix::identity(n) } else { IntMatrix::zeros(n, n) };
        for &(u, v) in graph.edges() {
            a.set(u as usize, v as usize, 1);
            a.set(v as usize, u as usize, 1);
        }
        a
    }

    /// Checks inputs against unsigned activation and signed weight ranges.
    pub fn check_quantization(&self, hw: &HardwareConfig) -> Result<(), DataflowError> {
        let act_max = (1i64 << hw.activation_bits) - 1;
        if let Some(&v) = self.features.values().iter().find(|&&v| v < 0 || v > act_max) {
            return Err(DataflowError::Quantization {
                what: "features",
                value: v,
                bits: hw.activation_bits,
            });
        }
        let w_max = (1i64 << (hw.weight_bits - 1)) - 1;
        let w_min = -(1i64 << (hw.weight_bits - 1));
        for w in &self.weights {
            if let Some(&v) = w.values().iter().find(|&&v| v < w_min || v > w_max) {
                return Err(DataflowError::Quantization {
                    what: "weights",
                    value: v,
                    bits: hw.weight_bits,
                });
            }
        }
        let adj_max = (1i64 << hw.adjacency_bits.max(1)) - 1;
        if let Some(&v) = self.adjacency.values().iter().find(|&&v| v < 0 || v > adj_max) {
            return Err(DataflowError::Quantization {
                what: "adjacency",
                value: v,
                bits: hw.adjacency_bits,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    /// `A (X W)`: feature extraction, then aggregation.
    FeFirst,
    /// `(A X) W`.
    AggFirst,
}

/// Runs every layer; ReLU after each layer except the last.
pub fn infer(tensors: &LayerTensors, order: Order) -> Result<IntMatrix, DataflowError> {
    let layers = tensors.weights.len();
    let mut x = tensors.features.clone();
    for (idx, w) in tensors.weights.iter().enumerate() {
        let layer = idx + 1;
        let mut out = match order {
            Order::FeFirst => {
                let z = x.checked_mul(w, layer)?;
                tensors.adjacency.checked_mul(&z, layer)?
            }
            Order::AggFirst => {
                let ax = tensors.adjacency.checked_mul(&x, layer)?;
                ax.checked_mul(w, layer)?
            }
        };
        if layer < layers {
            out.relu_in_place();
        }
        x = out;
    }
    Ok(x)
}

/// Multiplications for one layer with input width `a_in` and output width `a_out`.
pub fn layer_mult_count(n: u64, a_in: u64, a_out: u64, order: Order) -> Result<u128, DataflowError> {
    let (n, a_in, a_out) = (u128::from(n), u128::from(a_in), u128::from(a_out));
    let mul = |a: u128, b: u128| a.checked_mul(b).ok_or(DataflowError::CountOverflow);
    let fe = mul(mul(n, a_in)?, a_out)?;
    let agg = match order {
        Order::FeFirst => mul(mul(n, n)?, a_out)?,
        Order::AggFirst => mul(mul(n, n)?, a_in)?,
    };
    fe.checked_add(agg).ok_or(DataflowError::CountOverflow)
}

pub fn mult_count(dims: &GcnDims, order: Order) -> Result<u128, DataflowError> {
    dims.feature_dims.windows(2).try_fold(0u128, |acc, w| {
        acc.checked_add(layer_mult_count(dims.num_nodes, w[0], w[1], order)?)
            .ok_or(DataflowError::CountOverflow)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub layer: u32,
    pub src: u32,
    pub dst: u32,
    pub size_bits: u64,
    pub gen_cycle: u64,
}

/// Inter-CE packets of one layer, in nondecreasing `gen_cycle` order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub layer: u32,
    pub packets: Vec<Packet>,
}

impl Trace {
    pub fn total_bits(&self) -> u64 {
        self.packets.iter().map(|p| p.size_bits).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficPolicy {
    /// Every CE sends its whole output slice to every other CE.
    #[default]
    Broadcast,
    /// Only the activations crossing cut edges are sent.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    pub policy: TrafficPolicy,
    pub max_packet_bits: u64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { policy: TrafficPolicy::Broadcast, max_packet_bits: 512 }
    }
}

/// Bits CE `src` sends to CE `dst` after layer `layer` (1-based).
pub fn pair_payload_bits(
    dims: &GcnDims,
    partition: &Partition,
    layer: usize,
    src: usize,
    dst: usize,
    hw: &HardwareConfig,
    policy: TrafficPolicy,
) -> u64 {
    if src == dst || layer >= dims.feature_dims.len() - 1 {
        return 0;
    }
    let per_node = dims.feature_dims[layer] * u64::from(hw.activation_bits);
    match policy {
        // Each CE's output buffer slot is sized for ceil(N/k) nodes.
        TrafficPolicy::Broadcast => dims.num_nodes.div_ceil(partition.k as u64) * per_node,
        TrafficPolicy::Sparse => partition.edge_counts.inter[src][dst] * per_node,
    }
}

/// One trace per layer. The final layer's output is not forwarded, so its
/// trace is empty.
///
/// Each CE injects back to back from cycle 0 of the layer's communication
/// phase, round-robin over destinations starting at its right neighbour in
/// index order. `gen_cycle` is the serialization offset at the source.
pub fn generate_traces(
    graph: &Graph,
    partition: &Partition,
    hw: &HardwareConfig,
    options: &TraceOptions,
) -> Result<Vec<Trace>, DataflowError> {
    let expected = hw.noc.topology.num_routers();
    if partition.k != expected {
        return Err(DataflowError::PartitionMismatch { got: partition.k, expected });
    }
    generate_traces_for(&graph.dims(), partition, hw, options)
}

/// As [`generate_traces`] without tying `k` to the configured topology.
pub fn generate_traces_for(
    dims: &GcnDims,
    partition: &Partition,
    hw: &HardwareConfig,
    options: &TraceOptions,
) -> Result<Vec<Trace>, DataflowError> {
    if options.max_packet_bits == 0 {
        return Err(DataflowError::Dimension("max_packet_bits must be positive".into()));
    }
    let k = partition.k;
    let bus = u64::from(hw.noc.bus_width_bits);
    let layers = dims.num_layers();
    let mut traces = Vec::with_capacity(layers);
    for layer in 1..=layers {
        let mut packets = Vec::new();
        for src in 0..k {
            // Packet sizes per destination, in round-robin order.
            let mut queues: Vec<(usize, u64)> = (1..k)
                .map(|off| (src + off) % k)
                .map(|dst| {
                    (dst, pair_payload_bits(dims, partition, layer, src, dst, hw, options.policy))
                })
                .filter(|&(_, bits)| bits > 0)
                .collect();
            let mut cycle = 0u64;
            while !queues.is_empty() {
                for (dst, remaining) in queues.iter_mut() {
                    let size = (*remaining).min(options.max_packet_bits);
                    *remaining -= size;
                    packets.push(Packet {
                        layer: layer as u32,
                        src: src as u32,
                        dst: *dst as u32,
                        size_bits: size,
                        gen_cycle: cycle,
                    });
                    cycle += size.div_ceil(bus);
                }
                queues.retain(|&(_, r)| r > 0);
            }
        }
        packets.sort_by_key(|p| (p.gen_cycle, p.src));
        traces.push(Trace { layer: layer as u32, packets });
    }
    Ok(traces)
}

pub const TRACE_HEADER: &str = "# coin-trace v1: layer src dst size_bits gen_cycle";

pub fn write_traces(traces: &[Trace]) -> String {
    let mut out = String::with_capacity(64 + traces.iter().map(|t| t.packets.len() * 24).sum::<usize>());
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for p in traces.iter().flat_map(|t| &t.packets) {
        let _ = writeln!(out, "{} {} {} {} {}", p.layer, p.src, p.dst, p.size_bits, p.gen_cycle);
    }
    out
}

/// Parses the text trace format, grouping packets by layer.
pub fn read_traces(reader: impl Read) -> Result<Vec<Trace>, DataflowError> {
    let mut lines = BufReader::new(reader).lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == TRACE_HEADER => {}
        Some(Ok(h)) => {
            return Err(DataflowError::TraceFormat { line: 1, msg: format!("bad header {h:?}") })
        }
        Some(Err(e)) => return Err(DataflowError::Io(e.to_string())),
        None => return Err(DataflowError::TraceFormat { line: 1, msg: "missing header".into() }),
    }
    let mut traces: Vec<Trace> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| DataflowError::Io(e.to_string()))?;
        let content = line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<u64> = content
            .split_whitespace()
            .map(|f| f.parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|e| DataflowError::TraceFormat { line: line_no, msg: e.to_string() })?;
        let [layer, src, dst, size_bits, gen_cycle] = fields[..] else {
            return Err(DataflowError::TraceFormat {
                line: line_no,
                msg: format!("expected 5 fields, got {}", fields.len()),
            });
        };
        if size_bits == 0 {
            return Err(DataflowError::TraceFormat { line: line_no, msg: "zero-size packet".into() });
        }
        let packet = Packet {
            layer: layer as u32,
            src: src as u32,
            dst: dst as u32,
            size_bits,
            gen_cycle,
        };
        match traces.iter_mut().find(|t| t.layer == packet.layer) {
            Some(t) => t.packets.push(packet),
            None => traces.push(Trace { layer: packet.layer, packets: vec![packet] }),
        }
    }
    for t in &mut traces {
        t.packets.sort_by_key(|p| p.gen_cycle);
    }
    traces.sort_by_key(|t| t.layer);
    Ok(traces)
}
