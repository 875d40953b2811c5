//! Graph model, dataset presets, synthetic generation and CE partitioning.
//!
//! Edges are stored undirected and normalized as `(u, v)` with `u < v`.
//! Published dataset tables count directed edges, so presets expose both.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: expected two whitespace-separated node indices, got {content:?}")]
    Malformed { line: usize, content: String },
    #[error("line {line}: node index {index} out of range for {num_nodes} nodes")]
    IndexOutOfRange {
        line: usize,
        index: u64,
        num_nodes: usize,
    },
    #[error("line {line}: self-loop on node {node}")]
    SelfLoop { line: usize, node: u32 },
    #[error("edge list contains no edges")]
    Empty,
    #[error("edge ({u}, {v}) is invalid for a graph with {num_nodes} nodes")]
    InvalidEdge { u: u32, v: u32, num_nodes: usize },
    #[error("graph needs at least one node")]
    NoNodes,
    #[error("feature dimensions must list at least two positive widths, got {0:?}")]
    FeatureDims(Vec<usize>),
    #[error("unknown dataset preset {0:?} (expected cora, citeseer, pubmed, extended-cora or nell)")]
    UnknownPreset(String),
    #[error("{requested} edges requested but a {num_nodes}-node simple graph has at most {max}")]
    InfeasibleEdgeCount {
        requested: u64,
        num_nodes: usize,
        max: u64,
    },
    #[error("CE count {k} out of range 1..={num_nodes}")]
    CeCountOutOfRange { k: usize, num_nodes: usize },
    #[error("assignment covers {got} nodes, graph has {expected}")]
    AssignmentLength { got: usize, expected: usize },
    #[error("node {node} assigned to CE {ce}, but only {k} CEs exist")]
    AssignmentOutOfRange { node: usize, ce: u32, k: usize },
    #[error("reading edge list: {0}")]
    Io(String),
}

/// Node count plus per-layer feature widths; everything the cost models need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnDims {
    pub num_nodes: u64,
    /// `a(1..=L+1)`: input features, hidden widths, output labels.
    pub feature_dims: Vec<u64>,
}

impl GcnDims {
    pub fn num_layers(&self) -> usize {
        self.feature_dims.len().saturating_sub(1)
    }

    /// Sum of layer output widths whose activations are exchanged between
    /// nodes: `a(2) + ... + a(L)`. The final layer's output is not forwarded.
    pub fn exchanged_width_sum(&self) -> u64 {
        let l = self.num_layers();
        if l < 2 {
            return 0;
        }
        self.feature_dims[1..l].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(u32, u32)>,
    feature_dims: Vec<usize>,
}

impl Graph {
    /// Builds a graph, normalizing and deduplicating the edge set.
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
        feature_dims: Vec<usize>,
    ) -> Result<Self, GraphError> {
        if num_nodes == 0 {
            return Err(GraphError::NoNodes);
        }
        if feature_dims.len() < 2 || feature_dims.contains(&0) {
            return Err(GraphError::FeatureDims(feature_dims));
        }
        let mut normalized = Vec::new();
        for (u, v) in edges {
            if u == v || u as usize >= num_nodes || v as usize >= num_nodes {
                return Err(GraphError::InvalidEdge { u, v, num_nodes });
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Self {
            num_nodes,
            edges: normalized,
            feature_dims,
        })
    }

    /// The eight-node, two-CE illustration graph: nodes 0-3 and 4-7 form the
    /// two CEs, with four intra edges in the first, two in the second and
    /// four crossing edges.
    pub fn canonical_eight_node(feature_dims: Vec<usize>) -> Result<Self, GraphError> {
        let one_based = [
            (1, 2),
            (1, 3),
            (2, 3),
            (3, 4),
            (6, 7),
            (7, 8),
            (2, 5),
            (3, 6),
            (3, 7),
            (3, 8),
        ];
        Self::new(8, one_based.iter().map(|&(u, v)| (u - 1, v - 1)), feature_dims)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Undirected edge count.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Directed edge count, the convention used by published dataset tables.
    pub fn num_directed_edges(&self) -> usize {
        2 * self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn feature_dims(&self) -> &[usize] {
        &self.feature_dims
    }

    pub fn num_layers(&self) -> usize {
        self.feature_dims.len() - 1
    }

    pub fn dims(&self) -> GcnDims {
        GcnDims {
            num_nodes: self.num_nodes as u64,
            feature_dims: self.feature_dims.iter().map(|&d| d as u64).collect(),
        }
    }
}

/// Row of the dataset table: counts for one benchmark graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub num_nodes: usize,
    /// Directed edge count as published.
    pub num_edges: usize,
    pub num_features: usize,
    pub num_labels: usize,
    pub num_layers: usize,
    pub hidden_width: usize,
}

pub const PRESET_NAMES: [&str; 5] = ["cora", "citeseer", "pubmed", "extended-cora", "nell"];

const PRESETS: [DatasetPreset; 5] = [
    DatasetPreset {
        name: "cora",
        num_nodes: 2708,
        num_edges: 10556,
        num_features: 1433,
        num_labels: 7,
        num_layers: 2,
        hidden_width: 16,
    },
    DatasetPreset {
        name: "citeseer",
        num_nodes: 3327,
        num_edges: 9228,
        num_features: 3703,
        num_labels: 6,
        num_layers: 2,
        hidden_width: 16,
    },
    DatasetPreset {
        name: "pubmed",
        num_nodes: 19717,
        num_edges: 88651,
        num_features: 500,
        num_labels: 3,
        num_layers: 2,
        hidden_width: 16,
    },
    DatasetPreset {
        name: "extended-cora",
        num_nodes: 19793,
        num_edges: 130622,
        num_features: 8710,
        num_labels: 70,
        num_layers: 2,
        hidden_width: 16,
    },
    DatasetPreset {
        name: "nell",
        num_nodes: 65755,
        num_edges: 266144,
        num_features: 5414,
        num_labels: 210,
        num_layers: 2,
        hidden_width: 16,
    },
];

pub fn preset(name: &str) -> Result<DatasetPreset, GraphError> {
    let key = name.trim().to_ascii_lowercase().replace('_', "-");
    PRESETS
        .iter()
        .find(|p| p.name == key || (key == "extcora" && p.name == "extended-cora"))
        .copied()
        .ok_or_else(|| GraphError::UnknownPreset(name.to_string()))
}

pub fn all_presets() -> &'static [DatasetPreset] {
    &PRESETS
}

impl DatasetPreset {
    /// `[features, hidden, ..., hidden, labels]`, length `num_layers + 1`.
    pub fn feature_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.num_layers + 1);
        dims.push(self.num_features);
        dims.extend(std::iter::repeat_n(self.hidden_width, self.num_layers - 1));
        dims.push(self.num_labels);
        dims
    }

    /// Undirected edge count. Pubmed's published count is odd; it is rounded down.
    pub fn undirected_edges(&self) -> usize {
        self.num_edges / 2
    }

    pub fn dims(&self) -> GcnDims {
        GcnDims {
            num_nodes: self.num_nodes as u64,
            feature_dims: self.feature_dims().into_iter().map(|d| d as u64).collect(),
        }
    }

    /// Synthetic stand-in with the preset's node, edge and width counts.
    pub fn synthesize(&self, seed: u64) -> Result<Graph, GraphError> {
        generate_synthetic(
            self.num_nodes,
            self.undirected_edges() as u64,
            self.feature_dims(),
            seed,
        )
    }
}

impl fmt::Display for DatasetPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} nodes, {} edges, {} features, {} labels, {} layers",
            self.name,
            self.num_nodes,
            self.num_edges,
            self.num_features,
            self.num_labels,
            self.num_layers
        )
    }
}

/// Parses an edge list: one `u v` pair per line, 0-indexed, `#` comments.
pub fn parse_edge_list(
    text: &str,
    num_nodes: usize,
    feature_dims: Vec<usize>,
) -> Result<Graph, GraphError> {
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut fields = content.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(GraphError::Malformed {
                line,
                content: content.to_string(),
            });
        };
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| GraphError::Malformed {
                line,
                content: content.to_string(),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        for index in [u, v] {
            if index >= num_nodes as u64 {
                return Err(GraphError::IndexOutOfRange {
                    line,
                    index,
                    num_nodes,
                });
            }
        }
        if u == v {
            return Err(GraphError::SelfLoop {
                line,
                node: u as u32,
            });
        }
        edges.push((u as u32, v as u32));
    }
    if edges.is_empty() {
        return Err(GraphError::Empty);
    }
    Graph::new(num_nodes, edges, feature_dims)
}

pub fn load_edge_list(
    path: impl AsRef<Path>,
    num_nodes: usize,
    feature_dims: Vec<usize>,
) -> Result<Graph, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text, num_nodes, feature_dims)
}

/// Uniformly random simple graph with exactly `num_edges` edges.
pub fn generate_synthetic(
    num_nodes: usize,
    num_edges: u64,
    feature_dims: Vec<usize>,
    seed: u64,
) -> Result<Graph, GraphError> {
    if num_nodes == 0 {
        return Err(GraphError::NoNodes);
    }
    let n = num_nodes as u64;
    let max = n * (n - 1) / 2;
    if num_edges > max {
        return Err(GraphError::InfeasibleEdgeCount {
            requested: num_edges,
            num_nodes,
            max,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Dense requests sample the complement so rejection stays cheap.
    let complement = num_edges > max / 2;
    let target = if complement { max - num_edges } else { num_edges };
    let mut chosen: HashSet<(u32, u32)> = HashSet::with_capacity(target as usize);
    let mut order = Vec::with_capacity(target as usize);
    while (chosen.len() as u64) < target {
        let u = rng.random_range(0..num_nodes) as u32;
        let v = rng.random_range(0..num_nodes) as u32;
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if chosen.insert(e) {
            order.push(e);
        }
    }
    let edges: Vec<(u32, u32)> = if complement {
        let mut all = Vec::with_capacity(num_edges as usize);
        for u in 0..num_nodes as u32 {
            for v in u + 1..num_nodes as u32 {
                if !chosen.contains(&(u, v)) {
                    all.push((u, v));
                }
            }
        }
        all
    } else {
        order
    };
    Graph::new(num_nodes, edges, feature_dims)
}

/// Undirected edge counts inside each CE and between each CE pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub intra: Vec<u64>,
    /// Symmetric, zero diagonal.
    pub inter: Vec<Vec<u64>>,
}

impl EdgeCounts {
    pub fn intra_total(&self) -> u64 {
        self.intra.iter().sum()
    }

    /// Edges crossing between distinct CEs, each counted once.
    pub fn cut_total(&self) -> u64 {
        let k = self.intra.len();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| self.inter[i][j])
            .sum()
    }
}

pub fn count_edges(graph: &Graph, assignment: &[u32], k: usize) -> EdgeCounts {
    let mut intra = vec![0u64; k];
    let mut inter = vec![vec![0u64; k]; k];
    for &(u, v) in graph.edges() {
        let (a, b) = (assignment[u as usize] as usize, assignment[v as usize] as usize);
        if a == b {
            intra[a] += 1;
        } else {
            inter[a][b] += 1;
            inter[b][a] += 1;
        }
    }
    EdgeCounts { intra, inter }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub k: usize,
    pub assignment: Vec<u32>,
    pub ce_sizes: Vec<usize>,
    pub p1: Vec<f64>,
    pub p2: Vec<Vec<f64>>,
    pub edge_counts: EdgeCounts,
}

impl Partition {
    /// Builds a partition from an explicit node → CE assignment.
    pub fn from_assignment(
        graph: &Graph,
        assignment: Vec<u32>,
        k: usize,
    ) -> Result<Self, GraphError> {
        validate_assignment(graph, &assignment, k)?;
        let mut ce_sizes = vec![0usize; k];
        for &ce in &assignment {
            ce_sizes[ce as usize] += 1;
        }
        let edge_counts = count_edges(graph, &assignment, k);
        let (p1, p2) = probabilities_from_counts(&edge_counts, &ce_sizes);
        Ok(Self {
            k,
            assignment,
            ce_sizes,
            p1,
            p2,
            edge_counts,
        })
    }

    pub fn mean_p1(&self) -> f64 {
        self.p1.iter().sum::<f64>() / self.k as f64
    }

    /// Mean over ordered CE pairs `i != j`; zero for a single CE.
    pub fn mean_p2(&self) -> f64 {
        if self.k < 2 {
            return 0.0;
        }
        let sum: f64 = self.p2.iter().flatten().sum();
        sum / (self.k * (self.k - 1)) as f64
    }
}

fn validate_assignment(graph: &Graph, assignment: &[u32], k: usize) -> Result<(), GraphError> {
    if assignment.len() != graph.num_nodes() {
        return Err(GraphError::AssignmentLength {
            got: assignment.len(),
            expected: graph.num_nodes(),
        });
    }
    if let Some((node, &ce)) = assignment.iter().enumerate().find(|(_, &c)| c as usize >= k) {
        return Err(GraphError::AssignmentOutOfRange { node, ce, k });
    }
    Ok(())
}

/// Node `i` goes to CE `floor(i * k / N)`: contiguous, balanced blocks.
pub fn contiguous_assignment(num_nodes: usize, k: usize) -> Vec<u32> {
    (0..num_nodes)
        .map(|i| ((i as u128 * k as u128) / num_nodes as u128) as u32)
        .collect()
}

pub fn partition_contiguous(graph: &Graph, k: usize) -> Result<Partition, GraphError> {
    if k == 0 || k > graph.num_nodes() {
        return Err(GraphError::CeCountOutOfRange {
            k,
            num_nodes: graph.num_nodes(),
        });
    }
    Partition::from_assignment(graph, contiguous_assignment(graph.num_nodes(), k), k)
}

fn probabilities_from_counts(counts: &EdgeCounts, sizes: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let k = sizes.len();
    let p1 = (0..k)
        .map(|m| {
            let n = sizes[m] as f64;
            if sizes[m] <= 1 {
                0.0
            } else {
                2.0 * counts.intra[m] as f64 / (n * (n - 1.0))
            }
        })
        .collect();
    let p2 = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| {
                    let denom = sizes[i] as f64 * sizes[j] as f64;
                    if i == j || denom == 0.0 {
                        0.0
                    } else {
                        counts.inter[i][j] as f64 / denom
                    }
                })
                .collect()
        })
        .collect();
    (p1, p2)
}

/// Intra-CE (`p1`) and inter-CE (`p2`) connection probabilities.
///
/// `p1_m = 2 E_m / (n_m (n_m - 1))` counts ordered pairs, matching the
/// `(N/k)(N/k - 1)` multiplier of the intra-CE energy term.
pub fn estimate_probabilities(
    graph: &Graph,
    assignment: &[u32],
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), GraphError> {
    validate_assignment(graph, assignment, k)?;
    let mut sizes = vec![0usize; k];
    for &ce in assignment {
        sizes[ce as usize] += 1;
    }
    Ok(probabilities_from_counts(
        &count_edges(graph, assignment, k),
        &sizes,
    ))
}

/// Bidirectional traffic volumes in bits for one exchange of `per_edge_bits`
/// along every edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommVolume {
    pub intra: Vec<u64>,
    pub inter: Vec<Vec<u64>>,
}

impl CommVolume {
    pub fn intra_total(&self) -> u64 {
        self.intra.iter().sum()
    }

    pub fn inter_total(&self) -> u64 {
        let k = self.intra.len();
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .map(|(i, j)| self.inter[i][j])
            .sum()
    }
}

pub fn communication_volume(
    graph: &Graph,
    assignment: &[u32],
    k: usize,
    per_edge_bits: u64,
) -> Result<CommVolume, GraphError> {
    validate_assignment(graph, assignment, k)?;
    let counts = count_edges(graph, assignment, k);
    Ok(CommVolume {
        intra: counts.intra.iter().map(|e| 2 * e * per_edge_bits).collect(),
        inter: counts
            .inter
            .iter()
            .map(|row| row.iter().map(|e| 2 * e * per_edge_bits).collect())
            .collect(),
    })
}
