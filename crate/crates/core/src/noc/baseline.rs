use serde::{Deserialize, Serialize};

use super::topology::Topology;
use super::NocConfig;
use crate::dataflow::{Packet, Trace};
use crate::graph::Graph;

/// Largest baseline mesh that is simulated flit by flit.
pub const BASELINE_SIM_MAX_ROUTERS: usize = 4096;

/// Square mesh with one router per graph node, nodes placed row-major.
pub fn baseline_topology(num_nodes: usize) -> Topology {
    let n = num_nodes.max(1);
    let mut side = (n as f64).sqrt() as usize;
    while side * side < n {
        side += 1;
    }
    Topology::mesh(side as u32, side as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineEstimate {
    pub side: u32,
    pub bit_hop_count: u64,
    pub bit_link_length: u64,
    pub bit_router_traversals: u64,
    /// Lower bound on drain cycles: the busiest link or endpoint, or the
    /// longest zero-load latency, whichever is larger.
    pub est_cycles: u64,
}

fn manhattan(t: &Topology, u: usize, v: usize) -> u64 {
    let ((ux, uy), (vx, vy)) = (t.coords(u), t.coords(v));
    u64::from(ux.abs_diff(vx) + uy.abs_diff(vy))
}

fn message_flits(bits: u64, max_packet_bits: u64, cfg: &NocConfig) -> u64 {
    let full = bits / max_packet_bits;
    let rest = bits % max_packet_bits;
    full * cfg.flits(max_packet_bits) + cfg.flits(rest)
}

/// One message of `per_edge_bits` in each direction of every edge, for one
/// layer, without cycle simulation.
pub fn baseline_analytic(
    graph: &Graph,
    per_edge_bits: u64,
    max_packet_bits: u64,
    cfg: &NocConfig,
) -> BaselineEstimate {
    let t = baseline_topology(graph.num_nodes());
    let cfg = cfg.with_topology(t);
    let side = t.width() as usize;
    let flits = message_flits(per_edge_bits, max_packet_bits.max(1), &cfg);

    // Directed link loads via difference arrays along rows (X) and columns (Y).
    let mut east = vec![0i64; side * (side + 1)];
    let mut west = vec![0i64; side * (side + 1)];
    let mut north = vec![0i64; side * (side + 1)];
    let mut south = vec![0i64; side * (side + 1)];
    let mut endpoint = vec![0u64; side * side];
    let mut distance_sum = 0u64;
    let mut max_distance = 0u64;
    let f = flits as i64;
    for &(a, b) in graph.edges() {
        for (u, v) in [(a as usize, b as usize), (b as usize, a as usize)] {
            let ((ux, uy), (vx, vy)) = (t.coords(u), t.coords(v));
            let (ux, uy, vx, vy) = (ux as usize, uy as usize, vx as usize, vy as usize);
            let row = uy * (side + 1);
            if vx > ux {
                east[row + ux] += f;
                east[row + vx] -= f;
            } else if vx < ux {
                west[row + vx] += f;
                west[row + ux] -= f;
            }
            let col = vx * (side + 1);
            if vy > uy {
                north[col + uy] += f;
                north[col + vy] -= f;
            } else if vy < uy {
                south[col + vy] += f;
                south[col + uy] -= f;
            }
            endpoint[u] += flits;
            let d = manhattan(&t, u, v);
            distance_sum += d;
            max_distance = max_distance.max(d);
        }
        endpoint[a as usize] += flits;
        endpoint[b as usize] += flits;
    }
    let max_load = [east, west, north, south]
        .iter()
        .flat_map(|diff| {
            diff.chunks(side + 1).map(|line| {
                line.iter()
                    .scan(0i64, |acc, &d| {
                        *acc += d;
                        Some(*acc)
                    })
                    .max()
                    .unwrap_or(0)
            })
        })
        .max()
        .unwrap_or(0) as u64;
    // Each node both injects and ejects; the injection or ejection port is
    // bounded by the larger of the two, which endpoint/2 underestimates safely.
    let max_endpoint = endpoint.iter().copied().max().unwrap_or(0) / 2;
    let zero_load = if graph.num_edges() == 0 {
        0
    } else {
        max_distance * (cfg.router_pipeline_cycles + cfg.link_cycles)
            + cfg.flits(per_edge_bits.min(max_packet_bits)).max(1)
            - 1
    };
    let messages = 2 * graph.num_edges() as u64;
    BaselineEstimate {
        side: t.width(),
        bit_hop_count: per_edge_bits * distance_sum,
        bit_link_length: per_edge_bits * distance_sum,
        bit_router_traversals: per_edge_bits * (distance_sum + messages),
        est_cycles: max_load.max(max_endpoint).max(zero_load),
    }
}

/// Packet trace for the baseline: node `u` sends one message to each
/// neighbour, back to back in neighbour order.
pub fn baseline_traces(
    graph: &Graph,
    per_edge_bits: u64,
    layer: u32,
    max_packet_bits: u64,
    cfg: &NocConfig,
) -> Trace {
    let n = graph.num_nodes();
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in graph.edges() {
        adjacency[a as usize].push(b);
        adjacency[b as usize].push(a);
    }
    let max_packet_bits = max_packet_bits.max(1);
    let mut packets = Vec::new();
    if per_edge_bits > 0 {
        for (u, neighbours) in adjacency.iter_mut().enumerate() {
            neighbours.sort_unstable();
            let mut cycle = 0u64;
            for &v in neighbours.iter() {
                let mut remaining = per_edge_bits;
                while remaining > 0 {
                    let size = remaining.min(max_packet_bits);
                    remaining -= size;
                    packets.push(Packet { layer, src: u as u32, dst: v, size_bits: size, gen_cycle: cycle });
                    cycle += cfg.flits(size);
                }
            }
        }
    }
    packets.sort_by_key(|p| (p.gen_cycle, p.src));
    Trace { layer, packets }
}

/// Longest zero-load latency among the trace's packets.
#[cfg(test)]
pub(crate) fn max_zero_load(trace: &Trace, cfg: &NocConfig) -> u64 {
    trace
        .packets
        .iter()
        .map(|p| super::zero_load_latency(p.size_bits, p.src as usize, p.dst as usize, cfg))
        .max()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_synthetic;
    use crate::noc::simulate;

    #[test]
    fn side_is_ceil_sqrt() {
        assert_eq!(baseline_topology(2708).width(), 53);
        assert_eq!(baseline_topology(9).width(), 3);
        assert_eq!(baseline_topology(10).width(), 4);
        assert_eq!(baseline_topology(65755).width(), 257);
        assert_eq!(baseline_topology(1).width(), 1);
    }

    #[test]
    fn two_adjacent_nodes() {
        let g = Graph::new(2, vec![(0, 1)], vec![1, 1]).unwrap();
        let e = baseline_analytic(&g, 64, 512, &NocConfig::default());
        assert_eq!(e.bit_hop_count, 2 * 64);
    }

    #[test]
    fn canonical_graph_by_enumeration() {
        let g = Graph::canonical_eight_node(vec![1, 1, 1]).unwrap();
        let t = baseline_topology(8);
        let total: u64 = g.edges().iter().map(|&(a, b)| manhattan(&t, a as usize, b as usize)).sum();
        assert_eq!(total, 20);
        for v in [1u64, 7, 64] {
            assert_eq!(baseline_analytic(&g, v, 512, &NocConfig::default()).bit_hop_count, 2 * 20 * v);
        }
    }

    #[test]
    fn estimate_is_a_lower_bound_on_simulation() {
        for seed in 0..4 {
            let g = generate_synthetic(60, 150, vec![4, 4, 2], seed).unwrap();
            let cfg = NocConfig::default().with_topology(baseline_topology(60));
            let est = baseline_analytic(&g, 64, 512, &cfg);
            let trace = baseline_traces(&g, 64, 1, 512, &cfg);
            let r = simulate(&trace.packets, &cfg).unwrap();
            assert_eq!(r.bit_hop_count, est.bit_hop_count);
            assert_eq!(r.bit_router_traversals, est.bit_router_traversals);
            assert!(est.est_cycles <= r.total_cycles + 1, "{} > {}", est.est_cycles, r.total_cycles);
            assert!(max_zero_load(&trace, &cfg) <= r.total_cycles);
        }
    }
}
