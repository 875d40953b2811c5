use std::collections::VecDeque;

use super::topology::{route_metrics, Topology, PORT_LOCAL};
use super::{NocConfig, NocError, NocReport};
use crate::dataflow::Packet;

#[derive(Debug, Clone, Copy)]
struct Flit {
    packet: u32,
    head: bool,
    tail: bool,
    out: u8,
    ready: u64,
}

/// Source interface of one router: packets waiting for injection.
#[derive(Debug, Default)]
struct Injector {
    queue: VecDeque<u32>,
    current: Option<(u32, u64)>,
}

struct Network<'a> {
    cfg: &'a NocConfig,
    topo: Topology,
    ports: usize,
    packets: &'a [Packet],
    flits_per_packet: Vec<u64>,
    buffers: Vec<VecDeque<Flit>>,
    /// Free slots downstream of (router, output); slot 0 is the injector's
    /// credit for the local input buffer.
    credits: Vec<u32>,
    owner: Vec<Option<u8>>,
    rr: Vec<u8>,
    /// (arrival cycle, router, input port, flit)
    links: VecDeque<(u64, u32, u8, Flit)>,
    /// (return cycle, credit slot)
    credit_returns: VecDeque<(u64, u32)>,
    injectors: Vec<Injector>,
    router_flits: Vec<u64>,
    buffered: u64,
    injected: u64,
    ejected: u64,
    tail_cycle: Vec<u64>,
}

impl<'a> Network<'a> {
    fn new(packets: &'a [Packet], cfg: &'a NocConfig) -> Self {
        let topo = cfg.topology;
        let routers = topo.num_routers();
        let ports = topo.port_count();
        let mut injectors: Vec<Injector> = (0..routers).map(|_| Injector::default()).collect();
        let mut order: Vec<u32> = (0..packets.len() as u32).collect();
        order.sort_by_key(|&i| (packets[i as usize].gen_cycle, i));
        for i in order {
            injectors[packets[i as usize].src as usize].queue.push_back(i);
        }
        Self {
            cfg,
            topo,
            ports,
            packets,
            flits_per_packet: packets.iter().map(|p| cfg.flits(p.size_bits)).collect(),
            buffers: vec![VecDeque::with_capacity(cfg.input_buffer_flits as usize); routers * ports],
            credits: vec![cfg.input_buffer_flits; routers * ports],
            owner: vec![None; routers * ports],
            rr: vec![0; routers * ports],
            links: VecDeque::new(),
            credit_returns: VecDeque::new(),
            injectors,
            router_flits: vec![0; routers],
            buffered: 0,
            injected: 0,
            ejected: 0,
            tail_cycle: vec![0; packets.len()],
        }
    }

    fn accept(&mut self, now: u64, router: usize, port: usize, mut flit: Flit) {
        let dst = self.packets[flit.packet as usize].dst as usize;
        let out = self.topo.next_port(router, dst);
        flit.out = out as u8;
        flit.ready = if out == PORT_LOCAL { now } else { now + self.cfg.router_pipeline_cycles };
        self.buffers[router * self.ports + port].push_back(flit);
        self.buffered += 1;
    }

    fn deliver(&mut self, now: u64) {
        while let Some(&(t, r, p, f)) = self.links.front() {
            if t > now {
                break;
            }
            self.links.pop_front();
            self.accept(now, r as usize, p as usize, f);
        }
        while let Some(&(t, slot)) = self.credit_returns.front() {
            if t > now {
                break;
            }
            self.credit_returns.pop_front();
            self.credits[slot as usize] += 1;
        }
    }

    fn inject(&mut self, now: u64) {
        for r in 0..self.injectors.len() {
            let slot = r * self.ports + PORT_LOCAL;
            if self.credits[slot] == 0 {
                continue;
            }
            let inj = &mut self.injectors[r];
            if inj.current.is_none() {
                match inj.queue.front() {
                    Some(&p) if self.packets[p as usize].gen_cycle <= now => {
                        inj.queue.pop_front();
                        inj.current = Some((p, 0));
                    }
                    _ => continue,
                }
            }
            let (p, seq) = inj.current.expect("set above");
            let total = self.flits_per_packet[p as usize];
            let flit = Flit { packet: p, head: seq == 0, tail: seq + 1 == total, out: 0, ready: 0 };
            inj.current = if flit.tail { None } else { Some((p, seq + 1)) };
            self.credits[slot] -= 1;
            self.injected += 1;
            self.accept(now, r, PORT_LOCAL, flit);
        }
    }

    fn credit_slot_upstream(&self, router: usize, input: usize) -> usize {
        if input == PORT_LOCAL {
            return router * self.ports + PORT_LOCAL;
        }
        let up = self
            .topo
            .neighbor(router, Topology::opposite(input))
            .expect("input port has an upstream link");
        up * self.ports + input
    }

    fn switch(&mut self, now: u64) {
        let ports = self.ports;
        let mut requests = vec![0u32; ports];
        for r in 0..self.router_flits.len() {
            let base = r * ports;
            requests.iter_mut().for_each(|m| *m = 0);
            let mut any = false;
            for p in 0..ports {
                if let Some(f) = self.buffers[base + p].front() {
                    if f.ready <= now {
                        requests[f.out as usize] |= 1 << p;
                        any = true;
                    }
                }
            }
            if !any {
                continue;
            }
            for o in 0..ports {
                let req = requests[o];
                if req == 0 || (o != PORT_LOCAL && self.credits[base + o] == 0) {
                    continue;
                }
                let input = match self.owner[base + o] {
                    Some(p) if req & (1 << p) != 0 => p as usize,
                    Some(_) => continue,
                    None => {
                        let start = self.rr[base + o] as usize;
                        let Some(p) = (0..ports).map(|i| (start + i) % ports).find(|&p| {
                            req & (1 << p) != 0 && self.buffers[base + p].front().is_some_and(|f| f.head)
                        }) else {
                            continue;
                        };
                        self.rr[base + o] = ((p + 1) % ports) as u8;
                        p
                    }
                };
                let flit = self.buffers[base + input].pop_front().expect("requested");
                self.buffered -= 1;
                self.owner[base + o] = if flit.tail { None } else { Some(input as u8) };
                let slot = self.credit_slot_upstream(r, input) as u32;
                self.credit_returns.push_back((now + self.cfg.credit_cycles, slot));
                self.router_flits[r] += 1;
                if o == PORT_LOCAL {
                    self.ejected += 1;
                    if flit.tail {
                        self.tail_cycle[flit.packet as usize] = now;
                    }
                } else {
                    self.credits[base + o] -= 1;
                    let next = self.topo.neighbor(r, o).expect("routed onto an existing link");
                    self.links.push_back((now + self.cfg.link_cycles, next as u32, o as u8, flit));
                }
            }
        }
    }

    fn idle(&self) -> bool {
        self.buffered == 0
            && self.links.is_empty()
            && self.injectors.iter().all(|i| i.current.is_none())
    }

    fn next_generation(&self) -> Option<u64> {
        self.injectors
            .iter()
            .filter_map(|i| i.queue.front())
            .map(|&p| self.packets[p as usize].gen_cycle)
            .min()
    }

    fn check(&self, now: u64) -> Result<(), NocError> {
        let cap = self.cfg.input_buffer_flits as usize;
        let fail = |msg: String| Err(NocError::Invariant { cycle: now, msg });
        let mut pending = vec![0usize; self.credits.len()];
        for &(_, slot) in &self.credit_returns {
            pending[slot as usize] += 1;
        }
        let mut on_link = vec![0usize; self.buffers.len()];
        for &(_, r, p, _) in &self.links {
            on_link[r as usize * self.ports + p as usize] += 1;
        }
        for r in 0..self.router_flits.len() {
            for p in 0..self.ports {
                let idx = r * self.ports + p;
                let occupancy = self.buffers[idx].len();
                if occupancy > cap {
                    return fail(format!("router {r} port {p} holds {occupancy} > {cap} flits"));
                }
                let upstream = self.topo.neighbor(r, super::Topology::opposite(p));
                let slot = match (p, upstream) {
                    (PORT_LOCAL, _) => idx,
                    (_, Some(u)) => u * self.ports + p,
                    (_, None) => {
                        if occupancy > 0 {
                            return fail(format!("router {r} port {p} has no upstream but holds flits"));
                        }
                        continue;
                    }
                };
                let sum = self.credits[slot] as usize + occupancy + on_link[idx] + pending[slot];
                if sum != cap {
                    return fail(format!("credit loop into router {r} port {p} sums to {sum}, expected {cap}"));
                }
            }
        }
        if self.injected != self.ejected + self.buffered + self.links.len() as u64 {
            return fail("flit conservation".into());
        }
        Ok(())
    }
}

/// Runs the packets through the configured network until every tail flit
/// has been ejected.
pub fn simulate(packets: &[Packet], cfg: &NocConfig) -> Result<NocReport, NocError> {
    cfg.validate()?;
    let topo = cfg.topology;
    let mut bit_hop_count = 0u64;
    let mut bit_link_length = 0u64;
    let mut bit_router_traversals = 0u64;
    for (i, p) in packets.iter().enumerate() {
        topo.check(p.src as usize)?;
        topo.check(p.dst as usize)?;
        if p.size_bits == 0 {
            return Err(NocError::EmptyPacket { index: i });
        }
        let (hops, length) = route_metrics(p.src as usize, p.dst as usize, &topo);
        bit_hop_count += p.size_bits * hops;
        bit_link_length += p.size_bits * length;
        bit_router_traversals += p.size_bits * (hops + 1);
    }
    let mut net = Network::new(packets, cfg);
    let total_flits: u64 = net.flits_per_packet.iter().sum();
    let mut now = 0u64;
    while net.ejected < total_flits {
        if net.idle() {
            match net.next_generation() {
                Some(g) if g > now => now = g,
                _ => {}
            }
        }
        if now > cfg.max_cycles {
            return Err(NocError::CycleCap { cap: cfg.max_cycles, pending_flits: total_flits - net.ejected });
        }
        net.deliver(now);
        net.inject(now);
        net.switch(now);
        if cfg.check_invariants {
            net.check(now)?;
        }
        now += 1;
    }
    let latencies: Vec<u64> = packets
        .iter()
        .zip(&net.tail_cycle)
        .map(|(p, &t)| t - p.gen_cycle)
        .collect();
    let max_latency = latencies.iter().copied().max().unwrap_or(0);
    let avg_latency = if latencies.is_empty() {
        0.0
    } else {
        latencies.iter().map(|&l| l as f64).sum::<f64>() / latencies.len() as f64
    };
    Ok(NocReport {
        total_cycles: net.tail_cycle.iter().copied().max().unwrap_or(0),
        latencies,
        bit_hop_count,
        bit_link_length,
        bit_router_traversals,
        router_flits: net.router_flits,
        injected_flits: net.injected,
        ejected_flits: net.ejected,
        avg_latency,
        max_latency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noc::zero_load_latency;
    use proptest::prelude::*;

    fn pkt(src: u32, dst: u32, size_bits: u64, gen_cycle: u64) -> Packet {
        Packet { layer: 1, src, dst, size_bits, gen_cycle }
    }

    fn checked(topology: Topology) -> NocConfig {
        NocConfig { check_invariants: true, ..NocConfig::default().with_topology(topology) }
    }

    #[test]
    fn empty_trace() {
        let r = simulate(&[], &NocConfig::default()).unwrap();
        assert_eq!(r.total_cycles, 0);
        assert_eq!(r.router_flits, vec![0; 16]);
    }

    #[test]
    fn single_packets_match_zero_load() {
        let cfg = checked(Topology::mesh(4, 4));
        for (src, dst, bits) in [(0, 1, 32), (0, 15, 512), (5, 5, 100), (12, 3, 33)] {
            let r = simulate(&[pkt(src, dst, bits, 7)], &cfg).unwrap();
            assert_eq!(r.latencies[0], zero_load_latency(bits, src as usize, dst as usize, &cfg));
            assert_eq!(r.total_cycles, 7 + r.latencies[0]);
        }
    }

    #[test]
    fn contention_delays_second_head_by_packet_length() {
        let cfg = checked(Topology::mesh(3, 3));
        let t = cfg.topology;
        let dst = t.id(1, 2) as u32;
        let a = pkt(t.id(0, 0) as u32, dst, 128, 0);
        let b = pkt(t.id(2, 0) as u32, dst, 128, 0);
        let r = simulate(&[a, b], &cfg).unwrap();
        let zl = zero_load_latency(128, a.src as usize, dst as usize, &cfg);
        let mut lat = r.latencies.clone();
        lat.sort_unstable();
        assert_eq!(lat, vec![zl, zl + 4]);
    }

    #[test]
    fn undrainable_trace_hits_cap() {
        let cfg = NocConfig { max_cycles: 10, ..NocConfig::default() };
        let err = simulate(&[pkt(0, 15, 32 * 100, 0)], &cfg).unwrap_err();
        assert!(matches!(err, NocError::CycleCap { cap: 10, .. }));
    }

    #[test]
    fn rejects_bad_packets() {
        let cfg = NocConfig::default();
        assert!(matches!(simulate(&[pkt(0, 16, 32, 0)], &cfg), Err(NocError::RouterOutOfRange { .. })));
        assert_eq!(simulate(&[pkt(0, 1, 0, 0)], &cfg), Err(NocError::EmptyPacket { index: 0 }));
    }

    #[test]
    fn tiny_buffers_still_drain() {
        let cfg = NocConfig { input_buffer_flits: 1, check_invariants: true, ..NocConfig::default() };
        let packets: Vec<_> = (0..16).map(|s| pkt(s, 15 - s, 200, 0)).collect();
        let r = simulate(&packets, &cfg).unwrap();
        assert_eq!(r.injected_flits, r.ejected_flits);
    }

    fn random_trace(routers: u32) -> impl Strategy<Value = Vec<Packet>> {
        proptest::collection::vec((0..routers, 0..routers, 1u64..700, 0u64..60), 1..40)
            .prop_map(|v| v.into_iter().map(|(s, d, b, g)| pkt(s, d, b, g)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn contended_runs_respect_bounds(packets in random_trace(12), cmesh in any::<bool>()) {
            let topo = if cmesh {
                Topology::Cmesh { width: 4, height: 3, express_span: 2 }
            } else {
                Topology::mesh(4, 3)
            };
            let cfg = checked(topo);
            let r = simulate(&packets, &cfg).unwrap();
            prop_assert_eq!(r.injected_flits, r.ejected_flits);
            for (p, &l) in packets.iter().zip(&r.latencies) {
                prop_assert!(l >= zero_load_latency(p.size_bits, p.src as usize, p.dst as usize, &cfg));
            }
            prop_assert_eq!(&r, &simulate(&packets, &cfg).unwrap());
            let doubled: Vec<_> = packets.iter().map(|p| Packet { size_bits: 2 * p.size_bits, ..*p }).collect();
            prop_assert!(simulate(&doubled, &cfg).unwrap().total_cycles >= r.total_cycles);
        }
    }
}
