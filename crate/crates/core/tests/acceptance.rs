//! Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use coin_sim::dataflow::{infer, layer_mult_count, IntMatrix, LayerTensors, Order, Packet};
use coin_sim::energy::{compare_architectures, mesh_sweep, square_sizes, Architecture, RunOptions};
use coin_sim::graph::{all_presets, communication_volume, contiguous_assignment, generate_synthetic, Graph};
use coin_sim::mapper::HardwareConfig;
use coin_sim::noc::{simulate, zero_load_latency, NocConfig, Topology};
use coin_sim::optimizer::{minimize, verify_convexity, ObjectiveParams, UniformObjective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Closed-form uniform objective, written out independently of the library.
fn oracle_energy(n: f64, a: f64, p1: f64, p2: f64, k: f64) -> f64 {
    let m = n / k;
    k * m * (m - 1.0) * p1 * a * m.sqrt() + k * (k - 1.0) * m * m * p2 * a * k.sqrt()
}

fn oracle_argmin(n: f64, a: f64, p1: f64, p2: f64, lo: u32, hi: u32) -> u32 {
    let mut best = lo;
    for k in lo..=hi {
        if oracle_energy(n, a, p1, p2, f64::from(k)) < oracle_energy(n, a, p1, p2, f64::from(best)) {
            best = k;
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let (p1, p2) = (0.25, 0.22);
    let c = UniformObjective { nodes: 1.0, act_sum_bits: 1.0, p1, p2 }.curvature_coefficients();
    // d²/dk² of c·k^b is c·b·(b-1)·k^(b-2).
    let dd = |b: f64| b * (b - 1.0);
    let oracle = [p1 * dd(-1.5), p2 * dd(0.5), p2 * dd(-0.5), p1 * dd(-0.5)];
    let got = [c.n52_k72, c.n2_k32, c.n2_k52, c.n32_k52];
    let published = [0.94, 0.06, 0.17, 0.19];
    let oracle_ok = got.iter().zip(&oracle).all(|(g, o)| (g - o.abs()).abs() < 1e-12);
    let published_ok = got.iter().zip(&published).all(|(g, p)| (g - p).abs() <= 0.01);
    outcome(
        oracle_ok && published_ok,
        format!("coefficients {got:?} vs published {published:?} (tol 0.01), symbolic oracle match {oracle_ok}"),
    )
}

fn criterion_2() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for n in [2000u64, 6000, 19717, 65755] {
        let report = verify_convexity(&ObjectiveParams::uniform(n, 1.0, 0.25, 0.22)).expect("valid params");
        pass &= report.is_convex();
        notes.push(format!(
            "N={n}: published>0 {} (first k<=0: {}), fd agrees {}",
            report.published_positive,
            report.first_nonpositive_k.map_or("none".into(), |k| k.to_string()),
            report.finite_difference_agrees
        ));
    }
    outcome(pass, notes.join("; "))
}

fn criterion_3() -> Outcome {
    let r = minimize(&ObjectiveParams::uniform(6000, 1.0, 0.25, 0.22)).expect("feasible");
    let oracle = oracle_argmin(6000.0, 1.0, 0.25, 0.22, 4, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut disagreements = 0;
    for _ in 0..100 {
        let n = rng.random_range(200..100_000u64);
        let a = rng.random_range(1.0..64.0);
        let p1 = rng.random_range(0.001..1.0);
        let p2 = rng.random_range(0.001..1.0);
        let got = minimize(&ObjectiveParams::uniform(n, a, p1, p2)).map(|r| r.k_star);
        if got != Ok(oracle_argmin(n as f64, a, p1, p2, 4, 100)) {
            disagreements += 1;
        }
    }
    outcome(
        r.k_star == 16 && oracle == 16 && disagreements == 0,
        format!("k_star {} (oracle {oracle}), random disagreements {disagreements}/100", r.k_star),
    )
}

fn criterion_4() -> Outcome {
    let (n, f, h) = (65755u128, 5414u128, 16u128);
    let agg = layer_mult_count(65755, 5414, 16, Order::AggFirst).expect("fits");
    let fe = layer_mult_count(65755, 5414, 16, Order::FeFirst).expect("fits");
    let exact = agg == n * n * f + n * f * h && fe == n * f * h + n * n * h;
    let ratio = agg as f64 / fe as f64;
    let rounded = (agg as f64 / 1e13 * 100.0).round() / 100.0 == 2.34
        && (fe as f64 / 1e10 * 100.0).round() / 100.0 == 7.49;
    outcome(
        exact && rounded && ratio >= 311.0,
        format!("agg-first {agg}, fe-first {fe}, ratio {ratio:.1}"),
    )
}

fn criterion_5() -> Outcome {
    let bytes = HardwareConfig::default().chip_capacity_bytes();
    outcome(bytes == 31_457_280, format!("full chip {bytes} bytes"))
}

fn criterion_6() -> Outcome {
    let g = Graph::canonical_eight_node(vec![4, 1, 1]).expect("canonical graph");
    let assignment = contiguous_assignment(8, 2);
    let mut pass = true;
    for v in [1u64, 3, 16, 1000] {
        let vol = communication_volume(&g, &assignment, 2, v).expect("valid");
        pass &= vol.intra == vec![8 * v, 4 * v] && vol.inter_total() == 8 * v;
    }
    outcome(pass, "intra {8v, 4v}, inter 8v for v in {1, 3, 16, 1000}")
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut mismatches = 0;
    for i in 0..200 {
        let n = rng.random_range(1..=64usize);
        let max_e = (n * (n - 1) / 2) as u64;
        let dims = vec![rng.random_range(1..12), rng.random_range(1..12), rng.random_range(1..8)];
        let g = generate_synthetic(n, rng.random_range(0..=max_e), dims.clone(), i).expect("graph");
        let mut matrix = |r: usize, c: usize, lo: i64, hi: i64| {
            IntMatrix::from_vec(r, c, (0..r * c).map(|_| rng.random_range(lo..=hi)).collect()).expect("shape")
        };
        let x = matrix(n, dims[0], 0, 15);
        let w1 = matrix(dims[0], dims[1], -8, 7);
        let w2 = matrix(dims[1], dims[2], -8, 7);
        let t = LayerTensors::new(LayerTensors::adjacency_of(&g, true), x, vec![w1, w2]).expect("tensors");
        if infer(&t, Order::FeFirst).expect("no overflow") != infer(&t, Order::AggFirst).expect("no overflow") {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/200 mismatches"))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut single_mismatch = 0;
    for _ in 0..1000 {
        let (w, h) = (rng.random_range(1..=8u32), rng.random_range(1..=8u32));
        let cfg = NocConfig::default().with_topology(Topology::mesh(w, h));
        let routers = w * h;
        let p = Packet {
            layer: 1,
            src: rng.random_range(0..routers),
            dst: rng.random_range(0..routers),
            size_bits: rng.random_range(1..2048),
            gen_cycle: rng.random_range(0..100),
        };
        // Independent zero-load oracle: Manhattan hops times per-hop cost plus serialization.
        let (sx, sy, dx, dy) = (p.src % w, p.src / w, p.dst % w, p.dst / w);
        let hops = u64::from(sx.abs_diff(dx) + sy.abs_diff(dy));
        let oracle = hops * 3 + p.size_bits.div_ceil(32) - 1;
        let r = simulate(&[p], &cfg).expect("drains");
        if r.latencies[0] != oracle || oracle != zero_load_latency(p.size_bits, p.src as usize, p.dst as usize, &cfg) {
            single_mismatch += 1;
        }
    }
    let mut invariant_failures = 0;
    for _ in 0..100 {
        let cmesh = rng.random_bool(0.3);
        let (w, h) = (rng.random_range(2..=6u32), rng.random_range(2..=6u32));
        let topology = if cmesh {
            Topology::Cmesh { width: w, height: h, express_span: 2 }
        } else {
            Topology::mesh(w, h)
        };
        let cfg = NocConfig {
            check_invariants: true,
            input_buffer_flits: rng.random_range(1..=8),
            ..NocConfig::default().with_topology(topology)
        };
        let routers = w * h;
        let packets: Vec<Packet> = (0..rng.random_range(2..120))
            .map(|_| Packet {
                layer: 1,
                src: rng.random_range(0..routers),
                dst: rng.random_range(0..routers),
                size_bits: rng.random_range(1..1024),
                gen_cycle: rng.random_range(0..200),
            })
            .collect();
        let flits: u64 = packets.iter().map(|p| p.size_bits.div_ceil(32)).sum();
        match simulate(&packets, &cfg) {
            Ok(r) if r.injected_flits == flits && r.ejected_flits == flits => {}
            _ => invariant_failures += 1,
        }
    }
    outcome(
        single_mismatch == 0 && invariant_failures == 0,
        format!("single-packet mismatches {single_mismatch}/1000, invariant failures {invariant_failures}/100"),
    )
}

fn criterion_9() -> Outcome {
    let hw = HardwareConfig::default();
    let mut wins = 0;
    let mut notes = Vec::new();
    for p in all_presets() {
        let g = p.synthesize(1).expect("preset");
        let sweep = mesh_sweep(&g, p.name, &hw, &square_sizes(3, 10), &RunOptions::default()).expect("sweep");
        let best = sweep.best_point();
        if (best.width, best.height) == (4, 4) {
            wins += 1;
        }
        notes.push(format!("{} {}x{}", p.name, best.width, best.height));
    }
    outcome(wins >= 3, format!("4x4 minimizes communication energy for {wins}/5 ({})", notes.join(", ")))
}

fn criterion_10() -> Outcome {
    let hw = HardwareConfig::default();
    let archs = [Architecture::coin(16), Architecture::Baseline, Architecture::cmesh(16)];
    let mut pass = true;
    let mut notes = Vec::new();
    for p in all_presets() {
        let g = p.synthesize(1).expect("preset");
        let r = compare_architectures(&g, p.name, &hw, &archs, &RunOptions::default()).expect("compare");
        let (coin, base, cmesh) = (&r[0], &r[1], &r[2]);
        let ok = base.bit_hop_count > coin.bit_hop_count
            && base.communication_share > coin.communication_share
            && cmesh.inter_ce_energy >= coin.inter_ce_energy;
        pass &= ok;
        notes.push(format!(
            "{}: share {:.2}% vs {:.2}%, cmesh/mesh {:.3}",
            p.name,
            100.0 * base.communication_share,
            100.0 * coin.communication_share,
            cmesh.inter_ce_energy / coin.inter_ce_energy
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 10] = [
        (1, "curvature coefficients", Duration::from_secs(1), criterion_1),
        (2, "convexity suite", Duration::from_secs(1), criterion_2),
        (3, "optimal CE count", Duration::from_secs(5), criterion_3),
        (4, "multiplication counts", Duration::from_secs(1), criterion_4),
        (5, "memory accounting", Duration::from_secs(1), criterion_5),
        (6, "canonical example", Duration::from_secs(1), criterion_6),
        (7, "dataflow equivalence", Duration::from_secs(10), criterion_7),
        (8, "NoC oracle", Duration::from_secs(30), criterion_8),
        (9, "mesh sweep direction", Duration::from_secs(300), criterion_9),
        (10, "architecture ranking", Duration::from_secs(300), criterion_10),
    ];
    let mut failed = 0;
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.2}s of {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
