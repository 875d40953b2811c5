use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use coin_sim_ffi::*;

fn last_error() -> String {
    let p = coin_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn optimize_uniform_reaches_sixteen() {
    let mut k = 0;
    let s = unsafe { coin_optimize_uniform(6000, 16.0, 0.25, 0.22, 4, 100, &mut k) };
    assert_eq!(s, CoinStatus::Ok);
    assert_eq!(k, 16);
    assert!(coin_last_error().is_null());
}

#[test]
fn bad_arguments_set_status_and_message() {
    let mut k = 0;
    let s = unsafe { coin_optimize_uniform(6000, 16.0, 0.25, 0.22, 50, 10, &mut k) };
    assert_eq!(s, CoinStatus::Infeasible);
    assert!(last_error().contains("bounds"));
    let s = unsafe { coin_optimize_uniform(6000, 16.0, 0.25, 0.22, 4, 100, ptr::null_mut()) };
    assert_eq!(s, CoinStatus::NullPointer);
    let name = CString::new("nope").unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { coin_graph_preset(name.as_ptr(), 1, &mut g) }, CoinStatus::InvalidArgument);
    assert!(g.is_null());
}

#[test]
fn mult_counts_and_overflow() {
    let dims = [5414u64, 16];
    let (mut lo, mut hi) = (0u64, 0u64);
    let s = unsafe { coin_mult_count_wide(65755, dims.as_ptr(), 2, CoinOrder::AggFirst, &mut lo, &mut hi) };
    assert_eq!(s, CoinStatus::Ok);
    assert_eq!((u128::from(hi) << 64) | u128::from(lo), 65755u128 * 65755 * 5414 + 65755 * 5414 * 16);
    let mut n = 0u64;
    assert_eq!(unsafe { coin_mult_count(65755, dims.as_ptr(), 2, CoinOrder::FeFirst, &mut n) }, CoinStatus::Ok);
    assert_eq!(n, 65755 * 5414 * 16 + 65755 * 65755 * 16);
    let huge = [u64::MAX, 2];
    let s = unsafe { coin_mult_count(u64::MAX, huge.as_ptr(), 2, CoinOrder::AggFirst, &mut n) };
    assert_eq!(s, CoinStatus::Overflow);
}

#[test]
fn graph_run_and_json() {
    let edges: Vec<u32> = (0..99).flat_map(|i| [i, i + 1]).collect();
    let dims = [8usize, 4, 2];
    let mut g = ptr::null_mut();
    let s = unsafe { coin_graph_from_edges(100, edges.as_ptr(), 99, dims.as_ptr(), 3, &mut g) };
    assert_eq!(s, CoinStatus::Ok);
    let (mut n, mut e) = (0, 0);
    assert_eq!(unsafe { coin_graph_counts(g, &mut n, &mut e) }, CoinStatus::Ok);
    assert_eq!((n, e), (100, 99));

    let mut k = 0;
    assert_eq!(unsafe { coin_optimize_graph(g, 16.0, 2, 20, &mut k) }, CoinStatus::Ok);
    assert!((2..=20).contains(&k));

    let mut reports = Vec::new();
    for kind in [CoinArchKind::Coin, CoinArchKind::Baseline, CoinArchKind::Cmesh] {
        let mut r = ptr::null_mut();
        let arch = CoinArchitecture { kind, width: 2, height: 2 };
        assert_eq!(unsafe { coin_run(g, arch, ptr::null(), &mut r) }, CoinStatus::Ok, "{}", last_error());
        let mut summary = CoinReportSummary::default();
        assert_eq!(unsafe { coin_report_summary(r, &mut summary) }, CoinStatus::Ok);
        assert!(summary.total_energy > 0.0);
        let mut json = ptr::null_mut();
        assert_eq!(unsafe { coin_report_to_json(r, &mut json) }, CoinStatus::Ok);
        let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
        let parsed: coin_sim::SimReport = serde_json::from_str(&text).unwrap();
        assert!((parsed.total_energy - summary.total_energy).abs() <= 1e-15 * summary.total_energy);
        unsafe {
            coin_string_free(json);
            coin_report_free(r);
        }
        reports.push(summary);
    }
    assert!(reports.iter().all(|r| r.bit_hop_count > 0));

    let bad_hw = CString::new(r#"{"crossbar_dim": 3}"#).unwrap();
    let mut r = ptr::null_mut();
    let arch = CoinArchitecture { kind: CoinArchKind::Coin, width: 2, height: 2 };
    assert_eq!(unsafe { coin_run(g, arch, bad_hw.as_ptr(), &mut r) }, CoinStatus::InvalidArgument);
    unsafe { coin_graph_free(g) };
}

#[test]
fn noc_entry_points() {
    let mut c = 0;
    assert_eq!(unsafe { coin_zero_load_latency(512, 0, 15, 4, 4, &mut c) }, CoinStatus::Ok);
    assert_eq!(c, 33);
    assert_eq!(unsafe { coin_zero_load_latency(32, 0, 16, 4, 4, &mut c) }, CoinStatus::InvalidArgument);

    let dir = tempfile_dir();
    let path = dir.join("t.trace");
    std::fs::write(&path, "# coin-trace v1: layer src dst size_bits gen_cycle\n1 0 1 32 0\n").unwrap();
    let p = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { coin_simulate_trace_file(p.as_ptr(), 2, 2, &mut c) }, CoinStatus::Ok);
    assert_eq!(c, 3);
    let missing = CString::new(dir.join("missing").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { coin_simulate_trace_file(missing.as_ptr(), 2, 2, &mut c) }, CoinStatus::Io);
    std::fs::remove_dir_all(dir).unwrap();
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coin-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/coin_sim.h")).unwrap();
    for name in [
        "coin_last_error",
        "coin_graph_preset",
        "coin_graph_from_edges",
        "coin_graph_free",
        "coin_optimize_uniform",
        "coin_optimize_graph",
        "coin_mult_count",
        "coin_run",
        "coin_report_summary",
        "coin_report_to_json",
        "coin_string_free",
        "coin_report_free",
        "coin_simulate_trace_file",
        "coin_zero_load_latency",
        "typedef struct CoinGraph CoinGraph",
        "COIN_STATUS_OVERFLOW = 4",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}

/// Compiles and runs a C program against the generated header and the
/// static library, when a C compiler is available.
#[test]
fn c_program_links_against_static_library() {
    let Ok(exe) = std::env::current_exe() else { return };
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libcoin_sim_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = std::env::temp_dir().join(format!("coin_c_smoke_{}", std::process::id()));
    let status = Command::new("cc")
        .arg(manifest.join("tests/c_smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&out).output().unwrap();
    let _ = std::fs::remove_file(&out);
    assert!(run.status.success(), "C smoke exited with {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).contains("total"));
}
