//! Exercises the C surface through the exported extern functions, including
//! a round trip against the pure-Rust results and a compile-and-run check of
//! the generated header with a real C compiler.

use mcnet_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn k4_handles() -> (*mut McnetGraph, *mut McnetParams) {
    let us: Vec<u32> = vec![0, 0, 0, 1, 1, 2];
    let vs: Vec<u32> = vec![1, 2, 3, 2, 3, 3];
    let ws: Vec<f64> = vec![1.0; 6];
    let mut g: *mut McnetGraph = ptr::null_mut();
    let status = unsafe {
        mcnet_graph_from_edges(4, us.as_ptr(), vs.as_ptr(), ws.as_ptr(), 6, &mut g)
    };
    assert_eq!(status, McnetStatus::Ok);

    let alpha = [1.0; 4];
    let beta = [1.0; 4];
    let mut p: *mut McnetParams = ptr::null_mut();
    let status = unsafe { mcnet_params_new(4, alpha.as_ptr(), beta.as_ptr(), 2.0, 0.5, &mut p) };
    assert_eq!(status, McnetStatus::Ok);
    (g, p)
}

#[test]
fn steady_state_round_trip_matches_rust() {
    let (g, p) = k4_handles();
    unsafe {
        assert_eq!(mcnet_graph_node_count(g), 4);
        assert_eq!(mcnet_graph_is_connected(g), 1);

        let mut lambda1 = 0.0;
        assert_eq!(mcnet_graph_lambda1(g, &mut lambda1), McnetStatus::Ok);
        assert!((lambda1 - 4.0).abs() < 1e-10);

        let mut s: *mut McnetSteady = ptr::null_mut();
        assert_eq!(
            mcnet_solve_steady(g, p, McnetMethod::Newton, 1e-12, &mut s),
            McnetStatus::Ok
        );
        assert_eq!(mcnet_steady_method(s), McnetMethod::Newton);
        assert!(mcnet_steady_residual(s) < 1e-12);

        let mut p_bar = [0.0; 4];
        assert_eq!(mcnet_steady_state(s, p_bar.as_mut_ptr()), McnetStatus::Ok);
        let expected = mcnet::steady::homogeneous_closed_form(1.0, 1.0, 1.5, 3.0).unwrap();
        for v in p_bar {
            assert!((v - expected).abs() < 1e-10);
        }

        // The field vanishes at the steady state.
        let mut f = [0.0; 4];
        assert_eq!(mcnet_vector_field(g, p, p_bar.as_ptr(), f.as_mut_ptr()), McnetStatus::Ok);
        assert!(f.iter().all(|v| v.abs() < 1e-11));

        // Entropy to the steady state from a perturbed point is positive.
        let perturbed = [0.4, 0.3, 0.25, 0.35];
        let mut e = 0.0;
        assert_eq!(
            mcnet_relative_entropy(4, perturbed.as_ptr(), p_bar.as_ptr(), &mut e),
            McnetStatus::Ok
        );
        assert!(e > 0.0);

        mcnet_steady_free(s);
        mcnet_params_free(p);
        mcnet_graph_free(g);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        // Self-loop rejected.
        let us = [0u32];
        let vs = [0u32];
        let ws = [1.0f64];
        let mut g: *mut McnetGraph = ptr::null_mut();
        let status = mcnet_graph_from_edges(2, us.as_ptr(), vs.as_ptr(), ws.as_ptr(), 1, &mut g);
        assert_eq!(status, McnetStatus::InvalidInput);
        let msg = CStr::from_ptr(mcnet_last_error_message());
        assert!(msg.to_string_lossy().contains("self-loop"));

        // Null arguments.
        assert_eq!(
            mcnet_graph_from_edges(2, ptr::null(), ptr::null(), ptr::null(), 1, &mut g),
            McnetStatus::NullArgument
        );
        assert_eq!(mcnet_graph_is_connected(ptr::null()), -1);
        assert!(mcnet_steady_residual(ptr::null()).is_nan());

        // Disconnected graph has no spectral gap.
        let mut g: *mut McnetGraph = ptr::null_mut();
        assert_eq!(
            mcnet_graph_from_edges(2, ptr::null(), ptr::null(), ptr::null(), 0, &mut g),
            McnetStatus::Ok
        );
        let mut lambda1 = 0.0;
        assert_eq!(mcnet_graph_lambda1(g, &mut lambda1), McnetStatus::SolverFailed);
        mcnet_graph_free(g);

        // Missing file is an IO error.
        let path = CString::new("/nonexistent/graph.edges").unwrap();
        let mut g: *mut McnetGraph = ptr::null_mut();
        assert_eq!(
            mcnet_graph_from_file(path.as_ptr(), &mut g),
            McnetStatus::IoError
        );
    }
}

#[test]
fn simulate_writes_csv() {
    let (g, p) = k4_handles();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let path = CString::new(csv.to_str().unwrap()).unwrap();
    let p0 = [0.9, 0.1, 0.5, 0.3];
    unsafe {
        assert_eq!(
            mcnet_simulate_csv(g, p, p0.as_ptr(), 1e-2, 1.0, path.as_ptr()),
            McnetStatus::Ok
        );
        mcnet_params_free(p);
        mcnet_graph_free(g);
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,p_0,p_1,p_2,p_3,residual\n"));
    assert_eq!(text.lines().count(), 102);
}

/// Compiles a small C client against the generated header and links the
/// static library, then runs it. Requires a C compiler in PATH, which the
/// test environment provides.
#[test]
fn generated_header_compiles_and_links() {
    let crate_dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/mcnet.h");
    assert!(header.exists(), "cbindgen header missing");

    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    let lib = crate_dir
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("target")
        .join(profile)
        .join("libmcnet_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(
        &src,
        r#"
#include "mcnet.h"
#include <stdio.h>

int main(void) {
    uint32_t us[] = {0, 1, 2, 3};
    uint32_t vs[] = {1, 2, 3, 0};
    double ws[] = {1.0, 1.0, 1.0, 1.0};
    McnetGraph *g = NULL;
    if (mcnet_graph_from_edges(4, us, vs, ws, 4, &g) != MCNET_STATUS_OK) return 1;

    double alpha[] = {1.0, 1.0, 1.0, 1.0};
    double beta[] = {1.0, 1.0, 1.0, 1.0};
    McnetParams *p = NULL;
    if (mcnet_params_new(4, alpha, beta, 1.0, 0.25, &p) != MCNET_STATUS_OK) return 2;

    McnetSteady *s = NULL;
    if (mcnet_solve_steady(g, p, MCNET_METHOD_AUTO, 1e-10, &s) != MCNET_STATUS_OK) {
        fprintf(stderr, "%s\n", mcnet_last_error_message());
        return 3;
    }
    double p_bar[4];
    if (mcnet_steady_state(s, p_bar) != MCNET_STATUS_OK) return 4;
    printf("%.10f %.10f\n", p_bar[0], mcnet_steady_residual(s));

    mcnet_steady_free(s);
    mcnet_params_free(p);
    mcnet_graph_free(g);
    return 0;
}
"#,
    )
    .unwrap();

    let exe = dir.path().join("client");
    let compile = std::process::Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header.parent().unwrap())
        .arg(&lib)
        .arg("-lm")
        .arg("-lpthread")
        .arg("-ldl")
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("cc runs");
    assert!(
        compile.status.success(),
        "compile failed: {}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = std::process::Command::new(&exe).output().expect("client runs");
    assert!(run.status.success(), "client exit: {:?}", run.status);
    let out = String::from_utf8_lossy(&run.stdout);
    let first: f64 = out.split_whitespace().next().unwrap().parse().unwrap();
    let expected = mcnet::steady::homogeneous_closed_form(1.0, 1.0, 0.75, 2.0).unwrap();
    assert!((first - expected).abs() < 1e-8, "client printed {out}");
}
