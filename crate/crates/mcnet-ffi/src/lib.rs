//! C ABI for the mcnet library.
//!
//! Objects cross the boundary as opaque handles created and destroyed by the
//! `mcnet_*_free` functions; every fallible call returns an [`McnetStatus`]
//! and leaves a human-readable message for [`mcnet_last_error_message`].
//! Buffers are caller-allocated with lengths implied by the graph's node
//! count. Handles are immutable after creation and safe to share across
//! threads; the error message is thread-local.

use mcnet::dynamics::{self, StateVector};
use mcnet::error::Error;
use mcnet::steady::{self, Method, SolveMethod};
use mcnet::{ChainParams, SteadyState, WeightedGraph};
use ndarray::Array1;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McnetStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Inputs failed validation (dimensions, ranges, graph shape).
    InvalidInput = 2,
    /// A file could not be parsed.
    ParseError = 3,
    /// A solver or integrator failed to converge.
    SolverFailed = 4,
    /// Filesystem failure.
    IoError = 5,
    /// An internal invariant was violated.
    Internal = 6,
}

/// Solver selection for [`mcnet_solve_steady`]; `Auto` chains
/// iterate -> newton -> ode and the produced handle records the winner.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McnetMethod {
    Auto = 0,
    Ode = 1,
    Newton = 2,
    Iterate = 3,
    ClosedForm = 4,
}

/// Opaque weighted-graph handle.
pub struct McnetGraph {
    inner: WeightedGraph,
}

/// Opaque rate/coupling parameter handle.
pub struct McnetParams {
    inner: ChainParams,
}

/// Opaque converged steady state.
pub struct McnetSteady {
    inner: SteadyState,
    nodes: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> McnetStatus {
    match err {
        Error::Parse { .. } | Error::Json(_) => McnetStatus::ParseError,
        Error::Io(_) => McnetStatus::IoError,
        Error::InvalidGraph(_)
        | Error::InvalidParams(_)
        | Error::DimensionMismatch { .. }
        | Error::OutsideCube { .. }
        | Error::NotInterior { .. }
        | Error::NotOnFace { .. }
        | Error::TooManyNodes { .. }
        | Error::ZeroReference { .. }
        | Error::UnverifiedSteadyState { .. } => McnetStatus::InvalidInput,
        Error::Disconnected(_)
        | Error::NoSpectralGap
        | Error::GammaHatZero
        | Error::NoInteriorRoot(_)
        | Error::BracketLost { .. }
        | Error::SolverFailed { .. }
        | Error::NonFinite { .. }
        | Error::MaxTimeExceeded { .. } => McnetStatus::SolverFailed,
    }
}

fn fail(err: &Error) -> McnetStatus {
    set_error(&err.to_string());
    status_of(err)
}

fn null_argument(what: &str) -> McnetStatus {
    set_error(&format!("{what} must not be null"));
    McnetStatus::NullArgument
}

/// Runs a closure, translating panics into `Internal`.
fn guarded(f: impl FnOnce() -> McnetStatus) -> McnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            McnetStatus::Internal
        }
    }
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mcnet_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a graph from an edge-list file.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_from_file(
    path: *const c_char,
    out: *mut *mut McnetGraph,
) -> McnetStatus {
    guarded(|| {
        if path.is_null() {
            return null_argument("path");
        }
        if out.is_null() {
            return null_argument("out");
        }
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return McnetStatus::InvalidInput;
            }
        };
        match WeightedGraph::load(Path::new(path)) {
            Ok(g) => {
                unsafe { *out = Box::into_raw(Box::new(McnetGraph { inner: g })) };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds a graph from parallel edge arrays of length `n_edges`.
///
/// # Safety
/// `us`, `vs`, `ws` must point to `n_edges` readable elements (or be null
/// with `n_edges == 0`); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_from_edges(
    n_nodes: usize,
    us: *const u32,
    vs: *const u32,
    ws: *const f64,
    n_edges: usize,
    out: *mut *mut McnetGraph,
) -> McnetStatus {
    guarded(|| {
        if out.is_null() {
            return null_argument("out");
        }
        if n_edges > 0 && (us.is_null() || vs.is_null() || ws.is_null()) {
            return null_argument("edge arrays");
        }
        let mut edges = Vec::with_capacity(n_edges);
        for k in 0..n_edges {
            let (u, v, w) = unsafe { (*us.add(k), *vs.add(k), *ws.add(k)) };
            edges.push((u as usize, v as usize, w));
        }
        match WeightedGraph::from_edges(n_nodes, &edges) {
            Ok(g) => {
                unsafe { *out = Box::into_raw(Box::new(McnetGraph { inner: g })) };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a graph handle; null is ignored.
///
/// # Safety
/// `g` must have come from a `mcnet_graph_*` constructor and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_free(g: *mut McnetGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live graph handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_node_count(g: *const McnetGraph) -> usize {
    if g.is_null() {
        return 0;
    }
    unsafe { &*g }.inner.node_count()
}

/// 1 when connected, 0 when not, -1 for a null handle.
///
/// # Safety
/// `g` must be a live graph handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_is_connected(g: *const McnetGraph) -> c_int {
    if g.is_null() {
        return -1;
    }
    unsafe { &*g }.inner.is_connected() as c_int
}

/// Smallest nonzero Laplacian eigenvalue of a connected graph.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcnet_graph_lambda1(
    g: *const McnetGraph,
    out: *mut f64,
) -> McnetStatus {
    guarded(|| {
        if g.is_null() {
            return null_argument("graph");
        }
        if out.is_null() {
            return null_argument("out");
        }
        match unsafe { &*g }.inner.lambda_1() {
            Ok(v) => {
                unsafe { *out = v };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Creates parameters from per-node rate arrays of length `n` and the two
/// couplings.
///
/// # Safety
/// `alpha` and `beta` must point to `n` readable values; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcnet_params_new(
    n: usize,
    alpha: *const f64,
    beta: *const f64,
    gamma01: f64,
    gamma10: f64,
    out: *mut *mut McnetParams,
) -> McnetStatus {
    guarded(|| {
        if out.is_null() {
            return null_argument("out");
        }
        if alpha.is_null() || beta.is_null() {
            return null_argument("rate arrays");
        }
        let alpha = unsafe { std::slice::from_raw_parts(alpha, n) };
        let beta = unsafe { std::slice::from_raw_parts(beta, n) };
        match ChainParams::new(
            Array1::from_vec(alpha.to_vec()),
            Array1::from_vec(beta.to_vec()),
            gamma01,
            gamma10,
        ) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(McnetParams { inner: p })) };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a params handle; null is ignored.
///
/// # Safety
/// `p` must have come from [`mcnet_params_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcnet_params_free(p: *mut McnetParams) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

fn state_from(raw: &[f64]) -> Result<StateVector, Error> {
    StateVector::from_slice(raw)
}

/// Evaluates the vector field at `p` (length = node count) into `out`.
///
/// # Safety
/// `g` and `params` must be live handles; `p` and `out` must point to
/// node-count many elements.
#[no_mangle]
pub unsafe extern "C" fn mcnet_vector_field(
    g: *const McnetGraph,
    params: *const McnetParams,
    p: *const f64,
    out: *mut f64,
) -> McnetStatus {
    guarded(|| {
        if g.is_null() || params.is_null() {
            return null_argument("graph/params");
        }
        if p.is_null() || out.is_null() {
            return null_argument("buffers");
        }
        let graph = unsafe { &*g };
        let n = graph.inner.node_count();
        let state = match state_from(unsafe { std::slice::from_raw_parts(p, n) }) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match dynamics::vector_field_w(&graph.inner, &unsafe { &*params }.inner, &state) {
            Ok(f) => {
                let out = unsafe { std::slice::from_raw_parts_mut(out, n) };
                out.copy_from_slice(f.as_slice().expect("contiguous"));
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Relative entropy of `p` with respect to an interior reference `p_bar`,
/// both of length `n`.
///
/// # Safety
/// `p` and `p_bar` must point to `n` readable values; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mcnet_relative_entropy(
    n: usize,
    p: *const f64,
    p_bar: *const f64,
    out: *mut f64,
) -> McnetStatus {
    guarded(|| {
        if p.is_null() || p_bar.is_null() || out.is_null() {
            return null_argument("buffers");
        }
        let p = match state_from(unsafe { std::slice::from_raw_parts(p, n) }) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let p_bar = match state_from(unsafe { std::slice::from_raw_parts(p_bar, n) }) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        match mcnet::entropy::relative_entropy(&p, &p_bar) {
            Ok(v) => {
                unsafe { *out = v };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Solves for the steady state with the requested method.
///
/// # Safety
/// `g` and `params` must be live handles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcnet_solve_steady(
    g: *const McnetGraph,
    params: *const McnetParams,
    method: McnetMethod,
    tol: f64,
    out: *mut *mut McnetSteady,
) -> McnetStatus {
    guarded(|| {
        if g.is_null() || params.is_null() {
            return null_argument("graph/params");
        }
        if out.is_null() {
            return null_argument("out");
        }
        let method = match method {
            McnetMethod::Auto => SolveMethod::Auto,
            McnetMethod::Ode => SolveMethod::Ode,
            McnetMethod::Newton => SolveMethod::Newton,
            McnetMethod::Iterate => SolveMethod::Iterate,
            McnetMethod::ClosedForm => {
                set_error("closed_form is a result tag, not a solver selection");
                return McnetStatus::InvalidInput;
            }
        };
        let graph = unsafe { &*g };
        match steady::solve_steady(&graph.inner, &unsafe { &*params }.inner, method, tol) {
            Ok(s) => {
                let handle = McnetSteady {
                    nodes: graph.inner.node_count(),
                    inner: s,
                };
                unsafe { *out = Box::into_raw(Box::new(handle)) };
                McnetStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a steady-state handle; null is ignored.
///
/// # Safety
/// `s` must have come from [`mcnet_solve_steady`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mcnet_steady_free(s: *mut McnetSteady) {
    if !s.is_null() {
        drop(unsafe { Box::from_raw(s) });
    }
}

/// Sup-norm residual of the converged state, or NaN for a null handle.
///
/// # Safety
/// `s` must be a live steady-state handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcnet_steady_residual(s: *const McnetSteady) -> f64 {
    if s.is_null() {
        return f64::NAN;
    }
    unsafe { &*s }.inner.residual()
}

/// Iteration count of the producing solver (steps for `ode`).
///
/// # Safety
/// `s` must be a live steady-state handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcnet_steady_iterations(s: *const McnetSteady) -> u64 {
    if s.is_null() {
        return 0;
    }
    unsafe { &*s }.inner.iterations() as u64
}

/// Which solver produced the state.
///
/// # Safety
/// `s` must be a live steady-state handle or null.
#[no_mangle]
pub unsafe extern "C" fn mcnet_steady_method(s: *const McnetSteady) -> McnetMethod {
    if s.is_null() {
        return McnetMethod::Auto;
    }
    match unsafe { &*s }.inner.method() {
        Method::Ode => McnetMethod::Ode,
        Method::Newton => McnetMethod::Newton,
        Method::Iterate => McnetMethod::Iterate,
        Method::ClosedForm => McnetMethod::ClosedForm,
    }
}

/// Copies the steady state into `out` (length = node count).
///
/// # Safety
/// `s` must be a live steady-state handle; `out` must point to node-count
/// many writable elements.
#[no_mangle]
pub unsafe extern "C" fn mcnet_steady_state(
    s: *const McnetSteady,
    out: *mut f64,
) -> McnetStatus {
    guarded(|| {
        if s.is_null() {
            return null_argument("steady");
        }
        if out.is_null() {
            return null_argument("out");
        }
        let handle = unsafe { &*s };
        let out = unsafe { std::slice::from_raw_parts_mut(out, handle.nodes) };
        out.copy_from_slice(handle.inner.p_bar().as_slice());
        McnetStatus::Ok
    })
}

/// Integrates the flow from `p0` and writes the trajectory CSV to `path`.
///
/// # Safety
/// `g` and `params` must be live handles, `p0` must point to node-count
/// many values, and `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mcnet_simulate_csv(
    g: *const McnetGraph,
    params: *const McnetParams,
    p0: *const f64,
    dt: f64,
    t_end: f64,
    path: *const c_char,
) -> McnetStatus {
    guarded(|| {
        if g.is_null() || params.is_null() {
            return null_argument("graph/params");
        }
        if p0.is_null() || path.is_null() {
            return null_argument("p0/path");
        }
        let graph = unsafe { &*g };
        let n = graph.inner.node_count();
        let p0 = match state_from(unsafe { std::slice::from_raw_parts(p0, n) }) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        let path = match unsafe { CStr::from_ptr(path) }.to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return McnetStatus::InvalidInput;
            }
        };
        let run = || -> Result<(), Error> {
            let tr =
                dynamics::integrate(&graph.inner, &unsafe { &*params }.inner, &p0, dt, t_end, None)?;
            let file = std::fs::File::create(path)?;
            tr.write_csv(std::io::BufWriter::new(file))?;
            Ok(())
        };
        match run() {
            Ok(()) => McnetStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}
