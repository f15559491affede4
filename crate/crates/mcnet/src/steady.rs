//! Steady-state solvers and the bounds satisfied by the equilibrium.
//!
//! Three independent routes to the steady state are provided: relaxation of
//! the flow ([`crate::dynamics::integrate_to_steady`]), damped Newton on the
//! stationarity system ([`newton_steady`]), and a per-node fixed-point
//! iteration ([`iterate_steady`]) that repeatedly solves the local quadratic
//! with the Laplacian terms of the previous iterate on the right-hand side.
//! The iteration converges quickly on nearly regular graphs and is allowed to
//! fail elsewhere; [`solve_steady`] chains iterate, Newton, and relaxation as
//! fallbacks.

use crate::dynamics::{self, ChainParams, StateVector};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::linalg;
use ndarray::Array1;

/// Default integrator step for steady-state relaxation.
pub const DEFAULT_DT: f64 = 1e-3;
/// Default residual tolerance for all solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default time budget for relaxation.
pub const DEFAULT_MAX_TIME: f64 = 1e4;

/// Which route produced a steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ode,
    Newton,
    Iterate,
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ode => "ode",
            Method::Newton => "newton",
            Method::Iterate => "iterate",
            Method::ClosedForm => "closed_form",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Solver selection for [`solve_steady`]; `Auto` runs the fallback chain
/// iterate -> newton -> ode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    Ode,
    Newton,
    Iterate,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(SolveMethod::Auto),
            "ode" => Ok(SolveMethod::Ode),
            "newton" => Ok(SolveMethod::Newton),
            "iterate" => Ok(SolveMethod::Iterate),
            other => Err(format!("unknown method {other:?}")),
        }
    }
}

/// A converged steady state with its certification data.
#[derive(Debug, Clone)]
pub struct SteadyState {
    p_bar: StateVector,
    residual: f64,
    method: Method,
    iterations: usize,
}

impl SteadyState {
    pub fn new(p_bar: StateVector, residual: f64, method: Method, iterations: usize) -> Self {
        Self {
            p_bar,
            residual,
            method,
            iterations,
        }
    }

    pub fn p_bar(&self) -> &StateVector {
        &self.p_bar
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// The per-node quadratic obtained by dropping the Laplacian terms from the
/// field: `R_i(x) = gh d_i x^2 - (alpha_i + beta_i + gh d_i) x + beta_i`.
///
/// `R_i(0) = beta_i >= 0` and `R_i(1) = -alpha_i <= 0`, so with strictly
/// positive rates each node has exactly one root in (0, 1). These local
/// roots seed the solvers, and evaluating `R` at the extrema of a steady
/// state yields the sign conditions checked by [`extremum_check`].
#[derive(Debug, Clone)]
pub struct NodeQuadratics {
    /// Leading coefficient `gh * d_i`.
    a: Array1<f64>,
    /// Linear coefficient `-(alpha_i + beta_i + gh * d_i)`.
    b: Array1<f64>,
    /// Constant coefficient `beta_i`.
    c: Array1<f64>,
}

impl NodeQuadratics {
    pub fn new(g: &WeightedGraph, params: &ChainParams) -> NodeQuadratics {
        let d = g.degrees();
        let gh = params.gamma_hat();
        let n = g.node_count();
        let mut a = Array1::zeros(n);
        let mut b = Array1::zeros(n);
        let mut c = Array1::zeros(n);
        for i in 0..n {
            a[i] = gh * d[i];
            b[i] = -(params.alpha()[i] + params.beta()[i] + gh * d[i]);
            c[i] = params.beta()[i];
        }
        NodeQuadratics { a, b, c }
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Evaluates `R_i(x)`.
    pub fn eval(&self, node: usize, x: f64) -> f64 {
        (self.a[node] * x + self.b[node]) * x + self.c[node]
    }

    /// The unique root of `R_i(x) = rhs` in the open interval (0, 1).
    ///
    /// Solved by bisection to 1e-14 once a sign-change bracket is found, with
    /// the closed-form roots as cross-check and bracket seed. When two roots
    /// fall inside the interval the one nearest `near` is taken; without a
    /// hint that situation reports a lost bracket, as does an empty interval.
    pub fn solve(&self, node: usize, rhs: f64, near: Option<f64>) -> Result<f64> {
        let (a, b, c) = (self.a[node], self.b[node], self.c[node] - rhs);
        let s = |x: f64| (a * x + b) * x + c;

        let mut interior: Vec<f64> = quadratic_roots(a, b, c)
            .into_iter()
            .filter(|r| *r > 0.0 && *r < 1.0)
            .collect();
        interior.sort_by(f64::total_cmp);
        interior.dedup_by(|x, y| (*x - *y).abs() < 1e-15);

        let seed = match interior.len() {
            0 => return Err(Error::BracketLost { node }),
            1 => interior[0],
            _ => match near {
                Some(h) => *interior
                    .iter()
                    .min_by(|x, y| (*x - h).abs().total_cmp(&(*y - h).abs()))
                    .expect("non-empty"),
                // With s(0) >= 0 >= s(1) the genuine root is the descending
                // crossing; a boundary root of the quadratic can leak just
                // inside (0, 1) through rounding and must not make the
                // solution ambiguous.
                None if s(0.0) >= 0.0 && s(1.0) <= 0.0 => {
                    match descending_crossing(a, b, &interior) {
                        Some(root) => root,
                        None => return Err(Error::BracketLost { node }),
                    }
                }
                None => return Err(Error::BracketLost { node }),
            },
        };

        // Polish by bisection on a sign-change bracket around the seed.
        let mut delta = 1e-7;
        while delta < 1.0 {
            let lo = (seed - delta).max(0.0);
            let hi = (seed + delta).min(1.0);
            let (flo, fhi) = (s(lo), s(hi));
            if flo == 0.0 {
                return Ok(finish_root(lo, seed, node));
            }
            if fhi == 0.0 {
                return Ok(finish_root(hi, seed, node));
            }
            if (flo < 0.0) != (fhi < 0.0) {
                let root = bisect(&s, lo, hi, flo);
                return Ok(finish_root(root, seed, node));
            }
            delta *= 4.0;
        }
        // No sign change even on the full interval: tangent root.
        Ok(seed)
    }

    /// Roots of `R_i(x) = 0` for every node, the solvers' initial guess.
    pub fn local_roots(&self) -> Result<Array1<f64>> {
        let mut rho = Array1::zeros(self.len());
        for i in 0..self.len() {
            rho[i] = self.solve(i, 0.0, None).map_err(|_| {
                Error::NoInteriorRoot(format!(
                    "node {i}: the local quadratic has no root in (0, 1)"
                ))
            })?;
        }
        Ok(rho)
    }
}

fn finish_root(root: f64, seed: f64, node: usize) -> f64 {
    debug_assert!(
        (root - seed).abs() < 1e-6,
        "node {node}: bisection ({root}) drifted from the closed-form root ({seed})"
    );
    root
}

/// The root where the quadratic `a x^2 + b x + c` crosses downward.
fn descending_crossing(a: f64, b: f64, roots: &[f64]) -> Option<f64> {
    roots.iter().copied().find(|r| 2.0 * a * r + b < 0.0)
}

/// Real roots of `a x^2 + b x + c`, in no particular order.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
    if q == 0.0 {
        // b == 0 and c == 0.
        return vec![0.0, 0.0];
    }
    vec![q / a, c / q]
}

/// Bisection on a sign-change bracket, to an interval of width 1e-14.
fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let mut neg_lo = flo < 0.0;
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == neg_lo {
            lo = mid;
            neg_lo = fm < 0.0;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root in (0, 1) of `R_i(x) = rhs`, with `R_i` built from `g` and `params`.
pub fn solve_node_quadratic(
    g: &WeightedGraph,
    params: &ChainParams,
    node: usize,
    rhs: f64,
) -> Result<f64> {
    NodeQuadratics::new(g, params).solve(node, rhs, None)
}

/// Starting point for the solvers: the local roots when every node has one,
/// otherwise the cube center.
pub fn default_start(g: &WeightedGraph, params: &ChainParams) -> StateVector {
    match NodeQuadratics::new(g, params).local_roots() {
        Ok(rho) => StateVector::new(rho).expect("local roots are interior"),
        Err(_) => StateVector::constant(g.node_count(), 0.5).expect("valid"),
    }
}

fn warn_if_reducible(params: &ChainParams) {
    if !params.is_irreducible() {
        log::warn!(
            "some alpha or beta vanishes; interior uniqueness of the steady state is not guaranteed"
        );
    }
}

/// Fixed-point iteration: starting from the local roots, each sweep solves
/// `R_i(x) = gh p_i (Lp)_i + gamma10 (Lp)_i` per node with the previous
/// iterate on the right.
///
/// Declares convergence when the sweep moves by less than `tol` in the sup
/// norm and the field residual is below `10 * tol`. Convergence is only
/// expected on nearly regular instances; elsewhere a lost bracket or an
/// exhausted iteration budget is a legal outcome and callers fall back to
/// [`newton_steady`].
pub fn iterate_steady(
    g: &WeightedGraph,
    params: &ChainParams,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    warn_if_reducible(params);
    let quad = NodeQuadratics::new(g, params);
    let rho = quad.local_roots()?;
    let lv = g.laplacian();
    let gh = params.gamma_hat();
    let g10 = params.gamma10();

    let mut p = rho;
    let r0 = field_residual(g, params, &p);
    if r0 < tol {
        return Ok(SteadyState::new(
            StateVector::new(p).expect("interior"),
            r0,
            Method::Iterate,
            0,
        ));
    }

    for k in 1..=max_iter {
        let lp = lv.apply(&p)?;
        let mut next = Array1::zeros(p.len());
        for i in 0..p.len() {
            let rhs = gh * p[i] * lp[i] + g10 * lp[i];
            next[i] = match quad.solve(i, rhs, Some(p[i])) {
                Ok(x) => x,
                Err(_) => {
                    return Err(Error::SolverFailed {
                        method: "iterate",
                        iterations: k,
                        residual: field_residual(g, params, &p),
                        last: p.to_vec(),
                    })
                }
            };
        }
        let diff = p
            .iter()
            .zip(next.iter())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        p = next;
        if diff < tol {
            let r = field_residual(g, params, &p);
            if r < 10.0 * tol {
                return Ok(SteadyState::new(
                    StateVector::new(p).expect("interior"),
                    r,
                    Method::Iterate,
                    k,
                ));
            }
        }
    }
    Err(Error::SolverFailed {
        method: "iterate",
        iterations: max_iter,
        residual: field_residual(g, params, &p),
        last: p.to_vec(),
    })
}

fn field_residual(g: &WeightedGraph, params: &ChainParams, p: &Array1<f64>) -> f64 {
    let mut f = Array1::zeros(p.len());
    dynamics::field_into(g, params, p, &mut f);
    dynamics::max_abs(&f)
}

/// Damped Newton on the stationarity system with the analytic Jacobian.
///
/// Takes the full step when it stays in the open cube and reduces the
/// residual, otherwise halves up to 30 times. Fails on a singular Jacobian or
/// when five consecutive iterations improve the residual by less than 1e-16.
pub fn newton_steady(
    g: &WeightedGraph,
    params: &ChainParams,
    p0: Option<&StateVector>,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams("tol must be positive".into()));
    }
    warn_if_reducible(params);
    let mut p = match p0 {
        Some(p) => p.as_array().clone(),
        None => default_start(g, params).as_array().clone(),
    };
    if p.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: p.len(),
        });
    }

    let mut f = Array1::zeros(p.len());
    dynamics::field_into(g, params, &p, &mut f);
    let mut r = dynamics::max_abs(&f);
    let mut stalled = 0_usize;

    for it in 0..max_iter {
        if r < tol {
            return Ok(SteadyState::new(
                StateVector::new(p).expect("in cube"),
                r,
                Method::Newton,
                it,
            ));
        }
        let state = StateVector::new(p.clone()).expect("in cube");
        let jac = dynamics::jacobian(g, params, &state)?;
        let delta = linalg::solve(&jac, &f).ok_or(Error::SolverFailed {
            method: "newton",
            iterations: it,
            residual: r,
            last: p.to_vec(),
        })?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let cand = &p - &(lambda * &delta);
            let inside = cand.iter().all(|&v| v > 0.0 && v < 1.0);
            if inside {
                let mut fc = Array1::zeros(p.len());
                dynamics::field_into(g, params, &cand, &mut fc);
                let rc = dynamics::max_abs(&fc);
                if rc < r {
                    if r - rc < 1e-16 {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    p = cand;
                    f = fc;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            stalled += 1;
        }
        if stalled >= 5 {
            return Err(Error::SolverFailed {
                method: "newton",
                iterations: it + 1,
                residual: r,
                last: p.to_vec(),
            });
        }
    }
    if r < tol {
        return Ok(SteadyState::new(
            StateVector::new(p).expect("in cube"),
            r,
            Method::Newton,
            max_iter,
        ));
    }
    Err(Error::SolverFailed {
        method: "newton",
        iterations: max_iter,
        residual: r,
        last: p.to_vec(),
    })
}

/// Solves for the steady state with the requested method; `Auto` tries
/// iterate, then Newton, then relaxation of the flow.
pub fn solve_steady(
    g: &WeightedGraph,
    params: &ChainParams,
    method: SolveMethod,
    tol: f64,
) -> Result<SteadyState> {
    match method {
        SolveMethod::Iterate => iterate_steady(g, params, tol, 500),
        SolveMethod::Newton => newton_steady(g, params, None, tol, 200),
        SolveMethod::Ode => {
            let start = default_start(g, params);
            dynamics::integrate_to_steady(g, params, &start, DEFAULT_DT, tol, DEFAULT_MAX_TIME)
        }
        SolveMethod::Auto => iterate_steady(g, params, tol, 500)
            .or_else(|e| {
                log::info!("iterate failed ({e}); falling back to newton");
                newton_steady(g, params, None, tol, 200)
            })
            .or_else(|e| {
                log::info!("newton failed ({e}); falling back to ode relaxation");
                let start = default_start(g, params);
                dynamics::integrate_to_steady(g, params, &start, DEFAULT_DT, tol, DEFAULT_MAX_TIME)
            }),
    }
}

/// Interior root of the uniform-instance quadratic
/// `gh d x^2 - (alpha + beta + gh d) x + beta = 0`.
///
/// For `gh = 0` (or `d = 0`) this is `beta / (alpha + beta)`. The degenerate
/// cases keep an interior root under a proviso: for `alpha = 0` the root is
/// `beta / (gh d)` provided `0 < beta < gh d`, and for `beta = 0` it is
/// `1 + alpha / (gh d)` provided `0 < alpha < -gh d`. The root lies below
/// `beta / (alpha + beta)` exactly when `gh > 0` and above it when `gh < 0`.
pub fn homogeneous_closed_form(alpha: f64, beta: f64, gamma_hat: f64, d: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("d", d)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidParams(format!(
                "{name} = {v} must be a nonnegative finite real"
            )));
        }
    }
    if !gamma_hat.is_finite() {
        return Err(Error::InvalidParams("gamma_hat must be finite".into()));
    }
    let a = gamma_hat * d;
    let b = -(alpha + beta + a);
    let c = beta;
    let interior: Vec<f64> = quadratic_roots(a, b, c)
        .into_iter()
        .filter(|r| *r > 0.0 && *r < 1.0)
        .collect();
    match interior.as_slice() {
        [root] => Ok(*root),
        [] => Err(Error::NoInteriorRoot(format!(
            "alpha = {alpha}, beta = {beta}, gamma_hat = {gamma_hat}, d = {d}"
        ))),
        // Rounding can push a boundary root of the quadratic just inside the
        // interval; R(0) >= 0 >= R(1) makes the descending crossing the
        // genuine one.
        roots => descending_crossing(a, b, roots).ok_or_else(|| {
            Error::NoInteriorRoot(format!(
                "alpha = {alpha}, beta = {beta}, gamma_hat = {gamma_hat}, d = {d}"
            ))
        }),
    }
}

/// Endemic equilibrium of the SIS special case (`alpha = 0`, `gamma10 = 0`,
/// uniform rates on a `d`-regular graph): the susceptible probability
/// `beta / (d gamma)`, present exactly when `0 < beta < d gamma`.
/// Otherwise the all-susceptible corner is the only equilibrium and `None`
/// is returned.
pub fn sis_equilibrium(beta: f64, gamma: f64, d: f64) -> Result<Option<f64>> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParams(format!(
            "beta = {beta} must be a nonnegative finite real"
        )));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParams(format!(
            "gamma = {gamma} must be a positive finite real"
        )));
    }
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidParams(format!(
            "d = {d} must be a positive finite real"
        )));
    }
    Ok(if beta > 0.0 && beta < d * gamma {
        Some(beta / (d * gamma))
    } else {
        None
    })
}

/// Population variance (1/N convention) of a state.
pub fn variance_of(p: &StateVector) -> f64 {
    let n = p.len() as f64;
    let mean = p.as_array().sum() / n;
    p.as_array().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Upper bound on the steady-state variance from the spectral gap:
/// `mean(beta) / (lambda_1 gh)` for `gh > 0`, `-mean(alpha) / (lambda_1 gh)`
/// for `gh < 0`.
pub fn variance_bound_value(g: &WeightedGraph, params: &ChainParams) -> Result<f64> {
    let gh = params.gamma_hat();
    if gh == 0.0 {
        return Err(Error::GammaHatZero);
    }
    let lambda1 = g.lambda_1()?;
    let n = params.len() as f64;
    Ok(if gh > 0.0 {
        params.beta().sum() / n / (lambda1 * gh)
    } else {
        -params.alpha().sum() / n / (lambda1 * gh)
    })
}

/// Outcome of the variance-bound check.
#[derive(Debug, Clone, Copy)]
pub struct VarianceCheck {
    pub lambda1: f64,
    pub variance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Solves the steady state by Newton and checks its variance against the
/// spectral-gap bound. Requires a connected graph and nonzero coupling
/// asymmetry.
pub fn variance_bound(g: &WeightedGraph, params: &ChainParams) -> Result<VarianceCheck> {
    let bound = variance_bound_value(g, params)?;
    let lambda1 = g.lambda_1()?;
    let s = newton_steady(g, params, None, 1e-12, 200)?;
    let variance = variance_of(s.p_bar());
    Ok(VarianceCheck {
        lambda1,
        variance,
        bound,
        holds: variance <= bound + 1e-10,
    })
}

/// Sign conditions of the local quadratic at the extrema of the steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremumCheck {
    pub node_max: usize,
    pub node_min: usize,
    pub r_max: f64,
    pub r_min: f64,
}

impl ExtremumCheck {
    /// `R(p_max) >= 0` and `R(p_min) <= 0`, within `slack`.
    pub fn holds(&self, slack: f64) -> bool {
        self.r_max >= -slack && self.r_min <= slack
    }
}

/// Evaluates the local quadratic at the argmax and argmin of the steady
/// state. At a maximum the Laplacian term is nonnegative, so `R` must be
/// nonnegative there; the mirror holds at a minimum. Ties pick the first
/// node in index order.
pub fn extremum_check(g: &WeightedGraph, params: &ChainParams, s: &SteadyState) -> ExtremumCheck {
    let quad = NodeQuadratics::new(g, params);
    let p = s.p_bar().as_array();
    let mut node_max = 0;
    let mut node_min = 0;
    for i in 1..p.len() {
        if p[i] > p[node_max] {
            node_max = i;
        }
        if p[i] < p[node_min] {
            node_min = i;
        }
    }
    ExtremumCheck {
        node_max,
        node_min,
        r_max: quad.eval(node_max, p[node_max]),
        r_min: quad.eval(node_min, p[node_min]),
    }
}

/// Gap in the network-averaged balance identity at a steady state:
///
/// ```text
/// -gh <d pb qb> - <(alpha + beta) pb> + <beta>  =  gh (1/N) <rb, L rb>
/// ```
///
/// where `<.>` is the node average and `rb = pb - <pb>`. Returns left minus
/// right; the identity holds to solver precision at any true steady state.
pub fn mean_balance_gap(g: &WeightedGraph, params: &ChainParams, s: &SteadyState) -> f64 {
    let n = g.node_count() as f64;
    let d = g.degrees();
    let p = s.p_bar().as_array();
    let gh = params.gamma_hat();

    let mut lhs = 0.0;
    for i in 0..p.len() {
        let qi = 1.0 - p[i];
        lhs += -gh * d[i] * p[i] * qi - (params.alpha()[i] + params.beta()[i]) * p[i]
            + params.beta()[i];
    }
    lhs /= n;

    let mean = p.sum() / n;
    let centered = p.mapv(|v| v - mean);
    let lv = g.laplacian();
    let rhs = gh * lv.quadratic_form(&centered).expect("matching length") / n;
    lhs - rhs
}
