//! The coupled vector field, its Jacobian, and the fixed-step integrator.
//!
//! Each node carries a two-state chain with rates `alpha` (leave state 0) and
//! `beta` (enter state 0); nodes linked by an edge interact bilinearly through
//! opposite states with global couplings `gamma01` and `gamma10`. Writing
//! `p_i` for the probability of state 0 at node `i` and `q_i = 1 - p_i`, the
//! flow is
//!
//! ```text
//! dp_i/dt = -alpha_i p_i + beta_i q_i
//!           - gamma01 p_i sum_j W_ij q_j + gamma10 q_i sum_j W_ij p_j
//! ```
//!
//! The same field can be expressed through the Laplacian `L` and the degrees
//! `d`, with `gh = gamma01 - gamma10`:
//!
//! ```text
//! dp_i/dt = gh d_i p_i^2 - (alpha_i + beta_i + gh d_i) p_i + beta_i
//!           - gh p_i (Lp)_i - gamma10 (Lp)_i
//! ```
//!
//! Both forms are implemented independently ([`vector_field_w`],
//! [`vector_field_laplacian`]) and cross-checked in the test suites. The flow
//! leaves the unit cube invariant; the integrator additionally clamps each
//! step to absorb the integrator's own O(dt^5) overshoot.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::steady::{Method, SteadyState};
use ndarray::{Array1, Array2};

/// Per-node rates plus the two global coupling constants.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    alpha: Array1<f64>,
    beta: Array1<f64>,
    gamma01: f64,
    gamma10: f64,
}

impl ChainParams {
    pub fn new(alpha: Array1<f64>, beta: Array1<f64>, gamma01: f64, gamma10: f64) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                expected: alpha.len(),
                got: beta.len(),
            });
        }
        if alpha.is_empty() {
            return Err(Error::InvalidParams("rate vectors must be non-empty".into()));
        }
        for (name, v) in [("alpha", &alpha), ("beta", &beta)] {
            if let Some((i, &bad)) = v.iter().enumerate().find(|(_, x)| !x.is_finite() || **x < 0.0)
            {
                return Err(Error::InvalidParams(format!(
                    "{name}[{i}] = {bad} is not a nonnegative finite rate"
                )));
            }
        }
        for (name, g) in [("gamma01", gamma01), ("gamma10", gamma10)] {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} = {g} is not a nonnegative finite coupling"
                )));
            }
        }
        Ok(Self {
            alpha,
            beta,
            gamma01,
            gamma10,
        })
    }

    /// Uniform rates across `n` nodes.
    pub fn uniform(n: usize, alpha: f64, beta: f64, gamma01: f64, gamma10: f64) -> Result<Self> {
        Self::new(
            Array1::from_elem(n, alpha),
            Array1::from_elem(n, beta),
            gamma01,
            gamma10,
        )
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }

    pub fn beta(&self) -> &Array1<f64> {
        &self.beta
    }

    pub fn gamma01(&self) -> f64 {
        self.gamma01
    }

    pub fn gamma10(&self) -> f64 {
        self.gamma10
    }

    /// Coupling asymmetry `gamma01 - gamma10`.
    pub fn gamma_hat(&self) -> f64 {
        self.gamma01 - self.gamma10
    }

    /// True iff every `alpha_i` and every `beta_i` is strictly positive.
    ///
    /// Interior uniqueness and stability of the steady state are guaranteed
    /// only in this case; solvers log a warning otherwise.
    pub fn is_irreducible(&self) -> bool {
        self.alpha.iter().all(|&a| a > 0.0) && self.beta.iter().all(|&b| b > 0.0)
    }
}

/// A point of the unit cube: one probability of state 0 per node.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(Array1<f64>);

impl StateVector {
    pub fn new(p: Array1<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParams("state must be non-empty".into()));
        }
        for (i, &v) in p.iter().enumerate() {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::OutsideCube { index: i, value: v });
            }
        }
        Ok(Self(p))
    }

    pub fn from_slice(p: &[f64]) -> Result<Self> {
        Self::new(Array1::from_vec(p.to_vec()))
    }

    /// The constant state `(value, ..., value)`.
    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(Array1::from_elem(n, value))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("contiguous")
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// True iff every component lies strictly inside (0, 1).
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0 && v < 1.0)
    }

    /// Distance from the closest face of the cube.
    pub fn boundary_distance(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| v.min(1.0 - v))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Time-stamped states with residual and optional entropy diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    /// Sup-norm of the vector field at each sample.
    pub residuals: Vec<f64>,
    /// Relative entropy to the reference steady state, when one was supplied.
    pub entropies: Option<Vec<f64>>,
    /// Number of component clamps applied after integration steps.
    pub clamped: usize,
    /// Largest distance outside [0, 1] observed before clamping.
    pub max_overshoot: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("non-empty trajectory")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residuals.last().expect("non-empty trajectory")
    }

    /// Writes the `t,p_0,...,p_{N-1},residual[,entropy]` CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.states.first().map_or(0, StateVector::len);
        write!(out, "t")?;
        for i in 0..n {
            write!(out, ",p_{i}")?;
        }
        write!(out, ",residual")?;
        if self.entropies.is_some() {
            write!(out, ",entropy")?;
        }
        writeln!(out)?;
        for k in 0..self.len() {
            write!(out, "{:.12e}", self.times[k])?;
            for &v in self.states[k].as_slice() {
                write!(out, ",{v:.12e}")?;
            }
            write!(out, ",{:.12e}", self.residuals[k])?;
            if let Some(e) = &self.entropies {
                write!(out, ",{:.12e}", e[k])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn check_dims(g: &WeightedGraph, params: &ChainParams, len: usize) -> Result<()> {
    if params.len() != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: params.len(),
        });
    }
    if len != g.node_count() {
        return Err(Error::DimensionMismatch {
            expected: g.node_count(),
            got: len,
        });
    }
    Ok(())
}

/// Evaluates the field directly from the weight matrix, without validation.
/// `out` must have length `n`.
pub(crate) fn field_into(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &Array1<f64>,
    out: &mut Array1<f64>,
) {
    let n = g.node_count();
    let w = g.weights();
    for i in 0..n {
        let mut sum_q = 0.0;
        let mut sum_p = 0.0;
        for j in 0..n {
            let wij = w[[i, j]];
            if wij != 0.0 {
                sum_p += wij * p[j];
                sum_q += wij * (1.0 - p[j]);
            }
        }
        let pi = p[i];
        let qi = 1.0 - pi;
        out[i] = -params.alpha[i] * pi + params.beta[i] * qi - params.gamma01 * pi * sum_q
            + params.gamma10 * qi * sum_p;
    }
}

/// The field in weight-matrix form.
pub fn vector_field_w(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &StateVector,
) -> Result<Array1<f64>> {
    check_dims(g, params, p.len())?;
    let mut out = Array1::zeros(p.len());
    field_into(g, params, p.as_array(), &mut out);
    Ok(out)
}

/// The field in Laplacian form; algebraically identical to
/// [`vector_field_w`] but evaluated through `d` and `L p`.
pub fn vector_field_laplacian(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &StateVector,
) -> Result<Array1<f64>> {
    check_dims(g, params, p.len())?;
    let lv = g.laplacian();
    let lp = lv.apply(p.as_array())?;
    let gh = params.gamma_hat();
    let n = p.len();
    let mut out = Array1::zeros(n);
    for i in 0..n {
        let pi = p.get(i);
        let di = lv.degrees()[i];
        out[i] = gh * di * pi * pi - (params.alpha[i] + params.beta[i] + gh * di) * pi
            + params.beta[i]
            - gh * pi * lp[i]
            - params.gamma10 * lp[i];
    }
    Ok(out)
}

/// Sup-norm of the field at `p`.
pub fn residual(g: &WeightedGraph, params: &ChainParams, p: &StateVector) -> Result<f64> {
    Ok(max_abs(&vector_field_w(g, params, p)?))
}

pub(crate) fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Analytic Jacobian of the field.
///
/// Diagonal: `-alpha_i - beta_i - gamma01 sum_j W_ij q_j - gamma10 sum_j W_ij p_j`.
/// Off-diagonal: `W_ij (gamma01 p_i + gamma10 q_i)`.
pub fn jacobian(g: &WeightedGraph, params: &ChainParams, p: &StateVector) -> Result<Array2<f64>> {
    check_dims(g, params, p.len())?;
    let n = p.len();
    let w = g.weights();
    let mut jac = Array2::zeros((n, n));
    for i in 0..n {
        let pi = p.get(i);
        let qi = 1.0 - pi;
        let mut sum_q = 0.0;
        let mut sum_p = 0.0;
        for j in 0..n {
            let wij = w[[i, j]];
            if wij != 0.0 {
                sum_p += wij * p.get(j);
                sum_q += wij * (1.0 - p.get(j));
                jac[[i, j]] = wij * (params.gamma01 * pi + params.gamma10 * qi);
            }
        }
        jac[[i, i]] =
            -params.alpha[i] - params.beta[i] - params.gamma01 * sum_q - params.gamma10 * sum_p;
    }
    Ok(jac)
}

/// Field component on a face of the cube.
///
/// Requires `p_face` to sit exactly on a face (`p[face]` is 0 or 1). On the
/// `p = 0` face the component is `beta - gamma10 (Lp)_i >= beta`; on the
/// `p = 1` face it is `-alpha - gamma01 (Lp)_i <= -alpha`. With strictly
/// positive rates the flow therefore points strictly inward.
pub fn boundary_inwardness(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &StateVector,
    face: usize,
) -> Result<f64> {
    check_dims(g, params, p.len())?;
    if face >= p.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: face,
        });
    }
    let v = p.get(face);
    if v != 0.0 && v != 1.0 {
        return Err(Error::NotOnFace {
            index: face,
            value: v,
        });
    }
    let lp_face = g.laplacian().apply(p.as_array())?[face];
    Ok(if v == 0.0 {
        params.beta[face] - params.gamma10 * lp_face
    } else {
        -params.alpha[face] - params.gamma01 * lp_face
    })
}

/// Validates a reference steady state for entropy recording.
fn check_reference(reference: &SteadyState, n: usize) -> Result<()> {
    if reference.p_bar().len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: reference.p_bar().len(),
        });
    }
    if !reference.p_bar().is_interior() {
        let p = reference.p_bar();
        let i = (0..n)
            .find(|&i| p.get(i) <= 0.0 || p.get(i) >= 1.0)
            .unwrap_or(0);
        return Err(Error::NotInterior {
            index: i,
            value: p.get(i),
        });
    }
    Ok(())
}

/// Classic fixed-step fourth-order Runge-Kutta over `[0, t_end]`.
///
/// Every step is recorded with its residual; when `reference` is given the
/// relative entropy to it is recorded as well. Components are clamped back
/// to [0, 1] after each step and the clamp count and largest pre-clamp
/// overshoot are reported on the trajectory.
pub fn integrate(
    g: &WeightedGraph,
    params: &ChainParams,
    p0: &StateVector,
    dt: f64,
    t_end: f64,
    reference: Option<&SteadyState>,
) -> Result<Trajectory> {
    check_dims(g, params, p0.len())?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidParams(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if let Some(r) = reference {
        check_reference(r, p0.len())?;
    }

    let steps = (t_end / dt).ceil() as usize;
    let mut tr = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        residuals: Vec::with_capacity(steps + 1),
        entropies: reference.map(|_| Vec::with_capacity(steps + 1)),
        clamped: 0,
        max_overshoot: 0.0,
    };

    let n = p0.len();
    let mut p = p0.as_array().clone();
    let mut f_cur = Array1::zeros(n);
    field_into(g, params, &p, &mut f_cur);

    let record = |tr: &mut Trajectory, t: f64, p: &Array1<f64>, f: &Array1<f64>| {
        tr.times.push(t);
        tr.states.push(StateVector(p.clone()));
        tr.residuals.push(max_abs(f));
        if let (Some(es), Some(r)) = (tr.entropies.as_mut(), reference) {
            es.push(crate::entropy::relative_entropy_raw(p, r.p_bar().as_array()));
        }
    };
    record(&mut tr, 0.0, &p, &f_cur);

    let mut k2 = Array1::zeros(n);
    let mut k3 = Array1::zeros(n);
    let mut k4 = Array1::zeros(n);
    let mut stage = Array1::zeros(n);

    for step in 1..=steps {
        // k1 is the field at the current point, already in f_cur.
        for i in 0..n {
            stage[i] = p[i] + 0.5 * dt * f_cur[i];
        }
        field_into(g, params, &stage, &mut k2);
        for i in 0..n {
            stage[i] = p[i] + 0.5 * dt * k2[i];
        }
        field_into(g, params, &stage, &mut k3);
        for i in 0..n {
            stage[i] = p[i] + dt * k3[i];
        }
        field_into(g, params, &stage, &mut k4);
        for i in 0..n {
            p[i] += dt / 6.0 * (f_cur[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        for v in p.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite { step });
            }
            if *v < 0.0 {
                tr.max_overshoot = tr.max_overshoot.max(-*v);
                *v = 0.0;
                tr.clamped += 1;
            } else if *v > 1.0 {
                tr.max_overshoot = tr.max_overshoot.max(*v - 1.0);
                *v = 1.0;
                tr.clamped += 1;
            }
        }

        field_into(g, params, &p, &mut f_cur);
        record(&mut tr, step as f64 * dt, &p, &f_cur);
    }

    if tr.clamped > 0 {
        log::debug!(
            "integrator clamped {} components (max overshoot {:.3e})",
            tr.clamped,
            tr.max_overshoot
        );
    }
    Ok(tr)
}

/// Integrates until the residual drops below `tol`.
///
/// Fails with the best state seen when `max_time` is reached first.
pub fn integrate_to_steady(
    g: &WeightedGraph,
    params: &ChainParams,
    p0: &StateVector,
    dt: f64,
    tol: f64,
    max_time: f64,
) -> Result<SteadyState> {
    check_dims(g, params, p0.len())?;
    if !(dt > 0.0) || !(tol > 0.0) || !(max_time > 0.0) {
        return Err(Error::InvalidParams(
            "dt, tol, and max_time must all be positive".into(),
        ));
    }
    if !params.is_irreducible() {
        log::warn!("some alpha or beta vanishes; the steady state may sit on the boundary");
    }

    let n = p0.len();
    let mut p = p0.as_array().clone();
    let mut f_cur = Array1::zeros(n);
    field_into(g, params, &p, &mut f_cur);
    let mut best = p.clone();
    let mut best_residual = max_abs(&f_cur);

    let mut k2 = Array1::zeros(n);
    let mut k3 = Array1::zeros(n);
    let mut k4 = Array1::zeros(n);
    let mut stage = Array1::zeros(n);

    let steps = (max_time / dt).ceil() as usize;
    for step in 1..=steps {
        let r = max_abs(&f_cur);
        if r < tol {
            return Ok(SteadyState::new(
                StateVector(p),
                r,
                Method::Ode,
                step - 1,
            ));
        }
        for i in 0..n {
            stage[i] = p[i] + 0.5 * dt * f_cur[i];
        }
        field_into(g, params, &stage, &mut k2);
        for i in 0..n {
            stage[i] = p[i] + 0.5 * dt * k2[i];
        }
        field_into(g, params, &stage, &mut k3);
        for i in 0..n {
            stage[i] = p[i] + dt * k3[i];
        }
        field_into(g, params, &stage, &mut k4);
        for i in 0..n {
            p[i] += dt / 6.0 * (f_cur[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !p[i].is_finite() {
                return Err(Error::NonFinite { step });
            }
            p[i] = p[i].clamp(0.0, 1.0);
        }
        field_into(g, params, &p, &mut f_cur);
        let r = max_abs(&f_cur);
        if r < best_residual {
            best_residual = r;
            best.assign(&p);
        }
    }

    let r = max_abs(&f_cur);
    if r < tol {
        return Ok(SteadyState::new(StateVector(p), r, Method::Ode, steps));
    }
    Err(Error::MaxTimeExceeded {
        max_time,
        residual: best_residual,
        best: best.to_vec(),
    })
}
