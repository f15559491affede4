//! Relative entropy to a reference state and the quantities controlling its
//! descent along the flow.
//!
//! For an interior reference `pb` the per-node relative entropy is
//! `pb ln(pb/p) + qb ln(qb/q)`; the total over nodes is nonnegative and
//! vanishes exactly at `p = pb`. Along the flow its time derivative is
//! `sum_i (qb_i/q_i - pb_i/p_i) F(p)_i`, which decomposes into two
//! nonpositive quadratic terms (the descent margins) plus the coupling
//! pairings computed by [`ratio_pairing`].

use crate::dynamics::{self, ChainParams, StateVector};
use crate::error::{Error, Result};
use crate::graph::{LaplacianView, WeightedGraph};
use crate::steady::SteadyState;
use ndarray::Array1;

/// Inputs closer to a face than this are flagged as near-boundary.
pub const NEAR_BOUNDARY: f64 = 1e-12;

/// Floor applied inside logarithms so near-boundary states produce huge but
/// finite values instead of NaNs.
const LOG_FLOOR: f64 = 1e-300;

/// A reference passed to [`entropy_rate`] must be converged at least this far.
pub const REFERENCE_RESIDUAL_MAX: f64 = 1e-8;

/// Relative entropy of `p` with respect to an interior reference together
/// with its flow derivative and the two descent margins.
#[derive(Debug, Clone, Copy)]
pub struct EntropyReport {
    /// Relative entropy in nats; nonnegative, zero only at the reference.
    pub value: f64,
    /// Time derivative of the entropy along the flow.
    pub rate: f64,
    /// `sum_i alpha_i (qb_i - q_i)^2 / (qb_i q_i)`, nonnegative.
    pub margin_alpha: f64,
    /// `sum_i beta_i (p_i - pb_i)^2 / (pb_i p_i)`, nonnegative.
    pub margin_beta: f64,
    /// Set when some component of `p` is within [`NEAR_BOUNDARY`] of a face;
    /// values are then dominated by the logarithm floor and should not be
    /// trusted blindly.
    pub near_boundary: bool,
}

fn ln_floored(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// Unvalidated entropy kernel shared with the integrator. Assumes `p_bar` is
/// interior and `p` lies in the cube; returns infinity when `p` touches a
/// face exactly.
pub(crate) fn relative_entropy_raw(p: &Array1<f64>, p_bar: &Array1<f64>) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let (pi, pbi) = (p[i], p_bar[i]);
        if pi == 0.0 || pi == 1.0 {
            return f64::INFINITY;
        }
        let (qi, qbi) = (1.0 - pi, 1.0 - pbi);
        total += pbi * (ln_floored(pbi) - ln_floored(pi)) + qbi * (ln_floored(qbi) - ln_floored(qi));
    }
    total
}

fn check_interior(v: &StateVector) -> Result<()> {
    for (i, &x) in v.as_array().iter().enumerate() {
        if x <= 0.0 || x >= 1.0 {
            return Err(Error::NotInterior { index: i, value: x });
        }
    }
    Ok(())
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Sum of per-node relative entropies of `p` with respect to `p_bar`.
///
/// The reference must be strictly interior. Returns infinity when some
/// component of `p` sits exactly on a face.
pub fn relative_entropy(p: &StateVector, p_bar: &StateVector) -> Result<f64> {
    check_same_len(p_bar.len(), p.len())?;
    check_interior(p_bar)?;
    Ok(relative_entropy_raw(p.as_array(), p_bar.as_array()))
}

/// Time derivative of the relative entropy along the flow at `p`:
/// `sum_i (qb_i/q_i - pb_i/p_i) F(p)_i`.
///
/// `p` must be strictly interior and the reference must be a verified steady
/// state (residual below [`REFERENCE_RESIDUAL_MAX`]).
pub fn entropy_rate(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &StateVector,
    reference: &SteadyState,
) -> Result<f64> {
    check_same_len(reference.p_bar().len(), p.len())?;
    check_interior(p)?;
    check_interior(reference.p_bar())?;
    if reference.residual() >= REFERENCE_RESIDUAL_MAX {
        return Err(Error::UnverifiedSteadyState {
            residual: reference.residual(),
            required: REFERENCE_RESIDUAL_MAX,
        });
    }
    let f = dynamics::vector_field_w(g, params, p)?;
    let pb = reference.p_bar().as_array();
    let mut rate = 0.0;
    for i in 0..p.len() {
        let pi = p.get(i);
        let qi = 1.0 - pi;
        let pbi = pb[i];
        let qbi = 1.0 - pbi;
        rate += (qbi / qi - pbi / pi) * f[i];
    }
    Ok(rate)
}

/// Entropy value, rate, and descent margins in one report.
pub fn entropy_report(
    g: &WeightedGraph,
    params: &ChainParams,
    p: &StateVector,
    reference: &SteadyState,
) -> Result<EntropyReport> {
    let value = relative_entropy(p, reference.p_bar())?;
    let rate = entropy_rate(g, params, p, reference)?;
    let pb = reference.p_bar().as_array();
    let mut margin_alpha = 0.0;
    let mut margin_beta = 0.0;
    for i in 0..p.len() {
        let pi = p.get(i);
        let qi = 1.0 - pi;
        let pbi = pb[i];
        let qbi = 1.0 - pbi;
        margin_alpha += params.alpha()[i] * (qbi - qi) * (qbi - qi) / (qbi * qi);
        margin_beta += params.beta()[i] * (pi - pbi) * (pi - pbi) / (pbi * pi);
    }
    Ok(EntropyReport {
        value,
        rate,
        margin_alpha,
        margin_beta,
        near_boundary: p.boundary_distance() < NEAR_BOUNDARY,
    })
}

fn check_open_interval(x: &Array1<f64>) -> Result<()> {
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::NotInterior { index: i, value: v });
        }
    }
    Ok(())
}

/// Symmetrized pairing of the Laplacian against component ratios:
/// `sum_i [ (y_i/x_i)(Lx)_i + (x_i/y_i)(Ly)_i ]`.
///
/// Both arguments must lie strictly inside (0, 1) per component. The value is
/// zero when `x = y` (and, more generally, whenever `Lx = Ly = 0`). This is
/// the quantity that multiplies the couplings in the entropy-rate
/// decomposition; see the fuzz suites for its measured sign behavior.
pub fn ratio_pairing(lv: &LaplacianView, x: &Array1<f64>, y: &Array1<f64>) -> Result<f64> {
    check_same_len(lv.n(), x.len())?;
    check_same_len(lv.n(), y.len())?;
    check_open_interval(x)?;
    check_open_interval(y)?;
    let lx = lv.apply(x)?;
    let ly = lv.apply(y)?;
    let mut total = 0.0;
    for i in 0..x.len() {
        total += y[i] / x[i] * lx[i] + x[i] / y[i] * ly[i];
    }
    Ok(total)
}

/// Pairing of the Laplacian against componentwise odds:
/// `sum_i x_i / (1 - x_i) * (Lx)_i`.
///
/// Nonnegative for every `x` strictly inside (0, 1), and zero exactly when
/// `x` is constant on each connected component.
pub fn odds_pairing(lv: &LaplacianView, x: &Array1<f64>) -> Result<f64> {
    check_same_len(lv.n(), x.len())?;
    check_open_interval(x)?;
    let lx = lv.apply(x)?;
    let mut total = 0.0;
    for i in 0..x.len() {
        total += x[i] / (1.0 - x[i]) * lx[i];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::steady::Method;
    use ndarray::array;

    fn p2() -> WeightedGraph {
        WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap()
    }

    /// Edge-sum form of the ratio pairing, used as an independent route.
    fn ratio_pairing_edges(g: &WeightedGraph, x: &Array1<f64>, y: &Array1<f64>) -> f64 {
        let mut total = 0.0;
        for (i, j, w) in g.edges() {
            total += w * (y[i] / x[i] - y[j] / x[j]) * (x[i] - x[j]);
            total += w * (x[i] / y[i] - x[j] / y[j]) * (y[i] - y[j]);
        }
        total
    }

    #[test]
    fn entropy_is_zero_at_reference() {
        let p = StateVector::from_slice(&[0.3, 0.8]).unwrap();
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn scalar_entropy_value() {
        let p = StateVector::from_slice(&[0.25]).unwrap();
        let pb = StateVector::from_slice(&[0.5]).unwrap();
        let e = relative_entropy(&p, &pb).unwrap();
        let expected = 0.5 * (2.0_f64).ln() + 0.5 * (2.0_f64 / 3.0).ln();
        assert!((e - expected).abs() < 1e-15);
        assert!((e - 0.143841).abs() < 1e-6);
    }

    #[test]
    fn entropy_adds_over_nodes() {
        let p = StateVector::from_slice(&[0.25, 0.7, 0.4]).unwrap();
        let pb = StateVector::from_slice(&[0.5, 0.5, 0.9]).unwrap();
        let total = relative_entropy(&p, &pb).unwrap();
        let mut sum = 0.0;
        for i in 0..3 {
            let pi = StateVector::from_slice(&[p.get(i)]).unwrap();
            let pbi = StateVector::from_slice(&[pb.get(i)]).unwrap();
            sum += relative_entropy(&pi, &pbi).unwrap();
        }
        assert!((total - sum).abs() < 1e-14);
    }

    #[test]
    fn entropy_rejects_boundary_reference_and_is_infinite_on_faces() {
        let p = StateVector::from_slice(&[0.5]).unwrap();
        let pb = StateVector::from_slice(&[1.0]).unwrap();
        assert!(matches!(
            relative_entropy(&p, &pb),
            Err(Error::NotInterior { .. })
        ));
        let face = StateVector::from_slice(&[0.0]).unwrap();
        let interior = StateVector::from_slice(&[0.5]).unwrap();
        assert!(relative_entropy(&face, &interior).unwrap().is_infinite());
    }

    fn single_chain_reference(p_bar: f64) -> SteadyState {
        SteadyState::new(
            StateVector::from_slice(&[p_bar]).unwrap(),
            0.0,
            Method::ClosedForm,
            0,
        )
    }

    #[test]
    fn rate_vanishes_at_steady_state() {
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let params = ChainParams::uniform(1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let s = single_chain_reference(0.5);
        let rate = entropy_rate(&g, &params, s.p_bar(), &s).unwrap();
        assert!(rate.abs() < 1e-15);
    }

    #[test]
    fn single_chain_rate_value() {
        // alpha = beta = 1, p = 0.25: rate = -(alpha+beta)(p - pb)^2 / (pq) = -2/3.
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let params = ChainParams::uniform(1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let s = single_chain_reference(0.5);
        let p = StateVector::from_slice(&[0.25]).unwrap();
        let rate = entropy_rate(&g, &params, &p, &s).unwrap();
        assert!((rate + 2.0 / 3.0).abs() < 1e-14, "rate = {rate}");
    }

    #[test]
    fn rate_rejects_boundary_state_and_unverified_reference() {
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let params = ChainParams::uniform(1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let s = single_chain_reference(0.5);
        let face = StateVector::from_slice(&[1.0]).unwrap();
        assert!(matches!(
            entropy_rate(&g, &params, &face, &s),
            Err(Error::NotInterior { .. })
        ));

        let sloppy = SteadyState::new(
            StateVector::from_slice(&[0.5]).unwrap(),
            1e-3,
            Method::Ode,
            10,
        );
        let p = StateVector::from_slice(&[0.25]).unwrap();
        assert!(matches!(
            entropy_rate(&g, &params, &p, &sloppy),
            Err(Error::UnverifiedSteadyState { .. })
        ));
    }

    /// The rate equals the two descent margins plus the coupling pairings.
    /// The reference here is constructed so the steady-state equation holds
    /// exactly, with distinct components to exercise the coupling terms.
    #[test]
    fn rate_decomposes_into_margins_and_pairings() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 0.5)]).unwrap();
        let (pb0, pb1) = (0.9, 0.3);
        let gamma10 = 1.0;
        let beta = array![1.8, 0.2];
        // Solve the stationarity condition for alpha at each node.
        let alpha = array![
            (beta[0] * (1.0 - pb0) + gamma10 * (1.0 - pb0) * 0.5 * pb1) / pb0,
            (beta[1] * (1.0 - pb1) + gamma10 * (1.0 - pb1) * 0.5 * pb0) / pb1,
        ];
        let params = ChainParams::new(alpha, beta, 0.0, gamma10).unwrap();
        let pb = StateVector::from_slice(&[pb0, pb1]).unwrap();
        let f = dynamics::vector_field_w(&g, &params, &pb).unwrap();
        assert!(dynamics::max_abs(&f) < 1e-14, "reference not steady");
        let s = SteadyState::new(pb, dynamics::max_abs(&f), Method::ClosedForm, 0);

        let p = StateVector::from_slice(&[0.45, 0.2]).unwrap();
        let report = entropy_report(&g, &params, &p, &s).unwrap();
        let lv = g.laplacian();
        let q = p.as_array().mapv(|v| 1.0 - v);
        let qb = s.p_bar().as_array().mapv(|v| 1.0 - v);
        let pairing_q = ratio_pairing(&lv, &q, &qb).unwrap();
        let pairing_p = ratio_pairing(&lv, p.as_array(), s.p_bar().as_array()).unwrap();
        let reconstructed = -report.margin_alpha - report.margin_beta
            + params.gamma01() * pairing_q
            + params.gamma10() * pairing_p;
        assert!(
            (report.rate - reconstructed).abs() < 1e-12,
            "rate {} vs decomposition {}",
            report.rate,
            reconstructed
        );
        assert!(report.margin_alpha >= 0.0 && report.margin_beta >= 0.0);
        assert!(!report.near_boundary);
    }

    #[test]
    fn ratio_pairing_equality_cases() {
        let lv = p2().laplacian();
        let x = array![0.3, 0.7];
        assert!(ratio_pairing(&lv, &x, &x).unwrap().abs() < 1e-15);
        // Distinct constants: both Laplacian images vanish.
        let c1 = array![0.4, 0.4];
        let c2 = array![0.8, 0.8];
        assert!(ratio_pairing(&lv, &c1, &c2).unwrap().abs() < 1e-15);
    }

    /// Fixed interior pair where the pairing is strictly positive. Hand
    /// arithmetic: Lx = (0.25, -0.25), Ly = (0.6, -0.6), so the sum is
    /// 2(0.25) + 1.5(-0.25) + 0.5(0.6) + (2/3)(-0.6) = 0.025.
    #[test]
    fn ratio_pairing_takes_both_signs() {
        let lv = p2().laplacian();
        let x = array![0.45, 0.2];
        let y = array![0.9, 0.3];
        let s = ratio_pairing(&lv, &x, &y).unwrap();
        assert!((s - 0.025).abs() < 1e-14, "s = {s}");

        // Aligned-with-reference pairs are negative.
        let x2 = array![0.2, 0.7];
        let y2 = array![0.5, 0.5];
        assert!(ratio_pairing(&lv, &x2, &y2).unwrap() < 0.0);
    }

    #[test]
    fn ratio_pairing_matches_edge_expansion() {
        let g = WeightedGraph::from_edges(4, &[(0, 1, 1.5), (1, 2, 0.5), (2, 3, 2.0), (0, 2, 0.7)])
            .unwrap();
        let lv = g.laplacian();
        let x = array![0.15, 0.6, 0.45, 0.9];
        let y = array![0.5, 0.35, 0.8, 0.25];
        let via_matrix = ratio_pairing(&lv, &x, &y).unwrap();
        let via_edges = ratio_pairing_edges(&g, &x, &y);
        assert!((via_matrix - via_edges).abs() < 1e-12);
    }

    #[test]
    fn ratio_pairing_rejects_off_interval_input() {
        let lv = p2().laplacian();
        assert!(matches!(
            ratio_pairing(&lv, &array![0.0, 0.5], &array![0.5, 0.5]),
            Err(Error::NotInterior { .. })
        ));
        assert!(matches!(
            ratio_pairing(&lv, &array![0.5, 0.5], &array![0.5, 1.0]),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn odds_pairing_values() {
        let lv = p2().laplacian();
        assert!(odds_pairing(&lv, &array![0.6, 0.6]).unwrap().abs() < 1e-15);
        // (1/3)(-0.5) + 3(0.5) = 4/3.
        let v = odds_pairing(&lv, &array![0.25, 0.75]).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-14);
        assert!(matches!(
            odds_pairing(&lv, &array![0.25, 1.0]),
            Err(Error::NotInterior { .. })
        ));
    }

    #[test]
    fn near_boundary_flag_set() {
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let params = ChainParams::uniform(1, 1.0, 1.0, 0.0, 0.0).unwrap();
        let s = single_chain_reference(0.5);
        let p = StateVector::from_slice(&[1e-13]).unwrap();
        let report = entropy_report(&g, &params, &p, &s).unwrap();
        assert!(report.near_boundary);
        assert!(report.value.is_finite());
    }
}
