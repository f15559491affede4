//! Canonical instance families: graph constructors and the three parameter
//! presets exposed by the CLI.

use crate::dynamics::ChainParams;
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Cycle on `n >= 3` nodes with unit weights (2-regular).
pub fn cycle_graph(n: usize) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::InvalidGraph("a cycle needs at least 3 nodes".into()));
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// Path on `n >= 2` nodes with unit weights.
pub fn path_graph(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidGraph("a path needs at least 2 nodes".into()));
    }
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// Star with node 0 as hub, unit weights.
pub fn star_graph(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidGraph("a star needs at least 2 nodes".into()));
    }
    let edges: Vec<_> = (1..n).map(|i| (0, i, 1.0)).collect();
    WeightedGraph::from_edges(n, &edges)
}

/// Complete graph with unit weights ((n-1)-regular).
pub fn complete_graph(n: usize) -> Result<WeightedGraph> {
    if n < 2 {
        return Err(Error::InvalidGraph(
            "a complete graph needs at least 2 nodes".into(),
        ));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edges.push((i, j, 1.0));
        }
    }
    WeightedGraph::from_edges(n, &edges)
}

/// Circulant `d`-regular graph on `n` nodes with unit weights: node `i`
/// connects to `i +- 1, ..., i +- d/2`, plus the antipode `i + n/2` when `d`
/// is odd (which requires `n` even).
pub fn circulant_graph(n: usize, d: usize) -> Result<WeightedGraph> {
    if d == 0 || d >= n {
        return Err(Error::InvalidGraph(format!(
            "degree {d} is not realizable on {n} nodes"
        )));
    }
    if d % 2 == 1 && n % 2 == 1 {
        return Err(Error::InvalidGraph(format!(
            "odd degree {d} needs an even node count, got {n}"
        )));
    }
    if d % 2 == 0 && d / 2 > (n - 1) / 2 {
        return Err(Error::InvalidGraph(format!(
            "degree {d} exceeds the circulant range on {n} nodes"
        )));
    }
    let mut edges = Vec::new();
    for offset in 1..=d / 2 {
        for i in 0..n {
            let j = (i + offset) % n;
            edges.push((i.min(j), i.max(j), 1.0));
        }
    }
    if d % 2 == 1 {
        for i in 0..n / 2 {
            edges.push((i, i + n / 2, 1.0));
        }
    }
    edges.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    WeightedGraph::from_edges(n, &edges)
}

/// SIS instance: cycle (2-regular) with `alpha = 0`, `gamma10 = 0`; `beta`
/// is the recovery rate and `gamma` the per-edge transmission coupling.
/// State 0 is "susceptible", state 1 "infected"; the endemic equilibrium
/// exists when `0 < beta < 2 gamma`.
pub fn sis_preset(n: usize, beta: f64, gamma: f64) -> Result<(WeightedGraph, ChainParams)> {
    let g = cycle_graph(n)?;
    let params = ChainParams::uniform(n, 0.0, beta, gamma, 0.0)?;
    Ok((g, params))
}

/// Uniform instance on a `d`-regular circulant graph.
pub fn homogeneous_preset(
    n: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    gamma01: f64,
    gamma10: f64,
) -> Result<(WeightedGraph, ChainParams)> {
    let g = circulant_graph(n, d)?;
    let params = ChainParams::uniform(n, alpha, beta, gamma01, gamma10)?;
    Ok((g, params))
}

/// Symmetric-coupling instance (`gamma01 = gamma10`) with uniform rates on a
/// star, the heterogeneous graph making the synchronization effect visible:
/// the steady state is constant despite the degree spread.
pub fn gamma_hat_zero_preset(
    n: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<(WeightedGraph, ChainParams)> {
    let g = star_graph(n)?;
    let params = ChainParams::uniform(n, alpha, beta, gamma, gamma)?;
    Ok((g, params))
}
