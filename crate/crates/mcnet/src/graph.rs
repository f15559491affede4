//! Weighted undirected graphs and their combinatorial Laplacian.
//!
//! A graph on `N` nodes is stored as a dense symmetric weight matrix with a
//! zero diagonal. [`LaplacianView`] bundles the degree vector `d` (row sums of
//! the weights) with the Laplacian `L = D - W`; `L` vanishes on constant
//! vectors and its quadratic form is the weighted sum of squared differences
//! across edges.

use crate::error::{Error, Result};
use crate::linalg;
use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::path::Path;

/// Symmetric nonnegative weight matrix with zero diagonal.
///
/// Immutable after construction; cheap to share read-only across workers.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Array2<f64>,
}

impl WeightedGraph {
    /// Validates and wraps a weight matrix.
    pub fn new(weights: Array2<f64>) -> Result<Self> {
        let (rows, cols) = weights.dim();
        if rows != cols {
            return Err(Error::InvalidGraph(format!(
                "weight matrix is {rows}x{cols}, not square"
            )));
        }
        if rows == 0 {
            return Err(Error::InvalidGraph("node count must be positive".into()));
        }
        for i in 0..rows {
            if weights[[i, i]] != 0.0 {
                return Err(Error::InvalidGraph(format!(
                    "nonzero diagonal entry at node {i}"
                )));
            }
            for j in 0..cols {
                let w = weights[[i, j]];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidGraph(format!(
                        "weight[{i}][{j}] = {w} is not a nonnegative finite real"
                    )));
                }
                if weights[[i, j]] != weights[[j, i]] {
                    return Err(Error::InvalidGraph(format!(
                        "asymmetric weights at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n: rows, weights })
    }

    /// Builds a graph from `(u, v, w)` triples; missing pairs get weight 0.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("node count must be positive".into()));
        }
        let mut weights = Array2::zeros((n, n));
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
            if weights[[u, v]] != 0.0 {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
            }
            weights[[u, v]] = w;
            weights[[v, u]] = w;
        }
        Ok(Self { n, weights })
    }

    /// Parses the edge-list format.
    ///
    /// The first non-comment line is the node count `N`; every following
    /// non-comment line is `u v w` with 0-based indices `u != v` and `w > 0`.
    /// Lines starting with `#` are comments, blank lines are skipped, and a
    /// trailing `\r` is tolerated. Duplicate edges (in either orientation),
    /// self-loops, out-of-range indices, and non-positive weights are
    /// rejected.
    pub fn parse_edge_list(text: &str, source: &str) -> Result<Self> {
        let fail = |line: usize, msg: String| Error::Parse {
            file: source.to_string(),
            line,
            msg,
        };

        let mut n: Option<usize> = None;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let mut seen: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();

        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim_end_matches('\r').trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match n {
                None => {
                    let count: usize = line.parse().map_err(|_| {
                        fail(lineno, format!("expected node count, got {line:?}"))
                    })?;
                    if count == 0 {
                        return Err(fail(lineno, "node count must be positive".into()));
                    }
                    n = Some(count);
                }
                Some(count) => {
                    let mut fields = line.split_whitespace();
                    let (u, v, w) = match (fields.next(), fields.next(), fields.next()) {
                        (Some(u), Some(v), Some(w)) => (u, v, w),
                        _ => return Err(fail(lineno, format!("expected \"u v w\", got {line:?}"))),
                    };
                    if fields.next().is_some() {
                        return Err(fail(lineno, format!("trailing fields in {line:?}")));
                    }
                    let u: usize = u
                        .parse()
                        .map_err(|_| fail(lineno, format!("bad node index {u:?}")))?;
                    let v: usize = v
                        .parse()
                        .map_err(|_| fail(lineno, format!("bad node index {v:?}")))?;
                    let w: f64 = w
                        .parse()
                        .map_err(|_| fail(lineno, format!("bad weight {w:?}")))?;
                    if u >= count || v >= count {
                        return Err(fail(
                            lineno,
                            format!("edge ({u}, {v}) out of range for {count} nodes"),
                        ));
                    }
                    if u == v {
                        return Err(fail(lineno, format!("self-loop at node {u}")));
                    }
                    if !(w > 0.0) || !w.is_finite() {
                        return Err(fail(lineno, format!("weight must be positive, got {w}")));
                    }
                    let key = (u.min(v), u.max(v));
                    if !seen.insert(key) {
                        return Err(fail(lineno, format!("duplicate edge ({u}, {v})")));
                    }
                    edges.push((u, v, w));
                }
            }
        }

        let n = n.ok_or_else(|| fail(0, "missing node-count header".into()))?;
        Self::from_edges(n, &edges)
    }

    /// Loads an edge-list file from disk.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text, &path.display().to_string())
    }

    /// Serializes back to the edge-list format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weights[[i, j]];
                if w > 0.0 {
                    let _ = writeln!(out, "{i} {j} {w}");
                }
            }
        }
        out
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[[i, j]]
    }

    /// Weighted degree vector: `d_i` is the i-th row sum of the weights.
    pub fn degrees(&self) -> Array1<f64> {
        self.weights.sum_axis(ndarray::Axis(1))
    }

    /// Unordered positive-weight edges as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weights[[i, j]];
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        edges
    }

    /// Degree matrix minus weights, with the degree vector alongside.
    pub fn laplacian(&self) -> LaplacianView {
        let degrees = self.degrees();
        let mut laplacian = -self.weights.clone();
        for i in 0..self.n {
            laplacian[[i, i]] = degrees[i];
        }
        LaplacianView { degrees, laplacian }
    }

    /// True iff every node is reachable from node 0 through positive-weight
    /// edges. A single node with no edges counts as connected.
    pub fn is_connected(&self) -> bool {
        let mut visited = vec![false; self.n];
        let mut stack = vec![0_usize];
        visited[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..self.n {
                if !visited[j] && self.weights[[i, j]] > 0.0 {
                    visited[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }

    /// Spectral gap: the smallest nonzero Laplacian eigenvalue.
    ///
    /// Defined only for connected graphs with at least two nodes, where the
    /// zero eigenvalue is simple and the gap is strictly positive.
    pub fn lambda_1(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::NoSpectralGap);
        }
        if !self.is_connected() {
            return Err(Error::Disconnected(
                "the spectral gap and variance bound require a connected graph",
            ));
        }
        let eig = linalg::symmetric_eigenvalues(&self.laplacian().laplacian);
        Ok(eig[1])
    }
}

/// Degrees and Laplacian of a [`WeightedGraph`], precomputed together.
#[derive(Debug, Clone)]
pub struct LaplacianView {
    degrees: Array1<f64>,
    laplacian: Array2<f64>,
}

impl LaplacianView {
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &Array1<f64> {
        &self.degrees
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.laplacian
    }

    /// Matrix-vector product `L x`.
    pub fn apply(&self, x: &Array1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(self.laplacian.dot(x))
    }

    /// Quadratic form `<Lx, x>`.
    ///
    /// Equals the sum over unordered edges of `w_ij (x_i - x_j)^2`, hence is
    /// nonnegative and vanishes exactly on vectors constant on each connected
    /// component.
    pub fn quadratic_form(&self, x: &Array1<f64>) -> Result<f64> {
        let lx = self.apply(x)?;
        Ok(lx.dot(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path3() -> WeightedGraph {
        WeightedGraph::parse_edge_list("3\n0 1 1\n1 2 1\n", "<test>").unwrap()
    }

    #[test]
    fn parse_path_graph() {
        let g = path3();
        assert_eq!(g.node_count(), 3);
        let d = g.degrees();
        assert_eq!(d.to_vec(), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn parse_rejects_self_loop() {
        let err = WeightedGraph::parse_edge_list("2\n0 0 1\n", "<test>").unwrap_err();
        match err {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("self-loop"), "{msg}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_duplicate_and_bad_weight_and_range() {
        assert!(WeightedGraph::parse_edge_list("3\n0 1 1\n1 0 2\n", "<t>").is_err());
        assert!(WeightedGraph::parse_edge_list("2\n0 1 0\n", "<t>").is_err());
        assert!(WeightedGraph::parse_edge_list("2\n0 1 -1\n", "<t>").is_err());
        assert!(WeightedGraph::parse_edge_list("2\n0 2 1\n", "<t>").is_err());
        assert!(WeightedGraph::parse_edge_list("", "<t>").is_err());
        assert!(WeightedGraph::parse_edge_list("0\n", "<t>").is_err());
    }

    #[test]
    fn parse_accepts_comments_and_crlf() {
        let g = WeightedGraph::parse_edge_list("# a comment\r\n4\r\n0 1 1\r\n# mid\n1 2 1\n2 3 1\n3 0 1\n", "<t>")
            .unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.degrees().to_vec(), vec![2.0, 2.0, 2.0, 2.0]);
    }

    #[test]
    fn laplacian_of_single_edge() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let lv = g.laplacian();
        assert_eq!(lv.matrix(), &array![[1.0, -1.0], [-1.0, 1.0]]);
    }

    #[test]
    fn laplacian_of_isolated_node() {
        let g = WeightedGraph::from_edges(1, &[]).unwrap();
        let lv = g.laplacian();
        assert_eq!(lv.matrix(), &array![[0.0]]);
    }

    #[test]
    fn laplacian_of_weighted_edge() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 2.0)]).unwrap();
        let lv = g.laplacian();
        assert_eq!(lv.matrix(), &array![[2.0, -2.0], [-2.0, 2.0]]);
    }

    #[test]
    fn apply_kills_constants_and_matches_by_hand() {
        let g = path3();
        let lv = g.laplacian();
        let c = lv.apply(&array![0.7, 0.7, 0.7]).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-15));

        let g2 = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let lx = g2.laplacian().apply(&array![1.0, 0.0]).unwrap();
        assert_eq!(lx.to_vec(), vec![1.0, -1.0]);
    }

    #[test]
    fn apply_rejects_length_mismatch() {
        let g = path3();
        assert!(g.laplacian().apply(&array![1.0, 2.0]).is_err());
    }

    #[test]
    fn quadratic_form_examples() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        let lv = g.laplacian();
        assert_eq!(lv.quadratic_form(&array![0.3, 0.3]).unwrap(), 0.0);
        // Single unit edge, x = (1, 0): edge sum gives w (x0 - x1)^2 = 1.
        assert!((lv.quadratic_form(&array![1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn connectivity() {
        assert!(path3().is_connected());
        assert!(!WeightedGraph::from_edges(2, &[]).unwrap().is_connected());
        let c4 = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
            .unwrap();
        assert!(c4.is_connected());
        assert!(WeightedGraph::from_edges(1, &[]).unwrap().is_connected());
    }

    #[test]
    fn spectral_gap_known_graphs() {
        let p2 = WeightedGraph::from_edges(2, &[(0, 1, 1.0)]).unwrap();
        assert!((p2.lambda_1().unwrap() - 2.0).abs() < 1e-12);

        let k4 = WeightedGraph::from_edges(
            4,
            &[
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        )
        .unwrap();
        assert!((k4.lambda_1().unwrap() - 4.0).abs() < 1e-10);

        let c4 = WeightedGraph::from_edges(4, &[(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)])
            .unwrap();
        assert!((c4.lambda_1().unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_gap_rejects_disconnected_and_single() {
        let g = WeightedGraph::from_edges(2, &[]).unwrap();
        assert!(matches!(g.lambda_1(), Err(Error::Disconnected(_))));
        let one = WeightedGraph::from_edges(1, &[]).unwrap();
        assert!(matches!(one.lambda_1(), Err(Error::NoSpectralGap)));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.5), (1, 2, 0.25)]).unwrap();
        let text = g.to_edge_list();
        let back = WeightedGraph::parse_edge_list(&text, "<round-trip>").unwrap();
        assert_eq!(g, back);
    }
}
