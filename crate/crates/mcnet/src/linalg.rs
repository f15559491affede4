//! Dense linear-algebra kernels: LU solve and symmetric eigenvalues.
//!
//! Everything here runs at desk scale (N up to a couple thousand), so plain
//! dense algorithms are used throughout.

use ndarray::{Array1, Array2};

/// Solves `A x = b` by LU factorization with partial pivoting.
///
/// Returns `None` when a pivot is smaller than `1e-14` times the largest
/// magnitude in `A` (singular to working precision).
pub(crate) fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    debug_assert_eq!(b.len(), n);

    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = lu.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let tiny = 1e-14 * scale;

    for col in 0..n {
        // Partial pivot.
        let mut pivot_row = col;
        let mut pivot_val = lu[[col, col]].abs();
        for row in col + 1..n {
            let v = lu[[row, col]].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val < tiny {
            return None;
        }
        if pivot_row != col {
            for k in 0..n {
                let tmp = lu[[col, k]];
                lu[[col, k]] = lu[[pivot_row, k]];
                lu[[pivot_row, k]] = tmp;
            }
            x.swap(col, pivot_row);
        }
        for row in col + 1..n {
            let factor = lu[[row, col]] / lu[[col, col]];
            if factor != 0.0 {
                for k in col + 1..n {
                    lu[[row, k]] -= factor * lu[[col, k]];
                }
                x[row] -= factor * x[col];
            }
        }
    }

    // Back substitution.
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in row + 1..n {
            acc -= lu[[row, k]] * x[k];
        }
        x[row] = acc / lu[[row, row]];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix in ascending order, computed by cyclic
/// Jacobi sweeps. Deterministic and accurate to near machine precision.
pub(crate) fn symmetric_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), n);
    if n == 1 {
        return vec![a[[0, 0]]];
    }

    let mut m = a.clone();
    let scale = m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = 1e-15 * scale;
    let max_sweeps = 64;

    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[[i, j]].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k != p && k != q {
                        let akp = m[[k, p]];
                        let akq = m[[k, q]];
                        m[[k, p]] = c * akp - s * akq;
                        m[[p, k]] = m[[k, p]];
                        m[[k, q]] = s * akp + c * akq;
                        m[[q, k]] = m[[k, q]];
                    }
                }
                m[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                m[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solve_small_system() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let b = array![5.0, 10.0];
        let x = solve(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let b = array![1.0, 2.0];
        assert!(solve(&a, &b).is_none());
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        // Path-graph Laplacian on two nodes: eigenvalues {0, 2}.
        let a = array![[1.0, -1.0], [-1.0, 1.0]];
        let eig = symmetric_eigenvalues(&a);
        assert!(eig[0].abs() < 1e-12);
        assert!((eig[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, -1.0], [0.5, -1.0, 2.0]];
        let eig = symmetric_eigenvalues(&a);
        let trace: f64 = eig.iter().sum();
        assert!((trace - 9.0).abs() < 1e-10);
        let det: f64 = eig.iter().product();
        // det from cofactor expansion
        let expected = 4.0 * (3.0 * 2.0 - 1.0) - 1.0 * (1.0 * 2.0 - (-1.0) * 0.5)
            + 0.5 * (1.0 * (-1.0) - 3.0 * 0.5);
        assert!((det - expected).abs() < 1e-10);
    }
}
