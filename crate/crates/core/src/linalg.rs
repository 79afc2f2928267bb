//! Small dense linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Maximum number of power-iteration steps used for step-size estimation.
pub const POWER_ITERATION_STEPS: usize = 50;
/// Relative change of the Rayleigh quotient at which power iteration stops.
pub const POWER_ITERATION_TOL: f64 = 1e-10;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
///
/// The start vector is fixed so the result is a pure function of `g`. It is
/// not a constant vector, which would be orthogonal to the leading
/// eigenvector of many structured matrices.
pub fn lambda_max_power(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATION_STEPS {
        let w = g * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        let done = (next - lambda).abs() <= POWER_ITERATION_TOL * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    lambda
}

/// Eigen-decomposition with eigenvalues sorted ascending (vectors permuted
/// to match).
pub fn sym_eigen_sorted(g: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = g.nrows();
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Sorted ascending eigenvalues of a symmetric matrix.
pub fn sym_eigenvalues_sorted(g: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(g).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Euclidean norms of the columns of `a`.
pub fn column_norms(a: &DMatrix<f64>) -> Vec<f64> {
    a.column_iter().map(|c| c.norm()).collect()
}

/// `a` with every column divided by its norm, together with the norms.
/// Norms below `floor` are replaced by `floor`.
pub fn normalize_columns_floored(a: &DMatrix<f64>, floor: f64) -> (DMatrix<f64>, Vec<f64>) {
    let norms: Vec<f64> = column_norms(a).into_iter().map(|r| r.max(floor)).collect();
    let mut out = a.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col /= norms[j];
    }
    (out, norms)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let g = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let exact = sym_eigenvalues_sorted(g.clone())[2];
        assert!((lambda_max_power(&g) - exact).abs() < 1e-8 * exact);
        assert!((lambda_max_power(&DMatrix::identity(4, 4)) - 1.0).abs() < 1e-15);
        assert_eq!(lambda_max_power(&DMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn sorted_eigen_pairs_match() {
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = sym_eigen_sorted(g.clone());
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        for i in 0..2 {
            let v = vecs.column(i);
            assert!((&g * v - v * vals[i]).norm() < 1e-12);
        }
    }
}
