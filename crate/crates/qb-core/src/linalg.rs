//! Thin wrappers around the dense Hermitian eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

/// (eigenvalues ascending, matching eigenvector columns) of a Hermitian
/// matrix. The input is symmetrized first so that accumulated roundoff in
/// the anti-Hermitian part cannot leak into the decomposition.
pub(crate) fn eigh(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    sort_eigenpairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

/// Eigenvalues only, ascending.
pub(crate) fn eigvalsh(m: &DMatrix<C64>) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    hermitian_part(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()).scale(0.5)
}

/// Largest absolute entry of `A - A^dagger`.
pub(crate) fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Maximum absolute row sum; upper bound on the spectral norm for
/// Hermitian matrices.
pub(crate) fn inf_norm(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)].norm();
        }
        worst = worst.max(row);
    }
    worst
}

/// Maximum absolute column sum.
pub(crate) fn one_norm(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..m.ncols() {
        let mut col = 0.0;
        for i in 0..m.nrows() {
            col += m[(i, j)].norm();
        }
        worst = worst.max(col);
    }
    worst
}

fn sort_eigenpairs(vals: &[f64], vecs: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
    let mut sorted_vecs = vecs.clone();
    for (dst, &src) in order.iter().enumerate() {
        sorted_vecs.set_column(dst, &vecs.column(src));
    }
    (sorted_vals, sorted_vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigh_recovers_known_hermitian_spectrum() {
        // Pauli-x-like with a complex phase: eigenvalues -1, +1.
        let m = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
        let (vals, vecs) = eigh(&m);
        assert_abs_diff_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 1.0, epsilon = 1e-12);
        // Residual check H v = lambda v.
        for k in 0..2 {
            let v = vecs.column(k);
            let res = &m * v - v.scale(vals[k]);
            assert!(res.norm() < 1e-10);
        }
        // Orthonormality.
        let gram = vecs.adjoint() * &vecs;
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(gram[(i, j)].norm(), want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn norms_and_deviation() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 2.0), c(0.0, 0.0), c(3.0, 0.0)]);
        assert_abs_diff_eq!(inf_norm(&m), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(one_norm(&m), 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hermiticity_deviation(&m), 2.0, epsilon = 1e-15);
    }
}
