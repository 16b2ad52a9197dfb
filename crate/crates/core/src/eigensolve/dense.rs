//! Full symmetric eigendecomposition, evaluated in `f64`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Raw, Shifted};
use crate::Real;

pub(crate) fn solve<T: Real>(op: &Shifted<'_, T>) -> Raw<T> {
    let n = op.len();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &op.dense()));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let first = order[0];
    Raw {
        lambda: T::of(eig.eigenvalues[first]),
        second: order.get(1).map(|&i| T::of(eig.eigenvalues[i])),
        vector: eig.eigenvectors.column(first).iter().map(|&x| T::of(x)).collect(),
        iterations: 1,
    }
}

/// Eigenvalues of a small symmetric matrix, ascending, with eigenvectors as
/// columns in the same order.
pub(crate) fn small_eigen(n: usize, a: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}
