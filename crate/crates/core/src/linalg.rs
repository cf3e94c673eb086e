//! Vector helpers on `&[C64]` and thin wrappers over `nalgebra` for the small
//! dense matrices of the digital stage.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::C64;

pub type CMatrix = DMatrix<C64>;

/// Inner product `a^H b`.
#[inline]
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

#[inline]
pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

#[inline]
pub fn norm(a: &[C64]) -> f64 {
    libm::sqrt(norm_sqr(a))
}

/// `||a - b||^2`
pub fn distance_sqr(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Matrix whose columns are the given equal-length vectors.
pub fn from_columns<V: AsRef<[C64]>>(columns: &[V]) -> CMatrix {
    let rows = columns.first().map_or(0, |c| c.as_ref().len());
    DMatrix::from_fn(rows, columns.len(), |i, j| columns[j].as_ref()[i])
}

pub fn column(m: &CMatrix, j: usize) -> Vec<C64> {
    m.column(j).iter().copied().collect()
}

pub fn mul_vec(m: &CMatrix, v: &[C64]) -> Vec<C64> {
    (m * DVector::from_column_slice(v)).iter().copied().collect()
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| e.eigenvalues[x].total_cmp(&e.eigenvalues[y]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |i, j| e.eigenvectors[(i, order[j])]);
    HermitianEigen { values, vectors }
}
