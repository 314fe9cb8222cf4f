//! Dense complex matrix helpers shared by the channel and circuit modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Pauli matrix by label 0..=3 = I, X, Y, Z.
pub fn pauli(label: usize) -> CMatrix {
    match label {
        0 => identity(2),
        1 => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        2 => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        3 => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli label {label} out of range"),
    }
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// Hilbert-Schmidt inner product Tr[A† B].
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Swap of two copies of a `dim`-dimensional system, acting on `dim * dim`.
pub fn swap(dim: usize) -> CMatrix {
    let mut s = CMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            s[(i * dim + j, j * dim + i)] = ONE;
        }
    }
    s
}

pub fn projector(dim: usize, index: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(index, index)] = ONE;
    m
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    max_abs_diff(m, &m.adjoint()) <= tol
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
