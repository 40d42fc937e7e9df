//! Small fixed-size helpers shared by the two-qubit modules.

use nalgebra::{Matrix2, Matrix4, Vector3};

use crate::C64;

pub type Mat2c = Matrix2<C64>;
pub type Mat4c = Matrix4<C64>;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrix `σ_i`, with `σ_0` the identity.
pub fn pauli(i: usize) -> Mat2c {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match i {
        0 => Mat2c::new(one, z, z, one),
        1 => Mat2c::new(z, one, one, z),
        2 => Mat2c::new(z, c(0.0, -1.0), c(0.0, 1.0), z),
        3 => Mat2c::new(one, z, z, -one),
        _ => panic!("pauli index {i} out of range 0..4"),
    }
}

/// Kronecker product `a ⊗ b` of two 2×2 matrices, `a` the left factor.
pub fn kron2(a: &Mat2c, b: &Mat2c) -> Mat4c {
    let mut out = Mat4c::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `σ_i ⊗ σ_j`.
pub fn pauli_pair(i: usize, j: usize) -> Mat4c {
    kron2(&pauli(i), &pauli(j))
}

/// Largest absolute entrywise deviation from hermiticity.
pub fn hermiticity_defect(m: &Mat4c) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues (ascending) of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &Mat4c) -> [f64; 4] {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigenvalues();
    let mut out = [eig[0], eig[1], eig[2], eig[3]];
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Determinant of a real 4×4 matrix by LU with partial pivoting.
pub fn det4_lu(m: &Matrix4<f64>) -> f64 {
    m.lu().determinant()
}

/// Bloch vector of a single-qubit operator, `r_i = tr(m σ_i)` (real parts).
pub fn bloch_vector(m: &Mat2c) -> Vector3<f64> {
    Vector3::new(
        (m * pauli(1)).trace().re,
        (m * pauli(2)).trace().re,
        (m * pauli(3)).trace().re,
    )
}

/// Largest singular value of a 2×2 complex matrix.
pub fn spectral_norm2(m: &Mat2c) -> f64 {
    let gram = m.adjoint() * m;
    let eig = ((gram + gram.adjoint()) * c(0.5, 0.0)).symmetric_eigenvalues();
    eig.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}
