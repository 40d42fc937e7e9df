//! Two-qubit states and their Pauli correlation matrices.
//!
//! A state is stored as a 4×4 density matrix in the basis
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`. The correlation matrix has entries
//! `R_ij = tr(ρ σ_i ⊗ σ_j)` with `σ_0 = 1`, so the first index belongs to
//! party A and the second to party B.

use std::fmt;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, Mat2c, Mat4c};
use crate::C64;

/// Default tolerance for physicality checks.
pub const STATE_TOL: f64 = 1e-10;

/// A single way in which a matrix fails to be a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NotHermitian { max_deviation: f64 },
    TraceNotOne { trace_re: f64, trace_im: f64 },
    NegativeEigenvalue { eigenvalues: [f64; 4] },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotHermitian { max_deviation } => {
                write!(f, "not Hermitian (max deviation {max_deviation:.3e})")
            }
            Violation::TraceNotOne { trace_re, trace_im } => {
                write!(f, "trace is {trace_re}{trace_im:+}i, expected 1")
            }
            Violation::NegativeEigenvalue { eigenvalues } => {
                write!(f, "negative eigenvalue; spectrum {eigenvalues:?}")
            }
        }
    }
}

/// Outcome of [`validate_state`]; empty `violations` means physical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub eigenvalues: [f64; 4],
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid state (tol {:e})", self.tolerance);
        }
        let parts: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, Error)]
pub enum StateError {
    #[error("unphysical state: {0}")]
    Unphysical(ValidationReport),
    #[error("site indices ({i}, {j}) invalid for a chain of {n} sites")]
    SiteIndex { i: usize, j: usize, n: usize },
    #[error("matrix dimension {got} does not match 2^{n}")]
    Dimension { got: usize, n: usize },
}

/// Checks hermiticity, unit trace and positivity of a 4×4 matrix.
pub fn validate_state(rho: &Mat4c, tol: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let defect = linalg::hermiticity_defect(rho);
    if defect > tol {
        violations.push(Violation::NotHermitian {
            max_deviation: defect,
        });
    }
    let tr = rho.trace();
    if (tr - c(1.0, 0.0)).norm() > tol {
        violations.push(Violation::TraceNotOne {
            trace_re: tr.re,
            trace_im: tr.im,
        });
    }
    let eigenvalues = linalg::hermitian_eigenvalues(rho);
    if eigenvalues[0] < -tol {
        violations.push(Violation::NegativeEigenvalue { eigenvalues });
    }
    ValidationReport {
        tolerance: tol,
        eigenvalues,
        violations,
    }
}

/// A validated two-qubit density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix2Q {
    rho: Mat4c,
}

impl DensityMatrix2Q {
    /// Validates at [`STATE_TOL`].
    pub fn new(rho: Mat4c) -> Result<Self, StateError> {
        Self::with_tolerance(rho, STATE_TOL)
    }

    pub fn with_tolerance(rho: Mat4c, tol: f64) -> Result<Self, StateError> {
        let report = validate_state(&rho, tol);
        if report.is_valid() {
            Ok(Self { rho })
        } else {
            Err(StateError::Unphysical(report))
        }
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) pure state.
    pub fn from_pure(psi: [C64; 4]) -> Self {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut m = Mat4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Self { rho: m }
    }

    pub fn maximally_mixed() -> Self {
        Self {
            rho: Mat4c::identity() * c(0.25, 0.0),
        }
    }

    /// `|Φ+⟩ = (|↑↑⟩ + |↓↓⟩)/√2`.
    pub fn phi_plus() -> Self {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        Self::from_pure([one, z, z, one])
    }

    /// Product of two computational basis states, `true` meaning `|↑⟩`.
    pub fn product_basis(a_up: bool, b_up: bool) -> Self {
        let idx = 2 * usize::from(!a_up) + usize::from(!b_up);
        let mut m = Mat4c::zeros();
        m[(idx, idx)] = c(1.0, 0.0);
        Self { rho: m }
    }

    pub fn matrix(&self) -> &Mat4c {
        &self.rho
    }

    pub fn into_matrix(self) -> Mat4c {
        self.rho
    }

    /// Matrix element in the computational basis (0-based).
    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.rho[(i, j)]
    }

    /// `(U_A ⊗ U_B) ρ (U_A ⊗ U_B)†`.
    pub fn conjugate_local(&self, ua: &Mat2c, ub: &Mat2c) -> Self {
        let u = linalg::kron2(ua, ub);
        Self {
            rho: u * self.rho * u.adjoint(),
        }
    }

    /// `SWAP ρ SWAP`, exchanging the roles of A and B.
    pub fn swapped(&self) -> Self {
        const P: [usize; 4] = [0, 2, 1, 3];
        let mut m = Mat4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(P[i], P[j])] = self.rho[(i, j)];
            }
        }
        Self { rho: m }
    }

    /// Reduced single-qubit state of one party.
    pub fn reduced(&self, party: crate::Party) -> Mat2c {
        let mut out = Mat2c::zeros();
        for i in 0..2 {
            for j in 0..2 {
                out[(i, j)] = match party {
                    crate::Party::A => self.rho[(2 * i, 2 * j)] + self.rho[(2 * i + 1, 2 * j + 1)],
                    crate::Party::B => self.rho[(i, j)] + self.rho[(2 + i, 2 + j)],
                };
            }
        }
        out
    }
}

/// Real 4×4 matrix `R_ij = ⟨σ_i ⊗ σ_j⟩`.
///
/// Block structure: `R_00 = 1`; column 0 below the corner is the Bloch
/// vector `a` of party A; row 0 right of the corner is the Bloch vector `b`
/// of party B; the lower-right 3×3 block is `T_ij = ⟨σ_i ⊗ σ_j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix {
    r: Matrix4<f64>,
}

impl CorrelationMatrix {
    pub fn from_matrix(r: Matrix4<f64>) -> Self {
        Self { r }
    }

    pub fn from_blocks(a: Vector3<f64>, b: Vector3<f64>, t: Matrix3<f64>) -> Self {
        let mut r = Matrix4::zeros();
        r[(0, 0)] = 1.0;
        for i in 0..3 {
            r[(i + 1, 0)] = a[i];
            r[(0, i + 1)] = b[i];
            for j in 0..3 {
                r[(i + 1, j + 1)] = t[(i, j)];
            }
        }
        Self { r }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.r
    }

    /// Bloch vector of party A.
    pub fn a(&self) -> Vector3<f64> {
        Vector3::new(self.r[(1, 0)], self.r[(2, 0)], self.r[(3, 0)])
    }

    /// Bloch vector of party B.
    pub fn b(&self) -> Vector3<f64> {
        Vector3::new(self.r[(0, 1)], self.r[(0, 2)], self.r[(0, 3)])
    }

    pub fn t(&self) -> Matrix3<f64> {
        self.r.fixed_view::<3, 3>(1, 1).into_owned()
    }

    pub fn determinant(&self) -> f64 {
        linalg::det4_lu(&self.r)
    }
}

/// `R_ij = tr(ρ σ_i ⊗ σ_j)`.
///
/// `R_00` is set to exactly 1; the state is already known to have unit trace.
pub fn correlation_matrix(rho: &DensityMatrix2Q) -> CorrelationMatrix {
    let mut r = correlation_matrix_raw(rho.matrix());
    r.r[(0, 0)] = 1.0;
    r
}

pub(crate) fn correlation_matrix_raw(rho: &Mat4c) -> CorrelationMatrix {
    let mut r = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            r[(i, j)] = (rho * linalg::pauli_pair(i, j)).trace().re;
        }
    }
    CorrelationMatrix { r }
}

/// `ρ = ¼ Σ R_ij σ_i ⊗ σ_j` without any physicality check.
pub fn matrix_from_correlation(r: &CorrelationMatrix) -> Mat4c {
    let mut m = Mat4c::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let w = r.r[(i, j)];
            if w != 0.0 {
                m += linalg::pauli_pair(i, j) * c(0.25 * w, 0.0);
            }
        }
    }
    m
}

/// Inverse of [`correlation_matrix`]; unphysical reconstructions are an error.
pub fn state_from_correlation_matrix(r: &CorrelationMatrix) -> Result<DensityMatrix2Q, StateError> {
    DensityMatrix2Q::new(matrix_from_correlation(r))
}

/// Partial trace of a chain state onto sites `(i, j)`, site `i` being the
/// left factor. Site 0 is the most significant bit of the basis index and a
/// 0 bit is `|↑⟩`.
pub fn pair_reduced_state(
    full: &DMatrix<C64>,
    i: usize,
    j: usize,
    n: usize,
) -> Result<DensityMatrix2Q, StateError> {
    pair_reduced_state_with_tolerance(full, i, j, n, STATE_TOL)
}

pub fn pair_reduced_state_with_tolerance(
    full: &DMatrix<C64>,
    i: usize,
    j: usize,
    n: usize,
    tol: f64,
) -> Result<DensityMatrix2Q, StateError> {
    if i >= j || j >= n {
        return Err(StateError::SiteIndex { i, j, n });
    }
    let dim = 1usize << n;
    if full.nrows() != dim || full.ncols() != dim {
        return Err(StateError::Dimension {
            got: full.nrows(),
            n,
        });
    }
    let bi = n - 1 - i;
    let bj = n - 1 - j;
    let mask = (1usize << bi) | (1usize << bj);
    let mut out = Mat4c::zeros();
    for s in 0..dim {
        let rest = s & !mask;
        let row = pair_index(s, bi, bj);
        for p in 0..4 {
            let t = rest | (((p >> 1) & 1) << bi) | ((p & 1) << bj);
            out[(row, p)] += full[(s, t)];
        }
    }
    DensityMatrix2Q::with_tolerance(out, tol)
}

#[inline]
pub(crate) fn pair_index(s: usize, bi: usize, bj: usize) -> usize {
    (((s >> bi) & 1) << 1) | ((s >> bj) & 1)
}

/// Wootters concurrence.
pub fn concurrence(rho: &DensityMatrix2Q) -> f64 {
    let yy = linalg::pauli_pair(2, 2);
    let m = rho.matrix();
    let tilde = yy * m.conjugate() * yy;
    let sqrt_rho = hermitian_sqrt(m);
    let inner = sqrt_rho * tilde * sqrt_rho;
    let mut lam: Vec<f64> = linalg::hermitian_eigenvalues(&inner)
        .iter()
        .map(|&e| e.max(0.0).sqrt())
        .collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

fn hermitian_sqrt(m: &Mat4c) -> Mat4c {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let mut d = Mat4c::zeros();
    for k in 0..4 {
        d[(k, k)] = c(eig.eigenvalues[k].max(0.0).sqrt(), 0.0);
    }
    eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;
    use crate::Party;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(v: [f64; 4]) -> Mat4c {
        Mat4c::from_diagonal(&nalgebra::Vector4::new(
            c(v[0], 0.0),
            c(v[1], 0.0),
            c(v[2], 0.0),
            c(v[3], 0.0),
        ))
    }

    #[test]
    fn validation_examples() {
        assert!(validate_state(DensityMatrix2Q::maximally_mixed().matrix(), 1e-10).is_valid());
        assert!(validate_state(&diag([1.0, 0.0, 0.0, 0.0]), 1e-10).is_valid());
        let bad = validate_state(&diag([0.6, 0.6, -0.1, -0.1]), 1e-10);
        assert!(!bad.is_valid());
        assert_eq!(bad.violations.len(), 1);
        assert!(matches!(
            bad.violations[0],
            Violation::NegativeEigenvalue { .. }
        ));
    }

    #[test]
    fn validation_flags_trace_and_hermiticity() {
        let mut m = diag([0.5, 0.5, 0.5, 0.0]);
        m[(0, 1)] = c(0.1, 0.0);
        let rep = validate_state(&m, 1e-10);
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::TraceNotOne { .. })));
        assert!(rep
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotHermitian { .. })));
    }

    #[test]
    fn correlation_matrix_examples() {
        let r = correlation_matrix(&DensityMatrix2Q::maximally_mixed());
        let mut expect = Matrix4::zeros();
        expect[(0, 0)] = 1.0;
        assert!((r.matrix() - expect).norm() < 1e-15);

        let r = correlation_matrix(&DensityMatrix2Q::phi_plus());
        assert!(r.a().norm() < 1e-15 && r.b().norm() < 1e-15);
        let t = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        assert!((r.t() - t).norm() < 1e-15);
    }

    #[test]
    fn bell_diagonal_t_block() {
        let p = crate::BellDiagonalParams::new(0.3, -0.2, 0.1).unwrap();
        let r = correlation_matrix(&p.state());
        assert!(r.a().norm() < 1e-15 && r.b().norm() < 1e-15);
        let t = Matrix3::from_diagonal(&Vector3::new(0.3, -0.2, 0.1));
        assert!((r.t() - t).norm() < 1e-15);
    }

    #[test]
    fn reconstruction_examples() {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = 1.0;
        let rho = state_from_correlation_matrix(&CorrelationMatrix::from_matrix(m)).unwrap();
        assert!((rho.matrix() - DensityMatrix2Q::maximally_mixed().matrix()).norm() < 1e-15);

        let t = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        let r = CorrelationMatrix::from_blocks(Vector3::zeros(), Vector3::zeros(), t);
        let rho = state_from_correlation_matrix(&r).unwrap();
        assert!((rho.matrix() - DensityMatrix2Q::phi_plus().matrix()).norm() < 1e-15);

        let t = Matrix3::identity();
        let r = CorrelationMatrix::from_blocks(Vector3::zeros(), Vector3::zeros(), t);
        match state_from_correlation_matrix(&r) {
            Err(StateError::Unphysical(rep)) => {
                assert!((rep.eigenvalues[0] + 0.5).abs() < 1e-12);
            }
            other => panic!("expected unphysical, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let rho = sampling::random_state(&mut rng);
            let r = correlation_matrix(&rho);
            assert_eq!(r.matrix()[(0, 0)], 1.0);
            assert!(r.matrix().iter().all(|x| x.abs() <= 1.0 + 1e-9));
            let back = state_from_correlation_matrix(&r).unwrap();
            assert!((back.matrix() - rho.matrix()).camax() < 1e-12);
        }
    }

    #[test]
    fn bloch_vectors_match_partial_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let rho = sampling::random_state(&mut rng);
            let r = correlation_matrix(&rho);
            let a = linalg::bloch_vector(&rho.reduced(Party::A));
            let b = linalg::bloch_vector(&rho.reduced(Party::B));
            assert!((a - r.a()).camax() < 1e-12);
            assert!((b - r.b()).camax() < 1e-12);
        }
    }

    fn ghz3() -> DMatrix<C64> {
        let mut m = DMatrix::zeros(8, 8);
        for &(i, j) in &[(0, 0), (0, 7), (7, 0), (7, 7)] {
            m[(i, j)] = c(0.5, 0.0);
        }
        m
    }

    #[test]
    fn pair_reduced_examples() {
        let rho = DensityMatrix2Q::phi_plus();
        let full = DMatrix::from_fn(4, 4, |i, j| rho.matrix()[(i, j)]);
        let red = pair_reduced_state(&full, 0, 1, 2).unwrap();
        assert!((red.matrix() - rho.matrix()).camax() < 1e-15);

        let red = pair_reduced_state(&ghz3(), 0, 1, 3).unwrap();
        assert!((red.matrix() - diag([0.5, 0.0, 0.0, 0.5])).camax() < 1e-15);

        let mut up = DMatrix::zeros(16, 16);
        up[(0, 0)] = c(1.0, 0.0);
        let red = pair_reduced_state(&up, 1, 3, 4).unwrap();
        assert!((red.matrix() - DensityMatrix2Q::product_basis(true, true).matrix()).camax() < 1e-15);
    }

    #[test]
    fn pair_reduced_keeps_order_of_factors() {
        // |↑⟩|↓⟩|↑⟩ on sites (0,1,2): the (0,1) pair is |↑↓⟩ and the (1,2) pair |↓↑⟩
        let mut m = DMatrix::zeros(8, 8);
        m[(0b010, 0b010)] = c(1.0, 0.0);
        let p01 = pair_reduced_state(&m, 0, 1, 3).unwrap();
        let p12 = pair_reduced_state(&m, 1, 2, 3).unwrap();
        assert_eq!(p01.entry(1, 1), c(1.0, 0.0));
        assert_eq!(p12.entry(2, 2), c(1.0, 0.0));
    }

    #[test]
    fn pair_reduced_rejects_bad_indices() {
        assert!(matches!(
            pair_reduced_state(&ghz3(), 1, 1, 3),
            Err(StateError::SiteIndex { .. })
        ));
        assert!(matches!(
            pair_reduced_state(&ghz3(), 0, 3, 3),
            Err(StateError::SiteIndex { .. })
        ));
        assert!(matches!(
            pair_reduced_state(&ghz3(), 0, 1, 4),
            Err(StateError::Dimension { .. })
        ));
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&DensityMatrix2Q::phi_plus()) - 1.0).abs() < 1e-7);
        assert!(concurrence(&DensityMatrix2Q::maximally_mixed()).abs() < 1e-12);
        let werner = crate::BellDiagonalParams::new(-0.8, -0.8, -0.8).unwrap().state();
        assert!((concurrence(&werner) - 0.7).abs() < 1e-10);
    }

    #[test]
    fn concurrence_of_pure_states_is_twice_abs_det() {
        // For |ψ⟩ = α|↑↑⟩ + β|↓↓⟩, C = 2|αβ|
        let a = 0.6_f64;
        let b = 0.8_f64;
        let rho = DensityMatrix2Q::from_pure([c(a, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(b, 0.0)]);
        assert!((concurrence(&rho) - 2.0 * a * b).abs() < 1e-7);
    }
}
