//! Local filtering operations `ρ → (O_A ⊗ O_B) ρ (O_A ⊗ O_B)† / tr(...)`.
//!
//! Obesity transforms multiplicatively under filtering. On the correlation
//! matrix a filter acts as `R → L_A R L_Bᵀ` up to normalization, where each
//! `L = Λ (O ⊗ O*) Λ† / |det O|` is a proper Lorentz transformation with
//! unit determinant. Tracking the determinant factors gives
//!
//! ```text
//! Ω(ρ_F) · tr = Ω(ρ) · |det O_A| · |det O_B|
//! ```
//!
//! which reduces to `Ω(ρ_F) = Ω(ρ) / tr` only for unit-determinant filters.
//! Both forms are exposed; [`filtered_obesity_direct`] is the reference.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, Mat2c, Mat4c};
use crate::obesity;
use crate::qstate::{self, CorrelationMatrix, DensityMatrix2Q, StateError};

/// Operators with `|det O|` at or below this are rejected as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Filters whose output trace falls below this annihilate the state.
pub const TRACE_TOL: f64 = 1e-12;
/// Tolerance on `|det O| = 1` for the unit-determinant form.
pub const UNIT_DET_TOL: f64 = 1e-9;
/// Physicality tolerance for filtered states.
pub const FILTERED_STATE_TOL: f64 = 1e-9;
/// Populations below this leave the Ising filter undefined.
pub const ISING_POPULATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error)]
pub enum FilterError {
    #[error("filter operator on party {party} is singular (|det| = {det:e})")]
    Singular { party: char, det: f64 },
    #[error("filter annihilates the state (trace {trace:e})")]
    Annihilates { trace: f64 },
    #[error("unit-determinant form needs |det O_A| = |det O_B| = 1, got {det_a} and {det_b}; use the general form")]
    NotUnitDeterminant { det_a: f64, det_b: f64 },
    #[error("filter undefined: populations A+ = {a_plus:e}, A- = {a_minus:e}")]
    Undefined { a_plus: f64, a_minus: f64 },
    #[error("lift of the filter is not real (max imaginary part {imag:e})")]
    NonRealLift { imag: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Pair of local operators `(O_A, O_B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFilter {
    a: Mat2c,
    b: Mat2c,
}

impl LocalFilter {
    pub fn new(a: Mat2c, b: Mat2c) -> Result<Self, FilterError> {
        let da = a.determinant().norm();
        if da <= SINGULAR_TOL {
            return Err(FilterError::Singular { party: 'A', det: da });
        }
        let db = b.determinant().norm();
        if db <= SINGULAR_TOL {
            return Err(FilterError::Singular { party: 'B', det: db });
        }
        Ok(Self { a, b })
    }

    pub fn identity() -> Self {
        Self {
            a: Mat2c::identity(),
            b: Mat2c::identity(),
        }
    }

    /// Same real diagonal operator `diag(d0, d1)` on both qubits.
    pub fn symmetric_diagonal(d0: f64, d1: f64) -> Result<Self, FilterError> {
        let o = Mat2c::new(c(d0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(d1, 0.0));
        Self::new(o, o)
    }

    pub fn op_a(&self) -> &Mat2c {
        &self.a
    }

    pub fn op_b(&self) -> &Mat2c {
        &self.b
    }

    pub fn det_a(&self) -> f64 {
        self.a.determinant().norm()
    }

    pub fn det_b(&self) -> f64 {
        self.b.determinant().norm()
    }

    /// Both operators have operator norm at most one.
    pub fn is_subnormalized(&self) -> bool {
        linalg::spectral_norm2(&self.a) <= 1.0 + 1e-12 && linalg::spectral_norm2(&self.b) <= 1.0 + 1e-12
    }

    pub fn kron(&self) -> Mat4c {
        linalg::kron2(&self.a, &self.b)
    }
}

/// Filtered state and the trace `tr[(O_A⊗O_B) ρ (O_A⊗O_B)†]` before
/// normalization.
pub fn apply_filter(
    rho: &DensityMatrix2Q,
    f: &LocalFilter,
) -> Result<(DensityMatrix2Q, f64), FilterError> {
    let o = f.kron();
    let out = o * rho.matrix() * o.adjoint();
    let trace = out.trace().re;
    if trace <= TRACE_TOL {
        return Err(FilterError::Annihilates { trace });
    }
    let mut m = out / c(trace, 0.0);
    m = (m + m.adjoint()) * c(0.5, 0.0);
    Ok((DensityMatrix2Q::with_tolerance(m, FILTERED_STATE_TOL)?, trace))
}

pub fn trace_norm(rho: &DensityMatrix2Q, f: &LocalFilter) -> Result<f64, FilterError> {
    let o = f.kron();
    let trace = (o * rho.matrix() * o.adjoint()).trace().re;
    if trace <= TRACE_TOL {
        return Err(FilterError::Annihilates { trace });
    }
    Ok(trace)
}

/// `F = 1 / tr[(O_A⊗O_B) ρ (O_A⊗O_B)†]`.
pub fn filtering_function(rho: &DensityMatrix2Q, f: &LocalFilter) -> Result<f64, FilterError> {
    Ok(1.0 / trace_norm(rho, f)?)
}

/// Reference value: obesity of the explicitly filtered state.
pub fn filtered_obesity_direct(rho: &DensityMatrix2Q, f: &LocalFilter) -> Result<f64, FilterError> {
    let (rf, _) = apply_filter(rho, f)?;
    Ok(obesity::obesity(&rf))
}

/// `Ω(ρ) · F`, valid only when both operators have unit determinant.
pub fn filtered_obesity_theorem(rho: &DensityMatrix2Q, f: &LocalFilter) -> Result<f64, FilterError> {
    let (det_a, det_b) = (f.det_a(), f.det_b());
    if (det_a - 1.0).abs() > UNIT_DET_TOL || (det_b - 1.0).abs() > UNIT_DET_TOL {
        return Err(FilterError::NotUnitDeterminant { det_a, det_b });
    }
    Ok(obesity::obesity(rho) * filtering_function(rho, f)?)
}

/// `Ω(ρ) · |det O_A| · |det O_B| · F`, valid for any invertible filter.
pub fn filtered_obesity_general(rho: &DensityMatrix2Q, f: &LocalFilter) -> Result<f64, FilterError> {
    Ok(obesity::obesity(rho) * f.det_a() * f.det_b() * filtering_function(rho, f)?)
}

/// Real 4×4 `L = Λ (O ⊗ O*) Λ† / |det O|` acting on `(x0, x1, x2, x3)`
/// Pauli coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzLift {
    pub matrix: Matrix4<f64>,
    /// `|det O|`, the factor removed by the normalization.
    pub scale: f64,
}

impl LorentzLift {
    pub fn determinant(&self) -> f64 {
        linalg::det4_lu(&self.matrix)
    }

    /// Largest entry of `Lᵀ η L − η` with `η = diag(1, −1, −1, −1)`.
    pub fn minkowski_defect(&self) -> f64 {
        let eta = Matrix4::from_diagonal(&Vector4::new(1.0, -1.0, -1.0, -1.0));
        (self.matrix.transpose() * eta * self.matrix - eta).camax()
    }

    /// The unnormalized action `|det O| · L`.
    pub fn unnormalized(&self) -> Matrix4<f64> {
        self.matrix * self.scale
    }
}

fn lambda_matrix() -> Mat4c {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (z, o, i) = (c(0.0, 0.0), c(s, 0.0), c(0.0, s));
    Mat4c::new(
        o, z, z, o,
        z, o, o, z,
        z, i, -i, z,
        o, z, z, -o,
    )
}

pub fn lorentz_lift(o: &Mat2c) -> Result<LorentzLift, FilterError> {
    let scale = o.determinant().norm();
    if scale <= SINGULAR_TOL {
        return Err(FilterError::Singular { party: '?', det: scale });
    }
    let lam = lambda_matrix();
    let full = lam * linalg::kron2(o, &o.conjugate()) * lam.adjoint() / c(scale, 0.0);
    let imag = full.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let re_scale = full.iter().map(|z| z.re.abs()).fold(1.0, f64::max);
    if imag > 1e-10 * re_scale {
        return Err(FilterError::NonRealLift { imag });
    }
    Ok(LorentzLift {
        matrix: full.map(|z| z.re),
        scale,
    })
}

/// `R_F = |det O_A||det O_B| L_A R L_Bᵀ / tr`, normalized to `R_F[0][0] = 1`.
pub fn filtered_correlation_matrix(
    r: &CorrelationMatrix,
    f: &LocalFilter,
) -> Result<CorrelationMatrix, FilterError> {
    let la = lorentz_lift(f.op_a())?;
    let lb = lorentz_lift(f.op_b())?;
    let raw = la.unnormalized() * r.matrix() * lb.unnormalized().transpose();
    let trace = raw[(0, 0)];
    if trace <= TRACE_TOL {
        return Err(FilterError::Annihilates { trace });
    }
    let mut out = raw / trace;
    out[(0, 0)] = 1.0;
    Ok(CorrelationMatrix::from_matrix(out))
}

/// Diagonal filter equalizing the two extreme populations of an X-state.
///
/// The shrinking factor `η = (min/max)^{1/4} ≤ 1` multiplies the basis
/// state with the larger population, on both qubits.
pub fn ising_optimal_filter(a_plus: f64, a_minus: f64) -> Result<LocalFilter, FilterError> {
    if a_plus <= ISING_POPULATION_TOL || a_minus <= ISING_POPULATION_TOL {
        return Err(FilterError::Undefined { a_plus, a_minus });
    }
    let eta = (a_plus.min(a_minus) / a_plus.max(a_minus)).powf(0.25);
    if a_plus >= a_minus {
        LocalFilter::symmetric_diagonal(eta, 1.0)
    } else {
        LocalFilter::symmetric_diagonal(1.0, eta)
    }
}

/// Helper: obesity of a correlation matrix produced by [`filtered_correlation_matrix`].
pub fn filtered_obesity_via_lift(r: &CorrelationMatrix, f: &LocalFilter) -> Result<f64, FilterError> {
    Ok(obesity::obesity_of(&filtered_correlation_matrix(r, f)?))
}

/// Convenience: filtered correlation matrix computed through the state.
pub fn filtered_correlation_via_state(
    rho: &DensityMatrix2Q,
    f: &LocalFilter,
) -> Result<CorrelationMatrix, FilterError> {
    let (rf, _) = apply_filter(rho, f)?;
    Ok(qstate::correlation_matrix(&rf))
}
