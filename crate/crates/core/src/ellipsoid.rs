//! Quantum steering ellipsoids.
//!
//! Projective measurements on one qubit steer the Bloch vector of the other
//! onto the surface of an ellipsoid with center `c` and shape matrix `Q`
//! (semiaxes `√eig(Q)`). For steering of A by measurements on B:
//!
//! ```text
//! c = γ (a − T b)
//! Q = γ (T − a bᵀ)(1 + γ b bᵀ)(Tᵀ − b aᵀ),   γ = 1 / (1 − |b|²)
//! ```
//!
//! Since `det(1 + γ b bᵀ) = γ`, the volume is `(4π/3) s₁s₂s₃ = (4π/3) γ² Ω⁴`.
//! The often-quoted `γ⁴ Ω⁴` holds only for `b = 0`; see [`volume_from_quartic`].

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, c, Mat2c};
use crate::obesity;
use crate::qstate::{self, DensityMatrix2Q};

/// Marginals with `|b| ≥ 1 − MARGINAL_TOL` are treated as pure.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Eigenvalues of `Q` in `(−CLIP_TOL, 0)` are clipped to zero.
pub const CLIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EllipsoidError {
    #[error("marginal of the measured party is pure (|bloch| = {norm}); the ellipsoid degenerates")]
    SingularMarginal { norm: f64 },
    #[error("measurement outcome has zero probability ({prob:e})")]
    ZeroProbability { prob: f64 },
    #[error("shape matrix has a negative eigenvalue {value:e}")]
    NegativeShape { value: f64 },
}

/// Which qubit's Bloch ball is being steered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringEllipsoid {
    pub steered: Party,
    pub center: Vector3<f64>,
    /// Symmetrized shape matrix `Q`.
    pub shape: Matrix3<f64>,
    /// Semiaxis lengths, ascending; column `k` of `orientation` is the
    /// direction of `semiaxes[k]`.
    pub semiaxes: [f64; 3],
    pub orientation: Matrix3<f64>,
    /// `1/(1 − |v|²)` for the Bloch vector `v` of the measured party.
    pub gamma: f64,
}

impl SteeringEllipsoid {
    pub fn volume(&self) -> f64 {
        4.0 * PI / 3.0 * self.semiaxes.iter().product::<f64>()
    }

    pub fn min_semiaxis(&self) -> f64 {
        self.semiaxes[0]
    }

    /// Point on the surface: `c + Σ s_k u_k e_k` for a unit vector `u`
    /// expressed in the principal frame.
    pub fn surface_point(&self, u: &Vector3<f64>) -> Vector3<f64> {
        let scaled = Vector3::new(
            self.semiaxes[0] * u[0],
            self.semiaxes[1] * u[1],
            self.semiaxes[2] * u[2],
        );
        self.center + self.orientation * scaled
    }

    /// `(x − c)ᵀ Q⁻¹ (x − c)` evaluated in the principal frame.
    ///
    /// `None` when a semiaxis is below `min_axis`.
    pub fn quadratic_form(&self, x: &Vector3<f64>, min_axis: f64) -> Option<f64> {
        if self.min_semiaxis() < min_axis {
            return None;
        }
        let d = self.orientation.transpose() * (x - self.center);
        Some((0..3).map(|k| (d[k] / self.semiaxes[k]).powi(2)).sum())
    }

    /// Distance-like residual for degenerate ellipsoids: components along
    /// collapsed axes (below `min_axis`) must vanish and the rest must lie on
    /// the lower-dimensional ellipse. Returns `(off_plane, form − 1)`.
    pub fn degenerate_residual(&self, x: &Vector3<f64>, min_axis: f64) -> (f64, f64) {
        let d = self.orientation.transpose() * (x - self.center);
        let mut off = 0.0_f64;
        let mut form = 0.0;
        let mut any = false;
        for k in 0..3 {
            if self.semiaxes[k] < min_axis {
                off = off.max(d[k].abs());
            } else {
                any = true;
                form += (d[k] / self.semiaxes[k]).powi(2);
            }
        }
        (off, if any { form - 1.0 } else { 0.0 })
    }
}

fn bloch_blocks(rho: &DensityMatrix2Q, steered: Party) -> (Vector3<f64>, Vector3<f64>, Matrix3<f64>) {
    let r = qstate::correlation_matrix(rho);
    match steered {
        Party::A => (r.a(), r.b(), r.t()),
        Party::B => (r.b(), r.a(), r.t().transpose()),
    }
}

fn gamma_of(v: &Vector3<f64>) -> Result<f64, EllipsoidError> {
    let norm = v.norm();
    if norm >= 1.0 - MARGINAL_TOL {
        return Err(EllipsoidError::SingularMarginal { norm });
    }
    Ok(1.0 / (1.0 - norm * norm))
}

/// `γ_b = 1/(1 − |b|²)` from the Bloch vector of party B.
pub fn gamma_b(rho: &DensityMatrix2Q) -> Result<f64, EllipsoidError> {
    gamma_of(&qstate::correlation_matrix(rho).b())
}

/// `1/(1 − |b|²)` from a Bloch vector length.
pub fn gamma_from_norm(norm: f64) -> Result<f64, EllipsoidError> {
    if norm >= 1.0 - MARGINAL_TOL {
        return Err(EllipsoidError::SingularMarginal { norm });
    }
    Ok(1.0 / (1.0 - norm * norm))
}

pub fn steering_ellipsoid(
    rho: &DensityMatrix2Q,
    steered: Party,
) -> Result<SteeringEllipsoid, EllipsoidError> {
    let (a, b, t) = bloch_blocks(rho, steered);
    let gamma = gamma_of(&b)?;
    let center = (a - t * b) * gamma;
    let left = t - a * b.transpose();
    let middle = Matrix3::identity() + b * b.transpose() * gamma;
    let q = left * middle * left.transpose() * gamma;
    let shape = (q + q.transpose()) * 0.5;
    let eig = shape.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut semiaxes = [0.0; 3];
    let mut orientation = Matrix3::zeros();
    for (slot, &k) in order.iter().enumerate() {
        let mut ev = eig.eigenvalues[k];
        if ev < 0.0 {
            if ev > -CLIP_TOL {
                ev = 0.0;
            } else {
                return Err(EllipsoidError::NegativeShape { value: ev });
            }
        }
        semiaxes[slot] = ev.sqrt();
        orientation.set_column(slot, &eig.eigenvectors.column(k));
    }
    Ok(SteeringEllipsoid {
        steered,
        center,
        shape,
        semiaxes,
        orientation,
        gamma,
    })
}

/// `V = (4π/3) γ_b² Ω⁴`, equal to the product of the semiaxes.
pub fn ellipsoid_volume(rho: &DensityMatrix2Q) -> Result<f64, EllipsoidError> {
    let gamma = gamma_b(rho)?;
    Ok(volume_from(gamma, obesity::obesity(rho)))
}

pub fn volume_from(gamma: f64, omega: f64) -> f64 {
    4.0 * PI / 3.0 * gamma.powi(2) * omega.powi(4)
}

/// `(4π/3) γ⁴ Ω⁴`. Agrees with the ellipsoid volume only when `γ = 1`.
pub fn volume_from_quartic(gamma: f64, omega: f64) -> f64 {
    4.0 * PI / 3.0 * gamma.powi(4) * omega.powi(4)
}

/// Bloch vector of A after B is projected onto `(1 + n·σ)/2`, with the
/// outcome probability: `a' = (a + T n)/(1 + b·n)`, `p = (1 + b·n)/2`.
pub fn steered_bloch_vector(
    rho: &DensityMatrix2Q,
    n: &Vector3<f64>,
) -> Result<(Vector3<f64>, f64), EllipsoidError> {
    let r = qstate::correlation_matrix(rho);
    let denom = 1.0 + r.b().dot(n);
    let prob = 0.5 * denom;
    if prob <= 1e-12 {
        return Err(EllipsoidError::ZeroProbability { prob });
    }
    Ok(((r.a() + r.t() * n) / denom, prob))
}

/// Same quantity by explicit projection: `tr_B[(1 ⊗ Π_n) ρ] / p`.
pub fn steer_by_projection(
    rho: &DensityMatrix2Q,
    n: &Vector3<f64>,
) -> Result<(Vector3<f64>, f64), EllipsoidError> {
    let proj: Mat2c = (linalg::pauli(0)
        + linalg::pauli(1) * c(n[0], 0.0)
        + linalg::pauli(2) * c(n[1], 0.0)
        + linalg::pauli(3) * c(n[2], 0.0))
        * c(0.5, 0.0);
    let op = linalg::kron2(&linalg::pauli(0), &proj);
    let post = op * rho.matrix() * op.adjoint();
    let prob = post.trace().re;
    if prob <= 1e-12 {
        return Err(EllipsoidError::ZeroProbability { prob });
    }
    let mut red = Mat2c::zeros();
    for i in 0..2 {
        for j in 0..2 {
            red[(i, j)] = post[(2 * i, 2 * j)] + post[(2 * i + 1, 2 * j + 1)];
        }
    }
    Ok((linalg::bloch_vector(&red) / prob, prob))
}
