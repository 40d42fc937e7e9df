//! Ground-state correlators of the transverse-field Ising chain
//! `H = −Σ (λ σˣᵢσˣᵢ₊₁ + σᶻᵢ)` in the thermodynamic limit.
//!
//! Everything derives from the integrals
//!
//! ```text
//! G_ℓ = (1/π) ∫₀^π [cos ℓφ + λ cos (ℓ+1)φ] / ω_φ dφ,
//! ω_φ = √((λ sin φ)² + (1 + λ cos φ)²)
//! ```
//!
//! with `⟨σᶻ⟩ = G₀`, `⟨σˣσˣ⟩` and `⟨σʸσʸ⟩` at separation `k` given by `k×k`
//! Toeplitz determinants, and `⟨σᶻσᶻ⟩ = ⟨σᶻ⟩² − G_k G₋ₖ`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::linalg::{c, Mat4c};
use crate::obesity;
use crate::qstate::{DensityMatrix2Q, StateError};
use crate::quadrature::{self, QuadConfig, QuadError};

/// Largest supported separation.
pub const MAX_SEPARATION: usize = 10;
/// Physicality tolerance for assembled pair states.
pub const PAIR_STATE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Error)]
pub enum IsingError {
    #[error("G_{ell} at lambda = {lambda}: {source}")]
    Quadrature {
        ell: i64,
        lambda: f64,
        #[source]
        source: QuadError,
    },
    #[error("separation k = {0} outside 1..={MAX_SEPARATION}")]
    Separation(usize),
    #[error("coupling lambda = {0} must be finite and non-negative")]
    Coupling(f64),
    #[error("assembled pair state unphysical at lambda = {lambda}, k = {k} (sz = {sz}, xx = {xx}, yy = {yy}, zz = {zz}): {source}")]
    Unphysical {
        lambda: f64,
        k: usize,
        sz: f64,
        xx: f64,
        yy: f64,
        zz: f64,
        #[source]
        source: StateError,
    },
}

/// Quasiparticle dispersion `ω_φ`.
pub fn omega_phi(phi: f64, lambda: f64) -> f64 {
    let s = lambda * phi.sin();
    let c = 1.0 + lambda * phi.cos();
    s.hypot(c)
}

fn g_integrand(ell: i64, lambda: f64, phi: f64) -> f64 {
    let w = omega_phi(phi, lambda);
    if w == 0.0 {
        // only at λ = 1, φ = π, where the ratio tends to cos((2ℓ+1)φ/2) = 0
        return 0.0;
    }
    let l = ell as f64;
    ((l * phi).cos() + lambda * ((l + 1.0) * phi).cos()) / w
}

/// `G_ℓ(λ)` to absolute accuracy `cfg.tol`.
pub fn g_ell(ell: i64, lambda: f64, cfg: QuadConfig) -> Result<f64, IsingError> {
    check_lambda(lambda)?;
    let scaled = QuadConfig {
        tol: cfg.tol * PI,
        ..cfg
    };
    quadrature::integrate_endpoint_biased(|phi| g_integrand(ell, lambda, phi), 0.0, PI, scaled)
        .map(|r| r.value / PI)
        .map_err(|source| IsingError::Quadrature { ell, lambda, source })
}

fn check_lambda(lambda: f64) -> Result<(), IsingError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(IsingError::Coupling(lambda))
    }
}

/// `G_ℓ` for `ℓ ∈ [−k, k]` at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTable {
    pub lambda: f64,
    pub k_max: usize,
    values: Vec<f64>,
}

impl GTable {
    pub fn compute(lambda: f64, k_max: usize, cfg: QuadConfig) -> Result<Self, IsingError> {
        check_lambda(lambda)?;
        let k = k_max as i64;
        let values = (-k..=k).map(|ell| g_ell(ell, lambda, cfg)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { lambda, k_max, values })
    }

    pub fn get(&self, ell: i64) -> f64 {
        let k = self.k_max as i64;
        assert!(ell.abs() <= k, "G_{ell} outside the table range ±{k}");
        self.values[(ell + k) as usize]
    }

    /// Pairs `(ℓ, G_ℓ)` in increasing `ℓ`.
    pub fn entries(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let k = self.k_max as i64;
        self.values.iter().enumerate().map(move |(i, &v)| (i as i64 - k, v))
    }
}

/// Which integrand is used for `⟨σᶻ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SigmaZFormula {
    /// `G₀`, consistent with the correlators at every λ.
    #[default]
    FromG0,
    /// `(1/π) ∫ (1 + cos φ)/ω_φ`, which coincides with `G₀` only at λ = 1.
    /// Kept for diagnostics.
    Printed,
}

pub fn sigma_z_expectation(lambda: f64, cfg: QuadConfig) -> Result<f64, IsingError> {
    sigma_z_with_formula(lambda, SigmaZFormula::FromG0, cfg)
}

pub fn sigma_z_with_formula(lambda: f64, formula: SigmaZFormula, cfg: QuadConfig) -> Result<f64, IsingError> {
    match formula {
        SigmaZFormula::FromG0 => g_ell(0, lambda, cfg),
        SigmaZFormula::Printed => {
            check_lambda(lambda)?;
            let scaled = QuadConfig {
                tol: cfg.tol * PI,
                ..cfg
            };
            quadrature::integrate_endpoint_biased(
                |phi| {
                    let w = omega_phi(phi, lambda);
                    if w == 0.0 {
                        0.0
                    } else {
                        (1.0 + phi.cos()) / w
                    }
                },
                0.0,
                PI,
                scaled,
            )
            .map(|r| r.value / PI)
            .map_err(|source| IsingError::Quadrature { ell: 0, lambda, source })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingCorrelators {
    pub lambda: f64,
    pub k: usize,
    pub sz: f64,
    pub g: GTable,
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
}

fn toeplitz_det(k: usize, entry: impl Fn(i64) -> f64) -> f64 {
    let m = DMatrix::from_fn(k, k, |r, c| entry(r as i64 - c as i64));
    m.lu().determinant()
}

fn check_separation(k: usize) -> Result<(), IsingError> {
    if (1..=MAX_SEPARATION).contains(&k) {
        Ok(())
    } else {
        Err(IsingError::Separation(k))
    }
}

pub fn pair_correlators(lambda: f64, k: usize, cfg: QuadConfig) -> Result<IsingCorrelators, IsingError> {
    check_separation(k)?;
    let table = GTable::compute(lambda, k, cfg)?;
    correlators_from_table(table, k)
}

/// Correlators at separation `k` from a table covering at least `±k`.
pub fn correlators_from_table(g: GTable, k: usize) -> Result<IsingCorrelators, IsingError> {
    check_separation(k)?;
    assert!(g.k_max >= k, "table too small for separation {k}");
    let ki = k as i64;
    let sz = g.get(0);
    let xx = toeplitz_det(k, |d| g.get(d - 1));
    let yy = toeplitz_det(k, |d| g.get(d + 1));
    let zz = sz * sz - g.get(ki) * g.get(-ki);
    Ok(IsingCorrelators {
        lambda: g.lambda,
        k,
        sz,
        g,
        xx,
        yy,
        zz,
    })
}

/// X-form pair state built from the correlators.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingPairState {
    pub lambda: f64,
    pub k: usize,
    pub a_plus: f64,
    pub a_minus: f64,
    pub b: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub rho: DensityMatrix2Q,
}

impl IsingPairState {
    pub fn from_correlators(corr: &IsingCorrelators) -> Result<Self, IsingError> {
        let IsingCorrelators { lambda, k, sz, xx, yy, zz, .. } = *corr;
        let a_plus = (1.0 + 2.0 * sz + zz) / 4.0;
        let a_minus = (1.0 - 2.0 * sz + zz) / 4.0;
        let b = (1.0 - zz) / 4.0;
        let c_plus = (xx + yy) / 4.0;
        let c_minus = (xx - yy) / 4.0;
        let z = c(0.0, 0.0);
        let m = Mat4c::new(
            c(a_plus, 0.0), z, z, c(c_minus, 0.0),
            z, c(b, 0.0), c(c_plus, 0.0), z,
            z, c(c_plus, 0.0), c(b, 0.0), z,
            c(c_minus, 0.0), z, z, c(a_minus, 0.0),
        );
        let rho = DensityMatrix2Q::with_tolerance(m, PAIR_STATE_TOL).map_err(|source| IsingError::Unphysical {
            lambda,
            k,
            sz,
            xx,
            yy,
            zz,
            source,
        })?;
        Ok(Self {
            lambda,
            k,
            a_plus,
            a_minus,
            b,
            c_plus,
            c_minus,
            rho,
        })
    }

    /// `2 |(C₊² − C₋²)(B² − A₊A₋)|^{1/4}`.
    pub fn obesity_closed_form(&self) -> f64 {
        let inner = (self.c_plus.powi(2) - self.c_minus.powi(2)) * (self.b.powi(2) - self.a_plus * self.a_minus);
        obesity::obesity_from_det(16.0 * inner.abs())
    }

    /// Ratio `Ω^F/Ω` under the optimal diagonal filter: `1 / (2(B + √(A₊A₋)))`.
    pub fn filter_gain(&self) -> f64 {
        1.0 / (2.0 * (self.b + (self.a_plus * self.a_minus).max(0.0).sqrt()))
    }

    /// The alternative closed form `(B + √(A₊A₋))^{−1/2} / √2`.
    pub fn filter_gain_alt(&self) -> f64 {
        (self.b + (self.a_plus * self.a_minus).max(0.0).sqrt()).abs().powf(-0.5) / 2f64.sqrt()
    }
}

pub fn ising_pair_state(lambda: f64, k: usize, cfg: QuadConfig) -> Result<IsingPairState, IsingError> {
    IsingPairState::from_correlators(&pair_correlators(lambda, k, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Gauss–Legendre nodes and weights on [−1, 1] by Newton iteration.
    fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = -z;
            x[n - 1 - i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
            w[n - 1 - i] = w[i];
        }
        (x, w)
    }

    fn g_reference(ell: i64, lambda: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
        let (x, w) = nodes;
        let l = ell as f64;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(w.iter()) {
            let phi = 0.5 * PI * (xi + 1.0);
            let om = ((lambda * phi.sin()).powi(2) + (1.0 + lambda * phi.cos()).powi(2)).sqrt();
            s += wi * ((l * phi).cos() + lambda * ((l + 1.0) * phi).cos()) / om;
        }
        0.5 * s
    }

    #[test]
    fn dispersion_examples() {
        for phi in [0.0, 0.3, 1.7, PI] {
            assert!((omega_phi(phi, 0.0) - 1.0).abs() < 1e-15);
        }
        assert!(omega_phi(PI, 1.0) < 1e-15);
        assert!((omega_phi(0.0, 2.0) - 3.0).abs() < 1e-15);
        assert!(omega_phi(PI, 0.99) > 0.0);
    }

    #[test]
    fn g_at_zero_coupling() {
        let cfg = QuadConfig::default();
        assert!((g_ell(0, 0.0, cfg).unwrap() - 1.0).abs() < 1e-10);
        for ell in [-3, -2, -1, 1, 2, 3] {
            assert!(g_ell(ell, 0.0, cfg).unwrap().abs() < 1e-10, "G_{ell}");
        }
    }

    #[test]
    fn g_matches_gauss_legendre() {
        let nodes = gauss_legendre(4096);
        let cfg = QuadConfig::default();
        for lambda in [0.5, 0.3, 1.7] {
            for ell in -3..=3 {
                let got = g_ell(ell, lambda, cfg).unwrap();
                let want = g_reference(ell, lambda, &nodes);
                assert!((got - want).abs() < 1e-10, "λ={lambda} ℓ={ell}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn g_at_criticality_is_closed_form() {
        // At λ = 1 the integrand reduces to cos((2ℓ+1)φ/2).
        let cfg = QuadConfig::default();
        for ell in -4..=4 {
            let m = (2 * ell + 1) as f64;
            let want = 2.0 * (m * PI / 2.0).sin() / (PI * m);
            assert!((g_ell(ell, 1.0, cfg).unwrap() - want).abs() < 1e-10, "ℓ={ell}");
        }
    }

    #[test]
    fn strong_coupling_limits() {
        let cfg = QuadConfig::default();
        assert!((g_ell(-1, 50.0, cfg).unwrap() - 1.0).abs() < 0.05);
        assert!(sigma_z_expectation(50.0, cfg).unwrap().abs() < 0.05);
    }

    #[test]
    fn printed_sigma_z_agrees_only_at_criticality() {
        let cfg = QuadConfig::default();
        let a = sigma_z_with_formula(1.0, SigmaZFormula::Printed, cfg).unwrap();
        let b = sigma_z_with_formula(1.0, SigmaZFormula::FromG0, cfg).unwrap();
        assert!((a - b).abs() < 1e-10);
        let a = sigma_z_with_formula(0.5, SigmaZFormula::Printed, cfg).unwrap();
        let b = sigma_z_with_formula(0.5, SigmaZFormula::FromG0, cfg).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn nearest_neighbour_determinants_are_single_entries() {
        let c = pair_correlators(0.7, 1, QuadConfig::default()).unwrap();
        assert_eq!(c.xx, c.g.get(-1));
        assert_eq!(c.yy, c.g.get(1));
        assert_eq!(c.zz, c.sz * c.sz - c.g.get(1) * c.g.get(-1));
    }

    #[test]
    fn two_site_determinants() {
        let c = pair_correlators(0.7, 2, QuadConfig::default()).unwrap();
        let g = |l| c.g.get(l);
        assert!((c.xx - (g(-1) * g(-1) - g(-2) * g(0))).abs() < 1e-14);
        assert!((c.yy - (g(1) * g(1) - g(0) * g(2))).abs() < 1e-14);
    }

    #[test]
    fn paramagnet_limit() {
        let cfg = QuadConfig::default();
        for k in [1, 2, 3] {
            let c = pair_correlators(0.0, k, cfg).unwrap();
            assert!((c.sz - 1.0).abs() < 1e-10);
            assert!(c.xx.abs() < 1e-10 && c.yy.abs() < 1e-10);
            assert!((c.zz - 1.0).abs() < 1e-10);
        }
        let p = ising_pair_state(0.0, 1, cfg).unwrap();
        let up = DensityMatrix2Q::product_basis(true, true);
        assert!((p.rho.matrix() - up.matrix()).camax() < 1e-10);
        assert_eq!(obesity::obesity(&p.rho), 0.0);
    }

    #[test]
    fn ordered_phase_has_obesity() {
        let cfg = QuadConfig::default();
        let p = ising_pair_state(2.0, 1, cfg).unwrap();
        assert!(obesity::obesity(&p.rho) > 0.0);
        let far = pair_correlators(20.0, 1, cfg).unwrap();
        let here = pair_correlators(2.0, 1, cfg).unwrap();
        assert!(here.xx > 0.8 && (far.xx - here.xx).abs() < 0.15);
    }

    #[test]
    fn closed_form_matches_determinant() {
        let cfg = QuadConfig::default();
        for lambda in [0.1, 0.6, 0.95, 1.0, 1.3, 2.0] {
            for k in [1, 2, 4] {
                let p = ising_pair_state(lambda, k, cfg).unwrap();
                let x = obesity::obesity_x_family(&p.rho, obesity::XFamily::K1).unwrap();
                assert!((p.obesity_closed_form() - obesity::obesity(&p.rho)).abs() < 1e-10);
                assert!((x - p.obesity_closed_form()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bad_inputs() {
        let cfg = QuadConfig::default();
        assert!(matches!(pair_correlators(0.5, 0, cfg), Err(IsingError::Separation(0))));
        assert!(matches!(pair_correlators(0.5, 11, cfg), Err(IsingError::Separation(11))));
        assert!(matches!(g_ell(0, -1.0, cfg), Err(IsingError::Coupling(_))));
        assert!(matches!(g_ell(0, f64::NAN, cfg), Err(IsingError::Coupling(_))));
    }

    #[test]
    fn filter_gain_forms() {
        let p = ising_pair_state(0.8, 1, QuadConfig::default()).unwrap();
        let s = p.b + (p.a_plus * p.a_minus).sqrt();
        assert!((p.filter_gain() - 1.0 / (2.0 * s)).abs() < 1e-15);
        assert!((p.filter_gain_alt() - 1.0 / (2.0 * s).sqrt()).abs() < 1e-15);
        assert!(p.filter_gain() >= 1.0);
    }
}
