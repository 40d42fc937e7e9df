//! Random states, unitaries and filters for property checks.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::filtering::LocalFilter;
use crate::linalg::{c, Mat2c, Mat4c};
use crate::obesity::{BellDiagonalParams, XFamily};
use crate::qstate::DensityMatrix2Q;
use crate::C64;

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im)
}

/// Ginibre state: `G G† / tr(G G†)` with `G` complex Gaussian 4×4.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix2Q {
    let g = Mat4c::from_fn(|_, _| gaussian_c64(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    let mut rho = m / tr;
    // exact hermiticity
    rho = (rho + rho.adjoint()) * c(0.5, 0.0);
    DensityMatrix2Q::new(rho).expect("Ginibre construction is always physical")
}

/// Haar-random single-qubit unitary (QR of a Ginibre matrix).
pub fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> Mat2c {
    let g = Mat2c::from_fn(|_, _| gaussian_c64(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut phases = Mat2c::zeros();
    for k in 0..2 {
        let d = r[(k, k)];
        phases[(k, k)] = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
    }
    q * phases
}

/// Random invertible 2×2 complex matrix.
///
/// Draws with `|det| < 1e-2` or condition number above ~900 are rejected.
pub fn random_invertible2<R: Rng + ?Sized>(rng: &mut R) -> Mat2c {
    loop {
        let m = Mat2c::from_fn(|_, _| gaussian_c64(rng));
        let d = m.determinant().norm();
        if d > 1e-2 && crate::linalg::spectral_norm2(&m) / d.sqrt() < 30.0 {
            return m;
        }
    }
}

/// Random element of SL(2, C).
pub fn random_sl2<R: Rng + ?Sized>(rng: &mut R) -> Mat2c {
    let m = random_invertible2(rng);
    let d = m.determinant();
    m / d.sqrt()
}

pub fn random_filter<R: Rng + ?Sized>(rng: &mut R) -> LocalFilter {
    LocalFilter::new(random_invertible2(rng), random_invertible2(rng)).expect("invertible draw")
}

pub fn random_sl2_filter<R: Rng + ?Sized>(rng: &mut R) -> LocalFilter {
    LocalFilter::new(random_sl2(rng), random_sl2(rng)).expect("invertible draw")
}

/// Uniform point on the unit sphere.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-8 {
            return v / n;
        }
    }
}

/// Uniform draw from the tetrahedron of physical Bell-diagonal parameters.
pub fn random_bell_diagonal<R: Rng + ?Sized>(rng: &mut R) -> BellDiagonalParams {
    // Mixtures of the four Bell states; weights from a flat Dirichlet.
    let w: [f64; 4] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-300).ln());
    let s: f64 = w.iter().sum();
    let p: [f64; 4] = std::array::from_fn(|k| w[k] / s);
    // Bell-state correlation vectors: Φ+ (1,-1,1), Φ- (-1,1,1), Ψ+ (1,1,-1), Ψ- (-1,-1,-1)
    const CORNERS: [[f64; 3]; 4] = [
        [1.0, -1.0, 1.0],
        [-1.0, 1.0, 1.0],
        [1.0, 1.0, -1.0],
        [-1.0, -1.0, -1.0],
    ];
    let mut cv = [0.0; 3];
    for (pk, corner) in p.iter().zip(CORNERS.iter()) {
        for i in 0..3 {
            cv[i] += pk * corner[i];
        }
    }
    BellDiagonalParams::new(cv[0], cv[1], cv[2]).expect("convex mixture of Bell states")
}

/// Random state with the zero pattern of the given family.
///
/// A random Hermitian matrix with the pattern is shifted by a multiple of
/// the identity until positive, which keeps the pattern intact.
pub fn random_x_family_state<R: Rng + ?Sized>(rng: &mut R, family: XFamily) -> DensityMatrix2Q {
    let mut h = Mat4c::zeros();
    for i in 0..4 {
        h[(i, i)] = c(StandardNormal.sample(rng), 0.0);
        for j in (i + 1)..4 {
            if family.allows(i, j) {
                let z = gaussian_c64(rng);
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
    }
    let lmin = crate::linalg::hermitian_eigenvalues(&h)[0];
    let shift = -lmin + rng.random::<f64>();
    let m = h + Mat4c::identity() * c(shift, 0.0);
    let tr = m.trace().re;
    DensityMatrix2Q::new(m / c(tr, 0.0)).expect("shifted pattern matrix is positive")
}
