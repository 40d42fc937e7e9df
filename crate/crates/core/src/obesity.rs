//! Quantum obesity `Ω = |det R|^{1/4}` and its closed forms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, Mat4c};
use crate::qstate::{self, CorrelationMatrix, DensityMatrix2Q};

/// Below this `|det R|` the obesity is reported as exactly zero.
pub const DET_FLOOR: f64 = 1e-48;

/// Tolerance for the zero pattern of the X-type families.
pub const PATTERN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ObesityError {
    #[error("state does not have the zero pattern of family k={family}; offending entries: {entries:?}")]
    PatternMismatch {
        family: u8,
        entries: Vec<(usize, usize, f64)>,
    },
    #[error("unphysical Bell-diagonal parameters ({c1}, {c2}, {c3}); eigenvalues {eigenvalues:?}")]
    UnphysicalBellDiagonal {
        c1: f64,
        c2: f64,
        c3: f64,
        eigenvalues: [f64; 4],
    },
}

/// `|det R|^{1/4}`, with `|det R| < DET_FLOOR` mapped to zero.
pub fn obesity_from_det(det: f64) -> f64 {
    let d = det.abs();
    if d < DET_FLOOR {
        0.0
    } else {
        d.powf(0.25)
    }
}

pub fn obesity_of(r: &CorrelationMatrix) -> f64 {
    obesity_from_det(r.determinant())
}

pub fn obesity(rho: &DensityMatrix2Q) -> f64 {
    obesity_of(&qstate::correlation_matrix(rho))
}

/// The three families of states sharing the obesity closed form.
///
/// All keep the diagonal and anti-diagonal. `K2` additionally allows the
/// `(1,3)`/`(2,4)` coherences and `K3` the `(1,2)`/`(3,4)` coherences
/// (1-based indices). `K1` is the X-state family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum XFamily {
    K1,
    K2,
    K3,
}

impl XFamily {
    pub fn from_index(k: u8) -> Option<Self> {
        match k {
            1 => Some(Self::K1),
            2 => Some(Self::K2),
            3 => Some(Self::K3),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Self::K1 => 1,
            Self::K2 => 2,
            Self::K3 => 3,
        }
    }

    /// Whether entry `(i, j)` (0-based) may be non-zero.
    pub fn allows(self, i: usize, j: usize) -> bool {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        match (i, j) {
            (0, 1) | (2, 3) => self == Self::K3,
            (0, 2) | (1, 3) => self == Self::K2,
            _ => true,
        }
    }
}

/// Closed form `2 |(|ρ23|² − |ρ14|²)(ρ22 ρ33 − ρ11 ρ44)|^{1/4}` (1-based).
pub fn obesity_x_family(rho: &DensityMatrix2Q, family: XFamily) -> Result<f64, ObesityError> {
    let entries: Vec<(usize, usize, f64)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| !family.allows(i, j))
        .map(|(i, j)| (i, j, rho.entry(i, j).norm()))
        .filter(|&(_, _, v)| v > PATTERN_TOL)
        .collect();
    if !entries.is_empty() {
        return Err(ObesityError::PatternMismatch {
            family: family.index(),
            entries,
        });
    }
    let coh = rho.entry(1, 2).norm_sqr() - rho.entry(0, 3).norm_sqr();
    let pop = (rho.entry(1, 1) * rho.entry(2, 2) - rho.entry(0, 0) * rho.entry(3, 3)).re;
    let inner = (coh * pop).abs();
    // 2·x^{1/4} = (16 x)^{1/4}: apply the same floor as the determinant path
    Ok(obesity_from_det(16.0 * inner))
}

/// Parameters `(c1, c2, c3)` of `¼(1 + Σ c_j σ_j ⊗ σ_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl BellDiagonalParams {
    pub const PHYSICAL_TOL: f64 = 1e-12;

    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self, ObesityError> {
        let p = Self { c1, c2, c3 };
        let eigenvalues = p.eigenvalues();
        if eigenvalues.iter().any(|&e| e < -Self::PHYSICAL_TOL) {
            return Err(ObesityError::UnphysicalBellDiagonal {
                c1,
                c2,
                c3,
                eigenvalues,
            });
        }
        Ok(p)
    }

    /// Weights on `|Φ+⟩, |Φ−⟩, |Ψ+⟩, |Ψ−⟩`.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let Self { c1, c2, c3 } = *self;
        [
            (1.0 + c1 - c2 + c3) / 4.0,
            (1.0 - c1 + c2 + c3) / 4.0,
            (1.0 + c1 + c2 - c3) / 4.0,
            (1.0 - c1 - c2 - c3) / 4.0,
        ]
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    pub fn matrix(&self) -> Mat4c {
        let Self { c1, c2, c3 } = *self;
        let z = c(0.0, 0.0);
        let q = |x: f64| c(x / 4.0, 0.0);
        Mat4c::new(
            q(1.0 + c3), z, z, q(c1 - c2),
            z, q(1.0 - c3), q(c1 + c2), z,
            z, q(c1 + c2), q(1.0 - c3), z,
            q(c1 - c2), z, z, q(1.0 + c3),
        )
    }

    pub fn state(&self) -> DensityMatrix2Q {
        DensityMatrix2Q::with_tolerance(self.matrix(), 1e-10).expect("validated parameters")
    }
}

/// `|c1 c2 c3|^{1/4}`.
pub fn obesity_bell_diagonal(p: &BellDiagonalParams) -> f64 {
    obesity_from_det(p.c1 * p.c2 * p.c3)
}
