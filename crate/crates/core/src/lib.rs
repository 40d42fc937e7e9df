//! Quantum obesity, steering ellipsoids and local filtering for two-qubit
//! states, with the spin-chain machinery needed to follow them across
//! quantum phase transitions.
//!
//! The crate is organised bottom-up:
//!
//! - [`qstate`]: two-qubit density matrices, Pauli correlation matrices,
//!   partial traces and concurrence.
//! - [`obesity`]: `|det R|^{1/4}` and its closed forms.
//! - [`ellipsoid`]: steering ellipsoid geometry, `gamma_b` and volume.
//! - [`filtering`]: local filtering operations and their effect on obesity.
//! - [`ising`]: thermodynamic-limit correlators of the transverse-field
//!   Ising chain.
//! - [`ed`]: exact diagonalization of small periodic chains, used as an
//!   independent oracle.
//! - [`scan`]: parameter sweeps, finite differences and kink detection.
//!
//! Conventions: `|↑⟩ = (1, 0)` with `σz|↑⟩ = +|↑⟩`; two-qubit basis order
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`; in a tensor product the left factor is party A
//! (or the lower site index of a chain).

pub mod ed;
pub mod ellipsoid;
pub mod filtering;
pub mod io;
pub mod ising;
pub mod linalg;
pub mod obesity;
pub mod qstate;
pub mod quadrature;
pub mod sampling;
pub mod scan;

pub use ellipsoid::{Party, SteeringEllipsoid};
pub use filtering::{LocalFilter, LorentzLift};
pub use obesity::BellDiagonalParams;
pub use qstate::{CorrelationMatrix, DensityMatrix2Q};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
