//! Exact diagonalization of small periodic spin-½ chains.
//!
//! Two models, both real in the `σᶻ` basis:
//!
//! - Ising: `H = −Σᵢ (λ σˣᵢσˣᵢ₊₁ + σᶻᵢ)`
//! - XXZ: `H = Σᵢ (σˣᵢσˣᵢ₊₁ + σʸᵢσʸᵢ₊₁ + Δ σᶻᵢσᶻᵢ₊₁)`
//!
//! Bonds wrap periodically, so for `N = 2` the single bond is counted twice.
//! Basis index bit `N−1−i` holds site `i` and a 0 bit is `|↑⟩`.
//!
//! The ground space is found sector by sector (parity for Ising, total
//! magnetization for XXZ), which keeps symmetry-split near-degeneracies
//! apart. Degenerate ground states are mixed uniformly.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, Mat4c};
use crate::obesity::{BellDiagonalParams, ObesityError};
use crate::qstate::{self, DensityMatrix2Q, StateError};
use crate::C64;

pub const MIN_SITES: usize = 2;
pub const MAX_SITES: usize = 14;
/// Chains up to this size are diagonalized densely by default.
pub const DENSE_MAX_SITES: usize = 8;
/// Degeneracy gap and residual bound, relative to `‖H‖∞`.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Local Bloch vectors and off-diagonal correlations below this count as zero.
pub const BELL_DIAGONAL_TOL: f64 = 1e-8;

const LANCZOS_TARGET: f64 = 1e-11;
const LANCZOS_MAX_KRYLOV: usize = 200;
const LANCZOS_MAX_RESTARTS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ising,
    Xxz,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::Ising => "ising",
            Model::Xxz => "xxz",
        })
    }
}

impl std::str::FromStr for Model {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ising" => Ok(Model::Ising),
            "xxz" => Ok(Model::Xxz),
            other => Err(format!("unknown model '{other}' (expected ising or xxz)")),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum EdError {
    #[error("chain length {0} outside {MIN_SITES}..={MAX_SITES}")]
    Sites(usize),
    #[error("parameter {0} is not finite")]
    Parameter(f64),
    #[error("sites ({i}, {j}) invalid for {n} sites")]
    SiteIndex { i: usize, j: usize, n: usize },
    #[error("eigensolver did not converge: residual {residual:e} > {bound:e} after {iterations} iterations")]
    NonConvergence {
        residual: f64,
        bound: f64,
        iterations: usize,
    },
    #[error("pair state is not Bell-diagonal: |a| = {a_norm:e}, |b| = {b_norm:e}, off-diagonal T = {offdiag:e}")]
    NotBellDiagonal { a_norm: f64, b_norm: f64, offdiag: f64 },
    #[error(transparent)]
    Obesity(#[from] ObesityError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("correlator table: {0}")]
    Table(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub model: Model,
    pub n: usize,
    /// λ for Ising, Δ for XXZ.
    pub param: f64,
}

impl ChainSpec {
    pub fn new(model: Model, n: usize, param: f64) -> Result<Self, EdError> {
        if !(MIN_SITES..=MAX_SITES).contains(&n) {
            return Err(EdError::Sites(n));
        }
        if !param.is_finite() {
            return Err(EdError::Parameter(param));
        }
        Ok(Self { model, n, param })
    }

    pub fn ising(n: usize, lambda: f64) -> Result<Self, EdError> {
        Self::new(Model::Ising, n, lambda)
    }

    pub fn xxz(n: usize, delta: f64) -> Result<Self, EdError> {
        Self::new(Model::Xxz, n, delta)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn mask(&self, site: usize) -> usize {
        1 << (self.n - 1 - site)
    }

    /// Conserved quantity used to split the Hilbert space.
    fn sector_of(&self, s: usize) -> usize {
        let ups_down = s.count_ones() as usize;
        match self.model {
            Model::Ising => ups_down & 1,
            Model::Xxz => ups_down,
        }
    }

    fn sector_count(&self) -> usize {
        match self.model {
            Model::Ising => 2,
            Model::Xxz => self.n + 1,
        }
    }
}

/// Real symmetric Hamiltonian in compressed-row form.
#[derive(Debug, Clone)]
pub struct SparseHamiltonian {
    pub dim: usize,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseHamiltonian {
    pub fn matvec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim);
        for r in 0..self.dim {
            let mut acc = self.diag[r] * x[r];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            y[r] = acc;
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.diag[r].abs() + self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            m[(r, r)] = self.diag[r];
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[p])] += self.vals[p];
            }
        }
        m
    }

    pub fn nnz_offdiag(&self) -> usize {
        self.vals.len()
    }
}

pub fn build_hamiltonian(spec: &ChainSpec) -> SparseHamiltonian {
    let n = spec.n;
    let dim = spec.dim();
    let z = |s: usize, site: usize| if s & spec.mask(site) == 0 { 1.0 } else { -1.0 };
    let mut diag = vec![0.0; dim];
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    row_ptr.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
    for s in 0..dim {
        row.clear();
        for i in 0..n {
            let j = (i + 1) % n;
            let flip = spec.mask(i) | spec.mask(j);
            match spec.model {
                Model::Ising => {
                    diag[s] -= z(s, i);
                    if spec.param != 0.0 {
                        row.push((s ^ flip, -spec.param));
                    }
                }
                Model::Xxz => {
                    diag[s] += spec.param * z(s, i) * z(s, j);
                    if z(s, i) != z(s, j) {
                        row.push((s ^ flip, 2.0));
                    }
                }
            }
        }
        row.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let col = row[k].0;
            let mut v = 0.0;
            while k < row.len() && row[k].0 == col {
                v += row[k].1;
                k += 1;
            }
            if col == s {
                diag[s] += v;
            } else if v != 0.0 {
                cols.push(col);
                vals.push(v);
            }
        }
        row_ptr.push(cols.len());
    }
    SparseHamiltonian {
        dim,
        diag,
        row_ptr,
        cols,
        vals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Solver {
    /// Dense up to [`DENSE_MAX_SITES`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundSpaceOptions {
    /// Eigenvalues within `degeneracy_tol · ‖H‖∞` of the lowest are degenerate.
    pub degeneracy_tol: f64,
    pub solver: Solver,
}

impl Default for GroundSpaceOptions {
    fn default() -> Self {
        Self {
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            solver: Solver::Auto,
        }
    }
}

/// Lowest eigenspace, stored as orthonormal real vectors.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    pub spec: ChainSpec,
    pub energy: f64,
    pub degeneracy: usize,
    pub vectors: Vec<DVector<f64>>,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub h_norm: f64,
    pub solver: Solver,
}

pub fn ground_space(spec: &ChainSpec) -> Result<GroundSpace, EdError> {
    ground_space_with(spec, GroundSpaceOptions::default())
}

pub fn ground_space_with(spec: &ChainSpec, opts: GroundSpaceOptions) -> Result<GroundSpace, EdError> {
    let spec = ChainSpec::new(spec.model, spec.n, spec.param)?;
    let h = build_hamiltonian(&spec);
    let h_norm = h.norm_inf().max(f64::MIN_POSITIVE);
    let threshold = opts.degeneracy_tol * h_norm;
    let solver = match opts.solver {
        Solver::Auto if spec.n <= DENSE_MAX_SITES => Solver::Dense,
        Solver::Auto => Solver::Lanczos,
        s => s,
    };
    let pairs = match solver {
        Solver::Dense => dense_lowest(&h, threshold),
        _ => sector_lanczos(&spec, &h, threshold)?,
    };
    let energy = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut energies = Vec::new();
    let mut vectors = Vec::new();
    let mut residuals = Vec::new();
    for (e, v) in pairs {
        if e - energy > threshold {
            continue;
        }
        let r = (h.matvec(&v) - &v * e).norm();
        if r > RESIDUAL_TOL * h_norm {
            return Err(EdError::NonConvergence {
                residual: r,
                bound: RESIDUAL_TOL * h_norm,
                iterations: 0,
            });
        }
        energies.push(e);
        vectors.push(v);
        residuals.push(r);
    }
    Ok(GroundSpace {
        spec,
        energy,
        degeneracy: vectors.len(),
        vectors,
        energies,
        residuals,
        h_norm,
        solver,
    })
}

fn dense_lowest(h: &SparseHamiltonian, threshold: f64) -> Vec<(f64, DVector<f64>)> {
    let eig = h.to_dense().symmetric_eigen();
    let e0 = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..h.dim)
        .filter(|&k| eig.eigenvalues[k] - e0 <= threshold)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()))
        .collect()
}

/// Lowest states of each symmetry sector, then further deflated states in
/// any sector whose lowest level lies within `threshold` of the global one.
fn sector_lanczos(
    spec: &ChainSpec,
    h: &SparseHamiltonian,
    threshold: f64,
) -> Result<Vec<(f64, DVector<f64>)>, EdError> {
    let sectors: Vec<Vec<bool>> = (0..spec.sector_count())
        .map(|sec| (0..h.dim).map(|s| spec.sector_of(s) == sec).collect())
        .collect();
    let mut found: Vec<Vec<(f64, DVector<f64>)>> = Vec::with_capacity(sectors.len());
    for (sec, mask) in sectors.iter().enumerate() {
        let first = lanczos_lowest(h, mask, &[], sec as u64)?;
        found.push(first.into_iter().collect());
    }
    let e0 = found
        .iter()
        .flat_map(|v| v.iter().map(|p| p.0))
        .fold(f64::INFINITY, f64::min);
    for (sec, mask) in sectors.iter().enumerate() {
        loop {
            let Some(last) = found[sec].last() else { break };
            if last.0 - e0 > threshold {
                break;
            }
            let deflate: Vec<DVector<f64>> = found[sec].iter().map(|p| p.1.clone()).collect();
            let seed = (sec as u64) << 32 | deflate.len() as u64;
            match lanczos_lowest(h, mask, &deflate, seed)? {
                Some(next) => found[sec].push(next),
                None => break,
            }
        }
    }
    Ok(found.into_iter().flatten().collect())
}

fn project(v: &mut DVector<f64>, mask: &[bool]) {
    for (x, &keep) in v.iter_mut().zip(mask) {
        if !keep {
            *x = 0.0;
        }
    }
}

fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let d = q.dot(v);
            v.axpy(-d, q, 1.0);
        }
    }
}

/// Lowest eigenpair of `H` restricted to the sector `mask` and to the
/// complement of `deflate`. `None` if that subspace is empty.
fn lanczos_lowest(
    h: &SparseHamiltonian,
    mask: &[bool],
    deflate: &[DVector<f64>],
    seed: u64,
) -> Result<Option<(f64, DVector<f64>)>, EdError> {
    let sector_dim = mask.iter().filter(|&&m| m).count();
    if sector_dim <= deflate.len() {
        return Ok(None);
    }
    let h_norm = h.norm_inf().max(f64::MIN_POSITIVE);
    let target = LANCZOS_TARGET * h_norm;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = DVector::from_fn(h.dim, |_, _| StandardNormal.sample(&mut rng));
    project(&mut start, mask);
    let mut best = (f64::INFINITY, f64::INFINITY, start.clone());
    let mut iterations = 0;
    for _ in 0..LANCZOS_MAX_RESTARTS {
        orthogonalize(&mut start, deflate);
        let nrm = start.norm();
        if nrm < 1e-12 {
            return Ok(None);
        }
        start /= nrm;
        let max_k = (sector_dim - deflate.len()).min(LANCZOS_MAX_KRYLOV);
        let mut q: Vec<DVector<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz = (0.0, DVector::from_element(1, 1.0));
        for j in 0..max_k {
            iterations += 1;
            let mut w = h.matvec(&q[j]);
            project(&mut w, mask);
            alpha.push(q[j].dot(&w));
            orthogonalize(&mut w, &q);
            orthogonalize(&mut w, deflate);
            let b = w.norm();
            let last = j + 1 == max_k || b < 1e-13 * h_norm;
            if last || (j + 1) % 8 == 0 {
                ritz = tridiagonal_lowest(&alpha, &beta);
                let estimate = b * ritz.1[j].abs();
                if last || estimate < 0.1 * target {
                    break;
                }
            }
            beta.push(b);
            q.push(w / b);
        }
        let mut x = DVector::zeros(h.dim);
        for (coef, qi) in ritz.1.iter().zip(&q) {
            x.axpy(*coef, qi, 1.0);
        }
        project(&mut x, mask);
        orthogonalize(&mut x, deflate);
        x /= x.norm();
        let hx = h.matvec(&x);
        let theta = x.dot(&hx);
        let r = (hx - &x * theta).norm();
        if r < best.1 {
            best = (theta, r, x.clone());
        }
        if r <= target {
            break;
        }
        start = x;
    }
    let (theta, r, x) = best;
    if r > RESIDUAL_TOL * h_norm {
        return Err(EdError::NonConvergence {
            residual: r,
            bound: RESIDUAL_TOL * h_norm,
            iterations,
        });
    }
    Ok(Some((theta, x)))
}

/// Lowest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |r, c| {
        if r == c {
            alpha[r]
        } else if r + 1 == c {
            beta[r]
        } else if c + 1 == r {
            beta[c]
        } else {
            0.0
        }
    });
    let eig = t.symmetric_eigen();
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned())
}

/// Single- and two-site expectations in the ground-space mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdCorrelators {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub sz_i: f64,
    pub sz_j: f64,
}

impl GroundSpace {
    /// Uniform mixture over the ground vectors as a `2^N × 2^N` matrix.
    pub fn density_matrix(&self) -> DMatrix<C64> {
        let dim = self.spec.dim();
        let w = 1.0 / self.degeneracy as f64;
        let mut m = DMatrix::zeros(dim, dim);
        for v in &self.vectors {
            m += (v * v.transpose()) * w;
        }
        m.map(|x| c(x, 0.0))
    }

    /// Reduced state of sites `i < j`, site `i` the left factor.
    pub fn pair_state(&self, i: usize, j: usize) -> Result<DensityMatrix2Q, EdError> {
        let n = self.spec.n;
        if i >= j || j >= n {
            return Err(EdError::SiteIndex { i, j, n });
        }
        let bi = n - 1 - i;
        let bj = n - 1 - j;
        let mask = (1usize << bi) | (1usize << bj);
        let w = 1.0 / self.degeneracy as f64;
        let mut out = [[0.0f64; 4]; 4];
        for v in &self.vectors {
            for s in 0..self.spec.dim() {
                let vs = v[s];
                if vs == 0.0 {
                    continue;
                }
                let rest = s & !mask;
                let row = qstate::pair_index(s, bi, bj);
                for (p, slot) in out[row].iter_mut().enumerate() {
                    let t = rest | (((p >> 1) & 1) << bi) | ((p & 1) << bj);
                    *slot += w * vs * v[t];
                }
            }
        }
        let m = Mat4c::from_fn(|r, col| c(0.5 * (out[r][col] + out[col][r]), 0.0));
        Ok(DensityMatrix2Q::new(m)?)
    }

    pub fn pair_correlators(&self, i: usize, j: usize) -> Result<EdCorrelators, EdError> {
        let r = qstate::correlation_matrix(&self.pair_state(i, j)?);
        let m = r.matrix();
        Ok(EdCorrelators {
            xx: m[(1, 1)],
            yy: m[(2, 2)],
            zz: m[(3, 3)],
            sz_i: m[(3, 0)],
            sz_j: m[(0, 3)],
        })
    }

    /// `(c₁, c₂, c₃)` read off the diagonal of `T` in `(x, y, z)` order.
    pub fn bell_diagonal_params(&self, i: usize, j: usize) -> Result<BellDiagonalParams, EdError> {
        bell_diagonal_params_of(&self.pair_state(i, j)?)
    }

    pub fn energy_per_site(&self) -> f64 {
        self.energy / self.spec.n as f64
    }
}

pub fn bell_diagonal_params_of(rho: &DensityMatrix2Q) -> Result<BellDiagonalParams, EdError> {
    let r = qstate::correlation_matrix(rho);
    let t = r.t();
    let a_norm = r.a().norm();
    let b_norm = r.b().norm();
    let offdiag = (0..3)
        .flat_map(|p| (0..3).map(move |q| (p, q)))
        .filter(|(p, q)| p != q)
        .map(|(p, q)| t[(p, q)].abs())
        .fold(0.0, f64::max);
    if a_norm >= BELL_DIAGONAL_TOL || b_norm >= BELL_DIAGONAL_TOL || offdiag >= BELL_DIAGONAL_TOL {
        return Err(EdError::NotBellDiagonal { a_norm, b_norm, offdiag });
    }
    Ok(BellDiagonalParams::new(t[(0, 0)], t[(1, 1)], t[(2, 2)])?)
}

pub fn ed_pair_correlators(spec: &ChainSpec, i: usize, j: usize) -> Result<EdCorrelators, EdError> {
    ground_space(spec)?.pair_correlators(i, j)
}

pub fn ed_bell_diagonal_params(spec: &ChainSpec, i: usize, j: usize) -> Result<BellDiagonalParams, EdError> {
    ground_space(spec)?.bell_diagonal_params(i, j)
}

/// One row of the correlator table, pair `(0, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorRow {
    pub model: Model,
    #[serde(rename = "N")]
    pub n: usize,
    pub param: f64,
    pub k: usize,
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub sz: f64,
}

/// Rows for separations `1..=N/2` of one chain.
pub fn correlator_rows(gs: &GroundSpace) -> Result<Vec<CorrelatorRow>, EdError> {
    (1..=gs.spec.n / 2)
        .map(|k| {
            let c = gs.pair_correlators(0, k)?;
            Ok(CorrelatorRow {
                model: gs.spec.model,
                n: gs.spec.n,
                param: gs.spec.param,
                k,
                xx: c.xx,
                yy: c.yy,
                zz: c.zz,
                sz: c.sz_i,
            })
        })
        .collect()
}

pub fn write_correlator_table<W: Write>(w: W, rows: &[CorrelatorRow]) -> Result<(), EdError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(|e| EdError::Table(e.to_string()))?;
    }
    wtr.flush().map_err(|e| EdError::Table(e.to_string()))
}

pub fn read_correlator_table<R: Read>(r: R) -> Result<Vec<CorrelatorRow>, EdError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize()
        .enumerate()
        .map(|(line, row)| row.map_err(|e| EdError::Table(format!("row {}: {e}", line + 1))))
        .collect()
}
