//! Parameter sweeps, finite differences and kink detection.
//!
//! A sweep evaluates every grid point independently (in parallel), then
//! differentiates each column on the sampled grid. Columns with missing
//! values are differentiated on their contiguous runs.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::{Matrix4, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ed::{self, ChainSpec, CorrelatorRow, EdError, GroundSpaceOptions, Model};
use crate::ellipsoid::{self, Party};
use crate::filtering::{self, LocalFilter};
use crate::ising::{self, IsingError, IsingPairState};
use crate::obesity::{self, BellDiagonalParams};
use crate::qstate::{self, DensityMatrix2Q};
use crate::quadrature::QuadConfig;

/// Relative slack allowed in grid spacing before a grid counts as non-uniform.
pub const GRID_UNIFORMITY_TOL: f64 = 1e-8;
/// Tolerance of the per-record volume identity and the filter audit.
pub const RECORD_IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum ScanError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("grid is not uniform at index {index} (spacing {spacing} vs {expected})")]
    NonUniform { index: usize, spacing: f64, expected: f64 },
    #[error("xs and ys differ in length ({xs} vs {ys})")]
    Length { xs: usize, ys: usize },
    #[error("all second differences vanish; no kink to locate")]
    Degenerate,
    #[error("invalid grid: from {lo} to {hi} step {step}")]
    Grid { lo: f64, hi: f64, step: f64 },
    #[error("CSV: {0}")]
    Csv(String),
}

/// `lo, lo + step, …` up to `hi` (inclusive when it lands on the grid).
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, ScanError> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi <= lo {
        return Err(ScanError::Grid { lo, hi, step });
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn check_uniform(xs: &[f64]) -> Result<f64, ScanError> {
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for i in 0..xs.len() - 1 {
        let d = xs[i + 1] - xs[i];
        if (d - h).abs() > GRID_UNIFORMITY_TOL * h.abs() + 1e-14 {
            return Err(ScanError::NonUniform {
                index: i,
                spacing: d,
                expected: h,
            });
        }
    }
    Ok(h)
}

/// Central differences inside, second-order one-sided differences at the ends.
pub fn finite_difference(xs: &[f64], ys: &[f64]) -> Result<Vec<f64>, ScanError> {
    if xs.len() != ys.len() {
        return Err(ScanError::Length { xs: xs.len(), ys: ys.len() });
    }
    let n = xs.len();
    if n < 3 {
        return Err(ScanError::TooFewPoints { need: 3, got: n });
    }
    let h = check_uniform(xs)?;
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * ys[0] + 4.0 * ys[1] - ys[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (ys[i + 1] - ys[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * ys[n - 1] - 4.0 * ys[n - 2] + ys[n - 3]) / (2.0 * h);
    Ok(d)
}

/// Derivative on a uniform grid with gaps: each run of at least three
/// present values is differentiated separately.
pub fn finite_difference_gapped(xs: &[f64], ys: &[Option<f64>]) -> Result<Vec<Option<f64>>, ScanError> {
    if xs.len() != ys.len() {
        return Err(ScanError::Length { xs: xs.len(), ys: ys.len() });
    }
    let mut out = vec![None; ys.len()];
    let mut i = 0;
    while i < ys.len() {
        if ys[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < ys.len() && ys[i].is_some() {
            i += 1;
        }
        if i - start >= 3 {
            let vals: Vec<f64> = ys[start..i].iter().map(|v| v.unwrap()).collect();
            let d = finite_difference(&xs[start..i], &vals)?;
            for (k, v) in d.into_iter().enumerate() {
                out[start + k] = Some(v);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkReport {
    /// Grid point with the largest `|second difference|`.
    pub param_hat: f64,
    /// That magnitude divided by the median magnitude.
    pub score: f64,
    pub magnitude: f64,
    pub background: f64,
    pub window: (f64, f64),
    pub index: usize,
}

/// Locates the largest second difference of `ys`.
///
/// When more than half of the second differences vanish the median is zero;
/// the mean is used as background instead.
pub fn detect_kink(xs: &[f64], ys: &[f64]) -> Result<KinkReport, ScanError> {
    if xs.len() != ys.len() {
        return Err(ScanError::Length { xs: xs.len(), ys: ys.len() });
    }
    if xs.len() < 5 {
        return Err(ScanError::TooFewPoints { need: 5, got: xs.len() });
    }
    check_uniform(xs)?;
    let d2: Vec<f64> = (1..ys.len() - 1)
        .map(|i| (ys[i + 1] - 2.0 * ys[i] + ys[i - 1]).abs())
        .collect();
    let (arg, &magnitude) = d2
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least three second differences");
    if magnitude == 0.0 {
        return Err(ScanError::Degenerate);
    }
    let mut sorted = d2.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let background = if median > 0.0 {
        median
    } else {
        sorted.iter().sum::<f64>() / m as f64
    };
    let index = arg + 1;
    Ok(KinkReport {
        param_hat: xs[index],
        score: magnitude / background,
        magnitude,
        background,
        window: (xs[index - 1], xs[index + 1]),
        index,
    })
}

/// One grid point of a sweep. Absent values are written as empty CSV cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub param: f64,
    pub omega: f64,
    pub d_omega: Option<f64>,
    pub gamma_b: Option<f64>,
    pub d_gamma_b: Option<f64>,
    pub volume: Option<f64>,
    pub d_volume: Option<f64>,
    pub omega_filtered: Option<f64>,
    pub d_omega_filtered: Option<f64>,
    /// `Ω^F / Ω` from the explicitly filtered state.
    pub filter_fn_direct: Option<f64>,
    /// `(B + √(A₊A₋))^{−1/2} / √2`.
    pub filter_fn_paper: Option<f64>,
    /// `1 / tr`, the determinant-free scaling.
    pub filter_fn_theorem: Option<f64>,
}

impl ScanRecord {
    fn bare(param: f64, omega: f64) -> Self {
        Self {
            param,
            omega,
            d_omega: None,
            gamma_b: None,
            d_gamma_b: None,
            volume: None,
            d_volume: None,
            omega_filtered: None,
            d_omega_filtered: None,
            filter_fn_direct: None,
            filter_fn_paper: None,
            filter_fn_theorem: None,
        }
    }
}

/// Per-point audit data for a filtered Ising point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterAudit {
    pub param: f64,
    /// `|Ω^F·tr − Ω·|det O_A||det O_B||`.
    pub law_residual: f64,
    /// `max(|a|, |b|)` of the filtered state.
    pub bloch_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointFailure {
    pub param: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Scan {
    /// Name of the swept parameter (CSV header of the first column).
    pub param_name: String,
    pub records: Vec<ScanRecord>,
    pub failures: Vec<PointFailure>,
    pub filter_audit: Vec<FilterAudit>,
    /// 10× finer sweep over the critical window, when requested.
    pub fine: Option<Box<Scan>>,
}

impl Scan {
    pub fn params(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.param).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.omega).collect()
    }

    /// Kink in `Ω` over the records, which must form a uniform grid.
    pub fn kink(&self) -> Result<KinkReport, ScanError> {
        detect_kink(&self.params(), &self.omegas())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingScanConfig {
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub k: usize,
    pub quad: QuadConfig,
    pub with_filter: bool,
    /// Also sweep `[0.9, 1.1]` at a tenth of the step.
    pub densify: bool,
}

impl Default for IsingScanConfig {
    fn default() -> Self {
        Self {
            from: 0.0,
            to: 2.0,
            step: 0.01,
            k: 1,
            quad: QuadConfig::default(),
            with_filter: true,
            densify: false,
        }
    }
}

fn ising_point(lambda: f64, cfg: &IsingScanConfig) -> Result<(ScanRecord, Option<FilterAudit>), IsingError> {
    let state = ising::ising_pair_state(lambda, cfg.k, cfg.quad)?;
    let omega = obesity::obesity(&state.rho);
    let mut rec = ScanRecord::bare(lambda, omega);
    if let Ok(e) = ellipsoid::steering_ellipsoid(&state.rho, Party::A) {
        rec.gamma_b = Some(e.gamma);
        rec.volume = Some(e.volume());
    }
    let mut audit = None;
    if cfg.with_filter {
        audit = filter_ising_point(&state, omega, &mut rec);
    }
    Ok((rec, audit))
}

fn filter_ising_point(state: &IsingPairState, omega: f64, rec: &mut ScanRecord) -> Option<FilterAudit> {
    let f = filtering::ising_optimal_filter(state.a_plus, state.a_minus).ok()?;
    let (rf, tr) = filtering::apply_filter(&state.rho, &f).ok()?;
    let omega_f = obesity::obesity(&rf);
    rec.omega_filtered = Some(omega_f);
    rec.filter_fn_direct = (omega > 0.0).then(|| omega_f / omega);
    rec.filter_fn_paper = Some(state.filter_gain_alt());
    rec.filter_fn_theorem = Some(1.0 / tr);
    let r = qstate::correlation_matrix(&rf);
    Some(FilterAudit {
        param: state.lambda,
        law_residual: (omega_f * tr - omega * f.det_a() * f.det_b()).abs(),
        bloch_residual: r.a().norm().max(r.b().norm()),
    })
}

fn assemble<F>(param_name: &str, xs: &[f64], eval: F) -> Result<Scan, ScanError>
where
    F: Fn(f64) -> Result<(ScanRecord, Option<FilterAudit>), String> + Sync,
{
    let results: Vec<_> = xs.par_iter().map(|&x| (x, eval(x))).collect();
    let mut slots: Vec<Option<ScanRecord>> = Vec::with_capacity(xs.len());
    let mut scan = Scan {
        param_name: param_name.to_string(),
        ..Default::default()
    };
    for (x, r) in results {
        match r {
            Ok((rec, audit)) => {
                slots.push(Some(rec));
                scan.filter_audit.extend(audit);
            }
            Err(message) => {
                slots.push(None);
                scan.failures.push(PointFailure { param: x, message });
            }
        }
    }
    let column = |get: fn(&ScanRecord) -> Option<f64>| -> Vec<Option<f64>> {
        slots.iter().map(|s| s.as_ref().and_then(get)).collect()
    };
    let d_omega = finite_difference_gapped(xs, &column(|r| Some(r.omega)))?;
    let d_gamma = finite_difference_gapped(xs, &column(|r| r.gamma_b))?;
    let d_volume = finite_difference_gapped(xs, &column(|r| r.volume))?;
    let d_filtered = finite_difference_gapped(xs, &column(|r| r.omega_filtered))?;
    for (i, slot) in slots.into_iter().enumerate() {
        if let Some(mut rec) = slot {
            rec.d_omega = d_omega[i];
            rec.d_gamma_b = d_gamma[i];
            rec.d_volume = d_volume[i];
            rec.d_omega_filtered = d_filtered[i];
            scan.records.push(rec);
        }
    }
    Ok(scan)
}

pub fn ising_scan(cfg: &IsingScanConfig) -> Result<Scan, ScanError> {
    if cfg.from < 0.0 {
        return Err(ScanError::Grid { lo: cfg.from, hi: cfg.to, step: cfg.step });
    }
    let xs = grid(cfg.from, cfg.to, cfg.step)?;
    let mut scan = assemble("lambda", &xs, |l| ising_point(l, cfg).map_err(|e| e.to_string()))?;
    if cfg.densify {
        let (lo, hi) = (cfg.from.max(0.9), cfg.to.min(1.1));
        if hi > lo {
            let fine_cfg = IsingScanConfig {
                from: lo,
                to: hi,
                step: cfg.step / 10.0,
                densify: false,
                ..*cfg
            };
            scan.fine = Some(Box::new(ising_scan(&fine_cfg)?));
        }
    }
    Ok(scan)
}

/// Where XXZ pair correlators come from.
#[derive(Debug, Clone)]
pub enum XxzSource {
    Ed(GroundSpaceOptions),
    /// Nearest-neighbour rows of a correlator table.
    Table(Vec<CorrelatorRow>),
}

#[derive(Debug, Clone)]
pub struct XxzScanConfig {
    pub from: f64,
    pub to: f64,
    pub step: f64,
    pub n: usize,
    pub source: XxzSource,
}

/// Matching tolerance between table parameters and grid points.
const TABLE_PARAM_TOL: f64 = 1e-9;

fn table_params(rows: &[CorrelatorRow], n: usize, delta: f64) -> Result<BellDiagonalParams, String> {
    let candidates: Vec<&CorrelatorRow> = rows
        .iter()
        .filter(|r| r.model == Model::Xxz && r.k == 1 && (r.param - delta).abs() <= TABLE_PARAM_TOL * (1.0 + delta.abs()))
        .collect();
    let row = candidates
        .iter()
        .find(|r| r.n == n)
        .or_else(|| candidates.first())
        .ok_or_else(|| format!("no xxz k=1 row for param {delta}"))?;
    if row.sz.abs() >= ed::BELL_DIAGONAL_TOL {
        return Err(format!("table row at {delta} has sz = {} and is not Bell-diagonal", row.sz));
    }
    BellDiagonalParams::new(row.xx, row.yy, row.zz).map_err(|e| e.to_string())
}

fn xxz_point(delta: f64, cfg: &XxzScanConfig) -> Result<(ScanRecord, Option<FilterAudit>), String> {
    let p = match &cfg.source {
        XxzSource::Ed(opts) => {
            let spec = ChainSpec::xxz(cfg.n, delta).map_err(|e| e.to_string())?;
            let gs = ed::ground_space_with(&spec, *opts).map_err(|e| e.to_string())?;
            gs.bell_diagonal_params(0, 1).map_err(|e: EdError| e.to_string())?
        }
        XxzSource::Table(rows) => table_params(rows, cfg.n, delta)?,
    };
    let omega = obesity::obesity_bell_diagonal(&p);
    let mut rec = ScanRecord::bare(delta, omega);
    rec.gamma_b = Some(1.0);
    rec.volume = Some(4.0 * PI / 3.0 * (p.c1 * p.c2 * p.c3).abs());
    Ok((rec, None))
}

pub fn xxz_scan(cfg: &XxzScanConfig) -> Result<Scan, ScanError> {
    let xs = grid(cfg.from, cfg.to, cfg.step)?;
    assemble("delta", &xs, |d| xxz_point(d, cfg))
}

/// Comparison of the differenced volume with the product-rule expression
/// `(8π/3) γΩ³ (Ω ∂γ + 2γ ∂Ω)` for `V = (4π/3) γ²Ω⁴` at one interior point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeDerivativeCheck {
    pub param: f64,
    pub differenced: f64,
    pub product_rule: f64,
    /// Estimated truncation error of the comparison.
    pub bound: f64,
}

impl VolumeDerivativeCheck {
    pub fn holds(&self) -> bool {
        (self.differenced - self.product_rule).abs() <= self.bound
    }
}

/// Safety factor on the third-difference truncation estimate.
const FD_BOUND_SAFETY: f64 = 10.0;

/// Checks the volume decomposition at points with two valid neighbours on
/// each side. The error bound is `h²|f'''|/6` for each differenced column,
/// with `f'''` estimated from third differences.
pub fn volume_derivative_checks(records: &[ScanRecord]) -> Vec<VolumeDerivativeCheck> {
    let n = records.len();
    let mut out = Vec::new();
    if n < 5 {
        return out;
    }
    let h = (records[n - 1].param - records[0].param) / (n - 1) as f64;
    let third = |vals: &[Option<f64>], i: usize| -> Option<f64> {
        let g = |j: usize| vals[j];
        let left = g(i + 1)? - 3.0 * g(i)? + 3.0 * g(i - 1)? - g(i - 2)?;
        let right = g(i + 2)? - 3.0 * g(i + 1)? + 3.0 * g(i)? - g(i - 1)?;
        Some(left.abs().max(right.abs()) / (6.0 * h))
    };
    let omega: Vec<Option<f64>> = records.iter().map(|r| Some(r.omega)).collect();
    let gamma: Vec<Option<f64>> = records.iter().map(|r| r.gamma_b).collect();
    let volume: Vec<Option<f64>> = records.iter().map(|r| r.volume).collect();
    for i in 2..n - 2 {
        let r = &records[i];
        let (Some(g), Some(dg), Some(dv), Some(dw)) = (r.gamma_b, r.d_gamma_b, r.d_volume, r.d_omega) else {
            continue;
        };
        let (Some(eo), Some(eg), Some(ev)) = (third(&omega, i), third(&gamma, i), third(&volume, i)) else {
            continue;
        };
        let w = r.omega;
        let pre = 8.0 * PI / 3.0 * g * w.powi(3);
        let product_rule = pre * (w * dg + 2.0 * g * dw);
        let bound = FD_BOUND_SAFETY * (ev + pre * (w * eg + 2.0 * g * eo)) + 1e-9 * (dv.abs() + product_rule.abs()) + 1e-12;
        out.push(VolumeDerivativeCheck {
            param: r.param,
            differenced: dv,
            product_rule,
            bound,
        });
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_opt(s: &str) -> Result<Option<f64>, ScanError> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|e| ScanError::Csv(format!("'{s}': {e}")))
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "omega",
    "d_omega",
    "gamma_b",
    "d_gamma_b",
    "volume",
    "d_volume",
    "omega_filtered",
    "d_omega_filtered",
    "filter_fn_direct",
    "filter_fn_paper",
    "filter_fn_theorem",
];

pub fn write_records<W: Write>(w: W, param_name: &str, records: &[ScanRecord]) -> Result<(), ScanError> {
    let err = |e: csv::Error| ScanError::Csv(e.to_string());
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec![param_name];
    header.extend(CSV_COLUMNS);
    wtr.write_record(&header).map_err(err)?;
    for r in records {
        wtr.write_record([
            r.param.to_string(),
            r.omega.to_string(),
            fmt_opt(r.d_omega),
            fmt_opt(r.gamma_b),
            fmt_opt(r.d_gamma_b),
            fmt_opt(r.volume),
            fmt_opt(r.d_volume),
            fmt_opt(r.omega_filtered),
            fmt_opt(r.d_omega_filtered),
            fmt_opt(r.filter_fn_direct),
            fmt_opt(r.filter_fn_paper),
            fmt_opt(r.filter_fn_theorem),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| ScanError::Csv(e.to_string()))
}

/// Parses a file written by [`write_records`]; returns the parameter name too.
pub fn read_records<R: Read>(r: R) -> Result<(String, Vec<ScanRecord>), ScanError> {
    let err = |e: csv::Error| ScanError::Csv(e.to_string());
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(err)?.clone();
    if header.len() != 12 || header.iter().skip(1).ne(CSV_COLUMNS.iter().copied()) {
        return Err(ScanError::Csv(format!("unexpected header {:?}", header)));
    }
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(err)?;
        let f = |i: usize| parse_opt(&row[i]);
        let need = |i: usize| f(i)?.ok_or_else(|| ScanError::Csv(format!("missing value in column {i}")));
        out.push(ScanRecord {
            param: need(0)?,
            omega: need(1)?,
            d_omega: f(2)?,
            gamma_b: f(3)?,
            d_gamma_b: f(4)?,
            volume: f(5)?,
            d_volume: f(6)?,
            omega_filtered: f(7)?,
            d_omega_filtered: f(8)?,
            filter_fn_direct: f(9)?,
            filter_fn_paper: f(10)?,
            filter_fn_theorem: f(11)?,
        });
    }
    Ok((header[0].to_string(), out))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllipsoidSummary {
    pub center: Vector3<f64>,
    pub semiaxes: [f64; 3],
    pub orientation: nalgebra::Matrix3<f64>,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FilteredSummary {
    pub trace_norm: f64,
    pub filtering_function: f64,
    pub omega_direct: f64,
    pub omega_general: f64,
    /// Only defined for unit-determinant filters.
    pub omega_theorem: Option<f64>,
    pub correlation_matrix: Matrix4<f64>,
}

/// Everything computable from a single two-qubit state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateReport {
    pub eigenvalues: [f64; 4],
    pub correlation_matrix: Matrix4<f64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub det_r: f64,
    pub omega: f64,
    pub concurrence: f64,
    /// `Ω ≥ C`.
    pub concurrence_bound_holds: bool,
    pub gamma_b: Option<f64>,
    pub volume: Option<f64>,
    pub ellipsoid: Option<EllipsoidSummary>,
    pub ellipsoid_error: Option<String>,
    pub filtered: Option<FilteredSummary>,
}

pub fn analyze_state(rho: &DensityMatrix2Q, filter: Option<&LocalFilter>) -> Result<StateReport, filtering::FilterError> {
    let r = qstate::correlation_matrix(rho);
    let omega = obesity::obesity(rho);
    let concurrence = qstate::concurrence(rho);
    let (ellipsoid, ellipsoid_error) = match ellipsoid::steering_ellipsoid(rho, Party::A) {
        Ok(e) => (
            Some(EllipsoidSummary {
                center: e.center,
                semiaxes: e.semiaxes,
                orientation: e.orientation,
                volume: e.volume(),
            }),
            None,
        ),
        Err(err) => (None, Some(err.to_string())),
    };
    let filtered = match filter {
        None => None,
        Some(f) => {
            let (rf, tr) = filtering::apply_filter(rho, f)?;
            Some(FilteredSummary {
                trace_norm: tr,
                filtering_function: 1.0 / tr,
                omega_direct: obesity::obesity(&rf),
                omega_general: filtering::filtered_obesity_general(rho, f)?,
                omega_theorem: filtering::filtered_obesity_theorem(rho, f).ok(),
                correlation_matrix: *filtering::filtered_correlation_matrix(&r, f)?.matrix(),
            })
        }
    };
    Ok(StateReport {
        eigenvalues: crate::linalg::hermitian_eigenvalues(rho.matrix()),
        correlation_matrix: *r.matrix(),
        a: r.a(),
        b: r.b(),
        det_r: r.determinant(),
        omega,
        concurrence,
        concurrence_bound_holds: omega >= concurrence - 1e-9,
        gamma_b: ellipsoid.as_ref().map(|_| ellipsoid::gamma_b(rho).expect("ellipsoid exists")),
        volume: ellipsoid.as_ref().map(|e| e.volume),
        ellipsoid,
        ellipsoid_error,
        filtered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction() {
        let g = grid(0.0, 2.0, 0.01).unwrap();
        assert_eq!(g.len(), 201);
        assert!((g[200] - 2.0).abs() < 1e-12);
        assert_eq!(grid(-2.0, 0.0, 0.05).unwrap().len(), 41);
        assert!(grid(1.0, 0.0, 0.1).is_err());
        assert!(grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn derivative_examples() {
        let xs = grid(0.0, 1.0, 0.01).unwrap();
        let d = finite_difference(&xs, &vec![3.0; xs.len()]).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let d = finite_difference(&xs, &ys).unwrap();
        for (x, v) in xs.iter().zip(&d) {
            assert!((v - 2.0 * x).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_rejects_bad_grids() {
        assert!(matches!(
            finite_difference(&[0.0, 0.1, 0.3], &[0.0; 3]),
            Err(ScanError::NonUniform { .. })
        ));
        assert!(matches!(
            finite_difference(&[0.0, 0.1], &[0.0; 2]),
            Err(ScanError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn gapped_derivative_skips_short_runs() {
        let xs = grid(0.0, 0.6, 0.1).unwrap();
        let ys = [None, Some(0.1), Some(0.2), None, Some(1.0), Some(1.1), Some(1.2)];
        let d = finite_difference_gapped(&xs, &ys).unwrap();
        assert_eq!(d[1], None);
        assert!((d[5].unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kink_examples() {
        let xs = grid(0.0, 2.0, 0.01).unwrap();
        let ys: Vec<f64> = xs.iter().map(|&x| if x < 1.3 { x } else { 1.3 + 3.0 * (x - 1.3) }).collect();
        let k = detect_kink(&xs, &ys).unwrap();
        assert!((k.param_hat - 1.3).abs() <= 0.01 + 1e-12);
        assert!(k.score > 50.0, "{}", k.score);

        let ys: Vec<f64> = xs.iter().map(|&x| 0.5 * x * x).collect();
        let k = detect_kink(&xs, &ys).unwrap();
        assert!((k.score - 1.0).abs() < 1e-6);

        assert!(matches!(detect_kink(&xs, &vec![1.0; xs.len()]), Err(ScanError::Degenerate)));
        assert!(matches!(detect_kink(&xs[..4], &ys[..4]), Err(ScanError::TooFewPoints { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let cfg = IsingScanConfig {
            from: 0.0,
            to: 0.2,
            step: 0.05,
            ..Default::default()
        };
        let scan = ising_scan(&cfg).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &scan.param_name, &scan.records).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "lambda,omega,d_omega,gamma_b,d_gamma_b,volume,d_volume,omega_filtered,d_omega_filtered,filter_fn_direct,filter_fn_paper,filter_fn_theorem\n"
        ));
        let (name, back) = read_records(&buf[..]).unwrap();
        assert_eq!(name, "lambda");
        assert_eq!(back, scan.records);
    }

    #[test]
    fn paramagnet_row() {
        let cfg = IsingScanConfig {
            from: 0.0,
            to: 0.1,
            step: 0.05,
            ..Default::default()
        };
        let scan = ising_scan(&cfg).unwrap();
        let first = &scan.records[0];
        assert_eq!(first.omega, 0.0);
        assert_eq!(first.omega_filtered, None);
        assert_eq!(first.gamma_b, None);
        assert!(scan.records[1].omega_filtered.is_some());
    }

    #[test]
    fn analyze_examples() {
        let rep = analyze_state(&DensityMatrix2Q::phi_plus(), None).unwrap();
        assert!((rep.omega - 1.0).abs() < 1e-14);
        assert!((rep.volume.unwrap() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!(rep.concurrence_bound_holds);
        let rep = analyze_state(&DensityMatrix2Q::maximally_mixed(), None).unwrap();
        assert_eq!(rep.omega, 0.0);
        assert!(rep.volume.unwrap().abs() < 1e-15);
        assert!(rep.ellipsoid.unwrap().center.norm() < 1e-15);
        let f = LocalFilter::symmetric_diagonal(0.5, 1.0).unwrap();
        let rep = analyze_state(&DensityMatrix2Q::phi_plus(), Some(&f)).unwrap();
        let filt = rep.filtered.unwrap();
        assert!((filt.omega_direct - filt.omega_general).abs() < 1e-12);
        assert!(filt.omega_theorem.is_none());
    }
}
