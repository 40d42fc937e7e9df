//! Adaptive Simpson quadrature with an evaluation budget.
//!
//! Integrands with a sharp feature at the upper endpoint are handled by
//! pre-splitting the interval geometrically toward it before adapting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default number of integrand evaluations allowed per integral.
pub const DEFAULT_BUDGET: usize = 200_000;
/// Depth of geometric pre-splitting toward the upper endpoint.
const ENDPOINT_SPLITS: i32 = 30;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuadError {
    #[error("quadrature tolerance {tol:e} not reached within {budget} evaluations (estimate {estimate}, error {error:e})")]
    Budget {
        tol: f64,
        budget: usize,
        estimate: f64,
        error: f64,
    },
    #[error("quadrature tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub tol: f64,
    pub budget: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of the local error estimates.
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `cfg.tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult, QuadError> {
    integrate_split(f, &[a, b], cfg)
}

/// Like [`integrate`], with the interval pre-split geometrically toward `b`.
pub fn integrate_endpoint_biased<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: QuadConfig,
) -> Result<QuadResult, QuadError> {
    let len = b - a;
    let mut breaks = vec![a];
    for m in 1..=ENDPOINT_SPLITS {
        breaks.push(b - len * 2f64.powi(-m));
    }
    breaks.push(b);
    integrate_split(f, &breaks, cfg)
}

/// Integrates over consecutive panels given by `breaks`, sharing the
/// tolerance in proportion to panel width.
pub fn integrate_split<F: Fn(f64) -> f64>(f: F, breaks: &[f64], cfg: QuadConfig) -> Result<QuadResult, QuadError> {
    if !(cfg.tol > 0.0) {
        return Err(QuadError::BadTolerance(cfg.tol));
    }
    let total = breaks[breaks.len() - 1] - breaks[0];
    let mut evals = 0usize;
    let mut stack = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        evals += 3;
        stack.push(Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole: simpson(a, b, fa, fm, fb),
            tol: cfg.tol * (b - a) / total,
        });
    }
    let mut value = 0.0;
    let mut error = 0.0;
    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
        let (flm, frm) = (f(lm), f(rm));
        evals += 2;
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let diff = left + right - p.whole;
        let floor = 32.0 * f64::EPSILON * (left.abs() + right.abs());
        if diff.abs() <= 15.0 * p.tol.max(floor) || (p.b - p.a) <= 1e-14 * total {
            value += left + right + diff / 15.0;
            error += diff.abs() / 15.0;
            continue;
        }
        if evals >= cfg.budget {
            let pending: f64 = stack.iter().map(|q| q.whole).sum::<f64>() + left + right;
            return Err(QuadError::Budget {
                tol: cfg.tol,
                budget: cfg.budget,
                estimate: value + pending,
                error: error + diff.abs(),
            });
        }
        let tol = 0.5 * p.tol;
        stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol });
        stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol });
    }
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
    })
}
