//! Probe-count bounds and the matvec cost model.
//!
//! All count bounds return the ceiling of the real-valued formula.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{DenseMatrix, LinearOperator};
use crate::probes::ProbeStream;
use crate::specfun::alpha_sup;
use crate::vecops::norm_sq;

/// Accuracy target `(ε, δ)` for an `n × n` problem.
///
/// `eps` is an absolute tolerance on `‖EST − diag‖₂`. Relative targets are
/// converted by the caller (see [`Tolerance`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub eps: f64,
    pub delta: f64,
    pub n: usize,
}

impl ErrorBudget {
    pub fn new(eps: f64, delta: f64, n: usize) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self { eps, delta, n })
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(eps, self.delta, self.n)
    }
}

/// How the user states `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "eps", rename_all = "lowercase")]
pub enum Tolerance {
    /// `‖EST − diag(A)‖₂ ≤ ε‖diag(A)‖₂`, with `ε ∈ (0,1)`.
    Relative(f64),
    /// `‖EST − diag(A)‖₂ ≤ ε`.
    Absolute(f64),
}

impl Tolerance {
    pub fn validate(self) -> Result<Self> {
        match self {
            Tolerance::Relative(e) if !(e > 0.0 && e < 1.0) => Err(Error::InvalidArgument(
                format!("relative eps must lie in (0,1), got {e}"),
            )),
            Tolerance::Absolute(e) if !(e > 0.0 && e.is_finite()) => Err(Error::InvalidArgument(
                format!("absolute eps must be positive, got {e}"),
            )),
            t => Ok(t),
        }
    }

    pub fn eps(self) -> f64 {
        match self {
            Tolerance::Relative(e) | Tolerance::Absolute(e) => e,
        }
    }

    /// The absolute tolerance implied by an estimate of `‖diag(A)‖₂²`.
    pub fn absolute(self, diag_norm_sq: f64) -> f64 {
        match self {
            Tolerance::Relative(e) => e * diag_norm_sq.max(0.0).sqrt(),
            Tolerance::Absolute(e) => e,
        }
    }
}

/// Cap on returned counts so the `f64 → u64` conversion never saturates silently.
const COUNT_CAP: f64 = 1e15;

fn ceil_count(x: f64) -> u64 {
    if x.is_nan() {
        return COUNT_CAP as u64;
    }
    x.ceil().clamp(1.0, COUNT_CAP) as u64
}

/// Probe count guaranteeing `‖EST − diag(B)‖₂ ≤ ε` with probability `1 − δ`
/// for the ratio estimator on `B`, given `F = ‖B_off‖_F`:
///
/// `g(F) = ⌈1 + 2 ln(√(2/π)·n·F/(εδ)) / ln(1 + ε²/F²)⌉`, and `g(0) = 1`.
pub fn g_query_count(budget: &ErrorBudget, b_off_fro: f64) -> u64 {
    let f = b_off_fro.max(0.0);
    if f == 0.0 {
        return 1;
    }
    let ErrorBudget { eps, delta, n } = *budget;
    let num = 2.0 * ((2.0 / std::f64::consts::PI).sqrt() * n as f64 * f / (eps * delta)).ln();
    let den = (eps * eps / (f * f)).ln_1p();
    if den == 0.0 {
        return COUNT_CAP as u64;
    }
    ceil_count(1.0 + num / den)
}

/// `2k + g(√max(arg, 0))`.
pub fn surrogate_matvecs(k: usize, budget: &ErrorBudget, surrogate_arg: f64) -> u64 {
    2 * k as u64 + g_query_count(budget, surrogate_arg.max(0.0).sqrt())
}

/// Per-row bound `⌈(1/(ε²δ))(1 + ‖B_{i,:}‖²/B_ii²)⌉` (row norm includes the diagonal).
pub fn lemma21_bound(budget: &ErrorBudget, row_norm_sq: f64, diag_sq: f64) -> Result<u64> {
    if !(diag_sq > 0.0) {
        return Err(Error::InvalidArgument("squared diagonal entry must be positive".into()));
    }
    let ErrorBudget { eps, delta, .. } = *budget;
    Ok(ceil_count((1.0 + row_norm_sq / diag_sq) / (eps * eps * delta)))
}

/// Sum of the per-row terms over all rows of a dense `B`.
pub fn corollary22_bound(budget: &ErrorBudget, b: &DenseMatrix) -> Result<u64> {
    let ErrorBudget { eps, delta, .. } = *budget;
    let mut total = 0.0;
    for i in 0..b.n() {
        let d = b.get(i, i);
        if d == 0.0 {
            return Err(Error::ZeroDiagonal { row: i });
        }
        total += 1.0 + b.row_norm_sq(i) / (d * d);
    }
    Ok(ceil_count(total / (eps * eps * delta)))
}

/// `64 (e ln n)³ F² / (ε²δ)`: an asymptotic diagnostic, not a rigorous count.
pub fn lemma23_bound(budget: &ErrorBudget, b_fro: f64) -> f64 {
    let ErrorBudget { eps, delta, n } = *budget;
    let l = std::f64::consts::E * (n as f64).ln();
    64.0 * l * l * l * b_fro * b_fro / (eps * eps * delta)
}

/// `⌈ln(n/δ)/ε²⌉` with the unknown constant set to 1. Reference only.
pub fn baston_reference_bound(budget: &ErrorBudget) -> u64 {
    let ErrorBudget { eps, delta, n } = *budget;
    ceil_count((n as f64 / delta).ln() / (eps * eps))
}

/// Frobenius-norm upper estimate from `k` gaussian products.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrobUpper {
    /// `(1/(kα)) Σ ‖Bωᵢ‖²`, above `‖B‖_F²` with probability at least `1 − δ`.
    pub value: f64,
    /// The plain mean `(1/k) Σ ‖Bωᵢ‖²`.
    pub mean: f64,
    pub alpha: f64,
    pub alpha_clamped: bool,
}

/// Upper estimate of `‖B‖_F²` from `k` probes drawn from `probes`.
pub fn frob_norm_upper(
    op: &dyn LinearOperator,
    probes: &mut ProbeStream,
    k: usize,
    delta: f64,
) -> Result<FrobUpper> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let a = alpha_sup(k, delta)?;
    let mut sum = 0.0;
    for _ in 0..k {
        sum += norm_sq(&op.apply(&probes.next_probe())?);
    }
    let mean = sum / k as f64;
    Ok(FrobUpper {
        value: mean / a.alpha,
        mean,
        alpha: a.alpha,
        alpha_clamped: a.clamped,
    })
}

/// Which bound a [`CostModel`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostMode {
    /// [`g_query_count`].
    G,
    Lemma23,
    Baston,
}

/// A bound as a function of a single Frobenius-norm input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub budget: ErrorBudget,
    pub mode: CostMode,
}

impl CostModel {
    pub fn new(budget: ErrorBudget, mode: CostMode) -> Self {
        Self { budget, mode }
    }

    /// Probe count for a remainder with Frobenius input `f`.
    pub fn query_count(&self, f: f64) -> f64 {
        match self.mode {
            CostMode::G => g_query_count(&self.budget, f) as f64,
            CostMode::Lemma23 => lemma23_bound(&self.budget, f),
            CostMode::Baston => baston_reference_bound(&self.budget) as f64,
        }
    }

    /// `2k + query_count(√arg)`.
    pub fn matvecs(&self, k: usize, surrogate_arg: f64) -> f64 {
        2.0 * k as f64 + self.query_count(surrogate_arg.max(0.0).sqrt())
    }
}
