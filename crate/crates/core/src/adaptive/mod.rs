//! Adaptive choice of the deflation size `k` and the probe count `m`.
//!
//! Stage 1 grows `Q` one gaussian sketch column at a time and tracks a
//! surrogate of the total cost `2k + g(‖B_off‖_F)` for `B = A(I − QQᵀ)`.
//! Growth stops once the surrogate has failed to decrease twice in a row, and
//! the basis is cut back to the cheapest `k` seen. Stage 2 then probes
//! `A(I − QQᵀ)` and, after every probe, re-derives the required count from a
//! high-probability upper estimate of `‖B_off‖_F`, stopping once the number of
//! probes taken reaches it.
//!
//! ## The Stage-1 surrogate
//!
//! Every sketch product `y = Ax` also yields, for free, a product with the
//! current remainder: `s = A(I − QQᵀ)x = y − (AQ)(Qᵀx)`, because `AQ` is cached.
//! From `s` and `x` alone one gets unbiased samples of `‖A‖_F²` (as
//! `‖s‖² + ‖AQ‖_F²`), of `diag(A)` and of `‖diag(A)‖²` (gaussian `x` gives
//! `E‖x⊙Bx‖² = 2‖diag(B)‖² + ‖B‖_F²`). These are pooled with weights
//! `1/‖B_j‖_F⁴` and plugged into
//!
//! `‖B_off‖_F² = ‖A‖_F² − ‖AQ_k‖_F² − ‖diag(A) − diag(AQ_kQ_kᵀ)‖²`.
//!
//! The pooled quantities do not depend on `k`, so after every step the whole
//! curve `k = 0, 1, …` is re-evaluated with the latest values, including the
//! relative tolerance `ε‖diag(A)‖₂`, before the minimum test runs.
//!
//! At `k = 0` the first two sketch products also give a residual estimate
//! of `‖A_off‖_F²`: with `d̂ = Σ x⊙y ⊘ Σ x⊙x`, the sum `Σ ‖y − d̂⊙x‖²`.
//! It vanishes for diagonal `A`, so such matrices settle on `k = 0`.

mod basis;

use serde::{Deserialize, Serialize};

pub use basis::{orthonormalize_columns, OrthonormalBasis, RANK_TOL};

use crate::bounds::{g_query_count, ErrorBudget, Tolerance};
use crate::error::{Error, Result};
use crate::estimators::{sketch_basis, DiagAccumulator, SKETCH_STREAM};
use crate::linop::LinearOperator;
use crate::probes::{Distribution, ProbeStream};
use crate::specfun::alpha_sup;
use crate::vecops::{dot, norm_sq};

/// Hard stops for both stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    pub k_max: usize,
    pub m_max: usize,
}

impl Limits {
    pub fn for_dim(n: usize) -> Self {
        Self {
            k_max: n,
            m_max: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Grow,
    Probe,
}

/// One diagnostic row. For `Grow`, `index` is `k` and `value` the surrogate
/// cost; for `Probe`, `index` is `s` and `value` is `m_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: Stage,
    pub index: usize,
    pub value: u64,
    /// Estimate of `‖B_off‖_F²` behind `value`.
    pub frob_sq: f64,
    /// Absolute tolerance in force.
    pub eps_abs: f64,
    /// Products with `A` so far.
    pub matvecs: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptiveReport {
    pub diagonal: Vec<f64>,
    pub d_defl: Vec<f64>,
    pub d_rem: Vec<f64>,
    pub k_chosen: usize,
    /// Columns built in Stage 1 before truncation.
    pub k_built: usize,
    pub m_used: usize,
    pub stage1_matvecs: u64,
    pub matvecs_total: u64,
    /// Whether Stage 1 ended by minimum detection (rather than a limit).
    pub detected: bool,
    pub trace: Vec<TraceRow>,
    pub warnings: Vec<String>,
}

impl AdaptiveReport {
    /// Trace as CSV with header `stage,index,value,frob_sq,eps_abs,matvecs`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("stage,index,value,frob_sq,eps_abs,matvecs\n");
        for r in &self.trace {
            let stage = match r.stage {
                Stage::Grow => "grow",
                Stage::Probe => "probe",
            };
            out.push_str(&format!(
                "{stage},{},{},{:.16e},{:.16e},{}\n",
                r.index, r.value, r.frob_sq, r.eps_abs, r.matvecs
            ));
        }
        out
    }
}

/// `true` iff the last three values rise (or tie) twice in a row.
pub fn detect_minimum(history: &[u64]) -> bool {
    match history {
        [.., a, b, c] => c >= b && b >= a,
        _ => false,
    }
}

/// Index of the first smallest value.
pub fn argmin(history: &[u64]) -> usize {
    let mut best = 0;
    for (i, v) in history.iter().enumerate() {
        if *v < history[best] {
            best = i;
        }
    }
    best
}

/// Outcome of one Stage-1 step.
#[derive(Debug, Clone)]
pub struct GrowStep {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `A(I − QQᵀ)x` for the basis as it was before the step.
    pub residual: Vec<f64>,
    /// Basis size before the step.
    pub k_before: usize,
    /// `‖AQ‖_F²` before the step.
    pub aq_fro_sq_before: f64,
    /// `diag(AQQᵀ)` before the step.
    pub d_defl_before: Vec<f64>,
    /// `‖Aq‖²` of the appended column, `None` if the step was skipped.
    pub appended: Option<f64>,
}

/// Draw `x`, form `y = Ax`, and append the orthonormalized `y` with its image.
/// Costs two products, or one if `y` adds no new direction.
pub fn grow_basis_step(
    op: &dyn LinearOperator,
    basis: &mut OrthonormalBasis,
    sketch: &mut ProbeStream,
) -> Result<GrowStep> {
    if basis.k() >= basis.dim() {
        return Err(Error::BasisExhausted(basis.dim()));
    }
    let x = sketch.next_probe();
    let y = op.apply(&x)?;
    let k_before = basis.k();
    let aq_fro_sq_before = basis.aq_fro_sq();
    let d_defl_before = basis.d_defl().to_vec();
    let proj = basis.aq_times_coefficients(&basis.coefficients(&x));
    let residual: Vec<f64> = y.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let appended = if basis.extend_with(op, &y)? {
        Some(norm_sq(&basis.aq_columns()[basis.k() - 1]))
    } else {
        None
    };
    Ok(GrowStep {
        x,
        y,
        residual,
        k_before,
        aq_fro_sq_before,
        d_defl_before,
        appended,
    })
}

/// One Stage-1 sample, from the residual `s = A(I − QQᵀ)x` of a sketch product.
struct Sample {
    /// `‖AQ‖_F²` when the sample was drawn.
    aq_fro_sq: f64,
    /// `‖s‖² + ‖AQ‖_F²`, unbiased for `‖A‖_F²`.
    fro: f64,
    /// `‖d‖² + 2⟨d, x⊙s⟩ + (‖x⊙s‖² − ‖s‖²)/2` with `d = diag(AQQᵀ)`,
    /// unbiased for `‖diag(A)‖²`.
    diag_sq: f64,
    /// `d + x⊙s`, unbiased for `diag(A)`.
    diag: Vec<f64>,
}

impl Sample {
    fn new(step: &GrowStep) -> Self {
        let s_sq = norm_sq(&step.residual);
        let xs: Vec<f64> = step.x.iter().zip(&step.residual).map(|(a, b)| a * b).collect();
        let d = &step.d_defl_before;
        Self {
            aq_fro_sq: step.aq_fro_sq_before,
            fro: s_sq + step.aq_fro_sq_before,
            diag_sq: norm_sq(d) + 2.0 * dot(d, &xs) + 0.5 * (norm_sq(&xs) - s_sq),
            diag: d.iter().zip(&xs).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Samples pooled with weights `1/‖B_j‖_F⁴`, where `‖B_j‖_F² = ‖A‖_F² − ‖AQ_j‖_F²`
/// tracks the spread of sample `j`. `‖A‖_F²` is the fixed point of its own
/// weighted mean, which always lies above the largest `‖AQ_j‖_F²`.
struct Pool {
    fro: f64,
    diag_sq: f64,
    diag: Vec<f64>,
}

impl Pool {
    fn new(samples: &[Sample]) -> Self {
        let floor = |t: f64, a: f64| (t - a).max(1e-12 * t.abs()).max(TINY);
        let weights = |t: f64| -> Vec<f64> {
            samples.iter().map(|s| floor(t, s.aq_fro_sq).powi(-2)).collect()
        };
        let mean = |w: &[f64], f: &dyn Fn(&Sample) -> f64| {
            let total: f64 = w.iter().sum();
            samples.iter().zip(w).map(|(s, wi)| wi * f(s)).sum::<f64>() / total
        };
        let a_top = samples.iter().map(|s| s.aq_fro_sq).fold(0.0, f64::max);
        let c_top = samples.iter().map(|s| s.fro).fold(a_top, f64::max);
        let (mut lo, mut hi) = (a_top, c_top);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mean(&weights(mid), &|s| s.fro) > mid {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let w = weights(hi);
        let total: f64 = w.iter().sum();
        let mut diag = vec![0.0; samples[0].diag.len()];
        for (s, wi) in samples.iter().zip(&w) {
            for (acc, v) in diag.iter_mut().zip(&s.diag) {
                *acc += wi / total * v;
            }
        }
        Self {
            fro: hi,
            diag_sq: mean(&w, &|s| s.diag_sq),
            diag,
        }
    }
}

/// Per-`k` quantities of the growing basis: `‖AQ_k‖_F²` and `‖diag(AQ_kQ_kᵀ)‖²`.
#[derive(Default)]
struct Prefix {
    aq_fro_sq: Vec<f64>,
    d_defl_sq: Vec<f64>,
}

/// Surrogate arguments `‖A‖_F² − ‖AQ_k‖_F² − ‖diag(A) − d_k‖²` for `k = 0..=upto`,
/// with every unknown replaced by its pooled estimate.
fn surrogate_args(pool: &Pool, basis: &OrthonormalBasis, prefix: &Prefix, upto: usize) -> Vec<f64> {
    let (c, d) = (pool.fro, pool.diag_sq);
    let mut cross = 0.0;
    let mut args = Vec::with_capacity(upto + 1);
    for k in 0..=upto {
        if k > 0 {
            let q = &basis.columns()[k - 1];
            let aq = &basis.aq_columns()[k - 1];
            cross += (0..q.len()).map(|i| pool.diag[i] * q[i] * aq[i]).sum::<f64>();
        }
        let diag_gap = d - 2.0 * cross + prefix.d_defl_sq[k];
        args.push(c - prefix.aq_fro_sq[k] - diag_gap);
    }
    args
}

/// Residual estimate of `‖A_off‖_F²` from two raw sketch products.
fn off_diagonal_from_pair(x1: &[f64], y1: &[f64], x2: &[f64], y2: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..x1.len() {
        let den = x1[i] * x1[i] + x2[i] * x2[i];
        let d = if den > 0.0 {
            (x1[i] * y1[i] + x2[i] * y2[i]) / den
        } else {
            0.0
        };
        let r1 = y1[i] - d * x1[i];
        let r2 = y2[i] - d * x2[i];
        total += r1 * r1 + r2 * r2;
    }
    total
}

const TINY: f64 = 1e-300;

fn budget_for(eps_abs: f64, delta: f64, n: usize) -> Result<ErrorBudget> {
    ErrorBudget::new(eps_abs.max(TINY), delta, n)
}

/// State carried from Stage 1 into Stage 2.
struct Stage1 {
    basis: OrthonormalBasis,
    k_built: usize,
    detected: bool,
    m_start: u64,
}

#[allow(clippy::too_many_arguments)]
fn stage_one(
    op: &dyn LinearOperator,
    tol: Tolerance,
    delta: f64,
    sketch: &mut ProbeStream,
    k_cap: usize,
    start: u64,
    trace: &mut Vec<TraceRow>,
    warnings: &mut Vec<String>,
) -> Result<Stage1> {
    let n = op.dim();
    let mut basis = OrthonormalBasis::new(n);
    let mut prefix = Prefix {
        aq_fro_sq: vec![0.0],
        d_defl_sq: vec![0.0],
    };
    let mut samples: Vec<Sample> = Vec::new();
    let mut pair: Option<f64> = None;
    let mut first: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut costs: Vec<u64> = Vec::new();
    let mut skips = 0usize;
    let mut detected = false;

    while basis.k() < k_cap {
        let step = grow_basis_step(op, &mut basis, sketch)?;
        match (&first, pair) {
            (None, _) => first = Some((step.x.clone(), step.y.clone())),
            (Some((x1, y1)), None) => pair = Some(off_diagonal_from_pair(x1, y1, &step.x, &step.y)),
            _ => {}
        }
        if step.appended.is_none() {
            skips += 1;
            if skips >= 2 {
                warnings.push(format!("sketch stopped adding directions at k = {}", basis.k()));
                break;
            }
            continue;
        };
        skips = 0;
        prefix.aq_fro_sq.push(basis.aq_fro_sq());
        prefix.d_defl_sq.push(basis.d_defl_norm_sq());

        samples.push(Sample::new(&step));

        let Some(pair_arg) = pair else { continue };
        let upto = step.k_before;
        let pool = Pool::new(&samples);
        let mut args = surrogate_args(&pool, &basis, &prefix, upto);
        args[0] = args[0].min(pair_arg);
        let diag_sq = pool.diag_sq.max(prefix.d_defl_sq[upto]).max(TINY);
        let eps_abs = tol.absolute(diag_sq);
        let budget = budget_for(eps_abs, delta, n)?;
        costs = args
            .iter()
            .enumerate()
            .map(|(k, a)| 2 * k as u64 + g_query_count(&budget, a.max(0.0).sqrt()))
            .collect();
        trace.push(TraceRow {
            stage: Stage::Grow,
            index: upto,
            value: costs[upto],
            frob_sq: args[upto].max(0.0),
            eps_abs,
            matvecs: op.matvec_count() - start,
        });
        if detect_minimum(&costs) {
            detected = true;
            break;
        }
    }

    let k_built = basis.k();
    let k_keep = if detected { argmin(&costs) } else { k_built };
    let m_start = costs
        .get(k_keep)
        .map(|c| c - 2 * k_keep as u64)
        .unwrap_or(1);
    basis.truncate(k_keep);
    Ok(Stage1 {
        basis,
        k_built,
        detected,
        m_start: m_start.max(1),
    })
}

/// Result of the probing stage.
struct Stage2 {
    d_rem: Vec<f64>,
    s: usize,
}

/// Probe `A(I − QQᵀ)` until the running probe target `m_s` is reached.
#[allow(clippy::too_many_arguments)]
fn stage_two(
    op: &dyn LinearOperator,
    basis: &OrthonormalBasis,
    tol: Tolerance,
    delta: f64,
    probes: &mut ProbeStream,
    m_start: u64,
    m_max: usize,
    start: u64,
    trace: &mut Vec<TraceRow>,
    warnings: &mut Vec<String>,
) -> Result<Stage2> {
    let n = op.dim();
    let mut acc = DiagAccumulator::new(n);
    let mut temp_fro = 0.0;
    let mut m_s = m_start.max(1);
    let mut s = 0usize;
    let mut d_rem = vec![0.0; n];
    let d_defl_sq = basis.d_defl_norm_sq();
    let mut clamp_noted = false;

    while m_s > s as u64 {
        if s >= m_max {
            warnings.push(format!("budget exhausted: m_s = {m_s} exceeds m_max = {m_max}"));
            break;
        }
        s += 1;
        let alpha = alpha_sup(s, delta)?;
        if alpha.clamped && !clamp_noted {
            warnings.push(format!("alpha_s clamped at s = {s}"));
            clamp_noted = true;
        }
        let w = probes.next_probe();
        let z = op.apply(&basis.project_out(&w))?;
        acc.add(&w, &z);
        d_rem = acc.estimate()?;
        temp_fro += norm_sq(&z);
        // ‖diag(B)‖² ≤ ‖B‖_F², so an early heavy-tailed d_rem is capped at the
        // plain Frobenius mean instead of cancelling the upper bound outright.
        let temp_spe = norm_sq(&d_rem).min(temp_fro / s as f64);
        let f_sq = (temp_fro / (s as f64 * alpha.alpha) - temp_spe).max(0.0);

        let diag_sq = match tol {
            Tolerance::Absolute(_) => 0.0,
            Tolerance::Relative(_) => {
                let total: f64 = basis
                    .d_defl()
                    .iter()
                    .zip(&d_rem)
                    .map(|(a, b)| (a + b) * (a + b))
                    .sum();
                (total - f_sq / s as f64).max(d_defl_sq).max(TINY)
            }
        };
        let eps_abs = tol.absolute(diag_sq);
        m_s = g_query_count(&budget_for(eps_abs, delta, n)?, f_sq.sqrt());
        trace.push(TraceRow {
            stage: Stage::Probe,
            index: s,
            value: m_s,
            frob_sq: f_sq,
            eps_abs,
            matvecs: op.matvec_count() - start,
        });
    }
    Ok(Stage2 { d_rem, s })
}

fn validate(op: &dyn LinearOperator, tol: Tolerance, delta: f64, probes: &ProbeStream) -> Result<()> {
    tol.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
    }
    if op.dim() == 0 {
        return Err(Error::InvalidArgument("operator has dimension 0".into()));
    }
    if probes.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: probes.dim(),
        });
    }
    Ok(())
}

fn finish(
    basis: &OrthonormalBasis,
    d_rem: Vec<f64>,
    k_built: usize,
    m_used: usize,
    stage1_matvecs: u64,
    matvecs_total: u64,
    detected: bool,
    trace: Vec<TraceRow>,
    warnings: Vec<String>,
) -> AdaptiveReport {
    let d_defl = basis.d_defl().to_vec();
    let diagonal = d_defl.iter().zip(&d_rem).map(|(a, b)| a + b).collect();
    AdaptiveReport {
        diagonal,
        d_defl,
        d_rem,
        k_chosen: basis.k(),
        k_built,
        m_used,
        stage1_matvecs,
        matvecs_total,
        detected,
        trace,
        warnings,
    }
}

/// Adaptive estimator: Stage 1 picks `k`, Stage 2 picks `m`.
///
/// The sketch stream is `probes.fork(SKETCH_STREAM)` (always gaussian);
/// Stage-2 probes are drawn from `probes`. `matvecs_total` is the operator's
/// counter delta: two products per basis column built (including columns
/// discarded by the final truncation), one per skipped sketch, one per probe.
pub fn adaptive_estimate(
    op: &dyn LinearOperator,
    tol: Tolerance,
    delta: f64,
    probes: &mut ProbeStream,
    limits: Limits,
) -> Result<AdaptiveReport> {
    validate(op, tol, delta, probes)?;
    let start = op.matvec_count();
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let mut sketch = probes
        .fork(SKETCH_STREAM)
        .with_distribution(Distribution::Gaussian);
    let k_cap = limits.k_max.min(op.dim());
    let s1 = stage_one(op, tol, delta, &mut sketch, k_cap, start, &mut trace, &mut warnings)?;
    let stage1_matvecs = op.matvec_count() - start;
    let s2 = stage_two(
        op,
        &s1.basis,
        tol,
        delta,
        probes,
        s1.m_start,
        limits.m_max,
        start,
        &mut trace,
        &mut warnings,
    )?;
    Ok(finish(
        &s1.basis,
        s2.d_rem,
        s1.k_built,
        s2.s,
        stage1_matvecs,
        op.matvec_count() - start,
        s1.detected,
        trace,
        warnings,
    ))
}

/// Where the fixed-`k` variant takes its probe count from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProbeCount {
    /// Exactly this many probes.
    Fixed(usize),
    /// `g` evaluated at known `‖B_off‖_F` and `‖diag(A)‖₂`.
    Oracle { b_off_fro: f64, diag_norm: f64 },
    /// The Stage-2 stopping rule.
    Estimated,
}

/// Fixed-`k` variant: sketch `k` gaussian columns, deflate exactly, then probe.
pub fn prototype_estimate(
    op: &dyn LinearOperator,
    tol: Tolerance,
    delta: f64,
    k: usize,
    count: ProbeCount,
    probes: &mut ProbeStream,
    m_max: usize,
) -> Result<AdaptiveReport> {
    validate(op, tol, delta, probes)?;
    let n = op.dim();
    let start = op.matvec_count();
    let mut trace = Vec::new();
    let mut warnings = Vec::new();
    let basis = sketch_basis(op, probes, k, &mut warnings)?;
    let stage1_matvecs = op.matvec_count() - start;

    let (d_rem, m_used) = match count {
        ProbeCount::Estimated => {
            let s2 = stage_two(
                op,
                &basis,
                tol,
                delta,
                probes,
                1,
                m_max,
                start,
                &mut trace,
                &mut warnings,
            )?;
            (s2.d_rem, s2.s)
        }
        ProbeCount::Fixed(_) | ProbeCount::Oracle { .. } => {
            let m = match count {
                ProbeCount::Fixed(m) => m,
                ProbeCount::Oracle {
                    b_off_fro,
                    diag_norm,
                } => {
                    let eps_abs = tol.absolute(diag_norm * diag_norm);
                    let g = g_query_count(&budget_for(eps_abs, delta, n)?, b_off_fro);
                    usize::try_from(g).unwrap_or(usize::MAX)
                }
                ProbeCount::Estimated => unreachable!(),
            };
            if m == 0 {
                return Err(Error::InvalidArgument("at least one probe vector is required".into()));
            }
            let m = if m > m_max {
                warnings.push(format!("budget exhausted: {m} probes requested, m_max = {m_max}"));
                m_max
            } else {
                m
            };
            let mut acc = DiagAccumulator::new(n);
            for _ in 0..m {
                let w = probes.next_probe();
                let z = op.apply(&basis.project_out(&w))?;
                acc.add(&w, &z);
            }
            (acc.estimate()?, m)
        }
    };
    let k_built = basis.k();
    Ok(finish(
        &basis,
        d_rem,
        k_built,
        m_used,
        stage1_matvecs,
        op.matvec_count() - start,
        false,
        trace,
        warnings,
    ))
}

/// `‖d‖²` helper used by reporting code.
pub fn diag_norm_sq(d: &[f64]) -> f64 {
    dot(d, d)
}
