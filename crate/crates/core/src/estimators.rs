//! Fixed-budget diagonal estimators.
//!
//! | method | products with `A` |
//! |---|---|
//! | [`bekas_estimate`], [`generalized_estimate`] | `m` |
//! | [`projected_estimate`] | `k + r + m` (`r ≤ k` is the numerical rank of the sketch) |
//! | [`diagpp_estimate`] | exactly `m̃` |
//! | [`xdiag_estimate`] | `s + r` with `s = m̃/2`; equals `m̃` unless `AΩ` is rank deficient |
//!
//! Sketches `Ω` are always gaussian and drawn from `probes.fork(SKETCH_STREAM)`;
//! probe vectors come from `probes` itself and follow its distribution.
//! Accumulation is serial, so a fixed seed reproduces results bit for bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::adaptive::{orthonormalize_columns, OrthonormalBasis};
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::probes::{Distribution, ProbeStream};
use crate::vecops::{axpy, dot, norm};

/// Fork tag of the sketch stream used by the projection methods.
pub const SKETCH_STREAM: u64 = 0x5EED_0001;

const DENO_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bekas,
    Generalized,
    Prototype,
    Adaptive,
    Diagpp,
    XdiagG,
    XdiagR,
    Exact,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bekas,
        Method::Generalized,
        Method::Prototype,
        Method::Adaptive,
        Method::Diagpp,
        Method::XdiagG,
        Method::XdiagR,
        Method::Exact,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bekas => "bekas",
            Method::Generalized => "generalized",
            Method::Prototype => "prototype",
            Method::Adaptive => "adaptive",
            Method::Diagpp => "diagpp",
            Method::XdiagG => "xdiag-g",
            Method::XdiagR => "xdiag-r",
            Method::Exact => "exact",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

/// Running `mole = Σ ω⊙Aω`, `deno = Σ ω⊙ω` and probe count.
#[derive(Debug, Clone)]
pub struct DiagAccumulator {
    pub mole: Vec<f64>,
    pub deno: Vec<f64>,
    pub count: usize,
}

impl DiagAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            mole: vec![0.0; n],
            deno: vec![0.0; n],
            count: 0,
        }
    }

    pub fn add(&mut self, w: &[f64], aw: &[f64]) {
        for ((m, d), (wi, ai)) in self.mole.iter_mut().zip(&mut self.deno).zip(w.iter().zip(aw)) {
            *m += wi * ai;
            *d += wi * wi;
        }
        self.count += 1;
    }

    /// `mole ⊘ deno`.
    pub fn estimate(&self) -> Result<Vec<f64>> {
        self.mole
            .iter()
            .zip(&self.deno)
            .enumerate()
            .map(|(i, (m, d))| {
                if d.abs() < DENO_FLOOR {
                    Err(Error::ZeroDenominator { index: i })
                } else {
                    Ok(m / d)
                }
            })
            .collect()
    }

    /// `mole / count`, the unnormalized form.
    pub fn mean(&self) -> Vec<f64> {
        let c = self.count.max(1) as f64;
        self.mole.iter().map(|m| m / c).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Breakdown {
    pub d_defl: Vec<f64>,
    pub d_rem: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateResult {
    pub diagonal: Vec<f64>,
    pub matvecs_used: u64,
    pub method: Method,
    /// Basis size actually used (0 for plain probing).
    pub k: usize,
    /// Number of probe vectors.
    pub m: usize,
    pub breakdown: Option<Breakdown>,
    pub warnings: Vec<String>,
}

fn require_probes(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidArgument("at least one probe vector is required".into()));
    }
    Ok(())
}

fn check_stream(op: &dyn LinearOperator, probes: &ProbeStream) -> Result<()> {
    if op.dim() != probes.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: probes.dim(),
        });
    }
    Ok(())
}

fn probe_accumulate(
    op: &dyn LinearOperator,
    probes: &mut ProbeStream,
    m: usize,
    basis: Option<&OrthonormalBasis>,
) -> Result<DiagAccumulator> {
    let mut acc = DiagAccumulator::new(op.dim());
    for _ in 0..m {
        let w = probes.next_probe();
        let aw = match basis {
            Some(b) => op.apply(&b.project_out(&w))?,
            None => op.apply(&w)?,
        };
        acc.add(&w, &aw);
    }
    Ok(acc)
}

/// `[Σ ω⊙Aω] ⊘ [Σ ω⊙ω]` with `m` probes.
pub fn bekas_estimate(
    op: &dyn LinearOperator,
    probes: &mut ProbeStream,
    m: usize,
) -> Result<EstimateResult> {
    require_probes(m)?;
    check_stream(op, probes)?;
    let acc = probe_accumulate(op, probes, m, None)?;
    Ok(EstimateResult {
        diagonal: acc.estimate()?,
        matvecs_used: m as u64,
        method: Method::Bekas,
        k: 0,
        m,
        breakdown: None,
        warnings: Vec::new(),
    })
}

/// `(1/m) Σ ω⊙Aω`.
pub fn generalized_estimate(
    op: &dyn LinearOperator,
    probes: &mut ProbeStream,
    m: usize,
) -> Result<EstimateResult> {
    require_probes(m)?;
    check_stream(op, probes)?;
    let acc = probe_accumulate(op, probes, m, None)?;
    Ok(EstimateResult {
        diagonal: acc.mean(),
        matvecs_used: m as u64,
        method: Method::Generalized,
        k: 0,
        m,
        breakdown: None,
        warnings: Vec::new(),
    })
}

/// Orthonormal basis of `range(AΩ)` for a `k`-column gaussian sketch, with
/// `AQ` applied. Costs `k + rank` products.
pub fn sketch_basis(
    op: &dyn LinearOperator,
    probes: &ProbeStream,
    k: usize,
    warnings: &mut Vec<String>,
) -> Result<OrthonormalBasis> {
    let n = op.dim();
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "sketch width {k} exceeds the dimension {n}"
        )));
    }
    let mut sketch = probes
        .fork(SKETCH_STREAM)
        .with_distribution(Distribution::Gaussian);
    let mut basis = OrthonormalBasis::new(n);
    for _ in 0..k {
        let y = op.apply(&sketch.next_probe())?;
        basis.extend_with(op, &y)?;
    }
    if basis.k() < k {
        warnings.push(format!(
            "sketch is rank deficient: basis has {} of {} columns",
            basis.k(),
            k
        ));
    }
    Ok(basis)
}

/// Split estimator: `diag(AQQᵀ)` exactly from a `k`-column sketch, plus the
/// ratio estimator on `A(I − QQᵀ)` with `m` probes.
pub fn projected_estimate(
    op: &dyn LinearOperator,
    k: usize,
    m: usize,
    probes: &mut ProbeStream,
) -> Result<EstimateResult> {
    require_probes(m)?;
    check_stream(op, probes)?;
    let mut warnings = Vec::new();
    let basis = sketch_basis(op, probes, k, &mut warnings)?;
    let acc = probe_accumulate(op, probes, m, Some(&basis))?;
    let d_rem = acc.estimate()?;
    let d_defl = basis.d_defl().to_vec();
    let diagonal = d_defl.iter().zip(&d_rem).map(|(a, b)| a + b).collect();
    Ok(EstimateResult {
        diagonal,
        matvecs_used: (k + basis.k() + m) as u64,
        method: Method::Prototype,
        k: basis.k(),
        m,
        breakdown: Some(Breakdown { d_defl, d_rem }),
        warnings,
    })
}

/// Fixed-split estimator: `diag(QQᵀAQQᵀ)` plus the ratio estimator on
/// `(I − QQᵀ)A(I − QQᵀ)`. With `k = ⌊m̃/3⌋`, the sketch takes `k` products,
/// `AQ` takes `rank ≤ k`, and every remaining product goes to probes.
pub fn diagpp_estimate(
    op: &dyn LinearOperator,
    budget: usize,
    probes: &mut ProbeStream,
) -> Result<EstimateResult> {
    if budget < 3 {
        return Err(Error::InvalidArgument(format!(
            "Diag++ needs a budget of at least 3 products, got {budget}"
        )));
    }
    check_stream(op, probes)?;
    let n = op.dim();
    let k = (budget / 3).min(n);
    let mut warnings = Vec::new();
    let basis = sketch_basis(op, probes, k, &mut warnings)?;
    let r = basis.k();
    let q = basis.columns();
    let aq = basis.aq_columns();

    // M = QᵀAQ, then diag(Q M Qᵀ)_i = Σ_ab Q_ia M_ab Q_ib.
    let mut mat = vec![vec![0.0; r]; r];
    for (a, qa) in q.iter().enumerate() {
        for (b, aqb) in aq.iter().enumerate() {
            mat[a][b] = dot(qa, aqb);
        }
    }
    let mut d_defl = vec![0.0; n];
    for (a, qa) in q.iter().enumerate() {
        let mut col = vec![0.0; n];
        for (b, qb) in q.iter().enumerate() {
            axpy(mat[a][b], qb, &mut col);
        }
        for ((d, x), y) in d_defl.iter_mut().zip(qa).zip(&col) {
            *d += x * y;
        }
    }

    let m = budget - k - r;
    let mut acc = DiagAccumulator::new(n);
    for _ in 0..m {
        let w = probes.next_probe();
        let z = op.apply(&basis.project_out(&w))?;
        acc.add(&w, &basis.project_out(&z));
    }
    let d_rem = if m > 0 {
        acc.estimate()?
    } else {
        vec![0.0; n]
    };
    let diagonal = d_defl.iter().zip(&d_rem).map(|(a, b)| a + b).collect();
    Ok(EstimateResult {
        diagonal,
        matvecs_used: (k + r + m) as u64,
        method: Method::Diagpp,
        k: r,
        m,
        breakdown: Some(Breakdown { d_defl, d_rem }),
        warnings,
    })
}

/// Leave-one-out estimator. With `s = m̃/2` probes `Ω` and `Y = AΩ`, the
/// term for probe `i` deflates by an orthonormal basis `Q₍ᵢ₎` of `AΩ₋ᵢ`:
///
/// `diag(Q₍ᵢ₎Q₍ᵢ₎ᵀA) + [ωᵢ ⊙ (I − Q₍ᵢ₎Q₍ᵢ₎ᵀ)Aωᵢ] ⊘ [ωᵢ ⊙ ωᵢ]`,
///
/// and the estimate is the mean of the `s` terms. Every `Q₍ᵢ₎` lies inside
/// `Q = orth(Y)`, so `Q₍ᵢ₎Q₍ᵢ₎ᵀ = Q Pᵢ Qᵀ` where `Pᵢ` projects onto the range
/// of `R₋ᵢ` (`R = QᵀY`). `QᵀA` is formed once as `(AᵀQ)ᵀ`; for non-symmetric
/// operators this uses counted transpose products.
pub fn xdiag_estimate(
    op: &dyn LinearOperator,
    budget: usize,
    probes: &mut ProbeStream,
) -> Result<EstimateResult> {
    if budget < 2 || budget % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "XDiag needs an even budget of at least 2, got {budget}"
        )));
    }
    check_stream(op, probes)?;
    let n = op.dim();
    let s = budget / 2;
    let dist = probes.distribution();
    let omega = probes.probe_block(s);
    if dist == Distribution::Gaussian {
        for (p, w) in omega.iter().enumerate() {
            if let Some(index) = w.iter().position(|v| *v == 0.0) {
                return Err(Error::ZeroProbeEntry { probe: p, index });
            }
        }
    }
    let y: Vec<Vec<f64>> = omega.iter().map(|w| op.apply(w)).collect::<Result<_>>()?;
    let (q, r) = orthonormalize_columns(&y, n);
    let rank = q.len();

    // Z = AᵀQ, one product per kept direction.
    let symmetric = op.is_symmetric();
    let mut z = Vec::with_capacity(rank);
    for qc in &q {
        z.push(if symmetric { op.apply(qc)? } else { op.apply_transpose(qc)? });
    }
    let mut warnings = Vec::new();
    if rank < s {
        warnings.push(format!("sketch is rank deficient: rank {rank} of {s}"));
    }

    // diag(QZᵀ) = diag(QQᵀA).
    let mut base = vec![0.0; n];
    for (qc, zc) in q.iter().zip(&z) {
        for ((b, a), c) in base.iter_mut().zip(qc).zip(zc) {
            *b += a * c;
        }
    }

    let r_cols: Vec<Vec<f64>> = (0..s).map(|j| r.iter().map(|row| row[j]).collect()).collect();
    let fast = if rank == s { fast_complements(&r_cols) } else { None };

    let mut diagonal = vec![0.0; n];
    for i in 0..s {
        let w_set = match &fast {
            Some(ws) => vec![ws[i].clone()],
            None => complement_of_others(&r_cols, i, rank),
        };
        // Term 1: diag(QZᵀ) − Σ_w (Qw) ⊙ (Zw).
        let mut term = base.clone();
        let mut qw_all = Vec::with_capacity(w_set.len());
        for w in &w_set {
            let qw = combine(&q, w, n);
            let zw = combine(&z, w, n);
            for ((t, a), b) in term.iter_mut().zip(&qw).zip(&zw) {
                *t -= a * b;
            }
            qw_all.push(qw);
        }
        // Term 2: (I − Q Pᵢ Qᵀ)yᵢ = yᵢ − Q c + Σ_w (Qw)(w·c), c = Qᵀyᵢ.
        let c = &r_cols[i];
        let mut resid = y[i].clone();
        let qc = combine(&q, c, n);
        for (v, p) in resid.iter_mut().zip(&qc) {
            *v -= p;
        }
        for (w, qw) in w_set.iter().zip(&qw_all) {
            axpy(dot(w, c), qw, &mut resid);
        }
        let wi = &omega[i];
        for (j, t) in term.iter_mut().enumerate() {
            let d = wi[j] * wi[j];
            if d.abs() < DENO_FLOOR {
                return Err(Error::ZeroDenominator { index: j });
            }
            *t += wi[j] * resid[j] / d;
        }
        axpy(1.0, &term, &mut diagonal);
    }
    let inv_s = 1.0 / s as f64;
    diagonal.iter_mut().for_each(|v| *v *= inv_s);

    Ok(EstimateResult {
        diagonal,
        matvecs_used: (s + rank) as u64,
        method: match dist {
            Distribution::Gaussian => Method::XdiagG,
            Distribution::Rademacher => Method::XdiagR,
        },
        k: rank,
        m: s,
        breakdown: None,
        warnings,
    })
}

/// `Σ_c coeffs[c] · cols[c]`.
fn combine(cols: &[Vec<f64>], coeffs: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (col, c) in cols.iter().zip(coeffs) {
        if *c != 0.0 {
            axpy(*c, col, &mut out);
        }
    }
    out
}

/// For square invertible `R`, the unit normal to `range(R₋ᵢ)` is `R⁻ᵀeᵢ`
/// normalized. Returns `None` if `R` is too ill-conditioned for that.
fn fast_complements(r_cols: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let s = r_cols.len();
    let r = DMatrix::from_fn(s, s, |a, b| r_cols[b][a]);
    let inv = r.try_inverse()?;
    let mut out = Vec::with_capacity(s);
    for i in 0..s {
        let mut w: Vec<f64> = (0..s).map(|a| inv[(i, a)]).collect();
        let nw = norm(&w);
        if !(nw.is_finite() && nw > 0.0) {
            return None;
        }
        w.iter_mut().for_each(|v| *v /= nw);
        for (j, col) in r_cols.iter().enumerate() {
            if j != i && dot(col, &w).abs() > 1e-8 * norm(col) {
                return None;
            }
        }
        out.push(w);
    }
    Some(out)
}

/// Orthonormal basis of the complement of `span{r_j : j ≠ i}` in `ℝ^rank`.
fn complement_of_others(r_cols: &[Vec<f64>], i: usize, rank: usize) -> Vec<Vec<f64>> {
    let mut span = OrthonormalBasis::new(rank);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let push = |span: &mut OrthonormalBasis, v: Vec<f64>| {
        let zero = vec![0.0; rank];
        span.push(v, zero).expect("within dimension");
    };
    for (j, col) in r_cols.iter().enumerate() {
        if j == i || span.k() >= rank {
            continue;
        }
        if let Some(q) = span.orthonormalize(col) {
            push(&mut span, q);
        }
    }
    for t in 0..rank {
        if span.k() >= rank {
            break;
        }
        let mut e = vec![0.0; rank];
        e[t] = 1.0;
        let resid = span.project_out(&e);
        let nr = norm(&resid);
        if nr > 1e-6 {
            let q: Vec<f64> = resid.iter().map(|v| v / nr).collect();
            cols.push(q.clone());
            push(&mut span, q);
        }
    }
    cols
}
