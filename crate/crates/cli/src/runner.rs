//! Matrix sources and a single dispatch point for every estimation method.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context};
use diagest::adaptive::{adaptive_estimate, prototype_estimate, Limits, ProbeCount};
use diagest::bounds::Tolerance;
use diagest::data::{synth_matrix, SpectrumKind, SpectrumSpec};
use diagest::estimators::{
    bekas_estimate, diagpp_estimate, generalized_estimate, xdiag_estimate, Method,
};
use diagest::linop::{exact_diagonal, mm, DenseMatrix, LinearOperator, SparseMatrix};
use diagest::probes::{derive_seed, Distribution, ProbeStream};
use diagest::vecops::relative_error;

use crate::rows::ResultRow;

pub enum Matrix {
    Dense(DenseMatrix),
    Sparse(SparseMatrix),
}

/// A matrix with its exact diagonal and a label for the `kind` column.
pub struct Problem {
    pub label: String,
    pub matrix: Matrix,
    pub diagonal: Vec<f64>,
}

impl Problem {
    pub fn synth(kind: SpectrumKind, n: usize, seed: u64) -> anyhow::Result<Self> {
        let s = synth_matrix(SpectrumSpec::new(kind, n), seed)?;
        Ok(Self {
            label: kind.name(),
            matrix: Matrix::Dense(s.matrix),
            diagonal: s.diagonal,
        })
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let a = mm::read_sparse_path(path)
            .with_context(|| format!("reading Matrix Market file {}", path.display()))?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "matrix".into());
        Ok(Self {
            label,
            diagonal: a.diagonal(),
            matrix: Matrix::Sparse(a),
        })
    }

    pub fn op(&self) -> &dyn LinearOperator {
        match &self.matrix {
            Matrix::Dense(a) => a,
            Matrix::Sparse(a) => a,
        }
    }

    pub fn n(&self) -> usize {
        self.diagonal.len()
    }
}

/// Method parameters that do not vary across trials.
#[derive(Debug, Clone, Copy)]
pub struct MethodConfig {
    pub tolerance: Tolerance,
    pub delta: f64,
    /// Budget for the fixed-budget methods, probe count for `prototype`.
    pub matvecs: Option<usize>,
    /// Sketch width for `prototype`.
    pub k: Option<usize>,
    pub distribution: Distribution,
    pub limits: Option<Limits>,
    pub time: bool,
}

impl MethodConfig {
    pub fn new(tolerance: Tolerance, delta: f64) -> Self {
        Self {
            tolerance,
            delta,
            matvecs: None,
            k: None,
            distribution: Distribution::Gaussian,
            limits: None,
            time: false,
        }
    }

    pub fn with_matvecs(mut self, m: usize) -> Self {
        self.matvecs = Some(m);
        self
    }
}

/// Result of one estimation run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub diagonal: Vec<f64>,
    pub k: usize,
    pub m: usize,
    pub matvecs: u64,
    pub warnings: Vec<String>,
}

/// Whether `method` needs `--matvecs`.
pub fn needs_budget(method: Method) -> bool {
    matches!(
        method,
        Method::Bekas | Method::Generalized | Method::Diagpp | Method::XdiagG | Method::XdiagR
    )
}

/// Largest even number not above `budget` (XDiag splits its budget in two).
pub fn even_budget(budget: usize) -> usize {
    budget - budget % 2
}

pub fn run_method(
    op: &dyn LinearOperator,
    method: Method,
    cfg: &MethodConfig,
    seed: u64,
) -> anyhow::Result<Outcome> {
    let n = op.dim();
    let mut probes = ProbeStream::new(seed, cfg.distribution, n);
    let budget = || {
        cfg.matvecs
            .ok_or_else(|| anyhow::anyhow!("method {method} needs a matvec budget"))
    };
    let fixed = |r: diagest::estimators::EstimateResult| Outcome {
        diagonal: r.diagonal,
        k: r.k,
        m: r.m,
        matvecs: r.matvecs_used,
        warnings: r.warnings,
    };
    let adaptive = |r: diagest::adaptive::AdaptiveReport| Outcome {
        diagonal: r.diagonal,
        k: r.k_chosen,
        m: r.m_used,
        matvecs: r.matvecs_total,
        warnings: r.warnings,
    };
    let limits = cfg.limits.unwrap_or_else(|| Limits::for_dim(n));
    Ok(match method {
        Method::Bekas => fixed(bekas_estimate(op, &mut probes, budget()?)?),
        Method::Generalized => fixed(generalized_estimate(op, &mut probes, budget()?)?),
        Method::Diagpp => fixed(diagpp_estimate(op, budget()?, &mut probes)?),
        Method::XdiagG | Method::XdiagR => {
            let dist = if method == Method::XdiagG {
                Distribution::Gaussian
            } else {
                Distribution::Rademacher
            };
            let mut p = probes.with_distribution(dist);
            let b = even_budget(budget()?);
            if b < 2 {
                bail!("XDiag needs a budget of at least 2");
            }
            fixed(xdiag_estimate(op, b, &mut p)?)
        }
        Method::Adaptive => adaptive(adaptive_estimate(
            op,
            cfg.tolerance,
            cfg.delta,
            &mut probes,
            limits,
        )?),
        Method::Prototype => {
            let count = match cfg.matvecs {
                Some(m) => ProbeCount::Fixed(m),
                None => ProbeCount::Estimated,
            };
            adaptive(prototype_estimate(
                op,
                cfg.tolerance,
                cfg.delta,
                cfg.k.unwrap_or(0),
                count,
                &mut probes,
                limits.m_max,
            )?)
        }
        Method::Exact => {
            let before = op.matvec_count();
            let diagonal = exact_diagonal(op)?;
            Outcome {
                diagonal,
                k: 0,
                m: 0,
                matvecs: op.matvec_count() - before,
                warnings: Vec::new(),
            }
        }
    })
}

/// Seed of trial `t` under base seed `seed`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, t as u64)
}

/// One trial as a CSV row, with warnings echoed to stderr.
pub fn run_trial(
    problem: &Problem,
    method: Method,
    cfg: &MethodConfig,
    seed: u64,
    trial: usize,
) -> anyhow::Result<ResultRow> {
    let start = Instant::now();
    let out = run_method(problem.op(), method, cfg, trial_seed(seed, trial))?;
    let wall_time = if cfg.time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };
    for w in &out.warnings {
        eprintln!("warning: {method} trial {trial}: {w}");
    }
    Ok(ResultRow {
        method: method.as_str().into(),
        kind: problem.label.clone(),
        n: problem.n(),
        tolerance: cfg.tolerance,
        delta: cfg.delta,
        trial,
        k: out.k,
        m: out.m,
        matvecs: out.matvecs,
        relative_error: relative_error(&problem.diagonal, &out.diagonal),
        wall_time,
    })
}
