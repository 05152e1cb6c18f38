//! Symmetric test matrices `A = U D Uᵀ` with prescribed spectra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{DenseMatrix, LinearOperator, MatvecCounter};

/// Largest `n` materialized densely by [`synth_matrix`].
pub const DENSE_LIMIT: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    /// `3 − 2(i−1)/(n−1)`, `i = 1..n`.
    Flat,
    /// `i⁻²`, `i = 1..n`.
    Poly,
    /// `0.7ⁱ`, `i = 0..n−1`.
    Exp,
    /// `plateau` ones followed by `floor`.
    Step { plateau: usize, floor: f64 },
    /// i.i.d. integers uniform on `[lo, hi]`, inclusive.
    Randint { lo: i64, hi: i64 },
}

impl SpectrumKind {
    pub const STEP: SpectrumKind = SpectrumKind::Step {
        plateau: 50,
        floor: 1e-3,
    };

    pub fn name(&self) -> String {
        match self {
            SpectrumKind::Flat => "flat".into(),
            SpectrumKind::Poly => "poly".into(),
            SpectrumKind::Exp => "exp".into(),
            SpectrumKind::Step { plateau: 50, floor } if *floor == 1e-3 => "step".into(),
            SpectrumKind::Step { plateau, floor } => format!("step:{plateau}:{floor}"),
            SpectrumKind::Randint { lo, hi } => format!("randint:{lo}:{hi}"),
        }
    }
}

impl std::fmt::Display for SpectrumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for SpectrumKind {
    type Err = String;

    /// `flat`, `poly`, `exp`, `step[:plateau[:floor]]`, `randint[:lo:hi]`
    /// (`randint` alone means `[0, 2000]`).
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || format!("invalid spectrum kind '{s}'");
        match parts.as_slice() {
            ["flat"] => Ok(SpectrumKind::Flat),
            ["poly"] => Ok(SpectrumKind::Poly),
            ["exp"] => Ok(SpectrumKind::Exp),
            ["step"] => Ok(SpectrumKind::STEP),
            ["step", p] => Ok(SpectrumKind::Step {
                plateau: p.parse().map_err(|_| bad())?,
                floor: 1e-3,
            }),
            ["step", p, f] => Ok(SpectrumKind::Step {
                plateau: p.parse().map_err(|_| bad())?,
                floor: f.parse().map_err(|_| bad())?,
            }),
            ["randint"] => Ok(SpectrumKind::Randint { lo: 0, hi: 2000 }),
            ["randint", lo, hi] => {
                let lo: i64 = lo.parse().map_err(|_| bad())?;
                let hi: i64 = hi.parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                Ok(SpectrumKind::Randint { lo, hi })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSpec {
    pub kind: SpectrumKind,
    pub n: usize,
}

impl SpectrumSpec {
    pub fn new(kind: SpectrumKind, n: usize) -> Self {
        Self { kind, n }
    }
}

/// Eigenvalues for `spec`; `rng` is only consulted for `Randint`.
pub fn eigenvalues<R: Rng>(spec: &SpectrumSpec, rng: &mut R) -> Vec<f64> {
    let n = spec.n;
    match spec.kind {
        SpectrumKind::Flat => (0..n)
            .map(|i| if n == 1 { 3.0 } else { 3.0 - 2.0 * i as f64 / (n - 1) as f64 })
            .collect(),
        SpectrumKind::Poly => (1..=n).map(|i| 1.0 / (i as f64 * i as f64)).collect(),
        SpectrumKind::Exp => (0..n).map(|i| 0.7f64.powi(i as i32)).collect(),
        SpectrumKind::Step { plateau, floor } => {
            (0..n).map(|i| if i < plateau { 1.0 } else { floor }).collect()
        }
        SpectrumKind::Randint { lo, hi } => {
            (0..n).map(|_| rng.gen_range(lo..=hi) as f64).collect()
        }
    }
}

/// Haar-distributed orthogonal matrix: QR of a gaussian matrix with the
/// columns of `Q` flipped so that `R` has a positive diagonal.
pub fn haar_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// A synthesized matrix with its spectrum and exact diagonal.
#[derive(Debug, Clone)]
pub struct SynthMatrix {
    pub spec: SpectrumSpec,
    pub matrix: DenseMatrix,
    pub eigenvalues: Vec<f64>,
    pub diagonal: Vec<f64>,
}

fn spectral_parts(spec: &SpectrumSpec, seed: u64) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    if spec.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "synthetic matrices need n ≥ 2, got {}",
            spec.n
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = eigenvalues(spec, &mut rng);
    let u = haar_orthogonal(spec.n, &mut rng);
    let diagonal = (0..spec.n)
        .map(|i| (0..spec.n).map(|k| u[(i, k)] * u[(i, k)] * lambda[k]).sum())
        .collect();
    Ok((u, lambda, diagonal))
}

/// `A = U D Uᵀ` materialized densely (`n ≤ DENSE_LIMIT`). Deterministic in `seed`.
pub fn synth_matrix(spec: SpectrumSpec, seed: u64) -> Result<SynthMatrix> {
    if spec.n > DENSE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "n = {} exceeds the dense limit {DENSE_LIMIT}; use synth_operator",
            spec.n
        )));
    }
    let (u, eigenvalues, diagonal) = spectral_parts(&spec, seed)?;
    let mut ud = u.clone();
    for (j, l) in eigenvalues.iter().enumerate() {
        ud.column_mut(j).scale_mut(*l);
    }
    let a = ud * u.transpose();
    let n = spec.n;
    let data: Vec<f64> = (0..n * n).map(|p| a[(p / n, p % n)]).collect();
    let matrix = DenseMatrix::from_row_major(n, data)?.symmetrize();
    Ok(SynthMatrix {
        spec,
        matrix,
        eigenvalues,
        diagonal,
    })
}

/// `U D Uᵀ` kept in factored form; each product costs two `n×n` passes.
#[derive(Debug, Clone)]
pub struct SynthOperator {
    pub spec: SpectrumSpec,
    u: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub diagonal: Vec<f64>,
    counter: MatvecCounter,
}

pub fn synth_operator(spec: SpectrumSpec, seed: u64) -> Result<SynthOperator> {
    let (u, eigenvalues, diagonal) = spectral_parts(&spec, seed)?;
    Ok(SynthOperator {
        spec,
        u,
        eigenvalues,
        diagonal,
        counter: MatvecCounter::new(),
    })
}

impl LinearOperator for SynthOperator {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let xv = nalgebra::DVectorView::from_slice(x, x.len());
        let mut c = self.u.tr_mul(&xv);
        for (ci, l) in c.iter_mut().zip(&self.eigenvalues) {
            *ci *= l;
        }
        let out = &self.u * c;
        y.copy_from_slice(out.as_slice());
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_raw(x, y)
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "synth"
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
