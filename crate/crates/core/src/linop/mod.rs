//! Implicit linear operators.
//!
//! Every estimator in this crate only ever touches a matrix through
//! [`LinearOperator::apply`]. Each operator owns a [`MatvecCounter`] so the
//! cost of a run can be read back as the number of products with the operator
//! that was handed to the estimator. Composite operators ([`PowerOperator`],
//! [`DeflatedOperator`]) route through the checked `apply` of their base, so
//! the base counter sees every product too.
//!
//! Projections `(I − QQᵀ)v` are vector-scale work and are never charged.

mod deflated;
mod dense;
pub mod mm;
mod power;
mod sparse;

use std::sync::atomic::{AtomicU64, Ordering};

pub use deflated::{deflated_apply, DeflatedOperator};
pub use dense::DenseMatrix;
pub use power::PowerOperator;
pub use sparse::SparseMatrix;

use crate::error::{Error, Result};

/// Thread-safe tally of operator applications.
#[derive(Debug, Default)]
pub struct MatvecCounter(AtomicU64);

impl MatvecCounter {
    pub fn new() -> Self {
        Self(AtomicU64::new(0))
    }

    #[inline]
    pub fn incr(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

impl Clone for MatvecCounter {
    /// Clones start from zero: a copied operator has not been applied yet.
    fn clone(&self) -> Self {
        Self::new()
    }
}

/// An implicit square matrix that can only be multiplied against vectors.
///
/// Implementors provide the raw kernel `apply_raw`; callers should use the
/// provided `apply`/`apply_into`, which validate lengths, count the product
/// and reject non-finite output.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y ← A x` without bookkeeping. `x` and `y` have length `dim()`.
    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()>;

    /// `y ← Aᵀ x`. Operators that cannot do this keep the default.
    fn apply_transpose_raw(&self, _x: &[f64], _y: &mut [f64]) -> Result<()> {
        Err(Error::TransposeUnsupported(self.name().to_string()))
    }

    fn counter(&self) -> &MatvecCounter;

    fn name(&self) -> &str {
        "operator"
    }

    /// Whether `A = Aᵀ` holds exactly for this operator.
    fn is_symmetric(&self) -> bool {
        false
    }

    fn matvec_count(&self) -> u64 {
        self.counter().get()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.dim();
        check_len(n, x.len())?;
        check_len(n, y.len())?;
        self.counter().incr();
        self.apply_raw(x, y)?;
        check_finite(self.name(), y)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    /// `Aᵀ x`, charged to the same counter as forward products.
    fn apply_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        check_len(n, x.len())?;
        let mut y = vec![0.0; n];
        self.counter().incr();
        self.apply_transpose_raw(x, &mut y)?;
        check_finite(self.name(), &y)?;
        Ok(y)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_finite(name: &str, y: &[f64]) -> Result<()> {
    match y.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            operator: name.to_string(),
            index,
        }),
        None => Ok(()),
    }
}

/// The `n × n` identity.
#[derive(Debug, Clone)]
pub struct IdentityOperator {
    n: usize,
    counter: MatvecCounter,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            counter: MatvecCounter::new(),
        }
    }
}

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.copy_from_slice(x);
        Ok(())
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "identity"
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// A diagonal matrix stored as its diagonal.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
    counter: MatvecCounter,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if let Some(i) = diag.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry { row: i, col: i });
        }
        Ok(Self {
            diag,
            counter: MatvecCounter::new(),
        })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi = di * xi;
        }
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        self.apply_raw(x, y)
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "diagonal"
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Wraps a closure `x ↦ A x` as an operator.
pub struct FnOperator<F> {
    n: usize,
    f: F,
    symmetric: bool,
    name: String,
    counter: MatvecCounter,
}

impl<F> FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(n: usize, f: F) -> Self {
        Self {
            n,
            f,
            symmetric: false,
            name: "closure".to_string(),
            counter: MatvecCounter::new(),
        }
    }

    /// Declare the closure symmetric, enabling transpose products through `f`.
    pub fn symmetric(mut self) -> Self {
        self.symmetric = true;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        (self.f)(x, y);
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if !self.symmetric {
            return Err(Error::TransposeUnsupported(self.name.clone()));
        }
        (self.f)(x, y);
        Ok(())
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Exact diagonal by probing with every standard basis vector.
///
/// Costs `n` products; intended as a reference and for small operators.
pub fn exact_diagonal(op: &dyn LinearOperator) -> Result<Vec<f64>> {
    let n = op.dim();
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        e[i] = 1.0;
        op.apply_into(&e, &mut col)?;
        diag.push(col[i]);
        e[i] = 0.0;
    }
    Ok(diag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_input() {
        let op = IdentityOperator::new(3);
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(op.matvec_count(), 1);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let op = IdentityOperator::new(3);
        let err = op.apply(&[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, got: 2 }));
        assert_eq!(op.matvec_count(), 0);
    }

    #[test]
    fn non_finite_output_names_the_operator() {
        let op = FnOperator::new(2, |_x: &[f64], y: &mut [f64]| {
            y[0] = 1.0;
            y[1] = f64::NAN;
        })
        .named("broken");
        match op.apply(&[1.0, 1.0]).unwrap_err() {
            Error::NonFinite { operator, index } => {
                assert_eq!(operator, "broken");
                assert_eq!(index, 1);
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn transpose_of_closure_requires_symmetry() {
        let op = FnOperator::new(2, |x: &[f64], y: &mut [f64]| y.copy_from_slice(x));
        assert!(op.apply_transpose(&[1.0, 0.0]).is_err());
        let op = op.symmetric();
        assert_eq!(op.apply_transpose(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn exact_diagonal_costs_n_products() {
        let op = DiagonalOperator::new(vec![4.0, -1.0, 0.5]).unwrap();
        assert_eq!(exact_diagonal(&op).unwrap(), vec![4.0, -1.0, 0.5]);
        assert_eq!(op.matvec_count(), 3);
    }
}
