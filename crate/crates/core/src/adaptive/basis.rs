use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::vecops::{axpy, dot, norm, norm_sq};

/// Residual norms below this fraction of the input norm count as rank deficiency.
pub const RANK_TOL: f64 = 1e-12;

/// Column-orthonormal `Q` grown one column at a time, with `AQ` cached.
#[derive(Debug, Clone)]
pub struct OrthonormalBasis {
    n: usize,
    q: Vec<Vec<f64>>,
    aq: Vec<Vec<f64>>,
    aq_fro_sq: f64,
    d_defl: Vec<f64>,
}

impl OrthonormalBasis {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            q: Vec::new(),
            aq: Vec::new(),
            aq_fro_sq: 0.0,
            d_defl: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn aq_columns(&self) -> &[Vec<f64>] {
        &self.aq
    }

    /// `‖AQ‖_F²`.
    pub fn aq_fro_sq(&self) -> f64 {
        self.aq_fro_sq
    }

    /// `diag(AQQᵀ) = Σⱼ (Aqⱼ) ⊙ qⱼ`.
    pub fn d_defl(&self) -> &[f64] {
        &self.d_defl
    }

    pub fn d_defl_norm_sq(&self) -> f64 {
        norm_sq(&self.d_defl)
    }

    /// `Qᵀv`.
    pub fn coefficients(&self, v: &[f64]) -> Vec<f64> {
        self.q.iter().map(|q| dot(q, v)).collect()
    }

    /// `(I − QQᵀ)v`, with a second pass to clean up cancellation.
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let mut r = v.to_vec();
        if self.q.is_empty() {
            return r;
        }
        for _ in 0..2 {
            for q in &self.q {
                let c = dot(q, &r);
                axpy(-c, q, &mut r);
            }
        }
        r
    }

    /// `AQ(Qᵀx)` from the cached images: no products with `A`.
    pub fn aq_times_coefficients(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (aq, ci) in self.aq.iter().zip(c) {
            axpy(*ci, aq, &mut out);
        }
        out
    }

    /// Orthonormalize `y` against the basis. Returns `None` when the residual
    /// is below `RANK_TOL·‖y‖` (including `y = 0`).
    pub fn orthonormalize(&self, y: &[f64]) -> Option<Vec<f64>> {
        let ny = norm(y);
        if ny == 0.0 || !ny.is_finite() {
            return None;
        }
        let mut r = self.project_out(y);
        let nr = norm(&r);
        if nr < RANK_TOL * ny {
            return None;
        }
        r.iter_mut().for_each(|v| *v /= nr);
        Some(r)
    }

    /// Append an orthonormal column together with its image `Aq`.
    pub fn push(&mut self, q: Vec<f64>, aq: Vec<f64>) -> Result<()> {
        if q.len() != self.n || aq.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: if q.len() != self.n { q.len() } else { aq.len() },
            });
        }
        if self.q.len() >= self.n {
            return Err(Error::BasisExhausted(self.n));
        }
        self.aq_fro_sq += norm_sq(&aq);
        for ((d, a), qi) in self.d_defl.iter_mut().zip(&aq).zip(&q) {
            *d += a * qi;
        }
        self.q.push(q);
        self.aq.push(aq);
        Ok(())
    }

    /// Orthonormalize `y`, apply `A` to the new column and append it.
    /// Returns `false` (and costs nothing) when `y` adds no new direction.
    pub fn extend_with(&mut self, op: &dyn LinearOperator, y: &[f64]) -> Result<bool> {
        if self.k() >= self.n {
            return Err(Error::BasisExhausted(self.n));
        }
        match self.orthonormalize(y) {
            Some(q) => {
                let aq = op.apply(&q)?;
                self.push(q, aq)?;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    /// Keep only the first `k` columns; cached quantities are rebuilt.
    pub fn truncate(&mut self, k: usize) {
        if k >= self.k() {
            return;
        }
        self.q.truncate(k);
        self.aq.truncate(k);
        self.recompute();
    }

    /// Rebuild `‖AQ‖_F²` and `d_defl` from the stored columns.
    pub fn recompute(&mut self) {
        self.aq_fro_sq = self.aq.iter().map(|a| norm_sq(a)).sum();
        self.d_defl = vec![0.0; self.n];
        for (q, aq) in self.q.iter().zip(&self.aq) {
            for ((d, a), qi) in self.d_defl.iter_mut().zip(aq).zip(q) {
                *d += a * qi;
            }
        }
    }

    /// `‖QᵀQ − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, qi) in self.q.iter().enumerate() {
            for (j, qj) in self.q.iter().enumerate().take(i + 1) {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(qi, qj) - target).abs());
            }
        }
        worst
    }
}

/// Orthonormal basis of the span of `cols` by CGS with re-orthogonalization.
/// Also returns `R = QᵀY` (one row per kept direction, one entry per input column).
pub fn orthonormalize_columns(cols: &[Vec<f64>], n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut basis = OrthonormalBasis::new(n);
    for y in cols {
        if basis.k() >= n {
            break;
        }
        if let Some(q) = basis.orthonormalize(y) {
            basis.q.push(q);
        }
    }
    let q = basis.q;
    let r = q
        .iter()
        .map(|qi| cols.iter().map(|y| dot(qi, y)).collect())
        .collect();
    (q, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::IdentityOperator;

    #[test]
    fn first_column_is_normalized_input() {
        let b = OrthonormalBasis::new(3);
        let q = b.orthonormalize(&[3.0, 0.0, 4.0]).unwrap();
        assert_eq!(q, vec![0.6, 0.0, 0.8]);
    }

    #[test]
    fn identity_deflation_has_unit_trace() {
        let a = IdentityOperator::new(4);
        let mut b = OrthonormalBasis::new(4);
        assert!(b.extend_with(&a, &[1.0, 2.0, -1.0, 0.5]).unwrap());
        let tr: f64 = b.d_defl().iter().sum();
        assert!((tr - 1.0).abs() < 1e-15);
        assert_eq!(a.matvec_count(), 1);
    }

    #[test]
    fn dependent_column_is_skipped_for_free() {
        let a = IdentityOperator::new(3);
        let mut b = OrthonormalBasis::new(3);
        b.extend_with(&a, &[1.0, 1.0, 0.0]).unwrap();
        assert!(!b.extend_with(&a, &[2.0, 2.0, 0.0]).unwrap());
        assert_eq!(b.k(), 1);
        assert_eq!(a.matvec_count(), 1);
    }

    #[test]
    fn exhausted_basis_errors() {
        let a = IdentityOperator::new(1);
        let mut b = OrthonormalBasis::new(1);
        b.extend_with(&a, &[2.0]).unwrap();
        assert!(matches!(b.extend_with(&a, &[1.0]), Err(Error::BasisExhausted(1))));
    }

    #[test]
    fn truncate_rebuilds_caches() {
        let a = IdentityOperator::new(3);
        let mut b = OrthonormalBasis::new(3);
        b.extend_with(&a, &[1.0, 0.0, 0.0]).unwrap();
        b.extend_with(&a, &[0.0, 1.0, 0.0]).unwrap();
        b.truncate(1);
        assert_eq!(b.d_defl(), &[1.0, 0.0, 0.0]);
        assert_eq!(b.aq_fro_sq(), 1.0);
    }
}
