use super::{LinearOperator, MatvecCounter};
use crate::adaptive::OrthonormalBasis;
use crate::error::Result;

/// `B = A(I − QQᵀ)`: the input is projected off `span(Q)` before `A` is applied.
///
/// The projection costs `O(nk)` and is not counted; one product with `A` is.
pub struct DeflatedOperator<'a> {
    base: &'a dyn LinearOperator,
    basis: &'a OrthonormalBasis,
    counter: MatvecCounter,
}

impl<'a> DeflatedOperator<'a> {
    pub fn new(base: &'a dyn LinearOperator, basis: &'a OrthonormalBasis) -> Result<Self> {
        super::check_len(base.dim(), basis.dim())?;
        Ok(Self {
            base,
            basis,
            counter: MatvecCounter::new(),
        })
    }
}

impl LinearOperator for DeflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let projected = self.basis.project_out(x);
        self.base.apply_into(&projected, y)
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "deflated"
    }
}

/// `A((I − QQᵀ)v)` with one product charged to `base`.
pub fn deflated_apply(
    base: &dyn LinearOperator,
    basis: &OrthonormalBasis,
    v: &[f64],
) -> Result<Vec<f64>> {
    super::check_len(base.dim(), v.len())?;
    super::check_len(base.dim(), basis.dim())?;
    base.apply(&basis.project_out(v))
}
