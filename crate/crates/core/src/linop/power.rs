use super::{LinearOperator, MatvecCounter};
use crate::error::{Error, Result};

/// `A^p` applied as `p` successive products with the base operator.
pub struct PowerOperator<'a> {
    base: &'a dyn LinearOperator,
    exponent: u32,
    counter: MatvecCounter,
}

impl<'a> PowerOperator<'a> {
    pub fn new(base: &'a dyn LinearOperator, exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::InvalidArgument("power exponent must be positive".into()));
        }
        Ok(Self {
            base,
            exponent,
            counter: MatvecCounter::new(),
        })
    }

    pub fn base(&self) -> &dyn LinearOperator {
        self.base
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }
}

impl LinearOperator for PowerOperator<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let mut cur = x.to_vec();
        for _ in 0..self.exponent {
            self.base.apply_into(&cur, y)?;
            cur.copy_from_slice(y);
        }
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let mut cur = x.to_vec();
        for _ in 0..self.exponent {
            let next = self.base.apply_transpose(&cur)?;
            cur = next;
        }
        y.copy_from_slice(&cur);
        Ok(())
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "power"
    }

    fn is_symmetric(&self) -> bool {
        self.base.is_symmetric()
    }
}
