use super::{LinearOperator, MatvecCounter};
use crate::error::{Error, Result};

/// Row-major dense `n × n` matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
    symmetric: bool,
    counter: MatvecCounter,
}

impl DenseMatrix {
    /// Build from row-major entries. Rejects NaN/Inf.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if let Some(p) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry {
                row: p / n.max(1),
                col: p % n.max(1),
            });
        }
        let symmetric = (0..n).all(|i| (0..i).all(|j| data[i * n + j] == data[j * n + i]));
        Ok(Self {
            n,
            data,
            symmetric,
            counter: MatvecCounter::new(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_row_major(n, vec![0.0; n * n]).expect("zeros are finite")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self::from_row_major(n, data)
    }

    /// Replace `A` by `(A + Aᵀ)/2`, making the matrix exactly symmetric.
    pub fn symmetrize(mut self) -> Self {
        let n = self.n;
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = v;
                self.data[j * n + i] = v;
            }
        }
        self.symmetric = true;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `‖A_off‖_F²`: squared Frobenius norm with the diagonal zeroed.
    pub fn off_diagonal_norm_sq(&self) -> f64 {
        let d: f64 = self.diagonal().iter().map(|v| v * v).sum();
        (self.frobenius_norm_sq() - d).max(0.0)
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row(i).iter().map(|v| v * v).sum()
    }

    /// Dense product `self · other`.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        assert_eq!(n, other.n, "matmul dimension mismatch");
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let orow = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        DenseMatrix::from_row_major(n, out).expect("product of finite matrices")
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[j * n + i] = self.data[i * n + j];
            }
        }
        DenseMatrix::from_row_major(n, out).expect("finite")
    }
}

impl LinearOperator for DenseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
        Ok(())
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "dense"
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_vector_maps_to_zero() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(a.apply(&[1.0, -1.0]).unwrap(), vec![0.0, 0.0]);
        assert!(a.is_symmetric());
    }

    #[test]
    fn rejects_nan_entries() {
        let err = DenseMatrix::from_row_major(2, vec![1.0, 0.0, f64::NAN, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteEntry { row: 1, col: 0 }));
    }

    #[test]
    fn transpose_product_matches_explicit_transpose() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.0],
            vec![0.0, 3.0, -1.0],
            vec![4.0, 0.0, 5.0],
        ])
        .unwrap();
        assert!(!a.is_symmetric());
        let x = [0.3, -1.2, 2.0];
        let at = a.transpose();
        assert_eq!(a.apply_transpose(&x).unwrap(), at.apply(&x).unwrap());
    }

    #[test]
    fn off_diagonal_norm() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.off_diagonal_norm_sq(), 13.0);
    }
}
