use super::{LinearOperator, MatvecCounter};
use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
    counter: MatvecCounter,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets. Duplicate coordinates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside a {n}×{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));

        let mut row_offsets = vec![0usize; n + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().expect("previous entry") += v;
                continue;
            }
            col_indices.push(j);
            values.push(v);
            row_offsets[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_offsets[i + 1] += row_offsets[i];
        }
        let mut m = Self {
            n,
            row_offsets,
            col_indices,
            values,
            symmetric: false,
            counter: MatvecCounter::new(),
        };
        m.symmetric = m.check_symmetric();
        Ok(m)
    }

    fn check_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            self.row_entries(i)
                .all(|(j, v)| self.get(j, i) == v)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Entry lookup by binary search within the row.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(p) => self.values[range.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.n)
            .flat_map(|i| self.row_entries(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_entries(i).map(|(j, v)| v * x[j]).sum();
        }
        Ok(())
    }

    fn apply_transpose_raw(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (i, xi) in x.iter().enumerate() {
            for (j, v) in self.row_entries(i) {
                y[j] += v * xi;
            }
        }
        Ok(())
    }

    fn counter(&self) -> &MatvecCounter {
        &self.counter
    }

    fn name(&self) -> &str {
        "sparse"
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_layout_and_product() {
        let m = SparseMatrix::from_triplets(
            3,
            &[(0, 1, 1.0), (1, 0, 1.0), (2, 2, 4.0), (0, 1, 1.0), (1, 0, 1.0)],
        )
        .unwrap();
        assert_eq!(m.row_offsets(), &[0, 1, 2, 3]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 1), 2.0);
        assert!(m.is_symmetric());
        assert_eq!(m.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, 2.0, 12.0]);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        assert!(SparseMatrix::from_triplets(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn asymmetric_pattern_detected() {
        let m = SparseMatrix::from_triplets(2, &[(0, 1, 1.0)]).unwrap();
        assert!(!m.is_symmetric());
        assert_eq!(m.apply_transpose(&[1.0, 0.0]).unwrap(), vec![0.0, 1.0]);
    }
}
