use diagest::adaptive::OrthonormalBasis;
use diagest::linop::{
    exact_diagonal, mm, DeflatedOperator, DenseMatrix, LinearOperator, PowerOperator,
    SparseMatrix,
};
use diagest::vecops::dot;
use diagest::Error;
use proptest::prelude::*;

fn triangle() -> SparseMatrix {
    SparseMatrix::from_triplets(
        3,
        &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0), (0, 2, 1.0), (2, 0, 1.0)],
    )
    .unwrap()
}

#[test]
fn cube_of_triangle_first_column() {
    let a = triangle();
    let p = PowerOperator::new(&a, 3).unwrap();
    assert_eq!(p.apply(&[1.0, 0.0, 0.0]).unwrap(), vec![2.0, 3.0, 3.0]);
    assert_eq!(a.matvec_count(), 3);
    assert_eq!(p.matvec_count(), 1);
}

#[test]
fn power_zero_is_rejected() {
    let a = triangle();
    assert!(PowerOperator::new(&a, 0).is_err());
}

#[test]
fn deflating_the_only_direction_gives_zero() {
    let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 5.0]]).unwrap();
    let mut basis = OrthonormalBasis::new(2);
    basis.push(vec![1.0, 0.0], a.apply(&[1.0, 0.0]).unwrap()).unwrap();
    let d = DeflatedOperator::new(&a, &basis).unwrap();
    assert_eq!(d.apply(&[1.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    assert_eq!(d.apply(&[0.0, 1.0]).unwrap(), vec![0.0, 5.0]);
}

#[test]
fn deflated_matches_dense_product() {
    let n = 6;
    let a = DenseMatrix::from_row_major(
        n,
        (0..n * n).map(|p| ((p * 7 + 3) % 11) as f64 - 5.0).collect(),
    )
    .unwrap();
    let mut basis = OrthonormalBasis::new(n);
    for seed in [[1.0, 2.0, 0.0, -1.0, 0.5, 0.0], [0.0, 1.0, 1.0, 1.0, -2.0, 3.0]] {
        basis.extend_with(&a, &seed).unwrap();
    }
    // P = I − QQᵀ formed densely.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let qq: f64 = basis.columns().iter().map(|q| q[i] * q[j]).sum();
            p[i * n + j] = if i == j { 1.0 } else { 0.0 } - qq;
        }
    }
    let b = a.matmul(&DenseMatrix::from_row_major(n, p).unwrap());
    let d = DeflatedOperator::new(&a, &basis).unwrap();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let got = d.apply(&e).unwrap();
        for i in 0..n {
            assert!((got[i] - b.get(i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn counters_track_each_product() {
    let a = DenseMatrix::from_diagonal(&[1.0, 2.0, 3.0]).unwrap();
    for _ in 0..4 {
        a.apply(&[1.0, 1.0, 1.0]).unwrap();
    }
    assert_eq!(a.matvec_count(), 4);
    a.counter().reset();
    assert_eq!(exact_diagonal(&a).unwrap(), vec![1.0, 2.0, 3.0]);
    assert_eq!(a.matvec_count(), 3);
}

#[test]
fn wrong_length_is_an_error() {
    let a = DenseMatrix::zeros(3);
    assert!(matches!(
        a.apply(&[1.0, 2.0]),
        Err(Error::DimensionMismatch { expected: 3, got: 2 })
    ));
    assert_eq!(a.matvec_count(), 0);
}

#[test]
fn matrix_market_symmetric_coordinate() {
    let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n3 3 3\n1 1 2.0\n2 1 -1.0\n3 3 4.5\n";
    let s = mm::read_sparse(text.as_bytes()).unwrap();
    assert_eq!(s.get(0, 1), -1.0);
    assert_eq!(s.get(1, 0), -1.0);
    assert_eq!(s.diagonal(), vec![2.0, 0.0, 4.5]);
    let d = mm::read_dense(text.as_bytes()).unwrap();
    assert_eq!(d.get(1, 0), -1.0);
}

#[test]
fn matrix_market_pattern_reads_as_ones() {
    let text = "%%MatrixMarket matrix coordinate pattern general\n2 2 2\n1 2\n2 1\n";
    let s = mm::read_sparse(text.as_bytes()).unwrap();
    assert_eq!(s.get(0, 1), 1.0);
    assert_eq!(s.nnz(), 2);
}

#[test]
fn matrix_market_rejects_rectangular() {
    let text = "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n";
    assert!(mm::read_sparse(text.as_bytes()).is_err());
}

#[test]
fn matrix_market_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.mtx");
    let a = DenseMatrix::from_rows(&[vec![1.0, 0.25], vec![-3.0, 1e-300]]).unwrap();
    mm::write_dense(std::fs::File::create(&path).unwrap(), &a).unwrap();
    let b = mm::read_dense_path(&path).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
}

fn dense_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..8).prop_flat_map(|n| (Just(n), prop::collection::vec(-10.0f64..10.0, n * n)))
}

proptest! {
    #[test]
    fn sparse_and_dense_products_agree((n, data) in dense_strategy(), seed in 0u64..1000) {
        let dense = DenseMatrix::from_row_major(n, data.clone()).unwrap();
        let triplets: Vec<_> = data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(p, v)| (p / n, p % n, *v))
            .collect();
        let sparse = SparseMatrix::from_triplets(n, &triplets).unwrap();
        let x: Vec<f64> = (0..n).map(|i| ((seed + i as u64) as f64).cos()).collect();
        let a = dense.apply(&x).unwrap();
        let b = sparse.apply(&x).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint((n, data) in dense_strategy()) {
        let a = DenseMatrix::from_row_major(n, data).unwrap();
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let lhs = dot(&y, &a.apply(&x).unwrap());
        let rhs = dot(&a.apply_transpose(&y).unwrap(), &x);
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn mm_round_trip_is_bit_exact((n, data) in dense_strategy()) {
        let a = DenseMatrix::from_row_major(n, data).unwrap();
        let mut buf = Vec::new();
        mm::write_dense(&mut buf, &a).unwrap();
        let b = mm::read_dense(buf.as_slice()).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }
}
