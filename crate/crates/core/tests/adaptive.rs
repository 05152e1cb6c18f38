use diagest::adaptive::{
    adaptive_estimate, detect_minimum, grow_basis_step, prototype_estimate, Limits,
    OrthonormalBasis, ProbeCount, Stage,
};
use diagest::bounds::Tolerance;
use diagest::data::synth::{synth_matrix, SpectrumKind, SpectrumSpec};
use diagest::linop::{DenseMatrix, DiagonalOperator, IdentityOperator, LinearOperator};
use diagest::probes::{derive_seed, ProbeStream};
use diagest::vecops::relative_error;
use proptest::prelude::*;

fn limits(n: usize) -> Limits {
    Limits {
        k_max: n,
        m_max: 200_000,
    }
}

#[test]
fn identity_step_gives_rank_one_projector() {
    let a = IdentityOperator::new(7);
    let mut basis = OrthonormalBasis::new(7);
    grow_basis_step(&a, &mut basis, &mut ProbeStream::gaussian(3, 7)).unwrap();
    let q = &basis.columns()[0];
    for (d, x) in basis.d_defl().iter().zip(q) {
        assert!((d - x * x).abs() < 1e-15);
    }
    assert!((basis.d_defl().iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn five_steps_match_dense_oracle() {
    let n = 20;
    let data = ProbeStream::gaussian(99, n * n).next_probe();
    let a = DenseMatrix::from_row_major(n, data).unwrap();
    let mut basis = OrthonormalBasis::new(n);
    let mut sketch = ProbeStream::gaussian(5, n);
    for _ in 0..5 {
        grow_basis_step(&a, &mut basis, &mut sketch).unwrap();
    }
    assert_eq!(basis.k(), 5);
    assert!(basis.orthogonality_error() <= 1e-10);
    let q = basis.columns();
    for i in 0..n {
        // (A Q Qᵀ)_ii = Σ_j Σ_c A_ij Q_jc Q_ic.
        let want: f64 = (0..n)
            .map(|j| a.get(i, j) * q.iter().map(|c| c[j] * c[i]).sum::<f64>())
            .sum();
        assert!((basis.d_defl()[i] - want).abs() <= 1e-12);
    }
    assert_eq!(a.matvec_count(), 10);
}

#[test]
fn exhausted_basis_is_an_error() {
    let a = IdentityOperator::new(2);
    let mut basis = OrthonormalBasis::new(2);
    let mut sk = ProbeStream::gaussian(1, 2);
    grow_basis_step(&a, &mut basis, &mut sk).unwrap();
    grow_basis_step(&a, &mut basis, &mut sk).unwrap();
    assert!(grow_basis_step(&a, &mut basis, &mut sk).is_err());
}

#[test]
fn detection_rule() {
    assert!(detect_minimum(&[10, 12, 14]));
    assert!(!detect_minimum(&[10, 9, 11]));
    assert!(detect_minimum(&[10, 10, 10]));
    assert!(detect_minimum(&[50, 20, 10, 11, 11]));
    assert!(!detect_minimum(&[10, 11]));
}

#[test]
fn diagonal_input_is_exact() {
    let d: Vec<f64> = (1..=30).map(|i| 1.0 + (i as f64).sqrt()).collect();
    let a = DiagonalOperator::new(d.clone()).unwrap();
    let r = adaptive_estimate(
        &a,
        Tolerance::Relative(0.1),
        0.05,
        &mut ProbeStream::gaussian(2, 30),
        limits(30),
    )
    .unwrap();
    assert!(relative_error(&d, &r.diagonal) < 1e-10);
    assert_eq!(r.k_chosen, 0);
}

#[test]
fn tiny_dimensions_terminate() {
    for n in [1usize, 2, 3] {
        let a = synth_like(n);
        let truth = a.diagonal();
        let r = adaptive_estimate(
            &a,
            Tolerance::Relative(0.25),
            0.01,
            &mut ProbeStream::gaussian(1, n),
            limits(n),
        )
        .unwrap();
        assert!(r.diagonal.iter().all(|v| v.is_finite()));
        assert_eq!(r.matvecs_total, a.matvec_count());
        if r.k_chosen == n {
            assert!(relative_error(&truth, &r.diagonal) < 1e-10);
        }
    }
}

fn synth_like(n: usize) -> DenseMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 2.0 + i as f64 } else { 0.3 }).collect())
        .collect();
    DenseMatrix::from_rows(&rows).unwrap()
}

#[test]
fn matvec_accounting_matches_the_counter() {
    let n = 120;
    for kind in [SpectrumKind::Flat, SpectrumKind::Exp, SpectrumKind::Poly] {
        let a = synth_matrix(SpectrumSpec::new(kind, n), 4).unwrap().matrix;
        for t in 0..3 {
            let before = a.matvec_count();
            let r = adaptive_estimate(
                &a,
                Tolerance::Relative(0.25),
                0.01,
                &mut ProbeStream::gaussian(derive_seed(8, t), n),
                limits(n),
            )
            .unwrap();
            let used = a.matvec_count() - before;
            assert_eq!(r.matvecs_total, used);
            assert_eq!(r.matvecs_total, r.stage1_matvecs + r.m_used as u64);
            assert!(r.stage1_matvecs >= 2 * r.k_built as u64);
            assert!(r.k_chosen <= r.k_built);
            let s2 = r.trace.iter().filter(|row| row.stage == Stage::Probe).count();
            assert_eq!(s2, r.m_used);
        }
    }
}

#[test]
fn deflated_frobenius_falls_and_bounds_the_off_diagonal() {
    let n = 80;
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Exp, n), 6).unwrap();
    let fro = a.matrix.frobenius_norm_sq();
    let mut basis = OrthonormalBasis::new(n);
    let mut sk = ProbeStream::gaussian(12, n);
    let mut prev = fro;
    for _ in 0..30 {
        grow_basis_step(&a.matrix, &mut basis, &mut sk).unwrap();
        let rem = fro - basis.aq_fro_sq();
        assert!(rem <= prev + 1e-12 * fro);
        prev = rem;
        let gap: f64 = a
            .diagonal
            .iter()
            .zip(basis.d_defl())
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        let b_off = rem - gap;
        // ‖A‖² − ‖AQ‖² + ‖d_defl‖² over-states the remainder's off-diagonal mass.
        assert!(rem + basis.d_defl_norm_sq() >= b_off);
    }
}

#[test]
fn end_to_end_failure_rate() {
    let n = 200;
    let (eps, delta) = (0.25, 0.05);
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Poly, n), 10).unwrap();
    let fails = (0..100)
        .filter(|t| {
            let r = adaptive_estimate(
                &a.matrix,
                Tolerance::Relative(eps),
                delta,
                &mut ProbeStream::gaussian(derive_seed(33, *t), n),
                limits(n),
            )
            .unwrap();
            relative_error(&a.diagonal, &r.diagonal) > eps
        })
        .count();
    assert!(fails as f64 / 100.0 <= delta + 0.05, "{fails} failures");
}

#[test]
fn adaptive_not_grossly_worse_than_fixed_k() {
    let n = 200;
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Poly, n), 11).unwrap().matrix;
    let tol = Tolerance::Relative(0.25);
    let (mut adaptive, mut fixed) = (0u64, 0u64);
    for t in 0..20 {
        let p = ProbeStream::gaussian(derive_seed(44, t), n);
        adaptive += adaptive_estimate(&a, tol, 0.01, &mut p.clone(), limits(n))
            .unwrap()
            .matvecs_total;
        fixed += prototype_estimate(&a, tol, 0.01, 20, ProbeCount::Estimated, &mut p.clone(), 200_000)
            .unwrap()
            .matvecs_total;
    }
    assert!(adaptive <= fixed + 20 * 40, "adaptive {adaptive} vs fixed {fixed}");
}

#[test]
fn prototype_with_full_capture_is_exact() {
    let (n, r) = (30, 4);
    let g = ProbeStream::gaussian(2, n * r).next_probe();
    let data = (0..n * n)
        .map(|p| (0..r).map(|c| g[(p / n) * r + c] * g[(p % n) * r + c]).sum())
        .collect();
    let a = DenseMatrix::from_row_major(n, data).unwrap().symmetrize();
    let rep = prototype_estimate(
        &a,
        Tolerance::Relative(0.1),
        0.01,
        r,
        ProbeCount::Fixed(2),
        &mut ProbeStream::gaussian(7, n),
        100,
    )
    .unwrap();
    assert!(relative_error(&a.diagonal(), &rep.diagonal) < 1e-10);
}

#[test]
fn prototype_without_sketch_uses_the_oracle_count() {
    let n = 50;
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Flat, n), 2).unwrap();
    let off = a.matrix.off_diagonal_norm_sq().sqrt();
    let diag_norm = a.diagonal.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rep = prototype_estimate(
        &a.matrix,
        Tolerance::Relative(0.5),
        0.1,
        0,
        ProbeCount::Oracle {
            b_off_fro: off,
            diag_norm,
        },
        &mut ProbeStream::gaussian(3, n),
        100_000,
    )
    .unwrap();
    let b = diagest::bounds::ErrorBudget::new(0.5 * diag_norm, 0.1, n).unwrap();
    assert_eq!(rep.m_used as u64, diagest::bounds::g_query_count(&b, off));
    assert_eq!(rep.k_chosen, 0);
}

#[test]
fn budget_exhaustion_warns() {
    let n = 60;
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Flat, n), 2).unwrap().matrix;
    let r = adaptive_estimate(
        &a,
        Tolerance::Relative(0.01),
        0.01,
        &mut ProbeStream::gaussian(1, n),
        Limits { k_max: 2, m_max: 10 },
    )
    .unwrap();
    assert!(r.m_used <= 10);
    assert!(r.warnings.iter().any(|w| w.contains("budget exhausted")));
}

#[test]
fn trace_csv_has_a_row_per_entry() {
    let n = 40;
    let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Exp, n), 2).unwrap().matrix;
    let r = adaptive_estimate(
        &a,
        Tolerance::Relative(0.25),
        0.01,
        &mut ProbeStream::gaussian(1, n),
        limits(n),
    )
    .unwrap();
    let csv = r.trace_csv();
    assert_eq!(csv.lines().count(), r.trace.len() + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reproducible_and_finite(seed in any::<u64>(), n in 3usize..40) {
        let a = synth_matrix(SpectrumSpec::new(SpectrumKind::Exp, n), 1).unwrap().matrix;
        let run = || adaptive_estimate(
            &a,
            Tolerance::Relative(0.3),
            0.05,
            &mut ProbeStream::gaussian(seed, n),
            limits(n),
        )
        .unwrap();
        let (x, y) = (run(), run());
        prop_assert_eq!(&x.diagonal, &y.diagonal);
        prop_assert_eq!(x.matvecs_total, y.matvecs_total);
        prop_assert!(x.diagonal.iter().all(|v| v.is_finite()));
    }
}
