use approx::assert_relative_eq;
use proptest::prelude::*;
use spdg::linalg::{
    orthonormalize, solve_linear, spectral_bounds, DenseMatrix, OrthoSubspace, RealVector,
};
use spdg::sampling::{gaussian_matrix, gaussian_vector, rng};

fn random_subspace(seed: u64, n: usize, d: usize) -> OrthoSubspace {
    orthonormalize(&gaussian_matrix(&mut rng(seed), n, d)).unwrap()
}

/// `B (BᵀB)⁻¹ Bᵀ` from the raw, non-orthonormal columns.
fn reference_projector(raw: &DenseMatrix) -> DenseMatrix {
    let gram = raw.transpose() * raw;
    raw * gram.try_inverse().unwrap() * raw.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_idempotent_orthogonal_and_complete(seed in 0u64..10_000, n in 1usize..30, frac in 0.0f64..=1.0) {
        let d = ((n as f64) * frac).round() as usize;
        let v = random_subspace(seed, n, d);
        let z = gaussian_vector(&mut rng(seed ^ 0xabc), n);
        let p = v.project(&z).unwrap();
        let q = v.complement_project(&z).unwrap();
        let scale = 1.0 + z.norm();
        prop_assert!((v.project(&p).unwrap() - &p).norm() <= 1e-12 * scale);
        prop_assert!(p.dot(&q).abs() <= 1e-12 * scale * scale);
        prop_assert!((&p + &q - &z).norm() <= 1e-12 * scale);
    }

    #[test]
    fn projector_matches_normal_equations(seed in 0u64..10_000, n in 2usize..25, d in 1usize..25) {
        let d = d.min(n);
        let raw = gaussian_matrix(&mut rng(seed), n, d);
        let v = orthonormalize(&raw).unwrap();
        prop_assert_eq!(v.dim(), d);
        let diff = (v.projector() - reference_projector(&raw)).amax();
        prop_assert!(diff <= 1e-9, "diff {}", diff);
    }

    #[test]
    fn complement_is_orthogonal_and_spans_the_rest(seed in 0u64..10_000, n in 1usize..30, d in 0usize..30) {
        let d = d.min(n);
        let v = random_subspace(seed, n, d);
        let c = v.complement();
        prop_assert_eq!(c.dim(), n - d);
        let cross = (v.basis().transpose() * c.basis()).amax();
        prop_assert!(cross <= 1e-10);
        let sum = v.projector() + c.projector();
        prop_assert!((sum - DenseMatrix::identity(n, n)).amax() <= 1e-10);
    }

    #[test]
    fn spectral_moduli_are_ordered_and_sharp(seed in 0u64..10_000, n in 1usize..20) {
        let mut r = rng(seed);
        let g = gaussian_matrix(&mut r, n, n);
        // shift so the symmetric part is positive definite
        let m = &g + DenseMatrix::identity(n, n) * (2.0 * (n as f64).sqrt() + 1.0);
        let (eta, lip) = spectral_bounds(&m).unwrap();
        prop_assert!(0.0 < eta && eta <= lip);
        for _ in 0..50 {
            let z = gaussian_vector(&mut r, n);
            let z2 = z.norm_squared();
            prop_assert!(z.dot(&(&m * &z)) >= eta * z2 * (1.0 - 1e-10));
            prop_assert!((&m * &z).norm() <= lip * z.norm() * (1.0 + 1e-10));
        }
        // attained by the extreme eigenvector of the symmetric part and the top right singular vector
        let sym = (&m + m.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        let i = eig.eigenvalues.imin();
        let e = eig.eigenvectors.column(i).into_owned();
        assert_relative_eq!(e.dot(&(&m * &e)), eta, max_relative = 1e-9);
        let svd = m.clone().svd(false, true);
        let j = svd.singular_values.imax();
        let top = svd.v_t.unwrap().row(j).transpose();
        assert_relative_eq!((&m * &top).norm(), lip, max_relative = 1e-9);
    }
}

#[test]
fn solve_linear_matches_reference_on_random_systems() {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let n = 1 + (i * 37) % 200;
        let a = gaussian_matrix(&mut r, n, n) + DenseMatrix::identity(n, n) * (n as f64).sqrt();
        let b = gaussian_vector(&mut r, n);
        let x = solve_linear(&a, &b).unwrap();
        let residual = (&a * &x - &b).norm() / (a.norm() * x.norm() + b.norm());
        worst = worst.max(residual);
        if i % 50 == 0 {
            let reference = a.clone().lu().solve(&b).unwrap();
            assert_relative_eq!(x, reference, epsilon = 1e-8 * (1.0 + reference.norm()));
        }
    }
    assert!(worst <= 1e-12, "worst relative residual {worst:e}");
}

#[test]
fn solve_linear_rejects_singular() {
    let a = DenseMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 1.0, 1.0]);
    assert!(matches!(
        solve_linear(&a, &RealVector::zeros(3)),
        Err(spdg::Error::SingularMatrix { .. })
    ));
}

#[test]
fn orthonormalize_rejects_dependent_columns() {
    let a = DenseMatrix::from_row_slice(3, 2, &[1.0, 2.0, 0.0, 0.0, 1.0, 2.0]);
    assert!(matches!(
        orthonormalize(&a),
        Err(spdg::Error::RankDeficient { column: 1, .. })
    ));
}
