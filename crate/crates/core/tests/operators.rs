use std::sync::Arc;

use proptest::prelude::*;
use spdg::harness::{generate_problem, GeneratorParams};
use spdg::linalg::{DenseMatrix, RealVector};
use spdg::operators::{AffineOperator, BlackBoxOperator, Operator};
use spdg::sampling::{gaussian_vector, rng};

fn generated(seed: u64, n: usize, cond: f64, skew: f64) -> Operator {
    let params = GeneratorParams::new(n, n / 2, 1.0, cond)
        .unwrap()
        .with_skew(skew)
        .unwrap();
    generate_problem(&params, seed).unwrap().operator().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resolvent_is_firmly_nonexpansive(seed in 0u64..10_000, n in 2usize..30, cond in 1.0f64..50.0, gamma in 0.01f64..10.0, skew in 0.0f64..0.9) {
        let op = generated(seed, n, cond, skew);
        let mut r = rng(seed + 1);
        let (w, wp) = (gaussian_vector(&mut r, n), gaussian_vector(&mut r, n));
        let (z, zp) = (op.resolvent(gamma, &w).unwrap(), op.resolvent(gamma, &wp).unwrap());
        let dz = &z - &zp;
        let lhs = dz.norm_squared();
        let rhs = dz.dot(&(&w - &wp));
        prop_assert!(lhs <= rhs + 1e-12 * (&w - &wp).norm_squared());
    }

    #[test]
    fn resolvent_output_lies_on_the_graph(seed in 0u64..10_000, n in 2usize..30, cond in 1.0f64..50.0, gamma in 0.01f64..10.0) {
        let op = generated(seed, n, cond, 0.3);
        let w = gaussian_vector(&mut rng(seed + 2), n);
        let z = op.resolvent(gamma, &w).unwrap();
        let gap = (&w - &z - op.eval(&z).unwrap() * gamma).norm();
        prop_assert!(gap <= 1e-10 * (1.0 + w.norm()), "gap {}", gap);
    }

    #[test]
    fn scaled_resolvent_matches_rescaled_step(seed in 0u64..10_000, n in 2usize..20, gamma in 0.05f64..5.0, lambda in 0.05f64..5.0) {
        let op = generated(seed, n, 10.0, 0.0);
        let w = gaussian_vector(&mut rng(seed + 3), n);
        let a = op.scale(gamma).unwrap().resolvent(lambda, &w).unwrap();
        let b = op.resolvent(lambda * gamma, &w).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + w.norm()));
    }

    #[test]
    fn generated_operators_satisfy_their_moduli(seed in 0u64..10_000, n in 2usize..40, cond in 1.0f64..100.0, skew in 0.0f64..0.9) {
        let op = generated(seed, n, cond, skew);
        let report = op.certify_moduli(200, seed).unwrap();
        prop_assert_eq!(report.samples, 200);
    }
}

#[test]
fn black_box_resolvent_round_trips_through_scale() {
    // T(z) = 3z + 1 componentwise
    let eval = Arc::new(|z: &RealVector| z * 3.0 + RealVector::repeat(z.len(), 1.0));
    let res =
        Arc::new(|g: f64, w: &RealVector| (w - RealVector::repeat(w.len(), g)) / (1.0 + 3.0 * g));
    let bb: Operator = BlackBoxOperator::new(4, eval, res, 3.0, 3.0)
        .unwrap()
        .into();
    let affine: Operator = AffineOperator::new(
        DenseMatrix::identity(4, 4) * 3.0,
        RealVector::repeat(4, 1.0),
    )
    .unwrap()
    .into();
    let w = RealVector::from_row_slice(&[1.0, -2.0, 0.5, 4.0]);
    for gamma in [0.1, 1.0, 7.0] {
        let a = bb.resolvent(gamma, &w).unwrap();
        let b = affine.resolvent(gamma, &w).unwrap();
        assert!((a - b).norm() < 1e-14);
        let scaled = bb.scale(gamma).unwrap();
        assert!((scaled.eval(&w).unwrap() - affine.eval(&w).unwrap() * gamma).norm() < 1e-13);
        assert_eq!(scaled.eta(), 3.0 * gamma);
    }
    bb.certify_moduli(100, 1).unwrap();
}

#[test]
fn overstated_modulus_is_caught() {
    let m = DenseMatrix::from_diagonal(&RealVector::from_row_slice(&[1.0, 4.0]));
    let op: Operator = AffineOperator::declared(m, RealVector::zeros(2), 2.0, 4.0)
        .unwrap()
        .into();
    assert!(matches!(
        op.certify_moduli(500, 0),
        Err(spdg::Error::ModulusViolated {
            which: spdg::Modulus::StrongMonotonicity,
            ..
        })
    ));
}
