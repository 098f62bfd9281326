use proptest::prelude::*;
use spdg::harness::{generate_problem, GeneratorParams, ProblemSpec};
use spdg::operators::Operator;
use spdg::partial_inverse::PartialInverseOperator;
use spdg::sampling::{gaussian_vector, rng};

fn spec(seed: u64, n: usize, d: usize, cond: f64, skew: f64) -> ProblemSpec {
    let params = GeneratorParams::new(n, d.min(n), 1.0, cond)
        .unwrap()
        .with_skew(skew)
        .unwrap();
    generate_problem(&params, seed).unwrap()
}

fn partial_inverse(s: &ProblemSpec) -> PartialInverseOperator {
    PartialInverseOperator::new(s.operator().unwrap(), s.subspace().unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evaluated_pairs_lie_on_the_graph(seed in 0u64..10_000, n in 2usize..30, d in 0usize..30, cond in 1.0f64..50.0, skew in 0.0f64..0.9) {
        let s = spec(seed, n, d, cond, skew);
        let pi = partial_inverse(&s);
        let z = gaussian_vector(&mut rng(seed), n);
        let v = pi.eval_affine(&z).unwrap();
        let gap = pi.membership_residual(&z, &v).unwrap();
        prop_assert!(gap <= 1e-9 * (1.0 + z.norm() + v.norm()), "gap {}", gap);
    }

    #[test]
    fn partial_inverse_is_an_involution(seed in 0u64..10_000, n in 2usize..20, d in 0usize..20, cond in 1.0f64..20.0) {
        let s = spec(seed, n, d, cond, 0.2);
        let t_v = partial_inverse(&s).to_affine().unwrap();
        let back = PartialInverseOperator::new(Operator::Affine(t_v), s.subspace().unwrap())
            .unwrap()
            .to_affine()
            .unwrap();
        let scale = 1.0 + s.matrix.amax();
        prop_assert!((back.matrix() - &s.matrix).amax() <= 1e-9 * scale);
        prop_assert!((back.offset() - &s.offset).amax() <= 1e-9 * scale);
    }

    #[test]
    fn resolvent_of_partial_inverse_is_firmly_nonexpansive(seed in 0u64..10_000, n in 2usize..25, lambda in 0.05f64..20.0) {
        let s = spec(seed, n, n / 3, 30.0, 0.5);
        let pi = partial_inverse(&s);
        let mut r = rng(seed + 9);
        let (w, wp) = (gaussian_vector(&mut r, n), gaussian_vector(&mut r, n));
        let dz = pi.resolvent_direct(lambda, &w).unwrap() - pi.resolvent_direct(lambda, &wp).unwrap();
        prop_assert!(dz.norm_squared() <= dz.dot(&(&w - &wp)) + 1e-12 * (&w - &wp).norm_squared());
    }
}

#[test]
fn direct_and_graph_step_resolvents_agree() {
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 7) % 60;
        let s = spec(
            seed,
            n,
            (seed as usize) % (n + 1),
            1.0 + (seed % 13) as f64 * 7.0,
            0.3,
        );
        let pi = partial_inverse(&s);
        let w = gaussian_vector(&mut rng(seed + 1000), n);
        let a = pi.resolvent_direct(1.0, &w).unwrap();
        let b = pi.resolvent_via_graph_step(&w).unwrap();
        worst = worst.max((a - b).norm() / (1.0 + w.norm()));
    }
    assert!(worst <= 1e-10, "worst disagreement {worst:e}");
}

#[test]
fn strong_monotonicity_holds_on_all_seeds() {
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 11) % 40;
        let s = spec(
            seed,
            n,
            (seed as usize * 3) % (n + 1),
            1.0 + (seed % 10) as f64 * 10.0,
            0.5,
        );
        let report = partial_inverse(&s)
            .check_strong_monotonicity(1000, seed)
            .unwrap();
        assert!(
            report.worst_ratio >= report.mu - 1e-9,
            "seed {seed}: {report:?}"
        );
    }
}
