use proptest::prelude::*;
use spdg::harness::{generate_problem, GeneratorParams, ProblemSpec};
use spdg::partial_inverse::PartialInverseOperator;
use spdg::solvers::{check_pp_equivalence, pp_solve, spdg_solve, SpdgConfig};

fn spec(seed: u64, n: usize, d: usize, cond: f64, skew: f64) -> ProblemSpec {
    let params = GeneratorParams::new(n, d.min(n), 1.0, cond)
        .unwrap()
        .with_skew(skew)
        .unwrap();
    generate_problem(&params, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn iterates_stay_feasible_consistent_and_fejer(seed in 0u64..10_000, n in 2usize..30, d in 0usize..30, cond in 1.0f64..40.0, gmul in 0.2f64..5.0, skew in 0.0f64..0.8) {
        let s = spec(seed, n, d, cond, skew);
        let problem = s.problem_with_solution().unwrap();
        let sol = problem.solution().unwrap().clone();
        let v = problem.subspace();
        let op = problem.operator();
        let gamma = gmul / s.lipschitz;
        let trace = spdg_solve(&problem, &SpdgConfig::new(gamma).unwrap().with_rho(0.0).unwrap().with_max_iters(40).unwrap()).unwrap();
        let dist = |x: &spdg::RealVector, y: &spdg::RealVector| {
            (&sol.x - x).norm_squared() + gamma * gamma * (&sol.u - y).norm_squared()
        };
        let mut prev = dist(&trace.x0, &trace.y0);
        for rec in &trace.records {
            let it = rec.vectors.as_ref().unwrap();
            let scale = 1.0 + it.x.norm() + it.y.norm();
            prop_assert!(v.complement_project(&it.x).unwrap().norm() <= 1e-12 * scale);
            prop_assert!(v.project(&it.y).unwrap().norm() <= 1e-12 * scale);
            // u_k = T(x̃_k)
            let gap = (&it.u - op.eval(&it.x_tilde).unwrap()).norm();
            prop_assert!(gap <= 1e-8 * (1.0 + it.u.norm()), "gap {}", gap);
            let now = dist(&it.x, &it.y);
            prop_assert!(now <= prev * (1.0 + 1e-12) + 1e-28);
            prev = now;
        }
    }
}

#[test]
fn spdg_is_proximal_point_on_the_partial_inverse() {
    let (mut worst_a, mut worst_b): (f64, f64) = (0.0, 0.0);
    for seed in 0..100u64 {
        let n = 2 + (seed as usize * 13) % 99;
        let s = spec(
            seed,
            n,
            (seed as usize * 5) % (n + 1),
            1.0 + (seed % 20) as f64 * 5.0,
            0.25,
        );
        let problem = s.problem().unwrap();
        let gamma = (0.5 + (seed % 4) as f64 * 0.5) / s.lipschitz;
        let cfg = SpdgConfig::new(gamma)
            .unwrap()
            .with_rho(0.0)
            .unwrap()
            .with_max_iters(50)
            .unwrap();
        let trace = spdg_solve(&problem, &cfg).unwrap();
        let report = check_pp_equivalence(&problem, gamma, &trace).unwrap();
        worst_a = worst_a.max(report.max_resolvent_error);
        worst_b = worst_b.max(report.max_displacement_error);
    }
    assert!(
        worst_a <= 1e-8 && worst_b <= 1e-10,
        "{worst_a:e} {worst_b:e}"
    );
}

#[test]
fn unit_gamma_spdg_matches_proximal_point_on_partial_inverse() {
    for seed in 0..20u64 {
        let n = 4 + (seed as usize * 3) % 40;
        let s = spec(seed, n, n / 2, 1.0 + seed as f64, 0.0);
        let problem = s.problem().unwrap();
        let cfg = SpdgConfig::new(1.0)
            .unwrap()
            .with_rho(0.0)
            .unwrap()
            .with_max_iters(50)
            .unwrap();
        let trace = spdg_solve(&problem, &cfg).unwrap();
        let pi =
            PartialInverseOperator::new(problem.operator().clone(), problem.subspace().clone())
                .unwrap();
        let pp = pp_solve(&pi, &trace.x0, 1.0, 50, 0.0).unwrap();
        // pp may stop early on an exactly stationary step
        for (k, (rec, zp)) in trace.records.iter().zip(&pp.iterates[1..]).enumerate() {
            let z = &rec.vectors.as_ref().unwrap().z;
            let err = (z - zp).norm();
            assert!(
                err <= 1e-10 * (1.0 + z.norm()),
                "seed {seed} k {}: {err:e}",
                k + 1
            );
        }
    }
}
