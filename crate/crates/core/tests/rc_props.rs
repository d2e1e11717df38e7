mod common;

use aro::model::{evaluate_policy, AffinePolicy, Hardness, Mask, RobustConstraint};
use aro::rc::{counterpart_slack, reformulate};
use aro::solve::{solve, SolverOptions, Status};
use aro::{Error, UncertaintySet};
use common::{all_rows, counterpart_support, dot, random_point_in_set, random_problem, sign_patterns, GEOMETRIES};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn solved_policies_hold_on_their_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for round in 0..10 {
        let geometry = GEOMETRIES[round % GEOMETRIES.len()];
        let (lp, mask) = random_problem(geometry, &mut rng);
        let sol = solve(&reformulate(&lp, &mask).unwrap(), &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal, "{geometry:?}");
        let policy = sol.policy.unwrap();
        for (row, set) in all_rows(&lp) {
            for _ in 0..1000 {
                let u = random_point_in_set(&set, lp.p(), &mut rng);
                let x = evaluate_policy(&policy, &u).unwrap();
                assert!(row.excess(&x, &u) <= 1e-6, "{geometry:?} {}", row.label);
            }
        }
    }
}

#[test]
fn larger_sets_never_improve_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for round in 0..10 {
        let geometry = GEOMETRIES[round % GEOMETRIES.len()];
        let (lp, mask) = random_problem(geometry, &mut rng);
        let value = |scale: f64| {
            let sets = lp
                .sets()
                .iter()
                .map(|(id, s)| {
                    let scaled = match s {
                        UncertaintySet::Box { rho } => UncertaintySet::boxed(rho * scale),
                        UncertaintySet::Budget { rho, gamma } => UncertaintySet::budget(rho * scale, gamma * scale),
                        UncertaintySet::BallBox { rho, box_bound } => UncertaintySet::ball_box(rho * scale, box_bound * scale),
                        UncertaintySet::Ellipsoid(e) => {
                            let s = e.sigma_sqrt();
                            let rows = (0..s.nrows()).map(|i| s.row(i).iter().copied().collect()).collect();
                            UncertaintySet::ellipsoid(e.mu().to_vec(), rows, e.rho() * scale)
                        }
                        UncertaintySet::BoundedSupport(b) => UncertaintySet::bounded(
                            b.lower().iter().map(|x| x * scale).collect(),
                            b.upper().iter().map(|x| x * scale).collect(),
                        ),
                    };
                    (id.clone(), scaled.unwrap())
                })
                .collect();
            let bigger = aro::RobustLP::new(
                lp.objective().to_vec(),
                lp.constraints().to_vec(),
                lp.p(),
                sets,
                lp.objective_set_id(),
                lp.nonneg_vars().to_vec(),
            )
            .unwrap();
            let sol = solve(&reformulate(&bigger, &mask).unwrap(), &SolverOptions::default());
            (sol.status, sol.objective_value)
        };
        let (s1, v1) = value(1.0);
        let (s2, v2) = value(1.5);
        if s2 == Status::Infeasible {
            continue;
        }
        assert_eq!((s1, s2), (Status::Optimal, Status::Optimal));
        assert!(v2 <= v1 + 1e-6, "{geometry:?}: {v2} > {v1}");
    }
}

#[test]
fn adaptivity_weakly_dominates_static() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for round in 0..15 {
        let geometry = GEOMETRIES[round % GEOMETRIES.len()];
        let (lp, mask) = random_problem(geometry, &mut rng);
        let opts = SolverOptions::default();
        let adaptive = solve(&reformulate(&lp, &mask).unwrap(), &opts);
        let fixed = solve(&reformulate(&lp, &Mask::fixed(lp.n(), lp.p())).unwrap(), &opts);
        assert_eq!(adaptive.status, Status::Optimal);
        assert_eq!(fixed.status, Status::Optimal);
        assert!(adaptive.objective_value >= fixed.objective_value - 1e-6, "{geometry:?}");
    }
}

/// Worst case over the finite endpoints of each coordinate.
fn vertex_sweep(con: &RobustConstraint, policy: &AffinePolicy, lower: &[f64], upper: &[f64]) -> f64 {
    let p = lower.len();
    sign_patterns(p)
        .map(|s| {
            let u: Vec<f64> = (0..p)
                .map(|k| {
                    let pick = if s[k] > 0.0 { upper[k] } else { lower[k] };
                    if pick.is_finite() { pick } else if s[k] > 0.0 { lower[k] } else { upper[k] }
                })
                .collect();
            con.excess(&evaluate_policy(policy, &u).unwrap(), &u)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn policy_strategy(n: usize, p: usize) -> impl Strategy<Value = AffinePolicy> {
    (prop::collection::vec(-2.0..2.0f64, n), prop::collection::vec(prop::collection::vec(-2.0..2.0f64, p), n))
        .prop_map(move |(z, v)| AffinePolicy::new(z, v, Mask::full(n, p)).unwrap())
}

proptest! {
    #![proptest_config(common::config(64))]

    #[test]
    fn bounded_support_slack_matches_vertices(
        (con, policy, lower, upper) in (1usize..=4, 1usize..=5).prop_flat_map(|(n, p)| (
            (prop::collection::vec(-2.0..2.0f64, n), -2.0..2.0f64, prop::collection::vec(-2.0..2.0f64, p))
                .prop_map(|(a, b, d)| RobustConstraint { a, b, d, set_id: "S".into(), hardness: Hardness::Hard, label: "row".into() }),
            policy_strategy(n, p),
            prop::collection::vec(-3.0..0.0f64, p),
            prop::collection::vec(0.0..3.0f64, p),
        ))
    ) {
        let set = UncertaintySet::bounded(lower.clone(), upper.clone()).unwrap();
        let slack = counterpart_slack(&con, &set, &policy, &SolverOptions::default()).unwrap();
        let brute = vertex_sweep(&con, &policy, &lower, &upper);
        prop_assert!((slack - brute).abs() <= 1e-7 * (1.0 + brute.abs()), "{slack} vs {brute}");
    }

    #[test]
    fn evaluate_policy_is_affine(
        (policy, u1, u2) in (1usize..=5, 1usize..=4).prop_flat_map(|(n, p)| (
            policy_strategy(n, p),
            prop::collection::vec(-3.0..3.0f64, p),
            prop::collection::vec(-3.0..3.0f64, p),
        )),
        lambda in -2.0..3.0f64,
    ) {
        let mix: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let x1 = evaluate_policy(&policy, &u1).unwrap();
        let x2 = evaluate_policy(&policy, &u2).unwrap();
        let xm = evaluate_policy(&policy, &mix).unwrap();
        for j in 0..policy.n() {
            let expected = lambda * x1[j] + (1.0 - lambda) * x2[j];
            prop_assert!((xm[j] - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        }
        let zero = evaluate_policy(&policy, &vec![0.0; policy.p()]).unwrap();
        prop_assert_eq!(zero, policy.z().to_vec());
    }
}

#[test]
fn semi_bounded_support_accepts_sign_feasible_coefficients() {
    // u ≥ −2 with no upper bound: the row is finite iff w = Vᵀa − d ≤ 0.
    let set = UncertaintySet::bounded(vec![-2.0, -2.0], vec![f64::INFINITY; 2]).unwrap();
    let con = RobustConstraint {
        a: vec![-1.0],
        b: 0.0,
        d: vec![0.0, 0.0],
        set_id: "S".into(),
        hardness: Hardness::Hard,
        label: "nonneg".into(),
    };
    let opts = SolverOptions::default();
    // x = 1 + u1/2 ≥ 0 on u1 ≥ −2: w = (−1/2, 0), worst case −1 + 1 = 0
    let ok = AffinePolicy::new(vec![1.0], vec![vec![0.5, 0.0]], Mask::full(1, 2)).unwrap();
    let slack = counterpart_slack(&con, &set, &ok, &opts).unwrap();
    assert!(slack.abs() < 1e-12);
    assert_eq!(slack, vertex_sweep(&con, &ok, &[-2.0, -2.0], &[f64::INFINITY; 2]));
    // x = 1 − u2 fails as u2 → ∞
    let bad = AffinePolicy::new(vec![1.0], vec![vec![0.0, -1.0]], Mask::full(1, 2)).unwrap();
    assert!(matches!(counterpart_slack(&con, &set, &bad, &opts), Err(Error::UnboundedCounterpart { .. })));
}

#[test]
fn sampled_excess_never_exceeds_the_counterpart_slack() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for round in 0..10 {
        let geometry = GEOMETRIES[round % GEOMETRIES.len()];
        let (lp, mask) = random_problem(geometry, &mut rng);
        let sol = solve(&reformulate(&lp, &mask).unwrap(), &SolverOptions::default());
        let policy = sol.policy.unwrap();
        for (row, set) in all_rows(&lp) {
            let slack = counterpart_slack(&row, &set, &policy, &SolverOptions::default()).unwrap();
            for _ in 0..200 {
                let u = random_point_in_set(&set, lp.p(), &mut rng);
                let x = evaluate_policy(&policy, &u).unwrap();
                assert!(row.excess(&x, &u) <= slack + 1e-6);
            }
            // closed-form worst case from the support function
            let w: Vec<f64> = (0..lp.p())
                .map(|k| (0..lp.n()).map(|j| policy.v()[j][k] * row.a[j]).sum::<f64>() - row.d[k])
                .collect();
            let closed = dot(&row.a, policy.z()) - row.b + counterpart_support(&set, &w);
            assert!((closed - slack).abs() <= 1e-6 * (1.0 + closed.abs()), "{geometry:?}: {closed} vs {slack}");
        }
    }
}

