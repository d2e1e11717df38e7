mod common;

use aro::guarantees::{
    default_eps_grid, normal_quantile, regularization_path, size_for, violation_bound, Flavor, GuaranteeSpec,
};
use common::bisect;
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn oracle_quantile(q: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    bisect(|x| n.cdf(x) - q, -40.0, 40.0)
}

#[test]
fn quantile_matches_bisection_on_reference_levels() {
    for q in [0.9, 0.95, 0.975, 0.99, 0.999] {
        let (ours, oracle) = (normal_quantile(q).unwrap(), oracle_quantile(q));
        assert!((ours - oracle).abs() <= 1e-9, "q={q}: {ours} vs {oracle}");
    }
}

#[test]
fn quantile_tails_match_bisection() {
    for q in [1e-12, 1e-8, 1e-4, 0.02425, 0.3, 0.5, 0.7, 0.97575, 1.0 - 1e-6] {
        let (ours, oracle) = (normal_quantile(q).unwrap(), oracle_quantile(q));
        assert!((ours - oracle).abs() <= 1e-7 * (1.0 + oracle.abs()), "q={q}: {ours} vs {oracle}");
    }
}

fn spec(eps: f64, flavor: Flavor, p: usize) -> GuaranteeSpec {
    GuaranteeSpec::new(eps, flavor).unwrap().with_dimension(p).unwrap()
}

proptest! {
    #![proptest_config(common::config(500))]

    #[test]
    fn bound_inverts_size(eps in 1e-6..0.5f64, p in 1usize..=20) {
        for flavor in [Flavor::GaussianEllipsoid, Flavor::BallBoxDistFree, Flavor::BudgetDistFree] {
            let size = size_for(&spec(eps, flavor, p)).unwrap();
            let back = violation_bound(flavor, size, p).unwrap();
            prop_assert!((back - eps).abs() <= 1e-9 * eps.max(1e-3), "{flavor:?}: {back} vs {eps}");
        }
    }

    #[test]
    fn sizes_grow_as_eps_shrinks(e1 in 1e-6..0.5f64, e2 in 1e-6..0.5f64, p in 1usize..=10) {
        prop_assume!(e1 < e2);
        for flavor in [Flavor::GaussianEllipsoid, Flavor::BallBoxDistFree, Flavor::BudgetDistFree] {
            prop_assert!(size_for(&spec(e1, flavor, p)).unwrap() > size_for(&spec(e2, flavor, p)).unwrap());
        }
    }
}

#[test]
fn path_is_monotone_and_gaussian_dominates() {
    let rows = regularization_path(
        &[Flavor::GaussianEllipsoid, Flavor::BallBoxDistFree],
        &default_eps_grid(),
        1.0,
        0,
    )
    .unwrap();
    for flavor in [Flavor::GaussianEllipsoid, Flavor::BallBoxDistFree] {
        let curve: Vec<_> = rows.iter().filter(|r| r.flavor == flavor).collect();
        for pair in curve.windows(2) {
            assert!(pair[1].one_minus_eps > pair[0].one_minus_eps);
            assert!(pair[1].max_adaptivity < pair[0].max_adaptivity, "{flavor:?}");
        }
    }
    for pair in rows.chunks(2) {
        assert!(pair[0].max_adaptivity >= pair[1].max_adaptivity);
    }
    // 1/√(2 ln 20)
    let at95 = rows.iter().find(|r| r.flavor == Flavor::BallBoxDistFree && (r.one_minus_eps - 0.95).abs() < 1e-12);
    let expected = 1.0 / (2.0 * 20f64.ln()).sqrt();
    assert!((at95.unwrap().max_adaptivity - expected).abs() <= 1e-12);
    assert!((expected - 0.408540).abs() <= 1e-5);
}

#[test]
fn path_vanishes_as_eps_shrinks() {
    let at = |flavor, eps| regularization_path(&[flavor], &[eps], 1.0, 0).unwrap()[0].max_adaptivity;
    assert!(at(Flavor::BallBoxDistFree, 1e-8) < 0.17);
    // the Gaussian curve sits above: 1/Φ⁻¹(1 − 1e−8) ≈ 0.178
    assert!(at(Flavor::GaussianEllipsoid, 1e-8) > 0.17);
    assert!(at(Flavor::GaussianEllipsoid, 1e-10) < 0.17);
    assert!(at(Flavor::GaussianEllipsoid, 1e-300) < 0.03);
}
