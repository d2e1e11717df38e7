mod common;

use aro::UncertaintySet;
use common::{dot, point_in_set, support_by_enumeration};
use proptest::prelude::*;

fn coords(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, p)
}

fn set_strategy(p: usize) -> impl Strategy<Value = UncertaintySet> {
    prop_oneof![
        (0.1..3.0f64).prop_map(|r| UncertaintySet::boxed(r).unwrap()),
        (0.1..3.0f64, 0.1..4.0f64).prop_map(|(r, g)| UncertaintySet::budget(r, g).unwrap()),
        (0.1..3.0f64, 0.1..2.0f64).prop_map(|(r, b)| UncertaintySet::ball_box(r, b).unwrap()),
        (coords(p), prop::collection::vec(0.1..2.0f64, p), prop::collection::vec(-0.5..0.5f64, p * p), 0.1..2.0f64)
            .prop_map(move |(mu, diag, off, rho)| {
                let s = (0..p)
                    .map(|i| (0..p).map(|j| if i == j { diag[i] } else if i > j { off[i * p + j] } else { 0.0 }).collect())
                    .collect();
                UncertaintySet::ellipsoid(mu, s, rho).unwrap()
            }),
        (prop::collection::vec(-2.0..0.5f64, p), prop::collection::vec(0.0..2.0f64, p)).prop_map(|(l, w)| {
            let u = l.iter().zip(&w).map(|(a, b)| a + b).collect();
            UncertaintySet::bounded(l, u).unwrap()
        }),
    ]
}

/// A set of dimension `p`, two directions and a batch of cube points.
fn set_and_vectors() -> impl Strategy<Value = (UncertaintySet, usize, Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    (1usize..=3).prop_flat_map(|p| {
        (
            set_strategy(p),
            Just(p),
            prop::collection::vec(-3.0..3.0f64, p),
            prop::collection::vec(-3.0..3.0f64, p),
            prop::collection::vec(coords(p), 16),
        )
    })
}

proptest! {
    #![proptest_config(common::config(400))]

    #[test]
    fn in_set_points_never_beat_the_support((set, _p, w, _w2, ts) in set_and_vectors()) {
        let sigma = set.support(&w).unwrap();
        for t in &ts {
            for boundary in [false, true] {
                let u = point_in_set(&set, t, boundary);
                prop_assert!(set.contains(&u, 1e-9).unwrap());
                prop_assert!(dot(&w, &u) <= sigma + 1e-9 * (1.0 + sigma.abs()));
            }
        }
    }

    #[test]
    fn support_matches_enumeration((set, _p, w, _w2, _ts) in set_and_vectors()) {
        if let Some(oracle) = support_by_enumeration(&set, &w) {
            let sigma = set.support(&w).unwrap();
            prop_assert!((sigma - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()), "{sigma} vs {oracle}");
        }
    }

    #[test]
    fn ellipsoid_support_is_attained((set, p, w, _w2, _ts) in set_and_vectors()) {
        if let UncertaintySet::Ellipsoid(e) = &set {
            // maximizer mu + rho S Sᵀw / ‖Sᵀw‖
            let s = e.sigma_sqrt();
            let stw: Vec<f64> = (0..p).map(|j| (0..p).map(|i| s[(i, j)] * w[i]).sum()).collect();
            let norm = dot(&stw, &stw).sqrt();
            prop_assume!(norm > 1e-9);
            let u: Vec<f64> = (0..p)
                .map(|i| e.mu()[i] + e.rho() * (0..p).map(|j| s[(i, j)] * stw[j]).sum::<f64>() / norm)
                .collect();
            prop_assert!(set.contains(&u, 1e-9).unwrap());
            let sigma = set.support(&w).unwrap();
            prop_assert!((dot(&w, &u) - sigma).abs() <= 1e-9 * (1.0 + sigma.abs()));
        }
    }

    #[test]
    fn positive_homogeneity_and_subadditivity((set, _p, w, w2, _ts) in set_and_vectors(), alpha in 0.0..5.0f64) {
        let sigma = set.support(&w).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| alpha * x).collect();
        prop_assert!((set.support(&scaled).unwrap() - alpha * sigma).abs() <= 1e-9 * (1.0 + alpha * sigma.abs()));
        let sum: Vec<f64> = w.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let bound = sigma + set.support(&w2).unwrap();
        prop_assert!(set.support(&sum).unwrap() <= bound + 1e-9 * (1.0 + bound.abs()));
    }

    #[test]
    fn loose_budget_is_a_box(rho in 0.1..3.0f64, extra in 0.0..2.0f64, w in prop::collection::vec(-3.0..3.0f64, 1..=4)) {
        let p = w.len() as f64;
        let budget = UncertaintySet::budget(rho, rho * (p + extra)).unwrap();
        let boxed = UncertaintySet::boxed(rho).unwrap();
        let (a, b) = (budget.support(&w).unwrap(), boxed.support(&w).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn loose_ball_box_is_a_box(b in 0.1..2.0f64, w in prop::collection::vec(-3.0..3.0f64, 1..=4)) {
        let p = w.len() as f64;
        let ball_box = UncertaintySet::ball_box(b * p.sqrt() * 1.0001, b).unwrap();
        let boxed = UncertaintySet::boxed(b).unwrap();
        let (x, y) = (ball_box.support(&w).unwrap(), boxed.support(&w).unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y));
    }
}

#[test]
fn semi_bounded_support_is_infinite_only_in_open_directions() {
    let set = UncertaintySet::bounded(vec![-2.0, -2.0], vec![f64::INFINITY, f64::INFINITY]).unwrap();
    assert_eq!(set.support(&[-1.0, -0.5]).unwrap(), 3.0);
    assert_eq!(set.support(&[0.0, -1.0]).unwrap(), 2.0);
    assert_eq!(set.support(&[1e-12, -1.0]).unwrap(), f64::INFINITY);
}
