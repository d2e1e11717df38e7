//! Oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use aro::model::{Hardness, Mask, RobustConstraint, RobustLP};
use aro::UncertaintySet;
use proptest::test_runner::{Config, RngSeed};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Fixed-seed proptest configuration so every run sees the same cases.
pub fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x0a70), failure_persistence: None, ..Config::default() }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All sign patterns of length `p`.
pub fn sign_patterns(p: usize) -> impl Iterator<Item = Vec<f64>> {
    (0u32..1 << p).map(move |bits| (0..p).map(|k| if bits >> k & 1 == 1 { 1.0 } else { -1.0 }).collect())
}

/// Maximum of `wᵀu` over candidate points that satisfy the set's membership
/// test. Candidates are supersets of the vertex (or KKT point) families of
/// each polyhedral or ball-box geometry, so the result is exact. `None` for
/// ellipsoids and unbounded supports.
pub fn support_by_enumeration(set: &UncertaintySet, w: &[f64]) -> Option<f64> {
    let p = w.len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    match set {
        UncertaintySet::Box { rho } => {
            candidates.extend(sign_patterns(p).map(|s| s.iter().map(|x| x * rho).collect()));
        }
        UncertaintySet::BoundedSupport(b) => {
            if !b.is_bounded() {
                return None;
            }
            candidates.extend(sign_patterns(p).map(|s| {
                (0..p).map(|k| if s[k] > 0.0 { b.upper()[k] } else { b.lower()[k] }).collect()
            }));
        }
        UncertaintySet::Budget { rho, gamma } => {
            // In each orthant every vertex has at most one coordinate off {0, ρ}.
            for signs in sign_patterns(p) {
                for levels in 0u32..1 << p {
                    for frac in 0..=p {
                        let mut v: Vec<f64> = (0..p).map(|k| if levels >> k & 1 == 1 { *rho } else { 0.0 }).collect();
                        if frac < p {
                            v[frac] = 0.0;
                            let rest: f64 = v.iter().sum();
                            v[frac] = (gamma - rest).clamp(0.0, *rho);
                        }
                        candidates.push(v.iter().zip(&signs).map(|(a, s)| a * s).collect());
                    }
                }
            }
        }
        UncertaintySet::BallBox { rho, box_bound } => {
            // Clip a subset of coordinates at ±b, spread the remaining radius
            // along the unclipped part of w.
            for clipped in 0u32..1 << p {
                let mut u = vec![0.0; p];
                let mut used = 0.0;
                for k in 0..p {
                    if clipped >> k & 1 == 1 {
                        u[k] = box_bound * if w[k] < 0.0 { -1.0 } else { 1.0 };
                        used += box_bound * box_bound;
                    }
                }
                let rest_sq = rho * rho - used;
                if rest_sq < 0.0 {
                    continue;
                }
                let free_norm: f64 =
                    (0..p).filter(|k| clipped >> k & 1 == 0).map(|k| w[k] * w[k]).sum::<f64>().sqrt();
                if free_norm > 0.0 {
                    let r = rest_sq.sqrt();
                    for k in 0..p {
                        if clipped >> k & 1 == 0 {
                            u[k] = r * w[k] / free_norm;
                        }
                    }
                }
                candidates.push(u);
            }
        }
        UncertaintySet::Ellipsoid(_) => return None,
    }
    candidates
        .iter()
        .filter(|u| set.contains(u, 1e-9).unwrap())
        .map(|u| dot(w, u))
        .max_by(f64::total_cmp)
}

/// Worst case the counterpart charges for direction `w`: the support function,
/// except for ball-box sets, whose counterpart keeps only the ball `ρ‖w‖₂`.
pub fn counterpart_support(set: &UncertaintySet, w: &[f64]) -> f64 {
    match set {
        UncertaintySet::BallBox { rho, .. } => rho * dot(w, w).sqrt(),
        _ => set.support(w).unwrap(),
    }
}

/// Maps `t ∈ [−1, 1]^p` into the set; with `boundary`, onto its boundary.
pub fn point_in_set(set: &UncertaintySet, t: &[f64], boundary: bool) -> Vec<f64> {
    let sign = |x: f64| if x < 0.0 { -1.0 } else { 1.0 };
    match set {
        UncertaintySet::Box { rho } => t.iter().map(|&x| rho * if boundary { sign(x) } else { x }).collect(),
        UncertaintySet::BoundedSupport(b) => t
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let s = if boundary { sign(x) } else { x };
                b.lower()[k] + (b.upper()[k] - b.lower()[k]) * (s + 1.0) / 2.0
            })
            .collect(),
        UncertaintySet::Budget { rho, gamma } => {
            let mut u: Vec<f64> = t.iter().map(|&x| rho * if boundary { sign(x) } else { x }).collect();
            let l1: f64 = u.iter().map(|x| x.abs()).sum();
            if l1 > *gamma {
                u.iter_mut().for_each(|x| *x *= gamma / l1);
            }
            u
        }
        UncertaintySet::BallBox { rho, box_bound } => {
            let norm = dot(t, t).sqrt();
            let scale = if boundary && norm > 0.0 { rho / norm } else { box_bound.min(rho / norm) };
            t.iter().map(|&x| (x * scale).clamp(-box_bound, *box_bound)).collect()
        }
        UncertaintySet::Ellipsoid(e) => {
            let norm = dot(t, t).sqrt();
            let scale = if boundary && norm > 0.0 { 1.0 / norm } else { 1.0 / norm.max(1.0) };
            let s = e.sigma_sqrt();
            (0..t.len())
                .map(|i| e.mu()[i] + e.rho() * scale * (0..t.len()).map(|j| s[(i, j)] * t[j]).sum::<f64>())
                .collect()
        }
    }
}

pub fn random_point_in_set(set: &UncertaintySet, p: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let t: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let boundary = rng.gen_bool(0.5);
    point_in_set(set, &t, boundary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Box,
    Budget,
    BallBox,
    Ellipsoid,
    Bounded,
}

pub const GEOMETRIES: [Geometry; 5] =
    [Geometry::Box, Geometry::Budget, Geometry::BallBox, Geometry::Ellipsoid, Geometry::Bounded];

pub fn random_set(geometry: Geometry, p: usize, rng: &mut ChaCha8Rng) -> UncertaintySet {
    match geometry {
        Geometry::Box => UncertaintySet::boxed(rng.gen_range(0.2..2.0)).unwrap(),
        Geometry::Budget => {
            let rho = rng.gen_range(0.2..2.0);
            UncertaintySet::budget(rho, rho * rng.gen_range(0.5..p as f64 + 0.5)).unwrap()
        }
        Geometry::BallBox => UncertaintySet::ball_box(rng.gen_range(0.3..2.0), rng.gen_range(0.2..1.5)).unwrap(),
        Geometry::Ellipsoid => {
            let mu = (0..p).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let s = (0..p)
                .map(|i| {
                    (0..p)
                        .map(|j| match i.cmp(&j) {
                            std::cmp::Ordering::Equal => rng.gen_range(0.3..1.5),
                            std::cmp::Ordering::Greater => rng.gen_range(-0.5..0.5),
                            std::cmp::Ordering::Less => 0.0,
                        })
                        .collect()
                })
                .collect();
            UncertaintySet::ellipsoid(mu, s, rng.gen_range(0.3..2.0)).unwrap()
        }
        Geometry::Bounded => {
            let lower = (0..p).map(|_| -rng.gen_range(0.1..2.0)).collect();
            let upper = (0..p).map(|_| rng.gen_range(0.1..2.0)).collect();
            UncertaintySet::bounded(lower, upper).unwrap()
        }
    }
}

/// Random feasible and bounded problem: positive costs, every variable
/// non-negative and covered by a positive row coefficient, and right-hand
/// sides large enough for the zero policy to be robustly feasible.
pub fn random_problem(geometry: Geometry, rng: &mut ChaCha8Rng) -> (RobustLP, Mask) {
    let n = rng.gen_range(2..=5);
    let p = rng.gen_range(1..=3);
    let m = rng.gen_range(1..=4);
    let set = random_set(geometry, p, rng);
    let mut constraints = Vec::with_capacity(m);
    for i in 0..m {
        let a: Vec<f64> = (0..n)
            .map(|j| if j % m == i || rng.gen_bool(0.5) { rng.gen_range(0.2..2.0) } else { 0.0 })
            .collect();
        let d: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let neg_d: Vec<f64> = d.iter().map(|x| -x).collect();
        let b = counterpart_support(&set, &neg_d) + rng.gen_range(0.5..3.0);
        let hardness = if rng.gen_bool(0.5) { Hardness::Hard } else { Hardness::Soft };
        constraints.push(RobustConstraint { a, b, d, set_id: "U".into(), hardness, label: format!("row{i}") });
    }
    let objective = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let sets = BTreeMap::from([("U".to_string(), set)]);
    let lp = RobustLP::new(objective, constraints, p, sets, "U", (0..n).collect()).unwrap();
    let mut mask = Mask::fixed(n, p);
    for j in 0..n {
        for k in 0..p {
            mask.set(j, k, rng.gen_bool(0.5));
        }
    }
    (lp, mask)
}

/// Every robust row of the problem, with the set it is enforced over.
pub fn all_rows(lp: &RobustLP) -> Vec<(RobustConstraint, UncertaintySet)> {
    lp.constraints()
        .iter()
        .cloned()
        .chain(lp.nonneg_vars().iter().map(|&j| lp.nonneg_constraint(j)))
        .map(|row| {
            let set = lp.resolve(&row.set_id).unwrap().clone();
            (row, set)
        })
        .collect()
}

/// Root of a monotone increasing function on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
