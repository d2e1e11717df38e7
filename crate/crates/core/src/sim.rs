//! Monte Carlo evaluation of affine policies beyond their uncertainty sets.
//!
//! Samples are drawn from independent per-coordinate distributions whose
//! support may be wider than any modeled set. Every sample `j` is generated
//! from its own ChaCha stream keyed by `(seed, j)`, and statistics are reduced
//! after an ordered gather, so reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::guarantees::{normal_cdf, normal_quantile, normal_sf};
use crate::model::{AffinePolicy, Hardness, RobustConstraint, RobustLP};
use crate::usets::BoundedSupport;

/// Excess above which a sample counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;
/// Membership slack for out-of-set fractions.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordDist {
    Uniform { lower: f64, upper: f64 },
    /// Normal(mean, sd) conditioned on `[lower, upper]`; bounds may be infinite.
    TruncNormal { mean: f64, sd: f64, lower: f64, upper: f64 },
    /// `lower + Exp(rate)`
    ShiftedExp { rate: f64, lower: f64 },
}

impl CoordDist {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Uniform { lower, upper } => lower.is_finite() && upper.is_finite() && lower <= upper,
            Self::TruncNormal { mean, sd, lower, upper } => {
                mean.is_finite()
                    && sd.is_finite()
                    && sd > 0.0
                    && lower < upper
                    && lower < f64::INFINITY
                    && upper > f64::NEG_INFINITY
            }
            Self::ShiftedExp { rate, lower } => rate.is_finite() && rate > 0.0 && lower.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSampler(format!("bad parameters: {self:?}")))
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lower, upper } | Self::TruncNormal { lower, upper, .. } => (lower, upper),
            Self::ShiftedExp { lower, .. } => (lower, f64::INFINITY),
        }
    }

    /// Inverse-CDF draw from `v ∈ (0, 1)`.
    fn draw(&self, v: f64) -> f64 {
        match *self {
            Self::Uniform { lower, upper } => lower + v * (upper - lower),
            Self::ShiftedExp { rate, lower } => lower - v.ln() / rate,
            Self::TruncNormal { mean, sd, lower, upper } => {
                let (a, b) = ((lower - mean) / sd, (upper - mean) / sd);
                let x = if a > 0.0 {
                    // both bounds in the upper tail: work with survival values
                    let (sa, sb) = (normal_sf(a), normal_sf(b));
                    -normal_quantile(sa - v * (sa - sb)).unwrap_or(a)
                } else {
                    let (ca, cb) = (normal_cdf(a), normal_cdf(b));
                    normal_quantile(ca + v * (cb - ca)).unwrap_or(a)
                };
                (mean + sd * x).clamp(lower, upper)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampler {
    coords: Vec<CoordDist>,
    seed: u64,
}

impl Sampler {
    pub fn new(coords: Vec<CoordDist>, seed: u64) -> Result<Self> {
        for c in &coords {
            c.validate()?;
        }
        Ok(Self { coords, seed })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coords(&self) -> &[CoordDist] {
        &self.coords
    }

    pub fn support(&self) -> BoundedSupport {
        let (lower, upper) = self.coords.iter().map(CoordDist::bounds).unzip();
        BoundedSupport::new(lower, upper).expect("validated coordinates have a support")
    }

    /// Sample number `index`; a pure function of `(seed, index)`.
    pub fn sample(&self, index: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        self.coords
            .iter()
            .map(|c| {
                let v = ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
                c.draw(v)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConstraintStats {
    pub label: String,
    pub hardness: Hardness,
    pub set_id: String,
    pub violation_rate: f64,
    /// Mean excess over violating samples (0 when none), in constraint units.
    pub mean_violation: f64,
    /// 99th percentile of the excess clamped at 0, over all samples.
    pub p99_violation: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ObjectiveStats {
    pub mean: f64,
    pub min: f64,
    pub p05: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimWarning {
    pub label: String,
    pub set_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SimReport {
    pub n: usize,
    pub seed: u64,
    pub constraints: Vec<ConstraintStats>,
    pub objective: ObjectiveStats,
    /// Fraction of samples outside each set referenced by the problem.
    pub out_of_set: BTreeMap<String, f64>,
    pub warnings: Vec<SimWarning>,
}

impl SimReport {
    pub fn constraint(&self, label: &str) -> Option<&ConstraintStats> {
        self.constraints.iter().find(|c| c.label == label)
    }

    /// Long-format CSV `kind,name,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,name,metric,value\n");
        let _ = writeln!(out, "meta,,n,{}", self.n);
        let _ = writeln!(out, "meta,,seed,{}", self.seed);
        for c in &self.constraints {
            for (metric, value) in [
                ("violation_rate", c.violation_rate),
                ("mean_violation", c.mean_violation),
                ("p99_violation", c.p99_violation),
                ("max_violation", c.max_violation),
            ] {
                let _ = writeln!(out, "constraint,{},{metric},{value}", c.label);
            }
        }
        for (metric, value) in [
            ("mean", self.objective.mean),
            ("min", self.objective.min),
            ("p05", self.objective.p05),
        ] {
            let _ = writeln!(out, "objective,,{metric},{value}");
        }
        for (id, frac) in &self.out_of_set {
            let _ = writeln!(out, "set,{id},out_of_set_fraction,{frac}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning,{},{},{}", w.label, w.set_id, w.message.replace(',', ";"));
        }
        out
    }
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Every robust row of `lp` plus non-negativity of all declared variables.
fn evaluated_rows(lp: &RobustLP) -> Vec<RobustConstraint> {
    let mut rows = lp.constraints().to_vec();
    rows.extend(lp.nonneg_vars().iter().map(|&j| lp.nonneg_constraint(j)));
    rows
}

/// Hard rows whose set does not cover the sampler's support. Rows that the
/// policy leaves independent of `u` are skipped.
pub fn coverage_warnings(lp: &RobustLP, policy: &AffinePolicy, sampler: &Sampler) -> Vec<SimWarning> {
    let support = sampler.support();
    let nonneg_start = lp.m();
    evaluated_rows(lp)
        .into_iter()
        .enumerate()
        .filter(|(_, row)| row.hardness == Hardness::Hard)
        .filter(|(i, row)| {
            if *i >= nonneg_start {
                let j = row.a.iter().position(|&a| a != 0.0).unwrap_or(0);
                policy.mask().row_any(j)
            } else {
                true
            }
        })
        .filter_map(|(_, row)| {
            let set = lp.resolve(&row.set_id).ok()?;
            (!set.covers_support(&support)).then(|| SimWarning {
                label: row.label.clone(),
                set_id: row.set_id.clone(),
                message: format!("hard constraint set ({}) does not cover the sampler support", set.kind()),
            })
        })
        .collect()
}

struct SampleRecord {
    excess: Vec<f64>,
    objective: f64,
    outside: Vec<bool>,
}

/// Evaluates `policy` on `n` samples.
pub fn simulate(lp: &RobustLP, policy: &AffinePolicy, sampler: &Sampler, n: usize) -> Result<SimReport> {
    if n == 0 {
        return Err(Error::Domain("sample count must be >= 1".into()));
    }
    check_len("sampler dimension", lp.p(), sampler.dim())?;
    check_len("policy dimension", lp.n(), policy.n())?;
    check_len("policy uncertainty dimension", lp.p(), policy.p())?;

    let rows = evaluated_rows(lp);
    let mut set_ids: Vec<&str> = rows.iter().map(|r| r.set_id.as_str()).collect();
    set_ids.push(lp.objective_set_id());
    set_ids.sort_unstable();
    set_ids.dedup();
    let sets = set_ids.iter().map(|id| lp.resolve(id)).collect::<Result<Vec<_>>>()?;

    let records: Vec<SampleRecord> = (0..n as u64)
        .into_par_iter()
        .map(|j| {
            let u = sampler.sample(j);
            let x = policy.evaluate(&u).expect("dimensions checked");
            SampleRecord {
                excess: rows.iter().map(|r| r.excess(&x, &u)).collect(),
                objective: crate::model::dot(lp.objective(), &x),
                outside: sets
                    .iter()
                    .map(|s| !s.contains(&u, MEMBERSHIP_TOL).expect("dimensions checked"))
                    .collect(),
            }
        })
        .collect();

    let nf = n as f64;
    let constraints = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut clamped: Vec<f64> = records.iter().map(|r| r.excess[i].max(0.0)).collect();
            let violating: Vec<f64> = clamped.iter().copied().filter(|&e| e > VIOLATION_TOL).collect();
            let mean_violation = if violating.is_empty() {
                0.0
            } else {
                violating.iter().sum::<f64>() / violating.len() as f64
            };
            clamped.sort_by(f64::total_cmp);
            ConstraintStats {
                label: row.label.clone(),
                hardness: row.hardness,
                set_id: row.set_id.clone(),
                violation_rate: violating.len() as f64 / nf,
                mean_violation,
                p99_violation: percentile(&clamped, 0.99),
                max_violation: *clamped.last().expect("n >= 1"),
            }
        })
        .collect();

    let mut objectives: Vec<f64> = records.iter().map(|r| r.objective).collect();
    let mean = objectives.iter().sum::<f64>() / nf;
    objectives.sort_by(f64::total_cmp);
    let objective = ObjectiveStats { mean, min: objectives[0], p05: percentile(&objectives, 0.05) };

    let out_of_set = set_ids
        .iter()
        .enumerate()
        .map(|(s, id)| {
            let count = records.iter().filter(|r| r.outside[s]).count();
            (id.to_string(), count as f64 / nf)
        })
        .collect();

    Ok(SimReport {
        n,
        seed: sampler.seed(),
        constraints,
        objective,
        out_of_set,
        warnings: coverage_warnings(lp, policy, sampler),
    })
}

/// Side-by-side comparison: one column per report label, one row per metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub labels: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl Table {
    /// Empty string for an empty table.
    pub fn to_csv(&self) -> String {
        if self.labels.is_empty() {
            return String::new();
        }
        let mut out = format!("metric,{}\n", self.labels.join(","));
        for (metric, values) in &self.rows {
            let vals: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{metric},{}", vals.join(","));
        }
        out
    }

    pub fn get(&self, metric: &str, label: &str) -> Option<f64> {
        let col = self.labels.iter().position(|l| l == label)?;
        self.rows.iter().find(|(m, _)| m == metric).map(|(_, v)| v[col])
    }
}

/// Compares reports produced with the same `n`, seed and constraint labels.
pub fn compare(reports: &[(String, SimReport)]) -> Result<Table> {
    let Some((_, first)) = reports.first() else {
        return Ok(Table::default());
    };
    let labels_of = |r: &SimReport| r.constraints.iter().map(|c| c.label.clone()).collect::<Vec<_>>();
    let expected = labels_of(first);
    for (name, r) in reports {
        if r.n != first.n || r.seed != first.seed {
            return Err(Error::Incomparable(format!("`{name}` used a different sample count or seed")));
        }
        let mut a = labels_of(r);
        let mut b = expected.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::Incomparable(format!("`{name}` has different constraint labels")));
        }
    }
    let mut sorted: Vec<&(String, SimReport)> = reports.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let mut table = Table { labels: sorted.iter().map(|(l, _)| l.clone()).collect(), rows: Vec::new() };
    for label in &expected {
        let values = sorted
            .iter()
            .map(|(_, r)| r.constraint(label).map_or(f64::NAN, |c| c.violation_rate))
            .collect();
        table.rows.push((format!("violation_rate:{label}"), values));
    }
    for (metric, pick) in [
        ("objective_mean", (|o: &ObjectiveStats| o.mean) as fn(&ObjectiveStats) -> f64),
        ("objective_min", |o| o.min),
        ("objective_p05", |o| o.p05),
    ] {
        table.rows.push((metric.to_string(), sorted.iter().map(|(_, r)| pick(&r.objective)).collect()));
    }
    Ok(table)
}
