//! JSON file formats for problems, policies, samplers and solutions.
//!
//! Unknown keys are rejected everywhere. Numeric fields of set specs and
//! samplers also accept the strings `"inf"` and `"-inf"`.
//!
//! Problem file:
//!
//! ```json
//! {
//!   "n": 2, "p": 1,
//!   "objective": [1, 1],
//!   "constraints": [
//!     {"a": [1, 1], "b": 2, "d": [1], "set": "U", "hardness": "soft", "label": "supply"}
//!   ],
//!   "sets": {"U": {"type": "box", "rho": 1}},
//!   "objective_set": "U",
//!   "nonneg_vars": [0, 1],
//!   "mask": [[false], [true]]
//! }
//! ```
//!
//! Optional keys: `var_names` (one per variable) and `nonneg_set`, a map from
//! variable name or index to the set used for that variable's non-negativity
//! row. Set specs are tagged by `type`: `box {rho}`, `budget {rho, gamma}`,
//! `ball_box {rho, box_bound = 1}`, `ellipsoid {mu?, sigma_sqrt | sigma, rho}`
//! and `bounded {L, U}`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{AffinePolicy, Hardness, Mask, RobustConstraint, RobustLP};
use crate::program::DetProgram;
use crate::sim::{CoordDist, Sampler};
use crate::solve::Solution;
use crate::usets::UncertaintySet;

#[derive(Deserialize)]
#[serde(untagged)]
enum Num {
    Float(f64),
    Text(String),
}

fn to_f64<E: serde::de::Error>(n: Num) -> std::result::Result<f64, E> {
    match n {
        Num::Float(x) => Ok(x),
        Num::Text(s) => match s.as_str() {
            "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
            "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
            _ => Err(E::custom(format!("expected a number, \"inf\" or \"-inf\", found \"{s}\""))),
        },
    }
}

fn de_num<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    to_f64(Num::deserialize(d)?)
}

fn de_nums<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<Num>::deserialize(d)?.into_iter().map(to_f64).collect()
}

fn one() -> f64 {
    1.0
}

fn num_value(x: f64) -> Value {
    if x == f64::INFINITY {
        json!("inf")
    } else if x == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(x)
    }
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        // serde_json appends its own position; keep the bare message
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        Error::Parse { line: e.line(), column: e.column(), message }
    })
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SetDoc {
    Box {
        #[serde(deserialize_with = "de_num")]
        rho: f64,
    },
    Budget {
        #[serde(deserialize_with = "de_num")]
        rho: f64,
        #[serde(deserialize_with = "de_num")]
        gamma: f64,
    },
    BallBox {
        #[serde(deserialize_with = "de_num")]
        rho: f64,
        #[serde(default = "one", deserialize_with = "de_num")]
        box_bound: f64,
    },
    Ellipsoid {
        #[serde(default)]
        mu: Option<Vec<f64>>,
        #[serde(default)]
        sigma_sqrt: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        sigma: Option<Vec<Vec<f64>>>,
        #[serde(deserialize_with = "de_num")]
        rho: f64,
    },
    Bounded {
        #[serde(rename = "L", deserialize_with = "de_nums")]
        lower: Vec<f64>,
        #[serde(rename = "U", deserialize_with = "de_nums")]
        upper: Vec<f64>,
    },
}

impl SetDoc {
    fn build(self) -> Result<UncertaintySet> {
        match self {
            Self::Box { rho } => UncertaintySet::boxed(rho),
            Self::Budget { rho, gamma } => UncertaintySet::budget(rho, gamma),
            Self::BallBox { rho, box_bound } => UncertaintySet::ball_box(rho, box_bound),
            Self::Ellipsoid { mu, sigma_sqrt, sigma, rho } => {
                let (matrix, is_sqrt) = match (sigma_sqrt, sigma) {
                    (Some(s), None) => (s, true),
                    (None, Some(s)) => (s, false),
                    _ => {
                        return Err(Error::InvalidSet(
                            "ellipsoid needs exactly one of `sigma_sqrt` and `sigma`".into(),
                        ))
                    }
                };
                let mu = mu.unwrap_or_else(|| vec![0.0; matrix.len()]);
                if is_sqrt {
                    UncertaintySet::ellipsoid(mu, matrix, rho)
                } else {
                    UncertaintySet::ellipsoid_from_covariance(mu, matrix, rho)
                }
            }
            Self::Bounded { lower, upper } => UncertaintySet::bounded(lower, upper),
        }
    }
}

fn set_value(set: &UncertaintySet) -> Value {
    match set {
        UncertaintySet::Box { rho } => json!({"type": "box", "rho": rho}),
        UncertaintySet::Budget { rho, gamma } => json!({"type": "budget", "rho": rho, "gamma": gamma}),
        UncertaintySet::BallBox { rho, box_bound } => {
            json!({"type": "ball_box", "rho": rho, "box_bound": box_bound})
        }
        UncertaintySet::Ellipsoid(e) => {
            let s = e.sigma_sqrt();
            let rows: Vec<Vec<f64>> = (0..s.nrows()).map(|i| s.row(i).iter().copied().collect()).collect();
            json!({"type": "ellipsoid", "mu": e.mu(), "sigma_sqrt": rows, "rho": e.rho()})
        }
        UncertaintySet::BoundedSupport(b) => json!({
            "type": "bounded",
            "L": b.lower().iter().map(|&x| num_value(x)).collect::<Vec<_>>(),
            "U": b.upper().iter().map(|&x| num_value(x)).collect::<Vec<_>>(),
        }),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    a: Vec<f64>,
    b: f64,
    d: Vec<f64>,
    set: String,
    hardness: Hardness,
    label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    n: usize,
    p: usize,
    objective: Vec<f64>,
    constraints: Vec<ConstraintDoc>,
    sets: BTreeMap<String, SetDoc>,
    objective_set: String,
    nonneg_vars: Vec<usize>,
    mask: Vec<Vec<bool>>,
    #[serde(default)]
    var_names: Option<Vec<String>>,
    #[serde(default)]
    nonneg_set: BTreeMap<String, String>,
}

/// A problem together with the adaptivity mask it should be solved with.
#[derive(Debug, Clone)]
pub struct Problem {
    pub lp: RobustLP,
    pub mask: Mask,
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let doc: ProblemDoc = parse_json(text)?;
    if doc.objective.len() != doc.n {
        return Err(Error::DimensionMismatch {
            what: "objective".into(),
            expected: doc.n,
            found: doc.objective.len(),
        });
    }
    let sets = doc
        .sets
        .into_iter()
        .map(|(id, spec)| {
            let set = spec
                .build()
                .map_err(|e| Error::InvalidSet(format!("set `{id}`: {e}")))?;
            Ok((id, set))
        })
        .collect::<Result<BTreeMap<_, _>>>()?;
    let constraints = doc
        .constraints
        .into_iter()
        .map(|c| RobustConstraint {
            a: c.a,
            b: c.b,
            d: c.d,
            set_id: c.set,
            hardness: c.hardness,
            label: c.label,
        })
        .collect();
    let mut lp = RobustLP::new(doc.objective, constraints, doc.p, sets, doc.objective_set, doc.nonneg_vars)?;
    if let Some(names) = doc.var_names {
        lp = lp.with_var_names(names)?;
    }
    for (var, set_id) in doc.nonneg_set {
        let j = match lp.var_names().iter().position(|n| *n == var) {
            Some(j) => j,
            None => var
                .parse::<usize>()
                .map_err(|_| Error::InvalidProblem(format!("`nonneg_set` names unknown variable `{var}`")))?,
        };
        lp = lp.with_nonneg_set(j, set_id)?;
    }
    let mask = Mask::from_rows(&doc.mask)?;
    mask.check_shape(lp.n(), lp.p())?;
    Ok(Problem { lp, mask })
}

pub fn read_problem(path: &Path) -> Result<Problem> {
    parse_problem(&read_file(path)?)
}

pub fn problem_value(lp: &RobustLP, mask: &Mask) -> Value {
    let constraints: Vec<Value> = lp
        .constraints()
        .iter()
        .map(|c| {
            json!({"a": c.a, "b": c.b, "d": c.d, "set": c.set_id, "hardness": c.hardness, "label": c.label})
        })
        .collect();
    let sets: serde_json::Map<String, Value> = lp.sets().iter().map(|(id, s)| (id.clone(), set_value(s))).collect();
    let mut doc = json!({
        "n": lp.n(),
        "p": lp.p(),
        "var_names": lp.var_names(),
        "objective": lp.objective(),
        "constraints": constraints,
        "sets": sets,
        "objective_set": lp.objective_set_id(),
        "nonneg_vars": lp.nonneg_vars(),
        "mask": mask.to_rows(),
    });
    if !lp.nonneg_set_overrides().is_empty() {
        let overrides: serde_json::Map<String, Value> = lp
            .nonneg_set_overrides()
            .iter()
            .map(|(&j, id)| (lp.var_names()[j].clone(), json!(id)))
            .collect();
        doc["nonneg_set"] = Value::Object(overrides);
    }
    doc
}

pub fn problem_to_json(lp: &RobustLP, mask: &Mask) -> String {
    pretty(&problem_value(lp, mask))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    z: Vec<f64>,
    #[serde(rename = "V")]
    v: Vec<Vec<f64>>,
    #[serde(default)]
    mask: Option<Vec<Vec<bool>>>,
    #[serde(default, rename = "variables")]
    _variables: Option<Vec<String>>,
}

/// Parses `{z, V, mask?}`, or a solution dump carrying such an object under
/// `policy`. Without a mask, the nonzero pattern of `V` is used.
pub fn parse_policy(text: &str) -> Result<AffinePolicy> {
    let value: Value = parse_json(text)?;
    let inner = match value.get("policy") {
        Some(Value::Null) => return Err(Error::InvalidPolicy("solution carries no policy".into())),
        Some(p) => p.clone(),
        None => value,
    };
    let doc: PolicyDoc = serde_json::from_value(inner).map_err(|e| Error::InvalidPolicy(e.to_string()))?;
    let mask = match doc.mask {
        Some(rows) => Mask::from_rows(&rows)?,
        None => {
            let rows: Vec<Vec<bool>> = doc.v.iter().map(|r| r.iter().map(|&x| x != 0.0).collect()).collect();
            Mask::from_rows(&rows)?
        }
    };
    AffinePolicy::new(doc.z, doc.v, mask)
}

pub fn read_policy(path: &Path) -> Result<AffinePolicy> {
    parse_policy(&read_file(path)?)
}

pub fn policy_value(policy: &AffinePolicy, names: &[String]) -> Value {
    json!({
        "variables": names,
        "z": policy.z(),
        "V": policy.v(),
        "mask": policy.mask().to_rows(),
    })
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum CoordDoc {
    Uniform {
        #[serde(deserialize_with = "de_num")]
        lower: f64,
        #[serde(deserialize_with = "de_num")]
        upper: f64,
    },
    TruncNormal {
        #[serde(deserialize_with = "de_num")]
        mean: f64,
        #[serde(deserialize_with = "de_num")]
        sd: f64,
        #[serde(default = "neg_inf", deserialize_with = "de_num")]
        lower: f64,
        #[serde(default = "pos_inf", deserialize_with = "de_num")]
        upper: f64,
    },
    ShiftedExp {
        #[serde(deserialize_with = "de_num")]
        rate: f64,
        #[serde(deserialize_with = "de_num")]
        lower: f64,
    },
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SamplerDoc {
    #[serde(default)]
    seed: u64,
    coords: Vec<CoordDoc>,
}

/// `{"seed": 7, "coords": [{"type": "uniform", "lower": -2, "upper": 0}, ...]}`;
/// coordinate types are `uniform`, `trunc_normal` and `shifted_exp`.
pub fn parse_sampler(text: &str) -> Result<Sampler> {
    let doc: SamplerDoc = parse_json(text)?;
    let coords = doc
        .coords
        .into_iter()
        .map(|c| match c {
            CoordDoc::Uniform { lower, upper } => CoordDist::Uniform { lower, upper },
            CoordDoc::TruncNormal { mean, sd, lower, upper } => CoordDist::TruncNormal { mean, sd, lower, upper },
            CoordDoc::ShiftedExp { rate, lower } => CoordDist::ShiftedExp { rate, lower },
        })
        .collect();
    Sampler::new(coords, doc.seed)
}

pub fn read_sampler(path: &Path) -> Result<Sampler> {
    parse_sampler(&read_file(path)?)
}

pub fn sampler_to_json(sampler: &Sampler) -> String {
    let coords: Vec<Value> = sampler
        .coords()
        .iter()
        .map(|c| match *c {
            CoordDist::Uniform { lower, upper } => json!({"type": "uniform", "lower": lower, "upper": upper}),
            CoordDist::TruncNormal { mean, sd, lower, upper } => json!({
                "type": "trunc_normal", "mean": mean, "sd": sd,
                "lower": num_value(lower), "upper": num_value(upper),
            }),
            CoordDist::ShiftedExp { rate, lower } => json!({"type": "shifted_exp", "rate": rate, "lower": lower}),
        })
        .collect();
    pretty(&json!({"seed": sampler.seed(), "coords": coords}))
}

/// Rows generated per `(source, rule)`, in order of first appearance.
pub fn provenance_summary(prog: &DetProgram) -> Vec<Value> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut counts: BTreeMap<(String, String), (usize, usize)> = BTreeMap::new();
    let tags = prog
        .lin
        .iter()
        .map(|r| (&r.provenance, true))
        .chain(prog.soc.iter().map(|r| (&r.provenance, false)));
    for (prov, linear) in tags {
        let key = (prov.source.clone(), prov.rule.clone());
        let entry = counts.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            (0, 0)
        });
        if linear {
            entry.0 += 1;
        } else {
            entry.1 += 1;
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (lin, soc) = counts[&key];
            json!({"source": key.0, "rule": key.1, "linear_rows": lin, "soc_rows": soc})
        })
        .collect()
}

/// Solution dump: status, objective, policy, provenance summary and solver
/// statistics. Non-finite objective values are written as `null`.
pub fn solution_to_json(sol: &Solution, prog: &DetProgram, names: &[String]) -> String {
    let objective = if sol.objective_value.is_finite() { json!(sol.objective_value) } else { Value::Null };
    let policy = sol.policy.as_ref().map_or(Value::Null, |p| policy_value(p, names));
    pretty(&json!({
        "status": sol.status,
        "objective_value": objective,
        "policy": policy,
        "provenance": provenance_summary(prog),
        "statistics": {
            "variables": prog.num_vars(),
            "linear_rows": prog.lin.len(),
            "soc_rows": prog.soc.len(),
            "pivots": sol.iterations,
            "cut_rounds": sol.cut_rounds,
            "cuts_added": sol.cuts_added,
        },
    }))
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}
