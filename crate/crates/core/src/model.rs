//! Robust LPs with right-hand-side uncertainty and affine decision rules.
//!
//! The uncertain problem is
//!
//! ```text
//! max  cᵀx
//! s.t. a_iᵀ x(u) ≤ b_i + d_iᵀ u   for all u ∈ U_i,  i = 1..m
//!      x_j(u) ≥ 0                 for j in nonneg_vars
//! ```
//!
//! with `x(u) = z + V u`. A [`Mask`] selects which entries of `V` are free.

use std::collections::BTreeMap;

use crate::error::{check_len, Error, Result};
use crate::usets::UncertaintySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustConstraint {
    pub a: Vec<f64>,
    pub b: f64,
    pub d: Vec<f64>,
    pub set_id: String,
    pub hardness: Hardness,
    pub label: String,
}

impl RobustConstraint {
    /// `a x(u) − b − d u`; positive means violated.
    pub fn excess(&self, x: &[f64], u: &[f64]) -> f64 {
        dot(&self.a, x) - self.b - dot(&self.d, u)
    }
}

/// Which entries of `V` are decision variables (`n × p`, row-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    n: usize,
    p: usize,
    free: Vec<bool>,
}

impl Mask {
    /// All-false mask: a static policy.
    pub fn fixed(n: usize, p: usize) -> Self {
        Self { n, p, free: vec![false; n * p] }
    }

    pub fn full(n: usize, p: usize) -> Self {
        Self { n, p, free: vec![true; n * p] }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        for row in rows {
            check_len("mask row", p, row.len())?;
        }
        Ok(Self { n, p, free: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.p
    }

    pub fn get(&self, j: usize, k: usize) -> bool {
        self.free[j * self.p + k]
    }

    pub fn set(&mut self, j: usize, k: usize, value: bool) {
        self.free[j * self.p + k] = value;
    }

    pub fn row_any(&self, j: usize) -> bool {
        self.free[j * self.p..(j + 1) * self.p].iter().any(|&f| f)
    }

    pub fn is_static(&self) -> bool {
        !self.free.iter().any(|&f| f)
    }

    pub fn count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn to_rows(&self) -> Vec<Vec<bool>> {
        (0..self.n).map(|j| self.free[j * self.p..(j + 1) * self.p].to_vec()).collect()
    }

    pub(crate) fn check_shape(&self, n: usize, p: usize) -> Result<()> {
        check_len("mask rows", n, self.n)?;
        if n > 0 {
            check_len("mask columns", p, self.p)?;
        }
        Ok(())
    }
}

/// The decision rule `x(u) = z + V u`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePolicy {
    z: Vec<f64>,
    v: Vec<Vec<f64>>,
    mask: Mask,
}

impl AffinePolicy {
    /// Fails if `V` is nonzero where `mask` is false or shapes disagree.
    pub fn new(z: Vec<f64>, v: Vec<Vec<f64>>, mask: Mask) -> Result<Self> {
        let n = z.len();
        mask.check_shape(n, mask.cols())?;
        check_len("policy V rows", n, v.len())?;
        for (j, row) in v.iter().enumerate() {
            check_len("policy V columns", mask.cols(), row.len())?;
            for (k, &x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::InvalidPolicy(format!("V[{j}][{k}] is not finite")));
                }
                if x != 0.0 && !mask.get(j, k) {
                    return Err(Error::InvalidPolicy(format!(
                        "V[{j}][{k}] = {x} but the mask fixes it to 0"
                    )));
                }
            }
        }
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPolicy("z has non-finite entries".into()));
        }
        Ok(Self { z, v, mask })
    }

    /// Policy with `V = 0` and an all-false mask.
    pub fn fixed(z: Vec<f64>, p: usize) -> Self {
        let n = z.len();
        Self { z, v: vec![vec![0.0; p]; n], mask: Mask::fixed(n, p) }
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn v(&self) -> &[Vec<f64>] {
        &self.v
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn p(&self) -> usize {
        self.mask.cols()
    }

    pub fn is_static(&self) -> bool {
        self.mask.is_static()
    }

    /// `z + V u`, without clamping.
    pub fn evaluate(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("uncertainty vector", self.p(), u.len())?;
        Ok(self
            .z
            .iter()
            .zip(&self.v)
            .map(|(zj, row)| zj + dot(row, u))
            .collect())
    }
}

/// A robust LP with per-constraint uncertainty sets.
#[derive(Debug, Clone)]
pub struct RobustLP {
    objective: Vec<f64>,
    constraints: Vec<RobustConstraint>,
    p: usize,
    sets: BTreeMap<String, UncertaintySet>,
    objective_set: String,
    nonneg_vars: Vec<usize>,
    nonneg_sets: BTreeMap<usize, String>,
    var_names: Vec<String>,
}

impl RobustLP {
    /// Validates dimensions and set references. Robust non-negativity rows use
    /// the objective set unless overridden with [`RobustLP::with_nonneg_set`].
    pub fn new(
        objective: Vec<f64>,
        constraints: Vec<RobustConstraint>,
        p: usize,
        sets: BTreeMap<String, UncertaintySet>,
        objective_set: impl Into<String>,
        nonneg_vars: Vec<usize>,
    ) -> Result<Self> {
        let n = objective.len();
        let lp = Self {
            var_names: (1..=n).map(|j| format!("x{j}")).collect(),
            objective,
            constraints,
            p,
            sets,
            objective_set: objective_set.into(),
            nonneg_vars,
            nonneg_sets: BTreeMap::new(),
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn with_var_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len("variable names", self.n(), names.len())?;
        self.var_names = names;
        Ok(self)
    }

    pub fn with_nonneg_set(mut self, var: usize, set_id: impl Into<String>) -> Result<Self> {
        let set_id = set_id.into();
        if !self.nonneg_vars.contains(&var) {
            return Err(Error::InvalidProblem(format!(
                "variable {var} is not declared non-negative"
            )));
        }
        self.resolve(&set_id)?;
        self.nonneg_sets.insert(var, set_id);
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidProblem("need at least one decision variable".into()));
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidProblem("need at least one constraint".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidProblem("objective has non-finite entries".into()));
        }
        for con in &self.constraints {
            check_len(&format!("constraint `{}` a", con.label), n, con.a.len())?;
            check_len(&format!("constraint `{}` d", con.label), self.p, con.d.len())?;
            if con.a.iter().chain(&con.d).chain([&con.b]).any(|x| !x.is_finite()) {
                return Err(Error::InvalidProblem(format!(
                    "constraint `{}` has non-finite data",
                    con.label
                )));
            }
            self.resolve(&con.set_id)?;
        }
        self.resolve(&self.objective_set)?;
        for &j in &self.nonneg_vars {
            if j >= n {
                return Err(Error::InvalidProblem(format!(
                    "non-negative variable index {j} out of range (n = {n})"
                )));
            }
        }
        for (id, set) in &self.sets {
            if let Some(d) = set.dim() {
                check_len(&format!("set `{id}`"), self.p, d)?;
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[RobustConstraint] {
        &self.constraints
    }

    pub fn sets(&self) -> &BTreeMap<String, UncertaintySet> {
        &self.sets
    }

    pub fn objective_set_id(&self) -> &str {
        &self.objective_set
    }

    pub fn nonneg_vars(&self) -> &[usize] {
        &self.nonneg_vars
    }

    pub fn nonneg_set_id(&self, var: usize) -> &str {
        self.nonneg_sets.get(&var).unwrap_or(&self.objective_set)
    }

    pub fn nonneg_set_overrides(&self) -> &BTreeMap<usize, String> {
        &self.nonneg_sets
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn resolve(&self, id: &str) -> Result<&UncertaintySet> {
        self.sets.get(id).ok_or_else(|| Error::UnknownSet(id.to_string()))
    }

    /// `cᵀ(z + V u)`.
    pub fn realized_objective(&self, policy: &AffinePolicy, u: &[f64]) -> Result<f64> {
        check_len("policy dimension", self.n(), policy.n())?;
        Ok(dot(&self.objective, &policy.evaluate(u)?))
    }

    /// Robust non-negativity rows `−x_j(u) ≤ 0` for every non-negative variable
    /// that the mask makes adaptive. Static variables keep plain sign bounds.
    pub fn adaptivity_induced_constraints(&self, mask: &Mask) -> Vec<RobustConstraint> {
        self.nonneg_vars
            .iter()
            .filter(|&&j| j < mask.rows() && mask.row_any(j))
            .map(|&j| self.nonneg_constraint(j))
            .collect()
    }

    /// The non-negativity row for variable `j`, regardless of the mask.
    pub fn nonneg_constraint(&self, j: usize) -> RobustConstraint {
        let mut a = vec![0.0; self.n()];
        a[j] = -1.0;
        RobustConstraint {
            a,
            b: 0.0,
            d: vec![0.0; self.p],
            set_id: self.nonneg_set_id(j).to_string(),
            hardness: Hardness::Hard,
            label: format!("nonneg:{}", self.var_names[j]),
        }
    }
}

/// Free-function form of [`AffinePolicy::evaluate`].
pub fn evaluate_policy(policy: &AffinePolicy, u: &[f64]) -> Result<Vec<f64>> {
    policy.evaluate(u)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
