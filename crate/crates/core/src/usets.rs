//! Uncertainty-set geometries.
//!
//! Every robust counterpart in this crate reduces to the support function
//! `σ(w) = max { wᵀu : u ∈ U }` of the set assigned to a constraint, so each
//! geometry here provides a closed-form [`UncertaintySet::support`], an
//! additive-slack membership test and a coverage test against a sampler's
//! support box.

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};

/// Pivot tolerance used when factorizing a covariance matrix.
pub const PIVOT_TOL: f64 = 1e-12;

/// Axis-aligned (possibly semi-infinite) box `L ≤ u ≤ U`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedSupport {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoundedSupport {
    /// Builds the box. `lower` entries may be `-inf`, `upper` entries `+inf`,
    /// but never both on the same coordinate.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_len("support upper bounds", lower.len(), upper.len())?;
        for (k, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::InvalidSet(format!("NaN bound on coordinate {k}")));
            }
            if l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidSet(format!(
                    "coordinate {k}: lower bound must be < +inf and upper bound > -inf"
                )));
            }
            if l > u {
                return Err(Error::InvalidSet(format!(
                    "coordinate {k}: lower bound {l} exceeds upper bound {u}"
                )));
            }
            if l.is_infinite() && u.is_infinite() {
                return Err(Error::InvalidSet(format!(
                    "coordinate {k} is unbounded in both directions"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|b| b.is_finite())
    }
}

/// An ellipsoid `{ μ + S v : ‖v‖₂ ≤ ρ }` where `S` is a square root of `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    mu: Vec<f64>,
    sigma_sqrt: DMatrix<f64>,
    sigma_sqrt_inv: DMatrix<f64>,
    rho: f64,
}

impl Ellipsoid {
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Row-major square root `S` with `Σ = S Sᵀ`.
    pub fn sigma_sqrt(&self) -> &DMatrix<f64> {
        &self.sigma_sqrt
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    /// `‖u‖∞ ≤ ρ`
    Box { rho: f64 },
    /// `‖u‖∞ ≤ ρ` and `‖u‖₁ ≤ Γ`
    Budget { rho: f64, gamma: f64 },
    /// `‖u‖₂ ≤ ρ` and `‖u‖∞ ≤ box`
    BallBox { rho: f64, box_bound: f64 },
    /// `‖Σ^{-1/2}(u − μ)‖₂ ≤ ρ`
    Ellipsoid(Ellipsoid),
    /// `L ≤ u ≤ U`, with semi-infinite coordinates allowed.
    BoundedSupport(BoundedSupport),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSet(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl UncertaintySet {
    pub fn boxed(rho: f64) -> Result<Self> {
        positive("rho", rho)?;
        Ok(Self::Box { rho })
    }

    pub fn budget(rho: f64, gamma: f64) -> Result<Self> {
        positive("rho", rho)?;
        positive("gamma", gamma)?;
        Ok(Self::Budget { rho, gamma })
    }

    pub fn ball_box(rho: f64, box_bound: f64) -> Result<Self> {
        positive("rho", rho)?;
        positive("box", box_bound)?;
        Ok(Self::BallBox { rho, box_bound })
    }

    /// Ellipsoid from a square root `S` of the covariance (`Σ = S Sᵀ`), given
    /// row-major. `S` must have full rank.
    pub fn ellipsoid(mu: Vec<f64>, sigma_sqrt: Vec<Vec<f64>>, rho: f64) -> Result<Self> {
        positive("rho", rho)?;
        let s = square_matrix(mu.len(), &sigma_sqrt, "sigma_sqrt")?;
        let svd = s.clone().svd(false, false);
        let max_sv = svd.singular_values.max();
        let min_sv = svd.singular_values.min();
        if !mu.is_empty() && (!(max_sv > 0.0) || min_sv <= PIVOT_TOL * max_sv) {
            return Err(Error::InvalidSet(format!(
                "sigma_sqrt is rank deficient (singular values in [{min_sv:e}, {max_sv:e}])"
            )));
        }
        let inv = s
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidSet("sigma_sqrt is singular".into()))?;
        Ok(Self::Ellipsoid(Ellipsoid {
            mu,
            sigma_sqrt: s,
            sigma_sqrt_inv: inv,
            rho,
        }))
    }

    /// Ellipsoid from a full covariance `Σ` via a Cholesky factorization.
    pub fn ellipsoid_from_covariance(mu: Vec<f64>, sigma: Vec<Vec<f64>>, rho: f64) -> Result<Self> {
        let p = mu.len();
        let cov = square_matrix(p, &sigma, "sigma")?;
        if (&cov - cov.transpose()).amax() > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidSet("covariance is not symmetric".into()));
        }
        let chol = cov
            .cholesky()
            .ok_or_else(|| Error::InvalidSet("covariance is not positive definite".into()))?;
        let l = chol.unpack();
        for k in 0..p {
            if l[(k, k)] * l[(k, k)] < PIVOT_TOL {
                return Err(Error::InvalidSet(format!(
                    "covariance pivot {k} below tolerance {PIVOT_TOL:e}"
                )));
            }
        }
        let rows = (0..p).map(|i| (0..p).map(|j| l[(i, j)]).collect()).collect();
        Self::ellipsoid(mu, rows, rho)
    }

    pub fn bounded(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Ok(Self::BoundedSupport(BoundedSupport::new(lower, upper)?))
    }

    /// Short geometry tag used in provenance and reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Box { .. } => "box",
            Self::Budget { .. } => "budget",
            Self::BallBox { .. } => "ball_box",
            Self::Ellipsoid(_) => "ellipsoid",
            Self::BoundedSupport(_) => "bounded",
        }
    }

    /// Dimension fixed by the set's data, if any. Norm balls apply to any `p`.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Self::Ellipsoid(e) => Some(e.dim()),
            Self::BoundedSupport(b) => Some(b.dim()),
            _ => None,
        }
    }

    /// The per-coordinate bound of the box part, for geometries that have one.
    pub fn box_bound(&self) -> Option<f64> {
        match self {
            Self::Box { rho } | Self::Budget { rho, .. } => Some(*rho),
            Self::BallBox { box_bound, .. } => Some(*box_bound),
            _ => None,
        }
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        match self.dim() {
            Some(d) => check_len(&format!("{} set", self.kind()), d, len),
            None => Ok(()),
        }
    }

    /// True iff `u` satisfies every defining inequality within additive slack `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::Domain(format!("tolerance must be >= 0, got {tol}")));
        }
        self.check_dim(u.len())?;
        Ok(match self {
            Self::Box { rho } => norm_inf(u) <= rho + tol,
            Self::Budget { rho, gamma } => norm_inf(u) <= rho + tol && norm_1(u) <= gamma + tol,
            Self::BallBox { rho, box_bound } => {
                norm_2(u) <= rho + tol && norm_inf(u) <= box_bound + tol
            }
            Self::Ellipsoid(e) => {
                let shifted: Vec<f64> = u.iter().zip(&e.mu).map(|(a, b)| a - b).collect();
                let v = &e.sigma_sqrt_inv * nalgebra::DVector::from_vec(shifted);
                v.norm() <= e.rho + tol
            }
            Self::BoundedSupport(b) => u
                .iter()
                .zip(b.lower.iter().zip(&b.upper))
                .all(|(&x, (&l, &h))| x >= l - tol && x <= h + tol),
        })
    }

    /// Support function `max { wᵀu : u ∈ set }`; `f64::INFINITY` when unbounded.
    pub fn support(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w.len())?;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("support direction must be finite".into()));
        }
        Ok(match self {
            Self::Box { rho } => rho * norm_1(w),
            Self::Budget { rho, gamma } => budget_support(*rho, *gamma, w),
            Self::BallBox { rho, box_bound } => ball_box_support(*rho, *box_bound, w),
            Self::Ellipsoid(e) => {
                let wv = nalgebra::DVector::from_column_slice(w);
                let mu_term: f64 = e.mu.iter().zip(w).map(|(a, b)| a * b).sum();
                mu_term + e.rho * (e.sigma_sqrt.transpose() * wv).norm()
            }
            Self::BoundedSupport(b) => {
                let mut total = 0.0;
                for (k, &wk) in w.iter().enumerate() {
                    if wk > 0.0 {
                        if b.upper[k].is_infinite() {
                            return Ok(f64::INFINITY);
                        }
                        total += b.upper[k] * wk;
                    } else if wk < 0.0 {
                        if b.lower[k].is_infinite() {
                            return Ok(f64::INFINITY);
                        }
                        total += b.lower[k] * wk;
                    }
                }
                total
            }
        })
    }

    /// True iff every point of `support` lies in this set.
    pub fn covers_support(&self, support: &BoundedSupport) -> bool {
        if self.check_dim(support.dim()).is_err() {
            return false;
        }
        if let Self::BoundedSupport(b) = self {
            return support
                .lower
                .iter()
                .zip(&b.lower)
                .all(|(s, mine)| s >= mine)
                && support.upper.iter().zip(&b.upper).all(|(s, mine)| s <= mine);
        }
        if !support.is_bounded() {
            return false;
        }
        let extreme: Vec<f64> = support
            .lower
            .iter()
            .zip(&support.upper)
            .map(|(l, u)| l.abs().max(u.abs()))
            .collect();
        match self {
            Self::Box { rho } => norm_inf(&extreme) <= *rho,
            Self::Budget { rho, gamma } => norm_inf(&extreme) <= *rho && norm_1(&extreme) <= *gamma,
            Self::BallBox { rho, box_bound } => {
                norm_inf(&extreme) <= *box_bound && norm_2(&extreme) <= *rho
            }
            Self::Ellipsoid(_) => {
                // A convex set contains the box iff it contains every vertex.
                let p = support.dim();
                let mut vertex = vec![0.0; p];
                (0u64..1u64 << p).all(|bits| {
                    for (k, v) in vertex.iter_mut().enumerate() {
                        *v = if bits >> k & 1 == 1 {
                            support.upper[k]
                        } else {
                            support.lower[k]
                        };
                    }
                    self.contains(&vertex, 1e-12).unwrap_or(false)
                })
            }
            Self::BoundedSupport(_) => unreachable!(),
        }
    }
}

fn square_matrix(p: usize, rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    check_len(&format!("{what} rows"), p, rows.len())?;
    for row in rows {
        check_len(&format!("{what} columns"), p, row.len())?;
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

pub(crate) fn norm_1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub(crate) fn norm_2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sorted_abs_desc(w: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = w.iter().map(|x| x.abs()).filter(|x| *x > 0.0).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

/// Greedy fill: mass `rho` on the largest |w_k| until the ℓ₁ budget runs out.
fn budget_support(rho: f64, gamma: f64, w: &[f64]) -> f64 {
    let mut remaining = gamma;
    let mut total = 0.0;
    for a in sorted_abs_desc(w) {
        if remaining <= 0.0 {
            break;
        }
        let mass = rho.min(remaining);
        total += a * mass;
        remaining -= mass;
    }
    total
}

/// Maximizer has the form `u_k = sign(w_k)·min(box, λ|w_k|)`: the `k` largest
/// coordinates sit on the box, the rest are scaled onto the sphere. Every
/// candidate split is feasible and the correct one attains the maximum.
fn ball_box_support(rho: f64, box_bound: f64, w: &[f64]) -> f64 {
    let a = sorted_abs_desc(w);
    let q = a.len();
    if q == 0 {
        return 0.0;
    }
    // suffix[k] = Σ_{i ≥ k} a_i²
    let mut suffix = vec![0.0; q + 1];
    for i in (0..q).rev() {
        suffix[i] = suffix[i + 1] + a[i] * a[i];
    }
    let mut best = 0.0_f64;
    let mut clipped_sum = 0.0;
    for k in 0..=q {
        let budget = rho * rho - k as f64 * box_bound * box_bound;
        if budget < 0.0 {
            break;
        }
        let value = if k == q {
            box_bound * clipped_sum
        } else {
            let lambda = (budget / suffix[k]).sqrt().min(box_bound / a[k]);
            box_bound * clipped_sum + lambda * suffix[k]
        };
        best = best.max(value);
        if k < q {
            clipped_sum += a[k];
        }
    }
    best
}
