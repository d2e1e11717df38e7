//! Set-size calibration from target violation probabilities.
//!
//! For a constraint that should hold with probability at least `1 − ε`:
//!
//! * Gaussian `u ~ N(μ, Σ)`: ellipsoid radius `Φ⁻¹(1 − ε)`, exact.
//! * independent, zero-mean `u_k` on `[−1, 1]`, ball-box set:
//!   `ρ = √(2 ln(1/ε))`, violation at most `exp(−ρ²/2)`.
//! * same assumptions, budget set: `Γ = √(2 ln(1/ε))·√p`, violation at most
//!   `exp(−Γ²/(2p))`.
//!
//! Rearranging the ball counterpart as `‖Vᵀa − d‖₂ ≤ (b − aᵀz)/ρ` shows the
//! set size acting as a shrinkage parameter on the adaptive coefficients;
//! [`regularization_path`] tabulates that bound across guarantee levels.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flavor {
    GaussianEllipsoid,
    BallBoxDistFree,
    BudgetDistFree,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussianEllipsoid => "gaussian",
            Self::BallBoxDistFree => "ball_box",
            Self::BudgetDistFree => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuaranteeSpec {
    pub epsilon: f64,
    pub flavor: Flavor,
    /// Uncertainty dimension; required by the budget flavor.
    pub p: Option<usize>,
    /// Per-coordinate bound declared by the target set. The distribution-free
    /// formulas only hold for 1.
    pub box_bound: f64,
}

impl GuaranteeSpec {
    pub fn new(epsilon: f64, flavor: Flavor) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon, flavor, p: None, box_bound: 1.0 })
    }

    pub fn with_dimension(mut self, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::Domain("uncertainty dimension must be >= 1".into()));
        }
        self.p = Some(p);
        Ok(self)
    }

    pub fn with_box_bound(mut self, box_bound: f64) -> Self {
        self.box_bound = box_bound;
        self
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 − Φ(x)`, accurate for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

// Rational approximation for the lower half (relative error ~1e-9), polished
// below with a Halley step against the erfc-based CDF.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const P_LOW: f64 = 0.02425;

fn lower_half_quantile(q: f64) -> f64 {
    debug_assert!(q > 0.0 && q <= 0.5);
    let x = if q < P_LOW {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    } else {
        let s = q - 0.5;
        let r = s * s;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * s
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let err = normal_cdf(x) - q;
    let u = err * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// `Φ⁻¹(q)` for `q ∈ (0, 1)`.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    Ok(if q == 0.5 {
        0.0
    } else if q < 0.5 {
        lower_half_quantile(q)
    } else {
        -lower_half_quantile(1.0 - q)
    })
}

/// Set size that certifies violation probability at most `spec.epsilon`.
pub fn size_for(spec: &GuaranteeSpec) -> Result<f64> {
    let GuaranteeSpec { epsilon, flavor, p, box_bound } = *spec;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if flavor != Flavor::GaussianEllipsoid && box_bound != 1.0 {
        return Err(Error::NonUnitBox(box_bound));
    }
    let base = (2.0 * (1.0 / epsilon).ln()).sqrt();
    match flavor {
        // Φ⁻¹(1 − ε) = −Φ⁻¹(ε) keeps full precision for small ε.
        Flavor::GaussianEllipsoid => Ok(-normal_quantile(epsilon)?),
        Flavor::BallBoxDistFree => Ok(base),
        Flavor::BudgetDistFree => {
            let p = p.ok_or_else(|| Error::Domain("budget flavor needs the dimension p".into()))?;
            if p == 0 {
                return Err(Error::Domain("uncertainty dimension must be >= 1".into()));
            }
            Ok(base * (p as f64).sqrt())
        }
    }
}

/// Guaranteed upper bound on the violation probability for a set of `size`.
pub fn violation_bound(flavor: Flavor, size: f64, p: usize) -> Result<f64> {
    if !(size >= 0.0) {
        return Err(Error::Domain(format!("set size must be >= 0, got {size}")));
    }
    Ok(match flavor {
        Flavor::GaussianEllipsoid => normal_sf(size),
        Flavor::BallBoxDistFree => (-size * size / 2.0).exp(),
        Flavor::BudgetDistFree => {
            if p == 0 {
                return Err(Error::Domain("uncertainty dimension must be >= 1".into()));
            }
            (-size * size / (2.0 * p as f64)).exp()
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRow {
    pub one_minus_eps: f64,
    pub flavor: Flavor,
    /// `+inf` when the set size is zero.
    pub max_adaptivity: f64,
}

/// Default ε grid: `1 − ε` in 0.50, 0.55, …, 0.95, then 0.96, …, 0.99, 0.995, 0.999.
pub fn default_eps_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..10).map(|i| (50 - 5 * i) as f64 / 100.0).collect();
    grid.extend((1..=4).rev().map(|i| i as f64 / 100.0));
    grid.extend([0.005, 0.001]);
    grid
}

/// Largest `‖Vᵀa − d‖₂` the ball/ellipsoid counterpart permits at slack
/// `b − aᵀz`, per flavor and ε. Rows are ordered by ε, then flavor as given.
pub fn regularization_path(flavors: &[Flavor], eps_grid: &[f64], slack: f64, p: usize) -> Result<Vec<PathRow>> {
    if !(slack > 0.0 && slack.is_finite()) {
        return Err(Error::Domain(format!("slack must be finite and > 0, got {slack}")));
    }
    if eps_grid.is_empty() {
        return Err(Error::Domain("epsilon grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(eps_grid.len() * flavors.len());
    for &eps in eps_grid {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::Domain(format!("epsilon grid values must lie in (0, 0.5], got {eps}")));
        }
        for &flavor in flavors {
            let mut spec = GuaranteeSpec::new(eps, flavor)?;
            if flavor == Flavor::BudgetDistFree {
                spec = spec.with_dimension(p)?;
            }
            let size = size_for(&spec)?;
            let max_adaptivity = if size > 0.0 { slack / size } else { f64::INFINITY };
            rows.push(PathRow { one_minus_eps: 1.0 - eps, flavor, max_adaptivity });
        }
    }
    Ok(rows)
}

fn fmt_value(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v}")
    }
}

/// CSV with header `one_minus_eps,flavor,max_adaptivity`, LF line endings.
pub fn path_csv(rows: &[PathRow]) -> String {
    let mut out = String::from("one_minus_eps,flavor,max_adaptivity\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.one_minus_eps, r.flavor.name(), fmt_value(r.max_adaptivity));
    }
    out
}

/// Line plot of the path; unbounded points are left out.
pub fn path_svg(rows: &[PathRow]) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let finite: Vec<&PathRow> = rows.iter().filter(|r| r.max_adaptivity.is_finite()).collect();
    let x_min = finite.iter().map(|r| r.one_minus_eps).fold(f64::INFINITY, f64::min).min(0.5);
    let x_max = finite.iter().map(|r| r.one_minus_eps).fold(0.0_f64, f64::max).max(x_min + 1e-9);
    let y_max = finite.iter().map(|r| r.max_adaptivity).fold(0.0_f64, f64::max).max(1e-9);
    let sx = |x: f64| pad + (x - x_min) / (x_max - x_min) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - y / y_max * (h - 2.0 * pad);
    let mut flavors: Vec<Flavor> = rows.iter().map(|r| r.flavor).collect();
    flavors.sort();
    flavors.dedup();
    let colors = ["#1f77b4", "#d62728", "#2ca02c"];
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">1 - epsilon</text>"#, w / 2.0, h - 12.0);
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle" font-size="14">max adaptivity</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (x, anchor) in [(x_min, "start"), (x_max, "end")] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="{anchor}" font-size="12">{x:.3}</text>"#, sx(x), h - pad + 16.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{pad}" text-anchor="end" font-size="12">{y_max:.3}</text>"#, pad - 4.0);
    for (i, flavor) in flavors.iter().enumerate() {
        let points: Vec<String> = finite
            .iter()
            .filter(|r| r.flavor == *flavor)
            .map(|r| format!("{:.2},{:.2}", sx(r.one_minus_eps), sy(r.max_adaptivity)))
            .collect();
        let color = colors[i % colors.len()];
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, points.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
            w - pad - 90.0,
            pad + 16.0 * (i as f64 + 1.0),
            flavor.name()
        );
    }
    out.push_str("</svg>\n");
    out
}
