//! Robust counterparts.
//!
//! A robust row `a x(u) ≤ b + d u` with `x(u) = z + V u` reads
//! `base + wᵀu ≤ 0` for `base = aᵀz − b` and `w = Vᵀa − d`, both affine in the
//! policy variables. It holds for every `u` in a set iff
//! `base + σ(w) ≤ 0`, where `σ` is the set's support function. Each geometry
//! encodes `σ(w)` exactly:
//!
//! | set | rows |
//! |-----|------|
//! | box `ρ` | `ρ Σ q_k`, `q_k ≥ ±w_k` |
//! | budget `ρ, Γ` | `Γ g + ρ Σ q_k`, `g ≥ ±(w_k − y_k)`, `q_k ≥ ±y_k`, `y` free |
//! | ball-box `ρ` | cone `‖ρ w‖₂ ≤ −base` |
//! | ellipsoid `μ, S, ρ` | cone `‖ρ Sᵀw‖₂ ≤ −base − μᵀw` |
//! | support `[L, U]` | `Uᵀβ − Lᵀα`, `β − α = w`, `α, β ≥ 0` |
//!
//! For semi-bounded supports the multiplier paired with an infinite bound is
//! fixed to zero (`α_k = 0` when `L_k = −∞`, `β_k = 0` when `U_k = +∞`); the
//! equality rows are kept as they are.
//!
//! The ball-box row uses the ball term alone. It is implied by the exact
//! ball∩box support and carries the same distribution-free guarantee.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{AffinePolicy, Mask, RobustConstraint, RobustLP};
use crate::program::{
    DetProgram, Fragment, Layout, LinExpr, LinRow, Provenance, Relation, SocRow, Variable,
};
use crate::solve::{self, SolverOptions, Status};
use crate::usets::UncertaintySet;

/// Label of the synthetic epigraph constraint.
pub const OBJECTIVE_LABEL: &str = "objective";

/// Counterpart of one robust constraint against `layout`.
pub fn rc_constraint(layout: &Layout, con: &RobustConstraint, set: &UncertaintySet) -> Result<Fragment> {
    let mut base = layout.z_dot(&con.a);
    base.constant -= con.b;
    let mut w = layout.v_transpose_times(&con.a);
    for (wk, dk) in w.iter_mut().zip(&con.d) {
        wk.constant -= dk;
    }
    robust_rows(layout.core_len(), &con.label, base, w, set)
}

/// Rows enforcing `base + max_{u ∈ set} wᵀu ≤ 0`. Auxiliary variables are
/// numbered from `aux_base`.
pub fn robust_rows(
    aux_base: usize,
    label: &str,
    base: LinExpr,
    w: Vec<LinExpr>,
    set: &UncertaintySet,
) -> Result<Fragment> {
    if let Some(dim) = set.dim() {
        crate::error::check_len(&format!("set of `{label}`"), dim, w.len())?;
    }
    if w.iter().all(|e| e.terms.is_empty()) {
        let direction: Vec<f64> = w.iter().map(|e| e.constant).collect();
        if set.support(&direction)? == f64::INFINITY {
            return Err(Error::UnboundedCounterpart {
                label: label.to_string(),
                reason: format!("worst case over the {} set is +inf", set.kind()),
            });
        }
    }
    let mut frag = Fragment::new(aux_base);
    let prov = |rule: &str| Provenance::new(label, rule);
    let p = w.len();
    match set {
        UncertaintySet::Box { rho } => {
            let mut main = base;
            for (k, wk) in w.iter().enumerate() {
                let q = frag.add_var(Variable::nonneg(format!("{label}.q[{k}]")));
                abs_bound(&mut frag, wk, q, &prov("box"));
                main.push(q, *rho);
            }
            frag.lin.push(LinRow::from_expr(main, Relation::Le, prov("box")));
        }
        UncertaintySet::Budget { rho, gamma } => {
            let g = frag.add_var(Variable::nonneg(format!("{label}.g")));
            let mut main = base;
            main.push(g, *gamma);
            for (k, wk) in w.iter().enumerate() {
                let y = frag.add_var(Variable::free(format!("{label}.y[{k}]")));
                let q = frag.add_var(Variable::nonneg(format!("{label}.q[{k}]")));
                let mut diff = wk.clone();
                diff.push(y, -1.0);
                abs_bound(&mut frag, &diff, g, &prov("budget"));
                abs_bound(&mut frag, &LinExpr::term(y, 1.0), q, &prov("budget"));
                main.push(q, *rho);
            }
            frag.lin.push(LinRow::from_expr(main, Relation::Le, prov("budget")));
        }
        UncertaintySet::BallBox { rho, .. } => {
            let r = base.scaled(-1.0);
            frag.lin.push(LinRow::from_expr(base, Relation::Le, prov("ball_box:r>=0")));
            frag.soc.push(SocRow {
                w: w.iter().map(|e| e.scaled(*rho)).collect(),
                r,
                provenance: prov("ball_box"),
            });
        }
        UncertaintySet::Ellipsoid(e) => {
            let mut lhs = base;
            for (wk, mk) in w.iter().zip(e.mu()) {
                lhs.add_scaled(wk, *mk);
            }
            let s = e.sigma_sqrt();
            let cone_w = (0..p)
                .map(|i| {
                    let mut out = LinExpr::default();
                    for (k, wk) in w.iter().enumerate() {
                        out.add_scaled(wk, e.rho() * s[(k, i)]);
                    }
                    out
                })
                .collect();
            frag.lin.push(LinRow::from_expr(lhs.clone(), Relation::Le, prov("ellipsoid:r>=0")));
            frag.soc.push(SocRow { w: cone_w, r: lhs.scaled(-1.0), provenance: prov("ellipsoid") });
        }
        UncertaintySet::BoundedSupport(b) => {
            let semi = !b.is_bounded();
            let rule = if semi { "semi_bounded_support" } else { "bounded_support" };
            let mut main = base;
            for (k, wk) in w.iter().enumerate() {
                let (l, u) = (b.lower()[k], b.upper()[k]);
                if l.is_infinite() && u.is_infinite() {
                    return Err(Error::UnboundedCounterpart {
                        label: label.to_string(),
                        reason: format!("coordinate {k} is unbounded in both directions"),
                    });
                }
                let alpha = frag.add_var(if l.is_finite() {
                    Variable::nonneg(format!("{label}.alpha[{k}]"))
                } else {
                    Variable::fixed(format!("{label}.alpha[{k}]"), 0.0)
                });
                let beta = frag.add_var(if u.is_finite() {
                    Variable::nonneg(format!("{label}.beta[{k}]"))
                } else {
                    Variable::fixed(format!("{label}.beta[{k}]"), 0.0)
                });
                // β − α − w = 0
                let mut eq = wk.scaled(-1.0);
                eq.push(beta, 1.0);
                eq.push(alpha, -1.0);
                frag.lin.push(LinRow::from_expr(eq, Relation::Eq, prov(rule)));
                if u.is_finite() {
                    main.push(beta, u);
                }
                if l.is_finite() {
                    main.push(alpha, -l);
                }
            }
            frag.lin.push(LinRow::from_expr(main, Relation::Le, prov(rule)));
        }
    }
    Ok(frag)
}

/// `±expr − bound ≤ 0`
fn abs_bound(frag: &mut Fragment, expr: &LinExpr, bound: usize, prov: &Provenance) {
    for sign in [1.0, -1.0] {
        let mut e = expr.scaled(sign);
        e.push(bound, -1.0);
        frag.lin.push(LinRow::from_expr(e, Relation::Le, prov.clone()));
    }
}

/// Deterministic reformulation of `lp` under the policy structure `mask`.
///
/// Emits, in order: the counterpart of every constraint, robust
/// non-negativity rows for adaptive variables, and the epigraph row
/// `t ≤ cᵀz − σ_obj(−Vᵀc)`. Static non-negative variables get a sign bound
/// on `z_j`. The objective is `max t`.
pub fn reformulate(lp: &RobustLP, mask: &Mask) -> Result<DetProgram> {
    let (n, p) = (lp.n(), lp.p());
    if mask.rows() != n || mask.cols() != p {
        return Err(Error::InvalidProblem(format!(
            "mask is {}x{}, problem needs {n}x{p}",
            mask.rows(),
            mask.cols()
        )));
    }
    let mut z_lower = vec![f64::NEG_INFINITY; n];
    for &j in lp.nonneg_vars() {
        if !mask.row_any(j) {
            z_lower[j] = 0.0;
        }
    }
    let mut prog = DetProgram::with_layout(lp.var_names(), mask, &z_lower);
    let layout = prog.layout.clone();

    let mut robust: Vec<RobustConstraint> = lp.constraints().to_vec();
    robust.extend(lp.adaptivity_induced_constraints(mask));
    let fragments: Vec<Fragment> = robust
        .par_iter()
        .map(|con| rc_constraint(&layout, con, lp.resolve(&con.set_id)?))
        .collect::<Result<_>>()?;
    for frag in fragments {
        prog.append(frag);
    }

    // −cᵀx(u) + t ≤ 0 for all u in the objective set.
    let neg_c: Vec<f64> = lp.objective().iter().map(|c| -c).collect();
    let mut base = layout.z_dot(&neg_c);
    base.push(layout.t, 1.0);
    let w = layout.v_transpose_times(&neg_c);
    let frag = robust_rows(
        prog.num_vars(),
        OBJECTIVE_LABEL,
        base,
        w,
        lp.resolve(lp.objective_set_id())?,
    )?;
    prog.append(frag);
    Ok(prog)
}

/// Worst case of `a x(u) − b − d u` over `set` at a fixed policy, computed by
/// solving the counterpart rows for their auxiliaries. Sign-infeasible
/// coefficients on a semi-bounded support come back as
/// [`Error::UnboundedCounterpart`].
pub fn counterpart_slack(
    con: &RobustConstraint,
    set: &UncertaintySet,
    policy: &AffinePolicy,
    opts: &SolverOptions,
) -> Result<f64> {
    let n = policy.n();
    crate::error::check_len("policy dimension", con.a.len(), n)?;
    let names: Vec<String> = (1..=n).map(|j| format!("x{j}")).collect();
    let mut prog = DetProgram::with_layout(&names, policy.mask(), &vec![f64::NEG_INFINITY; n]);
    let layout = prog.layout.clone();
    for (j, &zj) in policy.z().iter().enumerate() {
        prog.vars[layout.z[j]] = Variable::fixed(prog.vars[layout.z[j]].name.clone(), zj);
        for (k, slot) in layout.v[j].iter().enumerate() {
            if let Some(var) = *slot {
                prog.vars[var] = Variable::fixed(prog.vars[var].name.clone(), policy.v()[j][k]);
            }
        }
    }
    // aᵀz − b + t + σ(w) ≤ 0, maximize t.
    let mut base = layout.z_dot(&con.a);
    base.constant -= con.b;
    base.push(layout.t, 1.0);
    let mut w = layout.v_transpose_times(&con.a);
    for (wk, dk) in w.iter_mut().zip(&con.d) {
        wk.constant -= dk;
    }
    let frag = robust_rows(layout.core_len(), &con.label, base, w, set)?;
    prog.append(frag);
    prog.objective = LinExpr::term(layout.t, 1.0);
    let sol = solve::solve(&prog, opts);
    match sol.status {
        Status::Optimal => Ok(-sol.objective_value),
        Status::Infeasible => Err(Error::UnboundedCounterpart {
            label: con.label.clone(),
            reason: "no multipliers certify a finite worst case".into(),
        }),
        status => Err(Error::UnboundedCounterpart {
            label: con.label.clone(),
            reason: format!("solver returned {status:?}"),
        }),
    }
}
