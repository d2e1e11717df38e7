//! Solver for [`DetProgram`]s.
//!
//! Linear rows go to a dense two-phase simplex. Each cone row
//! `‖w(x)‖₂ ≤ r(x)` is replaced by an outer approximation that starts with the
//! `2·dim(w)` coordinate cuts `±w_k ≤ r` and is refined with gradient cuts
//! `gᵀ w(x) ≤ r(x)`, `g = w(x*)/‖w(x*)‖`, at every violated LP optimum `x*`.
//! When the relaxation is unbounded, the returned ray is checked against
//! each cone's recession condition and cut off the same way; only rays that
//! every cone admits are reported as [`Status::Unbounded`].

mod simplex;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::model::AffinePolicy;
use crate::program::{DetProgram, LinExpr, Relation};
use crate::usets::norm_2;

use simplex::{Outcome, Row, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_pivots: usize,
    pub max_cut_rounds: usize,
    /// Phase-one residual above which the LP is declared infeasible.
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality_tol: f64,
    /// A cone row is cut while `‖w‖ > r + soc_tol`.
    pub soc_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_pivots: 50_000,
            max_cut_rounds: 500,
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            soc_tol: 1e-7,
        }
    }
}

impl SolverOptions {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            feasibility: self.feasibility_tol,
            optimality: self.optimality_tol,
            pivot: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Solution {
    pub status: Status,
    /// `NaN` unless a point is attached.
    pub objective_value: f64,
    pub assignment: BTreeMap<String, f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub policy: Option<AffinePolicy>,
    pub cuts_added: usize,
    pub cut_rounds: usize,
    pub iterations: usize,
}

impl Solution {
    fn new(prog: &DetProgram, status: Status, values: Option<Vec<f64>>) -> Self {
        let mut sol = Self {
            status,
            objective_value: f64::NAN,
            assignment: BTreeMap::new(),
            values: Vec::new(),
            policy: None,
            cuts_added: 0,
            cut_rounds: 0,
            iterations: 0,
        };
        if let Some(x) = values {
            sol.objective_value = prog.objective.eval(&x);
            sol.assignment = prog.vars.iter().zip(&x).map(|(v, &val)| (v.name.clone(), val)).collect();
            sol.policy = extract_policy(prog, &x);
            sol.values = x;
        }
        sol
    }

    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

fn extract_policy(prog: &DetProgram, x: &[f64]) -> Option<AffinePolicy> {
    let layout = &prog.layout;
    let z = layout.z.iter().map(|&i| x[i]).collect();
    let v = layout
        .v
        .iter()
        .map(|row| row.iter().map(|e| e.map_or(0.0, |i| x[i])).collect())
        .collect();
    AffinePolicy::new(z, v, layout.mask.clone()).ok()
}

fn lin_rows(prog: &DetProgram) -> Vec<Row> {
    prog.lin
        .iter()
        .map(|r| Row { coeffs: r.expr.terms.clone(), relation: r.relation, rhs: r.rhs })
        .collect()
}

/// Row `Σ g_k w_k(x) − r(x) ≤ 0`.
fn cut_row(w: &[LinExpr], r: &LinExpr, g: &[f64]) -> Row {
    let mut e = LinExpr::default();
    for (wk, &gk) in w.iter().zip(g) {
        e.add_scaled(wk, gk);
    }
    e.add_scaled(r, -1.0);
    let e = e.compacted();
    Row { coeffs: e.terms, relation: Relation::Le, rhs: -e.constant }
}

/// Unit directions seeding the outer approximation of an `m`-dimensional
/// cone: 16 evenly spaced directions in the plane, otherwise `±e_i` and
/// `(±e_i ± e_j)/√2`.
fn initial_directions(m: usize) -> Vec<Vec<f64>> {
    if m == 2 {
        return (0..16)
            .map(|k| {
                let angle = std::f64::consts::PI * k as f64 / 8.0;
                vec![angle.cos(), angle.sin()]
            })
            .collect();
    }
    let mut dirs = Vec::new();
    for i in 0..m {
        for sign in [1.0, -1.0] {
            let mut g = vec![0.0; m];
            g[i] = sign;
            dirs.push(g);
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..m {
        for j in i + 1..m {
            for (si, sj) in [(h, h), (h, -h), (-h, h), (-h, -h)] {
                let mut g = vec![0.0; m];
                g[i] = si;
                g[j] = sj;
                dirs.push(g);
            }
        }
    }
    dirs
}

fn objective_vector(prog: &DetProgram) -> Vec<f64> {
    let mut c = vec![0.0; prog.num_vars()];
    for &(v, coef) in &prog.objective.terms {
        c[v] += coef;
    }
    c
}

fn run_lp(
    prog: &DetProgram,
    rows: &[Row],
    opts: &SolverOptions,
    pivots_left: usize,
    log: &mut dyn FnMut(&str),
) -> (Outcome, usize) {
    let lower: Vec<f64> = prog.vars.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = prog.vars.iter().map(|v| v.upper).collect();
    simplex::solve(&objective_vector(prog), rows, &lower, &upper, &opts.tolerances(), pivots_left, log)
}

/// Solves the linear rows only, ignoring cone rows.
pub fn solve_lp(prog: &DetProgram, opts: &SolverOptions) -> Solution {
    solve_lp_logged(prog, opts, &mut |_| {})
}

pub fn solve_lp_logged(prog: &DetProgram, opts: &SolverOptions, log: &mut dyn FnMut(&str)) -> Solution {
    let (outcome, pivots) = run_lp(prog, &lin_rows(prog), opts, opts.max_pivots, log);
    let mut sol = match outcome {
        Outcome::Optimal { x } => Solution::new(prog, Status::Optimal, Some(x)),
        Outcome::Infeasible => Solution::new(prog, Status::Infeasible, None),
        Outcome::Unbounded { x, .. } => Solution::new(prog, Status::Unbounded, Some(x)),
        Outcome::IterLimit { x } => Solution::new(prog, Status::IterLimit, x),
    };
    sol.iterations = pivots;
    sol
}

/// Solves the full program with the cutting-plane loop.
pub fn solve(prog: &DetProgram, opts: &SolverOptions) -> Solution {
    solve_logged(prog, opts, &mut |_| {})
}

pub fn solve_logged(prog: &DetProgram, opts: &SolverOptions, log: &mut dyn FnMut(&str)) -> Solution {
    if prog.soc.is_empty() {
        return solve_lp_logged(prog, opts, log);
    }
    let mut rows = lin_rows(prog);
    let mut cuts = 0usize;
    for soc in &prog.soc {
        for g in initial_directions(soc.w.len()) {
            rows.push(cut_row(&soc.w, &soc.r, &g));
            cuts += 1;
        }
    }
    let mut pivots = 0usize;
    let mut last: Option<Vec<f64>> = None;
    let finish = |status, x: Option<Vec<f64>>, cuts, rounds, pivots| {
        let mut sol = Solution::new(prog, status, x);
        sol.cuts_added = cuts;
        sol.cut_rounds = rounds;
        sol.iterations = pivots;
        sol
    };
    for round in 0..opts.max_cut_rounds {
        let budget = opts.max_pivots.saturating_sub(pivots);
        let (outcome, used) = run_lp(prog, &rows, opts, budget, &mut |s| log(s));
        pivots += used;
        let added_before = cuts;
        match outcome {
            Outcome::Infeasible => return finish(Status::Infeasible, None, cuts, round + 1, pivots),
            Outcome::IterLimit { x } => {
                return finish(Status::IterLimit, x.or(last), cuts, round + 1, pivots)
            }
            Outcome::Optimal { x } => {
                for (i, soc) in prog.soc.iter().enumerate() {
                    let w = soc.w_at(&x);
                    let norm = norm_2(&w);
                    let r = soc.r.eval(&x);
                    if norm > r + opts.soc_tol {
                        let g: Vec<f64> = w.iter().map(|v| v / norm).collect();
                        rows.push(cut_row(&soc.w, &soc.r, &g));
                        cuts += 1;
                        log(&format!("round {round}: cut cone s{i} (excess {:e})", norm - r));
                    }
                }
                if cuts == added_before {
                    log(&format!("round {round}: no violated cone rows"));
                    return finish(Status::Optimal, Some(x), cuts, round + 1, pivots);
                }
                last = Some(x);
            }
            Outcome::Unbounded { x, ray } => {
                let scale = norm_2(&ray).max(1.0);
                for (i, soc) in prog.soc.iter().enumerate() {
                    let wd: Vec<f64> = soc.w.iter().map(|e| e.eval_linear(&ray)).collect();
                    let norm = norm_2(&wd);
                    let rd = soc.r.eval_linear(&ray);
                    if norm > rd + 1e-9 * scale {
                        let g: Vec<f64> = wd.iter().map(|v| v / norm).collect();
                        rows.push(cut_row(&soc.w, &soc.r, &g));
                        cuts += 1;
                        log(&format!("round {round}: ray cut on cone s{i}"));
                    }
                }
                if cuts == added_before {
                    return finish(Status::Unbounded, Some(x), cuts, round + 1, pivots);
                }
                last = Some(x);
            }
        }
    }
    finish(Status::IterLimit, last, cuts, opts.max_cut_rounds, pivots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mask;
    use crate::program::{Fragment, LinRow, Provenance, SocRow, Variable};

    fn empty(n_extra: usize) -> (DetProgram, Vec<usize>) {
        let mut prog = DetProgram::with_layout(&[], &Mask::fixed(0, 0), &[]);
        let mut frag = Fragment::new(prog.layout.core_len());
        let ids = (0..n_extra).map(|i| frag.add_var(Variable::free(format!("x{i}")))).collect();
        prog.append(frag);
        (prog, ids)
    }

    fn row(terms: &[(usize, f64)], rel: Relation, rhs: f64) -> LinRow {
        LinRow {
            expr: LinExpr { terms: terms.to_vec(), constant: 0.0 },
            relation: rel,
            rhs,
            provenance: Provenance::new("test", "test"),
        }
    }

    #[test]
    fn bound_on_epigraph() {
        let (mut prog, _) = empty(0);
        prog.lin.push(row(&[(0, 1.0)], Relation::Le, 2.0));
        let sol = solve(&prog, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective_value - 2.0).abs() < 1e-12);
        assert_eq!(sol.cuts_added, 0);
    }

    #[test]
    fn infeasible_pair() {
        let (mut prog, x) = empty(1);
        prog.vars[x[0]].lower = 0.0;
        prog.lin.push(row(&[(x[0], 1.0)], Relation::Le, -1.0));
        prog.lin.push(row(&[(0, 1.0)], Relation::Le, 0.0));
        assert_eq!(solve(&prog, &SolverOptions::default()).status, Status::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let (mut prog, x) = empty(1);
        prog.lin.push(row(&[(0, 1.0), (x[0], -1.0)], Relation::Le, 0.0));
        assert_eq!(solve(&prog, &SolverOptions::default()).status, Status::Unbounded);
    }

    #[test]
    fn one_dimensional_cone() {
        // max t s.t. |t| <= 1
        let (mut prog, _) = empty(0);
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(0, 1.0)],
            r: LinExpr::constant(1.0),
            provenance: Provenance::new("test", "soc"),
        });
        let sol = solve(&prog, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective_value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn disc_needs_gradient_cuts() {
        // max t s.t. t <= x + y, ||(x, y)|| <= 1: optimum √2
        let (mut prog, x) = empty(2);
        prog.lin.push(row(&[(0, 1.0), (x[0], -1.0), (x[1], -1.0)], Relation::Le, 0.0));
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(x[0], 1.0), LinExpr::term(x[1], 1.0)],
            r: LinExpr::constant(1.0),
            provenance: Provenance::new("test", "soc"),
        });
        let sol = solve(&prog, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!((sol.objective_value - 2f64.sqrt()).abs() < 1e-6);
        assert!(sol.cuts_added > 4);
        let (lin, soc) = prog.max_violation(&sol.values);
        assert!(lin < 1e-7 && soc < 1e-6);
    }

    #[test]
    fn relaxation_ray_is_cut_off() {
        // max x + y − 1.5 s  s.t. ||(x, y)|| <= s. The coordinate-cut relaxation
        // has the ray x = y = s, which the cone excludes. Optimum is 0.
        let (mut prog, x) = empty(3);
        let (a, b, s) = (x[0], x[1], x[2]);
        prog.lin.push(row(&[(0, 1.0), (a, -1.0), (b, -1.0), (s, 1.5)], Relation::Le, 0.0));
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(a, 1.0), LinExpr::term(b, 1.0)],
            r: LinExpr::term(s, 1.0),
            provenance: Provenance::new("test", "soc"),
        });
        let sol = solve(&prog, &SolverOptions::default());
        assert_eq!(sol.status, Status::Optimal);
        assert!(sol.objective_value.abs() < 1e-6);
    }

    #[test]
    fn true_cone_ray_is_unbounded() {
        // max x + y − s with ||(x, y)|| <= s: ray (1,1,√2) gives (2 − √2) > 0
        let (mut prog, x) = empty(3);
        let (a, b, s) = (x[0], x[1], x[2]);
        prog.lin.push(row(&[(0, 1.0), (a, -1.0), (b, -1.0), (s, 1.0)], Relation::Le, 0.0));
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(a, 1.0), LinExpr::term(b, 1.0)],
            r: LinExpr::term(s, 1.0),
            provenance: Provenance::new("test", "soc"),
        });
        assert_eq!(solve(&prog, &SolverOptions::default()).status, Status::Unbounded);
    }

    #[test]
    fn iteration_limit() {
        let (mut prog, x) = empty(2);
        prog.lin.push(row(&[(0, 1.0), (x[0], -1.0), (x[1], -1.0)], Relation::Le, 0.0));
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(x[0], 1.0), LinExpr::term(x[1], 1.0)],
            r: LinExpr::constant(1.0),
            provenance: Provenance::new("test", "soc"),
        });
        let opts = SolverOptions { max_cut_rounds: 2, ..Default::default() };
        let sol = solve(&prog, &opts);
        assert_eq!(sol.status, Status::IterLimit);
        assert!(!sol.values.is_empty());
    }

    #[test]
    fn logging_is_deterministic() {
        let (mut prog, x) = empty(2);
        prog.lin.push(row(&[(0, 1.0), (x[0], -1.0), (x[1], -2.0)], Relation::Le, 0.0));
        prog.soc.push(SocRow {
            w: vec![LinExpr::term(x[0], 1.0), LinExpr::term(x[1], 1.0)],
            r: LinExpr::constant(1.0),
            provenance: Provenance::new("test", "soc"),
        });
        let run = || {
            let mut lines = Vec::new();
            let sol = solve_logged(&prog, &SolverOptions::default(), &mut |s| lines.push(s.to_string()));
            (lines, sol.values)
        };
        let (l1, v1) = run();
        let (l2, v2) = run();
        assert!(!l1.is_empty());
        assert_eq!(l1, l2);
        assert_eq!(v1, v2);
    }
}
