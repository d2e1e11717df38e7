//! Dense-tableau two-phase primal simplex with Bland's rule.
//!
//! Variables with general bounds are mapped to non-negative tableau columns
//! (shift, reflection or a free split), finite ranges become extra rows.
//! Entering columns are chosen by smallest index among improving reduced
//! costs. The leaving row is the largest pivot among rows whose ratio is
//! within the feasibility tolerance of the minimum; exact ties go to the
//! basic column with the smallest index.

use crate::program::Relation;

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub pivot: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Outcome {
    Optimal { x: Vec<f64> },
    Infeasible,
    /// Feasible point and improving direction.
    Unbounded { x: Vec<f64>, ray: Vec<f64> },
    IterLimit { x: Option<Vec<f64>> },
}

#[derive(Debug, Clone, Copy)]
enum ColMap {
    Fixed(f64),
    /// `x = offset + s`
    Pos(usize, f64),
    /// `x = offset − s`
    Neg(usize, f64),
    /// `x = s⁺ − s⁻`
    Split(usize, usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum StdRel {
    Le,
    Ge,
    Eq,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    reduced: Vec<f64>,
    value: f64,
    /// Columns never allowed to enter.
    blocked: Vec<bool>,
    /// Negative basic values above `-clamp` are rounded to zero.
    clamp: f64,
}

enum Phase {
    Optimal,
    Unbounded(usize),
    IterLimit,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.reduced.len()
    }

    /// Reduced costs `c − c_Bᵀ T` and objective `c_Bᵀ b` for cost vector `c`.
    fn price(&mut self, cost: &[f64]) {
        self.reduced = cost.to_vec();
        self.value = 0.0;
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (r, t) in self.reduced.iter_mut().zip(&self.rows[i]) {
                    *r -= cb * t;
                }
                self.value += cb * self.rhs[i];
            }
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let piv = self.rows[r][col];
        for t in &mut self.rows[r] {
            *t /= piv;
        }
        self.rhs[r] /= piv;
        self.rows[r][col] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col];
            if f != 0.0 {
                for (t, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *t -= f * p;
                }
                self.rows[i][col] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -self.clamp {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.reduced[col];
        if f != 0.0 {
            for (t, p) in self.reduced.iter_mut().zip(&pivot_row) {
                *t -= f * p;
            }
            self.reduced[col] = 0.0;
            self.value += f * pivot_rhs;
        }
        self.basis[r] = col;
    }

    fn run(
        &mut self,
        tol: &Tolerances,
        pivots: &mut usize,
        max_pivots: usize,
        log: &mut dyn FnMut(&str),
        phase: u8,
    ) -> Phase {
        loop {
            let entering = (0..self.ncols()).find(|&j| !self.blocked[j] && self.reduced[j] > tol.optimality);
            let Some(col) = entering else {
                return Phase::Optimal;
            };
            // Harris ratio test: bound the step with rows relaxed by the
            // feasibility tolerance, then take the largest pivot within it.
            let mut bound = f64::INFINITY;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > tol.pivot {
                    bound = bound.min((self.rhs[i].max(0.0) + tol.feasibility) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= tol.pivot || self.rhs[i].max(0.0) / a > bound {
                    continue;
                }
                leave = match leave {
                    Some((bi, ba)) if a < ba || a == ba && self.basis[i] > self.basis[bi] => Some((bi, ba)),
                    _ => Some((i, a)),
                };
            }
            let Some((r, _)) = leave else {
                return Phase::Unbounded(col);
            };
            if *pivots >= max_pivots {
                return Phase::IterLimit;
            }
            *pivots += 1;
            log(&format!(
                "phase {phase} pivot {}: enter col {col}, leave col {} (row {r})",
                *pivots, self.basis[r]
            ));
            self.pivot(r, col);
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ncols()];
        for (i, &b) in self.basis.iter().enumerate() {
            x[b] = self.rhs[i];
        }
        x
    }
}

/// Maximizes `objᵀx` subject to `rows` and `lower ≤ x ≤ upper`.
pub(crate) fn solve(
    objective: &[f64],
    rows: &[Row],
    lower: &[f64],
    upper: &[f64],
    tol: &Tolerances,
    max_pivots: usize,
    log: &mut dyn FnMut(&str),
) -> (Outcome, usize) {
    let nvars = objective.len();
    let mut maps = Vec::with_capacity(nvars);
    let mut ns = 0usize;
    let mut range_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..nvars {
        let (l, u) = (lower[j], upper[j]);
        if l > u {
            return (Outcome::Infeasible, 0);
        }
        let m = if l == u {
            ColMap::Fixed(l)
        } else if l.is_finite() {
            if u.is_finite() {
                range_rows.push((ns, u - l));
            }
            ns += 1;
            ColMap::Pos(ns - 1, l)
        } else if u.is_finite() {
            ns += 1;
            ColMap::Neg(ns - 1, u)
        } else {
            ns += 2;
            ColMap::Split(ns - 2, ns - 1)
        };
        maps.push(m);
    }

    // Standard-form rows over structural columns.
    let mut std_rows: Vec<(Vec<f64>, StdRel, f64)> = Vec::with_capacity(rows.len() + range_rows.len());
    for row in rows {
        let mut dense = vec![0.0; ns];
        let mut rhs = row.rhs;
        for &(j, c) in &row.coeffs {
            match maps[j] {
                ColMap::Fixed(v) => rhs -= c * v,
                ColMap::Pos(s, off) => {
                    dense[s] += c;
                    rhs -= c * off;
                }
                ColMap::Neg(s, off) => {
                    dense[s] -= c;
                    rhs -= c * off;
                }
                ColMap::Split(a, b) => {
                    dense[a] += c;
                    dense[b] -= c;
                }
            }
        }
        let rel = match row.relation {
            Relation::Le => StdRel::Le,
            Relation::Eq => StdRel::Eq,
        };
        std_rows.push((dense, rel, rhs));
    }
    for (s, width) in range_rows {
        let mut dense = vec![0.0; ns];
        dense[s] = 1.0;
        std_rows.push((dense, StdRel::Le, width));
    }
    for (dense, rel, rhs) in &mut std_rows {
        if *rhs < 0.0 {
            dense.iter_mut().for_each(|v| *v = -*v);
            *rhs = -*rhs;
            *rel = match *rel {
                StdRel::Le => StdRel::Ge,
                StdRel::Ge => StdRel::Le,
                StdRel::Eq => StdRel::Eq,
            };
        }
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.1 != StdRel::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.1 != StdRel::Le).count();
    let ncols = ns + n_slack + n_art;
    let art_start = ns + n_slack;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        rhs: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        reduced: vec![0.0; ncols],
        value: 0.0,
        blocked: vec![false; ncols],
        clamp: tol.feasibility,
    };
    let (mut next_slack, mut next_art) = (ns, art_start);
    for (dense, rel, rhs) in std_rows {
        let mut row = dense;
        row.resize(ncols, 0.0);
        match rel {
            StdRel::Le => {
                row[next_slack] = 1.0;
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            StdRel::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
            StdRel::Eq => {
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
        tab.rhs.push(rhs);
    }

    let mut pivots = 0usize;
    let recover = |tab: &Tableau| map_back(&maps, &tab.column_values());

    if n_art > 0 {
        let cost: Vec<f64> = (0..ncols).map(|j| if j >= art_start { -1.0 } else { 0.0 }).collect();
        tab.price(&cost);
        match tab.run(tol, &mut pivots, max_pivots, log, 1) {
            Phase::IterLimit => return (Outcome::IterLimit { x: None }, pivots),
            Phase::Unbounded(_) => unreachable!("phase one objective is bounded by zero"),
            Phase::Optimal => {}
        }
        if -tab.value > tol.feasibility {
            log(&format!("phase 1 residual {:e}: infeasible", -tab.value));
            return (Outcome::Infeasible, pivots);
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| tab.rows[i][j].abs() > tol.pivot)
                    .fold(None, |best: Option<usize>, j| match best {
                        Some(b) if tab.rows[i][b].abs() >= tab.rows[i][j].abs() => Some(b),
                        _ => Some(j),
                    });
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.rows.remove(i);
                        tab.rhs.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for b in &mut tab.blocked[art_start..] {
            *b = true;
        }
    }

    let mut cost = vec![0.0; ncols];
    for (j, &c) in objective.iter().enumerate() {
        match maps[j] {
            ColMap::Fixed(_) => {}
            ColMap::Pos(s, _) => cost[s] += c,
            ColMap::Neg(s, _) => cost[s] -= c,
            ColMap::Split(a, b) => {
                cost[a] += c;
                cost[b] -= c;
            }
        }
    }
    tab.price(&cost);
    match tab.run(tol, &mut pivots, max_pivots, log, 2) {
        Phase::IterLimit => (Outcome::IterLimit { x: Some(recover(&tab)) }, pivots),
        Phase::Unbounded(col) => {
            let mut dir = vec![0.0; ncols];
            dir[col] = 1.0;
            for (i, &b) in tab.basis.iter().enumerate() {
                dir[b] = -tab.rows[i][col];
            }
            let ray = map_direction(&maps, &dir);
            (Outcome::Unbounded { x: recover(&tab), ray }, pivots)
        }
        Phase::Optimal => {
            (Outcome::Optimal { x: recover(&tab) }, pivots)
        }
    }
}

fn map_back(maps: &[ColMap], cols: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| match *m {
            ColMap::Fixed(v) => v,
            ColMap::Pos(s, off) => off + cols[s],
            ColMap::Neg(s, off) => off - cols[s],
            ColMap::Split(a, b) => cols[a] - cols[b],
        })
        .collect()
}

fn map_direction(maps: &[ColMap], dir: &[f64]) -> Vec<f64> {
    maps.iter()
        .map(|m| match *m {
            ColMap::Fixed(_) => 0.0,
            ColMap::Pos(s, _) => dir[s],
            ColMap::Neg(s, _) => -dir[s],
            ColMap::Split(a, b) => dir[a] - dir[b],
        })
        .collect()
}
