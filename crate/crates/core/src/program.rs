//! Deterministic programs produced by robust-counterpart reformulation.
//!
//! A [`DetProgram`] maximizes a linear objective subject to linear rows,
//! second-order-cone rows `‖w(x)‖₂ ≤ r(x)` and simple variable bounds. The
//! first variables always follow a fixed [`Layout`]: the `n` entries of `z`,
//! the free entries of `V` in row-major mask order, then the epigraph scalar
//! `t`. Auxiliary variables of individual counterparts follow.
//!
//! # LP listing grammar
//!
//! [`DetProgram::to_lp_format`] writes the CPLEX-LP dialect understood by most
//! external solvers:
//!
//! ```text
//! \ comment lines start with a backslash (variable map, provenance)
//! Maximize
//!  obj: <linear expression>
//! Subject To
//!  r<i>: <linear expression> <= | = <rhs>
//!  s<i>_w<k>: <w_k expression> - s<i>_w<k> = <−constant>     (cone auxiliaries)
//!  s<i>: [ s<i>_w0 ^ 2 + ... - s<i>_r ^ 2 ] <= 0
//! Bounds
//!  v<j> free | <lo> <= v<j> <= <hi> | v<j> = <value>
//! End
//! ```
//!
//! Variables are renamed `v<j>` by index; the header comment maps each index
//! to its descriptive name.

use std::fmt::Write as _;

use crate::model::Mask;

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn free(name: impl Into<String>) -> Self {
        Self { name: name.into(), lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    pub fn nonneg(name: impl Into<String>) -> Self {
        Self { name: name.into(), lower: 0.0, upper: f64::INFINITY }
    }

    pub fn fixed(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), lower: value, upper: value }
    }
}

/// Affine expression `Σ coef·x_var + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn term(var: usize, coef: f64) -> Self {
        Self { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn push(&mut self, var: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) {
        for &(v, c) in &other.terms {
            self.push(v, c * scale);
        }
        self.constant += other.constant * scale;
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::default();
        out.add_scaled(self, scale);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    /// Value of the linear part only (direction derivative along `x`).
    pub fn eval_linear(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Merges duplicate variables and drops zero coefficients, sorted by index.
    pub fn compacted(&self) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        LinExpr { terms: out, constant: self.constant }
    }

    fn shift(&mut self, base: usize, offset: usize) {
        for t in &mut self.terms {
            if t.0 >= base {
                t.0 += offset;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// Where a generated row came from.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Provenance {
    pub source: String,
    pub rule: String,
}

impl Provenance {
    pub fn new(source: impl Into<String>, rule: impl Into<String>) -> Self {
        Self { source: source.into(), rule: rule.into() }
    }
}

/// `expr (≤ | =) rhs`; `expr` carries no constant.
#[derive(Debug, Clone, PartialEq)]
pub struct LinRow {
    pub expr: LinExpr,
    pub relation: Relation,
    pub rhs: f64,
    pub provenance: Provenance,
}

impl LinRow {
    /// Row `expr (rel) 0` with the expression constant moved to the right.
    pub fn from_expr(expr: LinExpr, relation: Relation, provenance: Provenance) -> Self {
        let rhs = -expr.constant;
        let expr = LinExpr { constant: 0.0, ..expr.compacted() };
        Self { expr, relation, rhs, provenance }
    }

    /// Signed violation at `x` (positive means violated).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.expr.eval(x);
        match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `‖w(x)‖₂ ≤ r(x)`
#[derive(Debug, Clone, PartialEq)]
pub struct SocRow {
    pub w: Vec<LinExpr>,
    pub r: LinExpr,
    pub provenance: Provenance,
}

impl SocRow {
    pub fn w_at(&self, x: &[f64]) -> Vec<f64> {
        self.w.iter().map(|e| e.eval(x)).collect()
    }

    /// `‖w(x)‖ − r(x)`
    pub fn violation(&self, x: &[f64]) -> f64 {
        crate::usets::norm_2(&self.w_at(x)) - self.r.eval(x)
    }
}

/// Indices of the policy variables and the epigraph scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub n: usize,
    pub p: usize,
    pub mask: Mask,
    pub z: Vec<usize>,
    pub v: Vec<Vec<Option<usize>>>,
    pub t: usize,
}

impl Layout {
    /// Number of variables the layout owns; auxiliaries start here.
    pub fn core_len(&self) -> usize {
        self.t + 1
    }

    /// `Σ_j a_j V[j][k]` for each k.
    pub fn v_transpose_times(&self, a: &[f64]) -> Vec<LinExpr> {
        (0..self.p)
            .map(|k| {
                let mut e = LinExpr::default();
                for (j, &aj) in a.iter().enumerate() {
                    if let Some(var) = self.v[j][k] {
                        e.push(var, aj);
                    }
                }
                e
            })
            .collect()
    }

    /// `Σ_j a_j z_j`
    pub fn z_dot(&self, a: &[f64]) -> LinExpr {
        let mut e = LinExpr::default();
        for (j, &aj) in a.iter().enumerate() {
            e.push(self.z[j], aj);
        }
        e
    }
}

/// Rows and auxiliaries generated for one robust constraint. Variable indices
/// below `base` refer to the program layout; indices from `base` upward refer
/// to `aux` in order.
#[derive(Debug, Clone, Default)]
pub struct Fragment {
    pub base: usize,
    pub aux: Vec<Variable>,
    pub lin: Vec<LinRow>,
    pub soc: Vec<SocRow>,
}

impl Fragment {
    pub fn new(base: usize) -> Self {
        Self { base, ..Default::default() }
    }

    pub fn add_var(&mut self, var: Variable) -> usize {
        self.aux.push(var);
        self.base + self.aux.len() - 1
    }
}

#[derive(Debug, Clone)]
pub struct DetProgram {
    pub vars: Vec<Variable>,
    pub lin: Vec<LinRow>,
    pub soc: Vec<SocRow>,
    /// Maximized.
    pub objective: LinExpr,
    pub layout: Layout,
}

impl DetProgram {
    /// Empty program holding only the layout variables, with objective `max t`.
    /// `names` labels the decision variables.
    pub fn with_layout(names: &[String], mask: &Mask, z_lower: &[f64]) -> Self {
        let n = names.len();
        let p = mask.cols();
        let mut vars = Vec::new();
        let z = (0..n)
            .map(|j| {
                vars.push(Variable { lower: z_lower[j], ..Variable::free(format!("z[{}]", names[j])) });
                vars.len() - 1
            })
            .collect();
        let v = (0..n)
            .map(|j| {
                (0..p)
                    .map(|k| {
                        mask.get(j, k).then(|| {
                            vars.push(Variable::free(format!("V[{},u{}]", names[j], k + 1)));
                            vars.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        vars.push(Variable::free("t"));
        let t = vars.len() - 1;
        Self {
            vars,
            lin: Vec::new(),
            soc: Vec::new(),
            objective: LinExpr::term(t, 1.0),
            layout: Layout { n, p, mask: mask.clone(), z, v, t },
        }
    }

    /// Appends a fragment built against this program's layout.
    pub fn append(&mut self, mut frag: Fragment) {
        let offset = self.vars.len() - frag.base;
        let base = frag.base;
        self.vars.append(&mut frag.aux);
        for mut row in frag.lin {
            row.expr.shift(base, offset);
            self.lin.push(row);
        }
        for mut row in frag.soc {
            for e in &mut row.w {
                e.shift(base, offset);
            }
            row.r.shift(base, offset);
            self.soc.push(row);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// Largest violation of linear rows and bounds, and of cone rows, at `x`.
    pub fn max_violation(&self, x: &[f64]) -> (f64, f64) {
        let lin = self
            .lin
            .iter()
            .map(|r| r.violation(x))
            .chain(self.vars.iter().zip(x).map(|(v, &xv)| (v.lower - xv).max(xv - v.upper)))
            .fold(0.0_f64, f64::max);
        let soc = self.soc.iter().map(|r| r.violation(x)).fold(0.0_f64, f64::max);
        (lin, soc)
    }

    fn fmt_expr(&self, e: &LinExpr, name: &dyn Fn(usize) -> String) -> String {
        let mut s = String::new();
        for (i, &(v, c)) in e.terms.iter().enumerate() {
            if i == 0 {
                let _ = write!(s, "{} {}", c, name(v));
            } else if c < 0.0 {
                let _ = write!(s, " - {} {}", -c, name(v));
            } else {
                let _ = write!(s, " + {} {}", c, name(v));
            }
        }
        if e.terms.is_empty() {
            s.push('0');
        }
        s
    }

    /// Human-readable listing with provenance of every row.
    pub fn to_text(&self) -> String {
        let name = |v: usize| self.vars[v].name.clone();
        let mut out = String::new();
        let _ = writeln!(out, "maximize {}", self.fmt_expr(&self.objective.compacted(), &name));
        let _ = writeln!(out, "variables ({}):", self.vars.len());
        for v in &self.vars {
            let _ = writeln!(out, "  {} in [{}, {}]", v.name, v.lower, v.upper);
        }
        let _ = writeln!(out, "linear rows ({}):", self.lin.len());
        for (i, r) in self.lin.iter().enumerate() {
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = writeln!(
                out,
                "  r{i}: {} {rel} {}    # {} / {}",
                self.fmt_expr(&r.expr, &name),
                r.rhs,
                r.provenance.source,
                r.provenance.rule
            );
        }
        let _ = writeln!(out, "cone rows ({}):", self.soc.len());
        for (i, r) in self.soc.iter().enumerate() {
            let ws: Vec<String> = r
                .w
                .iter()
                .map(|e| format!("{} + {}", self.fmt_expr(&e.compacted(), &name), e.constant))
                .collect();
            let _ = writeln!(
                out,
                "  s{i}: || ({}) || <= {} + {}    # {} / {}",
                ws.join(", "),
                self.fmt_expr(&r.r.compacted(), &name),
                r.r.constant,
                r.provenance.source,
                r.provenance.rule
            );
        }
        out
    }

    /// CPLEX-LP style listing; see the module docs for the grammar.
    pub fn to_lp_format(&self) -> String {
        let name = |v: usize| format!("v{v}");
        let mut out = String::new();
        for (j, v) in self.vars.iter().enumerate() {
            let _ = writeln!(out, "\\ v{j} = {}", v.name);
        }
        let _ = writeln!(out, "Maximize");
        let _ = writeln!(out, " obj: {}", self.fmt_expr(&self.objective.compacted(), &name));
        let _ = writeln!(out, "Subject To");
        for (i, r) in self.lin.iter().enumerate() {
            let rel = match r.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, "\\ {} / {}", r.provenance.source, r.provenance.rule);
            let _ = writeln!(out, " r{i}: {} {rel} {}", self.fmt_expr(&r.expr, &name), r.rhs);
        }
        let mut extra_bounds = Vec::new();
        for (i, r) in self.soc.iter().enumerate() {
            let _ = writeln!(out, "\\ {} / {}", r.provenance.source, r.provenance.rule);
            let mut squares = Vec::new();
            for (k, e) in r.w.iter().enumerate() {
                let aux = format!("s{i}_w{k}");
                let c = e.compacted();
                let lhs = if c.terms.is_empty() {
                    format!("- {aux}")
                } else {
                    format!("{} - {aux}", self.fmt_expr(&c, &name))
                };
                let _ = writeln!(out, " s{i}_w{k}: {lhs} = {}", -c.constant);
                squares.push(format!("{aux} ^ 2"));
                extra_bounds.push(format!(" {aux} free"));
            }
            let aux_r = format!("s{i}_r");
            let c = r.r.compacted();
            let lhs = if c.terms.is_empty() {
                format!("- {aux_r}")
            } else {
                format!("{} - {aux_r}", self.fmt_expr(&c, &name))
            };
            let _ = writeln!(out, " s{i}_r: {lhs} = {}", -c.constant);
            let _ = writeln!(out, " s{i}: [ {} - {aux_r} ^ 2 ] <= 0", squares.join(" + "));
            extra_bounds.push(format!(" {aux_r} >= 0"));
        }
        let _ = writeln!(out, "Bounds");
        for (j, v) in self.vars.iter().enumerate() {
            let line = match (v.lower.is_finite(), v.upper.is_finite()) {
                (false, false) => format!(" v{j} free"),
                (true, true) if v.lower == v.upper => format!(" v{j} = {}", v.lower),
                (true, true) => format!(" {} <= v{j} <= {}", v.lower, v.upper),
                (true, false) => format!(" v{j} >= {}", v.lower),
                (false, true) => format!(" -inf <= v{j} <= {}", v.upper),
            };
            let _ = writeln!(out, "{line}");
        }
        for b in extra_bounds {
            let _ = writeln!(out, "{b}");
        }
        let _ = writeln!(out, "End");
        out
    }
}
