//! Command-line front end.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 infeasible (or an
//! unsatisfiable robust row), 3 unbounded, 4 iteration limit.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::guarantees::{default_eps_grid, path_csv, path_svg, regularization_path, Flavor};
use crate::io;
use crate::model::{AffinePolicy, RobustLP};
use crate::rc::reformulate;
use crate::sim::{simulate, CoordDist, Sampler};
use crate::solve::{solve_logged, Solution, SolverOptions, Status};
use crate::toy::{self, Variant};

#[derive(Debug, Parser)]
#[command(name = "aro", version, about = "Adaptive robust LPs with per-constraint uncertainty sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    /// Simplex pivot budget across all cut rounds.
    #[arg(long)]
    pub max_pivots: Option<usize>,
    #[arg(long)]
    pub max_cut_rounds: Option<usize>,
    #[arg(long)]
    pub feasibility_tol: Option<f64>,
    #[arg(long)]
    pub optimality_tol: Option<f64>,
    /// Cone rows are accepted once `‖w‖ ≤ r + soc_tol`.
    #[arg(long)]
    pub soc_tol: Option<f64>,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        let mut o = SolverOptions::default();
        if let Some(v) = self.max_pivots {
            o.max_pivots = v;
        }
        if let Some(v) = self.max_cut_rounds {
            o.max_cut_rounds = v;
        }
        if let Some(v) = self.feasibility_tol {
            o.feasibility_tol = v;
        }
        if let Some(v) = self.optimality_tol {
            o.optimality_tol = v;
        }
        if let Some(v) = self.soc_tol {
            o.soc_tol = v;
        }
        o
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the built-in two-period production-planning example.
    Toy {
        #[arg(value_enum)]
        variant: Variant,
        /// Report destination (`-` for stdout).
        #[arg(long, default_value = "-")]
        out: String,
        /// Also write the variant as a problem file.
        #[arg(long)]
        emit_problem: Option<PathBuf>,
    },
    /// Reformulate and solve a problem file; writes the solution as JSON.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value = "-")]
        out: String,
        /// Write the deterministic counterpart in LP format.
        #[arg(long)]
        lp: Option<PathBuf>,
        /// Write one line per pivot and cut.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Monte Carlo evaluation of a policy; writes long-format CSV.
    Simulate {
        #[arg(long)]
        problem: PathBuf,
        /// Policy file, or `solve` to solve the problem first.
        #[arg(long)]
        policy: String,
        /// Sampler file; defaults to Uniform(-2, 0) on every coordinate.
        #[arg(long)]
        sampler: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        /// Overrides the sampler file's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "-")]
        out: String,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Maximum feasible adaptivity against 1 − ε; writes CSV.
    Path {
        /// Comma-separated ε values in (0, 0.5]; defaults to a 16-point grid.
        #[arg(long)]
        eps: Option<String>,
        /// Nominal slack `b − aᵀz` of the row.
        #[arg(long, default_value_t = 1.0)]
        slack: f64,
        #[arg(long, default_value = "-")]
        out: String,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::UnboundedCounterpart { .. } => 2,
            _ => 1,
        };
        Self { code, message: e.to_string() }
    }
}

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Optimal => 0,
        Status::Infeasible => 2,
        Status::Unbounded => 3,
        Status::IterLimit => 4,
    }
}

fn write_out(dest: &str, content: &str) -> Result<()> {
    if dest == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(content.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Error::Io(format!("cannot write to stdout: {e}")))
    } else {
        write_path(Path::new(dest), content)
    }
}

fn write_path(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Io(format!("no such file: {}", path.display())))
    }
}

/// Trims noise like `2.9999999999` to `3` for human-readable reports.
pub fn fmt_num(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn policy_lines(policy: &AffinePolicy, names: &[String]) -> String {
    let mut out = String::new();
    for (j, name) in names.iter().enumerate() {
        let mut line = format!("  {name} = {}", fmt_num(policy.z()[j]));
        for k in 0..policy.p() {
            if policy.mask().get(j, k) {
                let coef = policy.v()[j][k];
                let sign = if coef < 0.0 { '-' } else { '+' };
                line.push_str(&format!(" {sign} {}*u{}", fmt_num(coef.abs()), k + 1));
            }
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn solve_problem(lp: &RobustLP, mask: &crate::model::Mask, opts: &SolverOptions) -> Result<(crate::program::DetProgram, Solution)> {
    let prog = reformulate(lp, mask)?;
    let sol = solve_logged(&prog, opts, &mut |_| {});
    Ok((prog, sol))
}

fn cmd_toy(variant: Variant, out: &str, emit: Option<&Path>) -> std::result::Result<i32, Exit> {
    let lp = toy::problem(variant);
    let mask = toy::mask(variant);
    if let Some(path) = emit {
        write_path(path, &io::problem_to_json(&lp, &mask))?;
    }
    let (_, sol) = solve_problem(&lp, &mask, &SolverOptions::default())?;
    let mut report = format!("variant: {}\nstatus: {}\n", variant.name(), status_name(sol.status));
    if let Some(policy) = sol.policy.as_ref().filter(|_| sol.is_optimal()) {
        report.push_str(&format!("objective: {}\npolicy:\n", fmt_num(sol.objective_value)));
        report.push_str(&policy_lines(policy, lp.var_names()));
    }
    write_out(out, &report)?;
    Ok(if sol.is_optimal() { 0 } else { 2 })
}

fn status_name(status: Status) -> &'static str {
    match status {
        Status::Optimal => "optimal",
        Status::Infeasible => "infeasible",
        Status::Unbounded => "unbounded",
        Status::IterLimit => "iteration_limit",
    }
}

fn cmd_solve(
    problem: &Path,
    out: &str,
    lp_path: Option<&Path>,
    log_path: Option<&Path>,
    opts: &SolverOptions,
) -> std::result::Result<i32, Exit> {
    require_file(problem)?;
    let parsed = io::read_problem(problem)?;
    let prog = reformulate(&parsed.lp, &parsed.mask)?;
    if let Some(path) = lp_path {
        write_path(path, &prog.to_lp_format())?;
    }
    let mut log = String::new();
    let sol = solve_logged(&prog, opts, &mut |line| {
        log.push_str(line);
        log.push('\n');
    });
    if let Some(path) = log_path {
        write_path(path, &log)?;
    }
    write_out(out, &io::solution_to_json(&sol, &prog, parsed.lp.var_names()))?;
    Ok(status_code(sol.status))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    problem: &Path,
    policy: &str,
    sampler: Option<&Path>,
    n: usize,
    seed: Option<u64>,
    out: &str,
    threads: Option<usize>,
    opts: &SolverOptions,
) -> std::result::Result<i32, Exit> {
    require_file(problem)?;
    if policy != "solve" {
        require_file(Path::new(policy))?;
    }
    if let Some(path) = sampler {
        require_file(path)?;
    }
    let parsed = io::read_problem(problem)?;
    let policy = if policy == "solve" {
        let (_, sol) = solve_problem(&parsed.lp, &parsed.mask, opts)?;
        match (sol.status, sol.policy) {
            (Status::Optimal, Some(p)) => p,
            (status, _) => {
                return Err(Exit {
                    code: status_code(status),
                    message: format!("solver finished with status {}", status_name(status)),
                })
            }
        }
    } else {
        io::read_policy(Path::new(policy))?
    };
    let mut sampler = match sampler {
        Some(path) => io::read_sampler(path)?,
        None => Sampler::new(vec![CoordDist::Uniform { lower: -2.0, upper: 0.0 }; parsed.lp.p()], 0)?,
    };
    if let Some(seed) = seed {
        sampler = sampler.with_seed(seed);
    }
    let run = || simulate(&parsed.lp, &policy, &sampler, n);
    let report = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Io(format!("cannot start thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    for w in &report.warnings {
        eprintln!("warning: {}: {}", w.label, w.message);
    }
    write_out(out, &report.to_csv())?;
    Ok(0)
}

fn parse_eps(list: &str) -> Result<Vec<f64>> {
    if list.trim().is_empty() {
        return Ok(Vec::new());
    }
    list.split(',')
        .map(str::trim)
        .map(|s| s.parse::<f64>().map_err(|_| Error::Domain(format!("not a number in --eps: `{s}`"))))
        .collect()
}

fn cmd_path(eps: Option<&str>, slack: f64, out: &str, svg: Option<&Path>) -> std::result::Result<i32, Exit> {
    let grid = match eps {
        Some(list) => parse_eps(list)?,
        None => default_eps_grid(),
    };
    let rows = regularization_path(&[Flavor::GaussianEllipsoid, Flavor::BallBoxDistFree], &grid, slack, 0)?;
    write_out(out, &path_csv(&rows))?;
    if let Some(path) = svg {
        write_path(path, &path_svg(&rows))?;
    }
    Ok(0)
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Toy { variant, out, emit_problem } => cmd_toy(variant, &out, emit_problem.as_deref()),
        Command::Solve { problem, out, lp, log, solver } => {
            cmd_solve(&problem, &out, lp.as_deref(), log.as_deref(), &solver.options())
        }
        Command::Simulate { problem, policy, sampler, n, seed, out, threads, solver } => cmd_simulate(
            &problem,
            &policy,
            sampler.as_deref(),
            n,
            seed,
            &out,
            threads,
            &solver.options(),
        ),
        Command::Path { eps, slack, out, svg } => cmd_path(eps.as_deref(), slack, &out, svg.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(exit) => {
            eprintln!("error: {}", exit.message);
            exit.code
        }
    }
}

/// Parses `args` (including the program name) and runs; usage errors exit 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
