//! Command-line front end. Every subcommand returns an exit code:
//! 0 for a positive verdict, 1 for a negative one, 2 for parse and static
//! errors, 3 when the state cap is exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::boolean::{BoolCtx, Evaluation};
use crate::error::{Error, Result};
use crate::logic::{distinguish_in, parse_formula, parse_op_expr, Model};
use crate::oracle::{crosscheck, CrosscheckOptions};
use crate::semantics::{export_dot, export_json, Qlts, DEFAULT_STATE_CAP};
use crate::syntax::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_STATIC: i32 = 2;
pub const EXIT_CAP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "qsymb", version, about = "Symbolic bisimulation for quantum CCS with classical data")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Numerical tolerance; defaults to QSYMB_TOL or 1e-9.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = DEFAULT_STATE_CAP)]
    pub max_states: usize,
    /// Write the JSON report here.
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// Worker threads for the oracle.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Build the reachable qLTS of a term.
    Lts {
        file: PathBuf,
        term: String,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Compute the most general boolean for which two terms are bisimilar.
    Bisim {
        file: PathBuf,
        t: String,
        u: String,
        /// Dump the witnessing table.
        #[arg(long)]
        table: bool,
    },
    /// Crosscheck the symbolic verdict against the concrete semantics.
    Oracle {
        file: PathBuf,
        t: String,
        u: String,
        /// Condition restricting the sampled evaluations.
        #[arg(default_value = "true")]
        b: String,
        #[arg(long, default_value_t = 10)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Decide satisfaction of a formula at a snapshot.
    Logic {
        file: PathBuf,
        term: String,
        formula: String,
        /// Evaluation such as `x=1,y=0`.
        #[arg(long = "with", default_value = "")]
        with: String,
        /// Environment of the snapshot as an operator expression.
        #[arg(long, default_value = "I")]
        env: String,
    },
    /// Search for a formula telling two terms apart.
    Distinguish {
        file: PathBuf,
        t: String,
        u: String,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long = "with", default_value = "")]
        with: String,
    },
    /// Run the `checks` section of a program.
    Check { file: PathBuf },
}

/// Parses `args` and runs the chosen subcommand, writing human-readable
/// output to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_STATIC;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    if let Some(j) = cli.common.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::StateCapExceeded { .. } => EXIT_CAP,
                _ => EXIT_STATIC,
            }
        }
    }
}

fn io_err(p: &Path, e: std::io::Error) -> Error {
    Error::Static(format!("{}: {e}", p.display()))
}

fn load(file: &Path) -> Result<Program> {
    let src = fs::read_to_string(file).map_err(|e| io_err(file, e))?;
    let prog = parse_program(&src)?;
    if let Some(v) = well_formed(&prog).first() {
        return Err(Error::Static(v.to_string()));
    }
    Ok(prog)
}

fn operand(src: &str, prog: &mut Program) -> Result<Term> {
    let t = parse_term(src, prog)?;
    if let Some(v) = well_formed_term(&t, prog).first() {
        return Err(Error::Static(format!("{src}: {v}")));
    }
    Ok(t)
}

fn evaluation(src: &str) -> Result<Evaluation> {
    Ok(parse_evaluation(src)?.into_iter().collect())
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, v: &T) -> Result<()> {
    if let Some(p) = path {
        let s = serde_json::to_string_pretty(v).map_err(|e| Error::Static(e.to_string()))?;
        fs::write(p, s + "\n").map_err(|e| io_err(p, e))?;
    }
    Ok(())
}

impl Common {
    fn tol(&self) -> f64 {
        self.tol.filter(|t| *t > 0.0 && t.is_finite()).unwrap_or_else(crate::default_tol)
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Lts { file, term, dot } => {
            let mut prog = load(file)?;
            let t = operand(term, &mut prog)?;
            cmd_lts(&prog, &t, c, dot.as_deref(), out)
        }
        Cmd::Bisim { file, t, u, table } => {
            let mut prog = load(file)?;
            let (t, u) = (operand(t, &mut prog)?, operand(u, &mut prog)?);
            cmd_bisim(&prog, &t, &u, *table, c, out)
        }
        Cmd::Oracle { file, t, u, b, samples, seed } => {
            let mut prog = load(file)?;
            let (t, u) = (operand(t, &mut prog)?, operand(u, &mut prog)?);
            let b = parse_bexp(b, &mut prog)?;
            cmd_oracle(&prog, &t, &u, &b, *samples, *seed, c, out)
        }
        Cmd::Logic { file, term, formula, with, env } => {
            let mut prog = load(file)?;
            let t = operand(term, &mut prog)?;
            cmd_logic(&prog, &t, formula, &evaluation(with)?, env, c, out)
        }
        Cmd::Distinguish { file, t, u, depth, with } => {
            let mut prog = load(file)?;
            let (t, u) = (operand(t, &mut prog)?, operand(u, &mut prog)?);
            cmd_distinguish(&prog, &t, &u, *depth, &evaluation(with)?, c, out)
        }
        Cmd::Check { file } => cmd_check(file, c, out),
    }
}

fn wr(out: &mut dyn Write, s: std::fmt::Arguments<'_>) -> Result<()> {
    out.write_fmt(s).map_err(|e| Error::Static(e.to_string()))
}

macro_rules! say {
    ($out:expr, $($t:tt)*) => { wr($out, format_args!("{}\n", format_args!($($t)*)))? };
}

#[derive(Serialize)]
struct LtsReport<'a> {
    schema: &'static str,
    term: String,
    states: usize,
    transitions: usize,
    graph: &'a crate::semantics::QltsJson,
}

pub fn cmd_lts(prog: &Program, t: &Term, c: &Common, dot: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let mut q = Qlts::new(prog, c.tol(), c.max_states);
    let r = q.add_root(t.clone())?;
    q.explore(&[r])?;
    let ctx = BoolCtx::from_program(prog);
    let graph = export_json(&q, &[r], Some(&ctx))?;
    say!(out, "states: {}", graph.states.len());
    say!(out, "transitions: {}", graph.transitions.len());
    let report = LtsReport {
        schema: "qsymb.lts/1",
        term: t.to_string(),
        states: graph.states.len(),
        transitions: graph.transitions.len(),
        graph: &graph,
    };
    write_json(&c.json, &report)?;
    if let Some(p) = dot {
        fs::write(p, export_dot(&graph)).map_err(|e| io_err(p, e))?;
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TableRow {
    pair: (String, String),
    bexp: String,
}

#[derive(Serialize)]
struct BisimReport {
    schema: &'static str,
    theta: String,
    satisfiable: bool,
    valid: bool,
    quantum_input_free: bool,
    table: Vec<TableRow>,
    stats: crate::bisim::Stats,
}

pub fn cmd_bisim(prog: &Program, t: &Term, u: &Term, dump_table: bool, c: &Common, out: &mut dyn Write) -> Result<i32> {
    let ctx = BoolCtx::from_program(prog);
    let mut q = Qlts::new(prog, c.tol(), c.max_states);
    let a = q.add_root(t.clone())?;
    let b = q.add_root(u.clone())?;
    let r = crate::bisim::bisim(&mut q, &ctx, a, b)?;
    let satisfiable = ctx.satisfiable(&r.theta)?;
    let valid = ctx.valid(&r.theta)?;
    say!(out, "mgb: {}", r.theta);
    say!(out, "satisfiable: {satisfiable}");
    if !r.quantum_input_free {
        say!(out, "note: quantum input reachable, the verdict is a sufficient condition only");
    }
    let table: Vec<TableRow> = r
        .table
        .iter()
        .map(|((a, b), e)| TableRow { pair: (q.snapshot(*a).term.to_string(), q.snapshot(*b).term.to_string()), bexp: e.to_string() })
        .collect();
    if dump_table {
        for ((a, b), e) in r.table.iter() {
            say!(out, "  s{a} ~ s{b} when {e}");
        }
    }
    say!(out, "pairs visited: {}, snapshots: {}, time: {:.3}s", r.stats.pairs_visited, r.stats.snapshots, r.stats.wall_time.as_secs_f64());
    let report = BisimReport {
        schema: "qsymb.bisim/1",
        theta: r.theta.to_string(),
        satisfiable,
        valid,
        quantum_input_free: r.quantum_input_free,
        table,
        stats: r.stats.clone(),
    };
    write_json(&c.json, &report)?;
    Ok(if valid { EXIT_OK } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct OracleReport<'a> {
    schema: &'static str,
    #[serde(flatten)]
    report: &'a crate::oracle::CrosscheckReport,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_oracle(prog: &Program, t: &Term, u: &Term, b: &BExp, samples: usize, seed: u64, c: &Common, out: &mut dyn Write) -> Result<i32> {
    let opts = CrosscheckOptions { samples, seed, tol: c.tol(), cap: c.max_states };
    let r = crosscheck(prog, t, u, b, opts)?;
    if !r.quantum_input_free {
        say!(out, "warning: quantum input reachable, disagreements may be expected");
    }
    if r.unsatisfiable {
        say!(out, "condition {} is unsatisfiable, nothing sampled", r.condition);
    }
    say!(out, "mgb: {}", r.theta);
    say!(out, "agree: {}/{} (seed {})", r.agreements, r.samples, r.seed);
    write_json(&c.json, &OracleReport { schema: "qsymb.oracle/1", report: &r })?;
    Ok(if r.all_agree() && !r.unsatisfiable { EXIT_OK } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct LogicReport {
    schema: &'static str,
    formula: String,
    satisfied: bool,
    ill_kinded: Vec<String>,
}

pub fn cmd_logic(prog: &Program, t: &Term, formula: &str, psi: &Evaluation, env: &str, c: &Common, out: &mut dyn Write) -> Result<i32> {
    let phi = parse_formula(formula, prog)?;
    let env = parse_op_expr(env, prog)?;
    let mut q = Qlts::new(prog, c.tol(), c.max_states);
    let s = q.intern(t.clone(), env.op.clone())?;
    let mut m = Model::new(&mut q);
    let sat = m.sat(psi, s, &phi)?;
    let ill = m.ill_kinded().to_vec();
    say!(out, "{} {phi}", if sat { "⊨" } else { "⊭" });
    for n in &ill {
        say!(out, "ill-kinded: {n}");
    }
    write_json(&c.json, &LogicReport { schema: "qsymb.logic/1", formula: phi.to_string(), satisfied: sat, ill_kinded: ill })?;
    Ok(if sat { EXIT_OK } else { EXIT_NEGATIVE })
}

#[derive(Serialize)]
struct DistinguishReport {
    schema: &'static str,
    bound: usize,
    formula: Option<String>,
    depth: Option<usize>,
    left: Option<bool>,
    right: Option<bool>,
}

pub fn cmd_distinguish(prog: &Program, t: &Term, u: &Term, depth: usize, psi: &Evaluation, c: &Common, out: &mut dyn Write) -> Result<i32> {
    let mut q = Qlts::new(prog, c.tol(), c.max_states);
    let a = q.add_root(t.clone())?;
    let b = q.add_root(u.clone())?;
    q.explore(&[a, b])?;
    let w = distinguish_in(&mut q, psi, a, b, depth)?;
    let mut rep = DistinguishReport { schema: "qsymb.distinguish/1", bound: depth, formula: None, depth: None, left: None, right: None };
    let code = match &w {
        Some(w) => {
            say!(out, "witness (depth {}): {}", w.depth, w.formula);
            say!(out, "left: {}, right: {}", w.left, w.right);
            rep.formula = Some(w.formula.to_string());
            rep.depth = Some(w.depth);
            rep.left = Some(w.left);
            rep.right = Some(w.right);
            EXIT_NEGATIVE
        }
        None => {
            say!(out, "no distinguishing formula up to depth {depth}");
            EXIT_OK
        }
    };
    write_json(&c.json, &rep)?;
    Ok(code)
}

/// Runs every directive of the `checks` section; JSON output is written
/// only by the individual subcommands.
pub fn cmd_check(file: &Path, c: &Common, out: &mut dyn Write) -> Result<i32> {
    let prog = load(file)?;
    let quiet = Common { json: None, ..c.clone() };
    let mut worst = EXIT_OK;
    for d in &prog.checks {
        let names: Vec<String> = d.terms.iter().map(|t| t.to_string()).collect();
        say!(out, "== {} {}", serde_json::to_value(&d.kind).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default(), names.join(", "));
        let psi: Evaluation = d.psi.iter().cloned().collect();
        let code = match d.kind {
            CheckKind::Lts => cmd_lts(&prog, &d.terms[0], &quiet, None, out),
            CheckKind::Bisim => cmd_bisim(&prog, &d.terms[0], &d.terms[1], false, &quiet, out),
            CheckKind::Oracle => cmd_oracle(&prog, &d.terms[0], &d.terms[1], &TRUE, d.samples.unwrap_or(10), d.seed.unwrap_or(0), &quiet, out),
            CheckKind::Logic => cmd_logic(&prog, &d.terms[0], d.formula.as_deref().unwrap_or("true"), &psi, "I", &quiet, out),
        };
        let code = match code {
            Ok(k) => k,
            Err(e) => {
                say!(out, "error: {e}");
                match e {
                    Error::StateCapExceeded { .. } => EXIT_CAP,
                    _ => EXIT_STATIC,
                }
            }
        };
        worst = worst.max(code);
    }
    Ok(worst)
}
