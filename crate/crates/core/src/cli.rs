//! Command line front end: `run`, `sweep` and `verify`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::planner::{
    build_blocklength_subproblem, build_power_subproblem, build_trajectory_subproblem,
    check_constraints, initial_feasible, run_scheme, surrogate_bits, ConstraintReport, Hop,
    PowerHopConstants, RunOptions, RunResult, Scheme,
};
use crate::radio::{q_inv, slot_snrs};
use crate::scenario::{load_scenario, validate, Scenario};
use crate::sca::{
    a0, a1, f_lb, tangent_of_concave, ConcaveFn, ConstraintAtom, ConvexProgram, LinExpr, LogTerm,
};
use crate::secrecy::{east, mc_uplink_rate, slot_rates, uplink_rate_lb};
use crate::solver::{check_feasibility, solve, SolveStatus, SolverOptions};

/// Environment variable holding the log filter (e.g. `info`, `spc_relay=debug`).
pub const LOG_ENV: &str = "SPC_RELAY_LOG";

pub const TRACE_HEADER: &str = "iteration,east";
pub const PROFILE_HEADER: &str =
    "slot,x,y,z,v_xy,v_z,p_a,p_r,l_u,l_d,r_u_fbl,r_d_fbl,r_u_inf,r_d_inf,b_s";
pub const SWEEP_HEADER: &str = "value,scheme,east,iterations,converged,wall_time_s,error";

#[derive(Debug, Parser)]
#[command(name = "spc-relay", version, about = "Secrecy-throughput planning for a UAV short-packet relay")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one scenario and write trace.csv, profiles.csv and result.json.
    Run(RunArgs),
    /// Re-run a scenario over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Run bound audits, tangency checks and solver micro-oracles.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML); missing keys take their default values.
    pub scenario: PathBuf,
    #[arg(long, default_value = "jtrd")]
    pub scheme: Scheme,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the scenario's `rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub scenario: PathBuf,
    /// Sweep specification (TOML with `key`, `values`, `schemes`).
    pub spec: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Number of cells solved concurrently (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Eve positions drawn by the bound audit.
    #[arg(long, default_value_t = 10_000)]
    pub eve_samples: usize,
}

impl clap::ValueEnum for Scheme {
    fn value_variants<'a>() -> &'a [Self] {
        &Scheme::ALL
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(self.as_str()))
    }
}

/// Parse arguments, run the command and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}

/// One-line JSON description of an error.
pub fn error_record(e: &Error) -> String {
    let mut rec = serde_json::json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    });
    if let Error::Validation(v) = e {
        rec["violations"] = serde_json::to_value(v).unwrap_or_default();
    }
    rec.to_string()
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(a) => {
            let s = scenario_with_seed(&a.scenario, a.seed)?;
            let res = cmd_run(&s, a.scheme, &a.out)?;
            println!("{} EAST {:.6} bits/s after {} iterations", res.scheme, res.east, res.iterations());
            Ok(0)
        }
        Command::Sweep(a) => {
            let s = scenario_with_seed(&a.scenario, a.seed)?;
            let spec = load_sweep_spec(&a.spec)?;
            let cells = cmd_sweep(&s, &spec, &a.out, a.jobs)?;
            let failed = cells.iter().filter(|c| c.error.is_some()).count();
            println!("{} cells, {failed} failed", cells.len());
            Ok(0)
        }
        Command::Verify(a) => {
            let s = scenario_with_seed(&a.scenario, a.seed)?;
            let checks = cmd_verify(&s, a.eve_samples);
            print!("{}", format_checks(&checks));
            Ok(if checks.iter().all(|c| c.passed) { 0 } else { 4 })
        }
    }
}

fn scenario_with_seed(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut s = load_scenario(path)?;
    if let Some(seed) = seed {
        s.rng_seed = seed;
    }
    Ok(s)
}

/// Write `contents` to `path` through a temporary file and a rename.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn trace_csv(r: &RunResult) -> String {
    let mut o = format!("{TRACE_HEADER}\n");
    for (i, e) in r.trace.east.iter().enumerate() {
        let _ = writeln!(o, "{i},{e}");
    }
    o
}

pub fn profiles_csv(r: &RunResult) -> String {
    let mut o = format!("{PROFILE_HEADER}\n");
    for p in &r.profiles {
        let _ = writeln!(
            o,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.slot, p.x, p.y, p.z, p.v_xy, p.v_z, p.p_a, p.p_r, p.l_u, p.l_d, p.r_u_fbl, p.r_d_fbl,
            p.r_u_inf, p.r_d_inf, p.b_s
        );
    }
    o
}

#[derive(Debug, Serialize)]
struct ResultDoc<'a> {
    scheme: Scheme,
    east: f64,
    initial_east: f64,
    status: &'static str,
    converged: bool,
    iterations: usize,
    wall_time_s: f64,
    block_time_s: BlockTimes,
    constraints: ConstraintReport,
    trace: &'a crate::planner::IterationTrace,
}

#[derive(Debug, Default, Serialize)]
struct BlockTimes {
    power: f64,
    blocklength: f64,
    trajectory: f64,
}

pub fn result_json(s: &Scenario, r: &RunResult) -> String {
    let mut times = BlockTimes::default();
    for it in &r.trace.iterations {
        for b in &it.blocks {
            let slot = match b.block {
                crate::planner::Block::Power => &mut times.power,
                crate::planner::Block::Blocklength => &mut times.blocklength,
                crate::planner::Block::Trajectory => &mut times.trajectory,
            };
            *slot += b.wall_time_s;
        }
    }
    let doc = ResultDoc {
        scheme: r.scheme,
        east: r.east,
        initial_east: r.initial_east,
        status: if r.converged { "converged" } else { "max_iterations" },
        converged: r.converged,
        iterations: r.iterations(),
        wall_time_s: r.wall_time_s,
        block_time_s: times,
        constraints: check_constraints(s, &r.variables),
        trace: &r.trace,
    };
    serde_json::to_string_pretty(&doc).unwrap_or_default() + "\n"
}

/// Run one scheme and write its artifacts into `out`.
pub fn cmd_run(s: &Scenario, scheme: Scheme, out: &Path) -> Result<RunResult> {
    fs::create_dir_all(out)?;
    let r = run_scheme(s, scheme, &RunOptions::default())?;
    write_atomic(&out.join("trace.csv"), &trace_csv(&r))?;
    write_atomic(&out.join("profiles.csv"), &profiles_csv(&r))?;
    write_atomic(&out.join("result.json"), &result_json(s, &r))?;
    Ok(r)
}

/// Scenario keys a sweep may vary.
pub const SWEEP_KEYS: [&str; 6] = ["l_max", "eve_uncertainty", "mission_time", "eps_r", "eps_b", "eta_e"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<f64>,
    pub schemes: Vec<String>,
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec> {
    parse_sweep_spec(&fs::read_to_string(path)?)
}

/// `base` with the swept key set to `value`.
pub fn apply_sweep_value(base: &Scenario, key: &str, value: f64) -> Result<Scenario> {
    let mut s = base.clone();
    match key {
        "l_max" => {
            if !(value.fract() == 0.0 && value >= 0.0 && value <= u32::MAX as f64) {
                return Err(Error::Validation(vec![Violation::new("l_max", format!("{value} is not an integer"))]));
            }
            s.l_max = value as u32;
        }
        "eve_uncertainty" => s.eve_uncertainty = value,
        "mission_time" => s = s.with_timing(value, base.slot_duration),
        "eps_r" => s.eps_r = value,
        "eps_b" => s.eps_b = value,
        "eta_e" => s.eta_e = value,
        other => {
            return Err(Error::Validation(vec![Violation::new(
                "key",
                format!("`{other}` cannot be swept (allowed: {})", SWEEP_KEYS.join(", ")),
            )]))
        }
    }
    let v = validate(&s);
    if v.is_empty() {
        Ok(s)
    } else {
        Err(Error::Validation(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub value: f64,
    pub scheme: Scheme,
    pub east: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

fn check_sweep(base: &Scenario, spec: &SweepSpec) -> Result<(Vec<Scenario>, Vec<Scheme>)> {
    let mut v = Vec::new();
    if spec.values.is_empty() {
        v.push(Violation::new("values", "must not be empty"));
    }
    if spec.schemes.is_empty() {
        v.push(Violation::new("schemes", "must not be empty"));
    }
    let mut schemes = Vec::new();
    for name in &spec.schemes {
        match name.parse::<Scheme>() {
            Ok(s) => schemes.push(s),
            Err(e) => v.push(Violation::new("schemes", e.to_string())),
        }
    }
    let mut scenarios = Vec::new();
    for &x in &spec.values {
        match apply_sweep_value(base, &spec.key, x) {
            Ok(s) => scenarios.push(s),
            Err(Error::Validation(mut inner)) => {
                for w in &mut inner {
                    w.message = format!("with {} = {x}: {}", spec.key, w.message);
                }
                v.extend(inner);
            }
            Err(e) => return Err(e),
        }
    }
    if v.is_empty() {
        Ok((scenarios, schemes))
    } else {
        Err(Error::Validation(v))
    }
}

/// Run every (value, scheme) cell and write `sweep.csv` plus one JSON per cell.
pub fn cmd_sweep(base: &Scenario, spec: &SweepSpec, out: &Path, jobs: usize) -> Result<Vec<SweepCell>> {
    let (scenarios, schemes) = check_sweep(base, spec)?;
    let cell_dir = out.join("cells");
    fs::create_dir_all(&cell_dir)?;
    let work: Vec<(f64, &Scenario, Scheme)> = spec
        .values
        .iter()
        .zip(&scenarios)
        .flat_map(|(&x, s)| schemes.iter().map(move |&sc| (x, s, sc)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Assertion(format!("cannot start worker pool: {e}")))?;
    let cells: Vec<(SweepCell, Option<Error>)> = pool.install(|| {
        work.par_iter()
            .map(|&(x, s, scheme)| {
                let t = Instant::now();
                let res = run_scheme(s, scheme, &RunOptions::default());
                let wall = t.elapsed().as_secs_f64();
                let cell = match &res {
                    Ok(r) => SweepCell {
                        value: x,
                        scheme,
                        east: Some(r.east),
                        iterations: r.iterations(),
                        converged: r.converged,
                        wall_time_s: wall,
                        error: None,
                    },
                    Err(e) => {
                        log::warn!("sweep cell {} = {x}, {scheme} failed: {e}", spec.key);
                        SweepCell {
                            value: x,
                            scheme,
                            east: None,
                            iterations: 0,
                            converged: false,
                            wall_time_s: wall,
                            error: Some(e.to_string()),
                        }
                    }
                };
                let name = cell_dir.join(format!("{}={x}_{scheme}.json", spec.key));
                let doc = match &res {
                    Ok(r) => result_json(s, r),
                    Err(e) => error_record(e) + "\n",
                };
                let io = write_atomic(&name, &doc).err();
                (cell, res.err().or(io))
            })
            .collect()
    });

    let mut csv = format!("{SWEEP_HEADER}\n");
    for (c, _) in &cells {
        let err = c.error.as_deref().unwrap_or("").replace(['"', '\n'], "'");
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},\"{}\"",
            c.value,
            c.scheme,
            c.east.map(|e| e.to_string()).unwrap_or_default(),
            c.iterations,
            c.converged,
            c.wall_time_s,
            err
        );
    }
    write_atomic(&out.join("sweep.csv"), &csv)?;
    if cells.iter().all(|(c, _)| c.error.is_some()) {
        let first = cells.into_iter().find_map(|(_, e)| e);
        return Err(first.unwrap_or_else(|| Error::Assertion("every sweep cell failed".into())));
    }
    Ok(cells.into_iter().map(|(c, _)| c).collect())
}

/// One row of the verification table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((p, d)) => Self::new(name, p, d),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

pub fn format_checks(checks: &[Check]) -> String {
    let w = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut o = String::new();
    for c in checks {
        let _ = writeln!(o, "{:<w$}  {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(o, "{} checks, {failed} failed", checks.len());
    o
}

fn uniform(seed: u64) -> impl FnMut() -> f64 {
    use rand_chacha::rand_core::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn solver_micro_oracles() -> Vec<Check> {
    let opts = SolverOptions::default();
    let mut out = Vec::new();

    let mut p = ConvexProgram::new();
    let x = p.add_var("x", 0.0, f64::INFINITY, 1.0);
    p.objective = LinExpr::var(x);
    p.add("cap", ConstraintAtom::le(LinExpr::var(x), 3.0));
    let r = solve(&p, &opts);
    out.push(Check::new(
        "solver: LP corner",
        r.status == SolveStatus::Optimal && (r.objective - 3.0).abs() <= 1e-6,
        format!("objective {} ({:?})", r.objective, r.status),
    ));

    let mut p = ConvexProgram::new();
    let x = p.add_var("x", 0.0, 1.0, 0.5);
    let t = p.add_var("t", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    p.objective = LinExpr::var(t);
    p.add(
        "log",
        ConstraintAtom::LogAffine {
            logs: vec![LogTerm { coef: 1.0, arg: LinExpr::var(x).plus_const(1.0) }],
            linear: LinExpr::term(t, -1.0),
        },
    );
    let r = solve(&p, &opts);
    out.push(Check::new(
        "solver: log atom",
        r.status == SolveStatus::Optimal && (r.objective - std::f64::consts::LN_2).abs() <= 1e-5,
        format!("objective {} ({:?})", r.objective, r.status),
    ));

    let mut p = ConvexProgram::new();
    let x = p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let y = p.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let t = p.add_var("t", f64::NEG_INFINITY, f64::INFINITY, -1.0);
    p.objective = LinExpr::var(t);
    p.add(
        "ball",
        ConstraintAtom::NormAffine {
            rows: vec![LinExpr::var(x), LinExpr::var(y)],
            bound: LinExpr::constant(1.0),
        },
    );
    p.add("t", ConstraintAtom::le(LinExpr::var(t).plus(x, -1.0).plus(y, -1.0), 0.0));
    let r = solve(&p, &opts);
    out.push(Check::new(
        "solver: second-order cone",
        r.status == SolveStatus::Optimal && (r.objective - 2f64.sqrt()).abs() <= 1e-5,
        format!("objective {} ({:?})", r.objective, r.status),
    ));
    out
}

fn tangent_checks(seed: u64) -> Vec<Check> {
    let mut u = uniform(seed);
    let mut out = Vec::new();

    let mut worst_fd = 0.0f64;
    for _ in 0..200 {
        let x = 10f64.powf(-3.0 + 6.0 * u());
        let k = 10f64.powf(-2.0 + 4.0 * u());
        let h = 1e-6 * x;
        let fd = (a0(x + h, k).unwrap_or(f64::NAN) - a0(x - h, k).unwrap_or(f64::NAN)) / (2.0 * h);
        let an = a1(x, k).unwrap_or(f64::NAN);
        worst_fd = worst_fd.max((fd - an).abs() / an.abs().max(1.0));
    }
    out.push(Check::new(
        "tangent: A1 = dA0/dx",
        worst_fd <= 1e-5,
        format!("max relative gap {worst_fd:.3e}"),
    ));

    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let mut r = || 10f64.powf(-2.0 + 4.0 * u());
        let (x, y, x0, y0) = (r(), r(), r(), r());
        let gap = 1.0 / (x * y) - f_lb(x, y, x0, y0).unwrap_or(f64::INFINITY);
        worst = worst.min(gap * x0 * y0);
    }
    out.push(Check::new(
        "tangent: f_lb below 1/(xy)",
        worst >= -1e-12,
        format!("smallest scaled gap {worst:.3e}"),
    ));

    let mut worst = f64::INFINITY;
    for f in [ConcaveFn::Sqrt, ConcaveFn::Log1pKx { k: 3.0 }, ConcaveFn::HalfLogKx2Kx { k: 0.5 }] {
        for _ in 0..1000 {
            let x0 = 10f64.powf(-3.0 + 6.0 * u());
            let x = 10f64.powf(-3.0 + 6.0 * u());
            if let (Ok(t), Ok(v)) = (tangent_of_concave(f, x0), f.value(x)) {
                worst = worst.min((t.at(x) - v) / v.abs().max(1.0));
            }
        }
    }
    out.push(Check::new(
        "tangent: concave functions below tangents",
        worst >= -1e-12,
        format!("smallest relative gap {worst:.3e}"),
    ));
    out
}

fn scenario_checks(s: &Scenario, eve_samples: usize) -> Vec<Check> {
    let mut out = Vec::new();
    let dv = match initial_feasible(s) {
        Ok(dv) => dv,
        Err(e) => {
            out.push(Check::new("scenario: initial point", false, format!("error: {e}")));
            return out;
        }
    };
    let rep = check_constraints(s, &dv);
    out.push(Check::new(
        "scenario: initial point feasible",
        rep.max_residual() <= 0.0 && rep.c10 == 0.0,
        format!("worst {} = {:e}", rep.worst().0, rep.worst().1),
    ));

    let audit = crate::oracle::sampled_bound_audit(s, &dv, eve_samples.max(1), s.rng_seed);
    out.push(Check::from_result(
        "bound: sampled Eve audit",
        audit.map(|a| {
            (
                a.worst_margin >= -1e-9,
                format!("margin {:e} over {} samples (slot {})", a.worst_margin, a.n_samples, a.worst_slot + 1),
            )
        }),
    ));

    let mc = (|| -> Result<(bool, String)> {
        let mut worst = f64::INFINITY;
        let n = dv.len();
        for (k, i) in [0, n / 2, n - 1].into_iter().enumerate() {
            let snr = slot_snrs(s, dv.q[i], dv.p_a[i], dv.p_r[i])?;
            let lb = uplink_rate_lb(&snr, dv.l_u[i], s.eps_r, s.eta_e)?;
            let est = mc_uplink_rate(s, dv.q[i], dv.p_a[i], dv.l_u[i], 20_000, s.rng_seed + k as u64)?;
            worst = worst.min(est.mean + 3.0 * est.stderr - lb);
        }
        Ok((worst >= 0.0, format!("smallest mean + 3 stderr − bound {worst:.3e}")))
    })();
    out.push(Check::from_result("bound: Monte-Carlo uplink dominance", mc));

    let tight = (|| -> Result<(bool, String)> {
        let qs = crate::secrecy::RateQuantiles::from_scenario(s)?;
        let mut worst = 0.0f64;
        for i in 0..dv.len() {
            let r = slot_rates(s, dv.q[i], dv.p_a[i], dv.p_r[i], dv.l_u[i], dv.l_d[i])?;
            for (hop, p, rate, l, eps) in [
                (Hop::Up, dv.p_a[i], r.r_u_lb, dv.l_u[i], s.eps_r),
                (Hop::Down, dv.p_r[i], r.r_d_lb, dv.l_d[i], s.eps_b),
            ] {
                if rate <= 0.0 {
                    continue;
                }
                let k = PowerHopConstants::new(s, &qs, &dv, i, hop)?;
                let want = rate * l * (1.0 - eps);
                worst = worst.max((surrogate_bits(&k, p) - want).abs() / want);
            }
        }
        Ok((worst <= 1e-8, format!("max relative gap {worst:.3e}")))
    })();
    out.push(Check::from_result("surrogate: power block tight", tight));

    let interior = (|| -> Result<(bool, String)> {
        let progs = [
            ("power", build_power_subproblem(s, &dv)?.program),
            ("blocklength", build_blocklength_subproblem(s, &dv)?.program),
            ("trajectory", build_trajectory_subproblem(s, &dv)?.program),
        ];
        let mut detail = Vec::new();
        let mut ok = true;
        for (name, p) in &progs {
            let f = check_feasibility(p, &p.warm_start);
            ok &= f.max_violation < 0.0;
            detail.push(format!("{name} {:.1e}", f.max_violation));
        }
        Ok((ok, detail.join(", ")))
    })();
    out.push(Check::from_result("surrogate: warm starts strictly interior", interior));

    let q = (|| -> Result<(bool, String)> {
        let (a, b) = (q_inv(1e-3)?, q_inv(1e-2)?);
        Ok(((a - 3.09023).abs() < 1e-5 && (b - 2.32635).abs() < 1e-5, format!("Q⁻¹(1e-3) = {a:.6}, Q⁻¹(1e-2) = {b:.6}")))
    })();
    out.push(Check::from_result("radio: inverse Q reference points", q));

    out.push(Check::from_result(
        "secrecy: initial EAST finite",
        east(s, &dv).map(|e| (e.is_finite() && e >= 0.0, format!("{e:.6} bits/s"))),
    ));
    out
}

/// Self-checks against `s`; the scenario is assumed valid.
pub fn cmd_verify(s: &Scenario, eve_samples: usize) -> Vec<Check> {
    let mut checks = scenario_checks(s, eve_samples);
    checks.extend(tangent_checks(s.rng_seed));
    checks.extend(solver_micro_oracles());
    checks
}

/// Logger configured from [`LOG_ENV`], warnings by default.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}
