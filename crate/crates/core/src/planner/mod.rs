//! Alternating optimization of powers, blocklengths and trajectory.
//!
//! Each block is maximized through a convex restriction built around the
//! current point and solved by [`crate::solver`]. A block step is kept only if
//! the true EAST (re-evaluated with [`crate::secrecy::east`]) does not drop;
//! otherwise a shorter step toward the candidate is tried and, failing that,
//! the block keeps its previous value.

mod blocklength;
mod power;
mod trajectory;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::secrecy::{all_slot_rates, east};
use crate::scenario::Scenario;
use crate::solver::{solve, SolveStatus, SolverOptions};

pub use blocklength::{
    build_blocklength_subproblem, hop_constants as blocklength_constants, BlocklengthHopConstants,
    BlocklengthProgram,
};
pub use power::{build_power_subproblem, surrogate_bits, PowerHopConstants, PowerProgram};
pub use trajectory::{
    build_trajectory_subproblem, DownlinkConstants, SlackInit, TrajectoryProgram, UplinkConstants,
};

/// Fraction by which warm starts are pulled toward a strictly feasible
/// reference point before a subproblem is built.
pub(crate) const INTERIOR_PULL: f64 = 1e-6;

/// Powers at or below this fraction of the peak are treated as off when the
/// slot carries no secure bits.
const SNAP_FRACTION: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hop {
    Up,
    Down,
}

impl Hop {
    pub fn name(self) -> &'static str {
        match self {
            Hop::Up => "up",
            Hop::Down => "down",
        }
    }
}

/// Per-slot powers, blocklengths, waypoints and secure-bit counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionVariables {
    pub p_a: Vec<f64>,
    pub p_r: Vec<f64>,
    pub l_u: Vec<f64>,
    pub l_d: Vec<f64>,
    pub q: Vec<Vec3>,
    /// Secure bits delivered in each slot.
    pub tau: Vec<f64>,
}

impl DecisionVariables {
    pub fn len(&self) -> usize {
        self.p_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_a.is_empty()
    }

    /// `(1−t)·self + t·other`, field by field.
    pub fn blend(&self, other: &DecisionVariables, t: f64) -> DecisionVariables {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };
        DecisionVariables {
            p_a: mix(&self.p_a, &other.p_a),
            p_r: mix(&self.p_r, &other.p_r),
            l_u: mix(&self.l_u, &other.l_u),
            l_d: mix(&self.l_d, &other.l_d),
            q: self.q.iter().zip(&other.q).map(|(a, b)| a.lerp(*b, t)).collect(),
            tau: mix(&self.tau, &other.tau),
        }
    }
}

fn refresh_tau(s: &Scenario, dv: &mut DecisionVariables) -> Result<f64> {
    let rates = all_slot_rates(s, dv)?;
    for (t, r) in dv.tau.iter_mut().zip(&rates) {
        *t = r.b_s * s.slot_duration;
    }
    Ok(rates.iter().map(|r| r.b_s).sum::<f64>() / rates.len() as f64)
}

fn straight_line(s: &Scenario) -> Vec<Vec3> {
    let n = s.n_slots;
    (0..n)
        .map(|i| {
            if n == 1 {
                s.uav_start
            } else {
                s.uav_start.lerp(s.uav_end, i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

/// Straight path with interior waypoints moved toward mid altitude, at a rate
/// that keeps the climb constraint slack. Strictly feasible whenever the
/// straight line has spare horizontal speed.
pub(crate) fn interior_reference(s: &Scenario) -> Vec<Vec3> {
    let mut q = straight_line(s);
    let n = q.len();
    if n < 3 {
        return q;
    }
    let dz = (s.uav_end.z - s.uav_start.z).abs() / (n - 1) as f64;
    let spare = 0.25 * (s.v_z_max * s.slot_duration - dz).max(0.0);
    let mid = 0.5 * (s.h_min + s.h_max);
    let half_band = 0.25 * (s.h_max - s.h_min);
    for (i, p) in q.iter_mut().enumerate().take(n - 1).skip(1) {
        let reach = spare * i.min(n - 1 - i) as f64;
        let want = (mid - p.z).clamp(-half_band, half_band);
        p.z += want.clamp(-reach, reach);
    }
    q
}

/// Straight constant-speed flight, blocklengths split evenly and constant
/// powers within the budgets.
pub fn initial_feasible(s: &Scenario) -> Result<DecisionVariables> {
    let n = s.n_slots;
    if n == 0 {
        return Err(Error::Domain("scenario has no slots".into()));
    }
    let l0 = (s.l_max / 2).max(1) as f64;
    let p_a = s.p_max_alice.min(s.p_tot_alice / (n as f64 * l0));
    let p_r = s.p_max_uav.min(s.p_tot_uav / (n as f64 * l0));
    let q = straight_line(s);
    for (i, w) in q.iter().enumerate() {
        if !(w.dist(s.eve_est_pos) > s.eve_uncertainty) {
            return Err(Error::DegenerateGeometry(format!(
                "straight-line waypoint {i} lies inside the Eve uncertainty ball"
            )));
        }
    }
    let mut dv = DecisionVariables {
        p_a: vec![p_a; n],
        p_r: vec![p_r; n],
        l_u: vec![l0; n],
        l_d: vec![l0; n],
        q,
        tau: vec![0.0; n],
    };
    refresh_tau(s, &mut dv)?;
    let rep = check_constraints(s, &dv);
    if rep.max_residual() > 1e-9 {
        return Err(Error::Domain(format!(
            "straight-line initialization violates {}",
            rep.worst().0
        )));
    }
    Ok(dv)
}

/// Integer blocklengths by flooring (a value within 10⁻⁶ below an integer is
/// taken as that integer when the constraints still hold).
pub fn round_blocklengths(s: &Scenario, dv: &DecisionVariables) -> Result<DecisionVariables> {
    let mut out = dv.clone();
    let l_max = s.l_max as f64;
    for n in 0..dv.len() {
        let (u, d) = (dv.l_u[n], dv.l_d[n]);
        let (fu, fd) = ((u + 1e-6).floor(), (d + 1e-6).floor());
        let (pu, pd) = (u.floor().max(1.0), d.floor().max(1.0));
        if fu + fd <= l_max {
            out.l_u[n] = fu.max(1.0);
            out.l_d[n] = fd.max(1.0);
        } else {
            out.l_u[n] = pu;
            out.l_d[n] = pd;
        }
    }
    let over = |p: &[f64], l: &[f64], cap: f64| p.iter().zip(l).map(|(a, b)| a * b).sum::<f64>() > cap;
    if over(&out.p_a, &out.l_u, s.p_tot_alice) {
        out.l_u = dv.l_u.iter().map(|l| l.floor().max(1.0)).collect();
    }
    if over(&out.p_r, &out.l_d, s.p_tot_uav) {
        out.l_d = dv.l_d.iter().map(|l| l.floor().max(1.0)).collect();
    }
    refresh_tau(s, &mut out)?;
    let rep = check_constraints(s, &out);
    let worst = rep.worst();
    if worst.1 > 1e-8 || rep.c10 > 0.0 {
        return Err(Error::Assertion(format!(
            "rounded blocklengths violate {} by {}",
            worst.0, worst.1
        )));
    }
    Ok(out)
}

/// Largest violation of each mission constraint (0 when satisfied).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConstraintReport {
    /// Endpoint mismatch.
    pub c1: f64,
    /// Horizontal speed.
    pub c2: f64,
    /// Vertical speed.
    pub c3: f64,
    /// Altitude band.
    pub c4: f64,
    /// Alice energy budget.
    pub c5: f64,
    /// Relay energy budget.
    pub c6: f64,
    /// Alice peak power and nonnegativity.
    pub c7: f64,
    /// Relay peak power and nonnegativity.
    pub c8: f64,
    /// Per-slot blocklength sum and `l ≥ 1`.
    pub c9: f64,
    /// Distance of blocklengths from integers.
    pub c10: f64,
}

impl ConstraintReport {
    /// Name and value of the largest of C1–C9.
    pub fn worst(&self) -> (&'static str, f64) {
        [
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("C4", self.c4),
            ("C5", self.c5),
            ("C6", self.c6),
            ("C7", self.c7),
            ("C8", self.c8),
            ("C9", self.c9),
        ]
        .into_iter()
        .fold(("C1", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn max_residual(&self) -> f64 {
        self.worst().1
    }
}

/// Direct evaluation of C1–C10 on `dv`.
pub fn check_constraints(s: &Scenario, dv: &DecisionVariables) -> ConstraintReport {
    let n = dv.len();
    let mut r = ConstraintReport::default();
    if n == 0 {
        return r;
    }
    let pos = |x: f64| x.max(0.0);
    r.c1 = dv.q[0].dist(s.uav_start).max(dv.q[n - 1].dist(s.uav_end));
    for i in 1..n {
        let d = dv.q[i] - dv.q[i - 1];
        r.c2 = r.c2.max(pos(d.norm_xy() - s.v_xy_max * s.slot_duration));
        r.c3 = r.c3.max(pos(d.z.abs() - s.v_z_max * s.slot_duration));
    }
    for i in 0..n {
        let z = dv.q[i].z;
        r.c4 = r.c4.max(pos(s.h_min - z)).max(pos(z - s.h_max));
        r.c7 = r.c7.max(pos(-dv.p_a[i])).max(pos(dv.p_a[i] - s.p_max_alice));
        r.c8 = r.c8.max(pos(-dv.p_r[i])).max(pos(dv.p_r[i] - s.p_max_uav));
        r.c9 = r
            .c9
            .max(pos(dv.l_u[i] + dv.l_d[i] - s.l_max as f64))
            .max(pos(1.0 - dv.l_u[i]))
            .max(pos(1.0 - dv.l_d[i]));
        r.c10 = r
            .c10
            .max((dv.l_u[i] - dv.l_u[i].round()).abs())
            .max((dv.l_d[i] - dv.l_d[i].round()).abs());
    }
    let spend = |p: &[f64], l: &[f64]| p.iter().zip(l).map(|(a, b)| a * b).sum::<f64>();
    r.c5 = pos(spend(&dv.p_a, &dv.l_u) - s.p_tot_alice);
    r.c6 = pos(spend(&dv.p_r, &dv.l_d) - s.p_tot_uav);
    if !(r.c1.is_finite() && r.c2.is_finite() && r.c5.is_finite() && r.c9.is_finite()) {
        r.c1 = f64::INFINITY;
    }
    r
}

/// Optimization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Joint trajectory and resource design.
    Jtrd,
    /// Resources only, straight-line trajectory.
    Rdft,
    /// Trajectory only, initial resources.
    Tdfr,
    /// The initialization itself.
    Initial,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Jtrd, Scheme::Rdft, Scheme::Tdfr, Scheme::Initial];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Jtrd => "jtrd",
            Scheme::Rdft => "rdft",
            Scheme::Tdfr => "tdfr",
            Scheme::Initial => "initial",
        }
    }

    fn blocks(self) -> &'static [Block] {
        match self {
            Scheme::Jtrd => &[Block::Power, Block::Blocklength, Block::Trajectory],
            Scheme::Rdft => &[Block::Power, Block::Blocklength],
            Scheme::Tdfr => &[Block::Trajectory],
            Scheme::Initial => &[],
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(v: &str) -> Result<Self> {
        match v.to_ascii_lowercase().as_str() {
            "jtrd" => Ok(Scheme::Jtrd),
            "rdft" => Ok(Scheme::Rdft),
            "tdfr" => Ok(Scheme::Tdfr),
            "initial" => Ok(Scheme::Initial),
            other => Err(Error::Parse(format!(
                "unknown scheme `{other}` (expected jtrd, rdft, tdfr or initial)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Power,
    Blocklength,
    Trajectory,
}

impl Block {
    pub fn as_str(self) -> &'static str {
        match self {
            Block::Power => "power",
            Block::Blocklength => "blocklength",
            Block::Trajectory => "trajectory",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    /// Upper bound on alternating iterations (0 evaluates the initial point).
    pub max_iterations: usize,
    pub solver: SolverOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_iterations: 60,
            solver: SolverOptions::default(),
        }
    }
}

/// Outcome of one block update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub block: Block,
    /// `None` when the block could not be built (no strictly feasible point).
    pub status: Option<SolveStatus>,
    /// Surrogate objective gain over the warm start, bits.
    pub surrogate_gain: f64,
    /// Fraction of the step toward the solver's point that was kept.
    pub step: f64,
    pub east_after: f64,
    pub solver_iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub east: f64,
    pub blocks: Vec<BlockRecord>,
    /// Largest C1–C9 residual of the iterate.
    pub constraint_residual: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct IterationTrace {
    /// EAST of the initial point followed by one value per iteration.
    pub east: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
}

/// Per-slot summary of a final solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotProfile {
    pub slot: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Horizontal and vertical speed toward the next waypoint (0 in the last slot).
    pub v_xy: f64,
    pub v_z: f64,
    pub p_a: f64,
    pub p_r: f64,
    pub l_u: f64,
    pub l_d: f64,
    pub r_u_fbl: f64,
    pub r_d_fbl: f64,
    pub r_u_inf: f64,
    pub r_d_inf: f64,
    pub b_s: f64,
    pub gamma_r: f64,
    pub gamma_b: f64,
    pub gamma_ae: f64,
    pub gamma_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub scheme: Scheme,
    /// Final variables with integer blocklengths.
    pub variables: DecisionVariables,
    pub east: f64,
    pub initial_east: f64,
    pub converged: bool,
    pub trace: IterationTrace,
    pub profiles: Vec<SlotProfile>,
    pub wall_time_s: f64,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        self.trace.iterations.len()
    }
}

/// Per-slot profiles of `dv`.
pub fn profiles(s: &Scenario, dv: &DecisionVariables) -> Result<Vec<SlotProfile>> {
    let rates = all_slot_rates(s, dv)?;
    let n = dv.len();
    Ok((0..n)
        .map(|i| {
            let q = dv.q[i];
            let v = if i + 1 < n {
                (dv.q[i + 1] - q) * (1.0 / s.slot_duration)
            } else {
                Vec3::default()
            };
            let r = &rates[i];
            SlotProfile {
                slot: i + 1,
                x: q.x,
                y: q.y,
                z: q.z,
                v_xy: v.norm_xy(),
                v_z: v.z,
                p_a: dv.p_a[i],
                p_r: dv.p_r[i],
                l_u: dv.l_u[i],
                l_d: dv.l_d[i],
                r_u_fbl: r.r_u_lb,
                r_d_fbl: r.r_d_lb,
                r_u_inf: r.c_u_inf,
                r_d_inf: r.c_d_inf,
                b_s: r.b_s,
                gamma_r: r.snr.gamma_r,
                gamma_b: r.snr.gamma_b,
                gamma_ae: r.snr.gamma_ae_tilde,
                gamma_re: r.snr.gamma_re_tilde,
            }
        })
        .collect())
}

struct Candidate {
    dv: DecisionVariables,
    status: SolveStatus,
    gain: f64,
    iterations: usize,
}

fn solve_block(
    s: &Scenario,
    block: Block,
    dv: &DecisionVariables,
    opts: &SolverOptions,
    iteration: usize,
) -> Result<Option<Candidate>> {
    let built = match block {
        Block::Power => build_power_subproblem(s, dv).map(|p| {
            let r = solve(&p.program, opts);
            (p.apply(dv, &r.point), r, p.program.objective_at(&p.program.warm_start))
        }),
        Block::Blocklength => build_blocklength_subproblem(s, dv).map(|p| {
            let r = solve(&p.program, opts);
            (p.apply(dv, &r.point), r, p.program.objective_at(&p.program.warm_start))
        }),
        Block::Trajectory => build_trajectory_subproblem(s, dv).map(|p| {
            let r = solve(&p.program, opts);
            (p.apply(dv, &r.point), r, p.program.objective_at(&p.program.warm_start))
        }),
    };
    let (mut cand, report, warm) = match built {
        Ok(v) => v,
        Err(Error::Build(msg)) => {
            log::debug!("{} block skipped at iteration {iteration}: {msg}", block.as_str());
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    match report.status {
        SolveStatus::InfeasibleStart | SolveStatus::NumericalFailure => {
            return Err(Error::Solver {
                block: block.as_str(),
                iteration,
                status: report.status,
            })
        }
        SolveStatus::Optimal | SolveStatus::MaxIter => {}
    }
    if block == Block::Power {
        snap_idle_powers(s, &mut cand);
    }
    Ok(Some(Candidate {
        dv: cand,
        status: report.status,
        gain: report.objective - warm,
        iterations: report.barrier_iterations,
    }))
}

/// Switch off near-zero powers in slots that deliver no secure bits.
fn snap_idle_powers(s: &Scenario, dv: &mut DecisionVariables) {
    let Ok(rates) = all_slot_rates(s, dv) else {
        return;
    };
    for (n, r) in rates.iter().enumerate() {
        if r.b_s == 0.0 {
            if dv.p_a[n] <= SNAP_FRACTION * s.p_max_alice {
                dv.p_a[n] = 0.0;
            }
            if dv.p_r[n] <= SNAP_FRACTION * s.p_max_uav {
                dv.p_r[n] = 0.0;
            }
        }
    }
}

fn safe_east(s: &Scenario, dv: &DecisionVariables) -> f64 {
    east(s, dv).unwrap_or(f64::NEG_INFINITY)
}

/// Run `scheme` from the initial feasible point.
pub fn run_scheme(s: &Scenario, scheme: Scheme, opts: &RunOptions) -> Result<RunResult> {
    let start = Instant::now();
    let mut dv = initial_feasible(s)?;
    let mut e = east(s, &dv)?;
    let initial_east = e;
    let mut trace = IterationTrace {
        east: vec![e],
        iterations: Vec::new(),
    };
    let blocks = scheme.blocks();
    let mut converged = blocks.is_empty() || opts.max_iterations == 0;
    if !blocks.is_empty() {
        for it in 1..=opts.max_iterations {
            let t_it = Instant::now();
            let e_prev = e;
            let mut records = Vec::new();
            for &block in blocks {
                let t_b = Instant::now();
                let cand = solve_block(s, block, &dv, &opts.solver, it)?;
                let mut rec = BlockRecord {
                    block,
                    status: None,
                    surrogate_gain: 0.0,
                    step: 0.0,
                    east_after: e,
                    solver_iterations: 0,
                    wall_time_s: 0.0,
                };
                if let Some(c) = cand {
                    rec.status = Some(c.status);
                    rec.surrogate_gain = c.gain;
                    rec.solver_iterations = c.iterations;
                    let mut t = 1.0;
                    let mut trial = c.dv;
                    for _ in 0..12 {
                        let et = safe_east(s, &trial);
                        if et >= e && check_constraints(s, &trial).max_residual() <= 1e-9 {
                            dv = trial;
                            e = refresh_tau(s, &mut dv)?;
                            rec.step = t;
                            break;
                        }
                        t *= 0.5;
                        trial = dv.blend(&trial, 0.5);
                    }
                    rec.east_after = e;
                }
                rec.wall_time_s = t_b.elapsed().as_secs_f64();
                log::debug!(
                    "{scheme} iteration {it} {} block: status {:?}, step {}, EAST {e}",
                    block.as_str(),
                    rec.status,
                    rec.step
                );
                records.push(rec);
            }
            let residual = check_constraints(s, &dv).max_residual();
            trace.east.push(e);
            trace.iterations.push(IterationRecord {
                iteration: it,
                east: e,
                blocks: records,
                constraint_residual: residual,
                wall_time_s: t_it.elapsed().as_secs_f64(),
            });
            log::info!("{scheme} iteration {it}: EAST {e}");
            if (e - e_prev).abs() <= s.epsilon_conv {
                converged = true;
                break;
            }
        }
    }
    let variables = round_blocklengths(s, &dv)?;
    let final_east = east(s, &variables)?;
    Ok(RunResult {
        scheme,
        profiles: profiles(s, &variables)?,
        variables,
        east: final_east,
        initial_east,
        converged,
        trace,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Joint design of powers, blocklengths and trajectory.
pub fn run_bsca(s: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    run_scheme(s, Scheme::Jtrd, opts)
}

/// Powers and blocklengths on the straight-line trajectory.
pub fn run_rdft(s: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    run_scheme(s, Scheme::Rdft, opts)
}

/// Trajectory with the initial powers and blocklengths.
pub fn run_tdfr(s: &Scenario, opts: &RunOptions) -> Result<RunResult> {
    run_scheme(s, Scheme::Tdfr, opts)
}
