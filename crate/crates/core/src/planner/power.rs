//! Transmit-power block: powers are optimized with trajectory and blocklengths
//! fixed.
//!
//! Per slot and hop the secrecy-bit count τ is bounded by a concave
//! restriction of the finite-blocklength rate: the eavesdropper capacity term
//! is replaced by its tangent in `p`, and each dispersion square root by a
//! slack (`s` for the legitimate receiver, `ν` for Eve) tied to the power
//! through the tangent of A₀.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::sca::{a0, a1, ConstraintAtom, ConvexProgram, LinExpr, LogTerm, VarRef};
use crate::scenario::Scenario;
use crate::secrecy::RateQuantiles;

use super::{DecisionVariables, Hop, INTERIOR_PULL};

/// Constants of one hop's power constraint in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerHopConstants {
    /// Legitimate receiver gain per watt.
    pub k1: f64,
    /// Worst-case Eve gain per watt.
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub k5: f64,
    /// Tangent of `ln(1 + k2·p)` at the expansion power.
    pub k6: f64,
    pub k7: f64,
}

impl PowerHopConstants {
    pub fn new(
        s: &Scenario,
        qs: &RateQuantiles,
        dv: &DecisionVariables,
        n: usize,
        hop: Hop,
    ) -> Result<Self> {
        let (k1, k2, q_leg, l, eps, p0) = match hop {
            Hop::Up => (
                s.rho_r() / dv.q[n].dist_sq(s.alice_pos),
                s.rho_e() / worst_case_alice_eve(s)?.powf(s.alpha),
                qs.q_r,
                dv.l_u[n],
                s.eps_r,
                dv.p_a[n],
            ),
            Hop::Down => {
                let d = dv.q[n].dist(s.eve_est_pos) - s.eve_uncertainty;
                if !(d > 0.0) {
                    return Err(Error::DegenerateGeometry(format!(
                        "waypoint {n} lies inside the Eve uncertainty ball"
                    )));
                }
                (
                    s.rho_b() / dv.q[n].dist_sq(s.bob_pos),
                    s.rho_e() / (d * d),
                    qs.q_b,
                    dv.l_d[n],
                    s.eps_b,
                    dv.p_r[n],
                )
            }
        };
        let k6 = k2 / (1.0 + k2 * p0);
        let k = Self {
            k1,
            k2,
            k3: q_leg / l.sqrt(),
            k4: qs.q_e / l.sqrt(),
            k5: LN_2 / (l * (1.0 - eps)),
            k6,
            k7: (k2 * p0).ln_1p() - k6 * p0,
        };
        let all = [k.k1, k.k2, k.k3, k.k4, k.k5, k.k6, k.k7];
        if all.iter().all(|v| v.is_finite()) && k.k1 > 0.0 && k.k2 >= 0.0 {
            Ok(k)
        } else {
            Err(Error::Build(format!("non-finite power constants in slot {n}: {k:?}")))
        }
    }
}

pub(crate) fn worst_case_alice_eve(s: &Scenario) -> Result<f64> {
    let d = s.alice_pos.dist(s.eve_est_pos) - s.eve_uncertainty;
    if d > 0.0 {
        Ok(d)
    } else {
        Err(Error::DegenerateGeometry("Alice lies inside the Eve uncertainty ball".into()))
    }
}

/// Built power program with handles to write the solution back.
#[derive(Debug, Clone)]
pub struct PowerProgram {
    pub program: ConvexProgram,
    pub p_a: Vec<VarRef>,
    pub p_r: Vec<VarRef>,
    pub tau: Vec<VarRef>,
}

impl PowerProgram {
    /// `base` with powers and τ taken from `x`.
    pub fn apply(&self, base: &DecisionVariables, x: &[f64]) -> DecisionVariables {
        let mut dv = base.clone();
        for n in 0..dv.len() {
            dv.p_a[n] = x[self.p_a[n].index];
            dv.p_r[n] = x[self.p_r[n].index];
            dv.tau[n] = x[self.tau[n].index];
        }
        dv
    }
}

/// Slack value strictly above the tangent restriction of `√(1 − (1+k·p)⁻²)`.
fn dispersion_slack(k: f64, p: f64, p_tan: f64) -> Result<(f64, f64, f64)> {
    let (t0, t1) = (a0(p_tan, k)?, a1(p_tan, k)?);
    let rhs = t0 + t1 * (p - p_tan);
    let s = (rhs - (k * p).ln_1p() + 1e-9).exp();
    Ok((s, t0, t1))
}

/// Power subproblem expanded at the powers of `dv`; trajectory and
/// blocklengths are taken from `dv` and held fixed.
pub fn build_power_subproblem(s: &Scenario, dv: &DecisionVariables) -> Result<PowerProgram> {
    let n_slots = dv.len();
    let qs = RateQuantiles::from_scenario(s)?;
    let mut prog = ConvexProgram::new();
    let (mut pa, mut pr, mut tau) = (Vec::new(), Vec::new(), Vec::new());

    // Strictly feasible reference powers, mixed into the warm start.
    let sum_lu: f64 = dv.l_u.iter().sum();
    let sum_ld: f64 = dv.l_d.iter().sum();
    let ref_a = 0.5 * s.p_max_alice.min(s.p_tot_alice / sum_lu);
    let ref_r = 0.5 * s.p_max_uav.min(s.p_tot_uav / sum_ld);
    let mix = |p: f64, r: f64| (1.0 - INTERIOR_PULL) * p + INTERIOR_PULL * r;

    let mut budget_a = LinExpr::default();
    let mut budget_r = LinExpr::default();
    for n in 0..n_slots {
        let w_a = mix(dv.p_a[n], ref_a);
        let w_r = mix(dv.p_r[n], ref_r);
        let va = prog.add_var(format!("p_a[{n}]"), 0.0, s.p_max_alice, w_a);
        let vr = prog.add_var(format!("p_r[{n}]"), 0.0, s.p_max_uav, w_r);
        let vt = prog.add_var(format!("tau[{n}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
        budget_a = budget_a.plus(va, dv.l_u[n]);
        budget_r = budget_r.plus(vr, dv.l_d[n]);

        let mut tau_cap = f64::INFINITY;
        for (hop, v, w, p0, pmax) in [
            (Hop::Up, va, w_a, dv.p_a[n], s.p_max_alice),
            (Hop::Down, vr, w_r, dv.p_r[n], s.p_max_uav),
        ] {
            let k = PowerHopConstants::new(s, &qs, dv, n, hop)?;
            let p_tan = p0.max(1e-6 * pmax);
            let name = hop.name();

            let (s_w, s0, s1) = dispersion_slack(k.k1, w, p_tan)?;
            let vs = prog.add_var(format!("s_{name}[{n}]"), 1e-9f64.min(0.5 * s_w), f64::INFINITY, s_w);
            prog.add(
                format!("disp_{name}[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![
                        LogTerm { coef: 1.0, arg: LinExpr::var(vs) },
                        LogTerm { coef: 1.0, arg: LinExpr::term(v, k.k1).plus_const(1.0) },
                    ],
                    linear: LinExpr::term(v, -s1).plus_const(s1 * p_tan - s0),
                },
            );
            let mut linear = LinExpr::term(vs, -k.k3)
                .plus(vt, -k.k5)
                .plus(v, -k.k6)
                .plus_const(-k.k7);
            let mut nu_term = 0.0;
            if k.k2 > 0.0 {
                let (nu_w, e0, e1) = dispersion_slack(k.k2, w, p_tan)?;
                let vn = prog.add_var(format!("nu_{name}[{n}]"), 1e-9f64.min(0.5 * nu_w), f64::INFINITY, nu_w);
                prog.add(
                    format!("eve_disp_{name}[{n}]"),
                    ConstraintAtom::LogAffine {
                        logs: vec![
                            LogTerm { coef: 1.0, arg: LinExpr::var(vn) },
                            LogTerm { coef: 1.0, arg: LinExpr::term(v, k.k2).plus_const(1.0) },
                        ],
                        linear: LinExpr::term(v, -e1).plus_const(e1 * p_tan - e0),
                    },
                );
                linear = linear.plus(vn, -k.k4);
                nu_term = k.k4 * nu_w;
            }
            let cap = ((k.k1 * w).ln_1p() - k.k3 * s_w - nu_term - k.k6 * w - k.k7) / k.k5;
            tau_cap = tau_cap.min(cap);
            prog.add(
                format!("rate_{name}[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![LogTerm { coef: 1.0, arg: LinExpr::term(v, k.k1).plus_const(1.0) }],
                    linear,
                },
            );
        }
        prog.warm_start[vt.index] = tau_cap - 1e-7 * tau_cap.abs().max(1.0);
        prog.objective = prog.objective.clone().plus(vt, 1.0);
        pa.push(va);
        pr.push(vr);
        tau.push(vt);
    }
    prog.add("budget_alice", ConstraintAtom::le(budget_a, s.p_tot_alice));
    prog.add("budget_uav", ConstraintAtom::le(budget_r, s.p_tot_uav));
    Ok(PowerProgram {
        program: prog,
        p_a: pa,
        p_r: pr,
        tau,
    })
}

/// Value of one hop's τ bound at the expansion point when every slack sits on
/// its tangent; equals `(1−ε)·l·R` for the unclipped rate `R`.
pub fn surrogate_bits(k: &PowerHopConstants, p: f64) -> f64 {
    let s = (1.0 - (1.0 + k.k1 * p).powi(-2)).sqrt();
    let nu = (1.0 - (1.0 + k.k2 * p).powi(-2)).sqrt();
    ((k.k1 * p).ln_1p() - k.k3 * s - k.k4 * nu - k.k6 * p - k.k7) / k.k5
}
