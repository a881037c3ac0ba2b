//! Trajectory block: waypoints optimized with powers and blocklengths fixed.
//!
//! Each hop's rate is rewritten through slack variables so that every
//! constraint is convex:
//!
//! * uplink: `λ₁ ≤ 1/λ₂`, `λ₂ ≥ ‖q − q_a‖²/(p_a ρ_r)` so `λ₁` lower-bounds the
//!   relay SNR, and `β₁ ≥ √(1 − (1+λ₁)⁻²)` bounds the dispersion;
//! * downlink: `ω₁, ω₂, ψ₁` play the same roles for Bob; `u₁` lower-bounds the
//!   inverse worst-case Eve SNR, `v₂ ≥ 1/u₁`, `v₁ ≥ √(1 − (1+v₂)⁻²)`, and `χ`
//!   carries `ln(1 + 1/u₁)` into the rate constraint.
//!
//! Products `λ₁λ₂ ≤ 1` and `ω₁ω₂ ≤ 1` enter through the first-order lower
//! bound of `1/(xy)`; `(‖q − q̃_e‖ − Δ_e)²` is bounded below by linearizing its
//! convex part. All expansions are taken at the warm-start point.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::radio::dispersion_unchecked;
use crate::sca::{a0, a1, f_lb_coefficients, ConstraintAtom, ConvexProgram, LinExpr, LogTerm, VarRef};
use crate::scenario::Scenario;
use crate::secrecy::RateQuantiles;

use super::power::worst_case_alice_eve;
use super::{interior_reference, DecisionVariables, INTERIOR_PULL};

/// Relative perturbation placing slack variables strictly inside.
const SLACK_MARGIN: f64 = 1e-7;

/// Uplink constants of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkConstants {
    /// `Q⁻¹(ε_r)·log₂e/√l_u`.
    pub b0: f64,
    /// Alice–Eve leakage `log₂(1+γ̃_ae) + √(V(γ̃_ae)/l_u)·Q⁻¹(η_e)`.
    pub b1: f64,
    /// `1/(l_u(1−ε_r))`.
    pub b2: f64,
}

impl UplinkConstants {
    pub fn new(s: &Scenario, qs: &RateQuantiles, p_a: f64, l_u: f64) -> Result<Self> {
        let g = p_a * s.rho_e() / worst_case_alice_eve(s)?.powf(s.alpha);
        Ok(Self {
            b0: qs.q_r * std::f64::consts::LOG2_E / l_u.sqrt(),
            b1: g.log2_1p() + (dispersion_unchecked(g) / l_u).sqrt() * qs.q_e,
            b2: 1.0 / (l_u * (1.0 - s.eps_r)),
        })
    }
}

/// Downlink constants of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownlinkConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl DownlinkConstants {
    pub fn new(s: &Scenario, qs: &RateQuantiles, l_d: f64) -> Self {
        let root = std::f64::consts::LOG2_E / l_d.sqrt();
        Self {
            c0: qs.q_b * root,
            c1: qs.q_e * root,
            c2: 1.0 / (l_d * (1.0 - s.eps_b)),
        }
    }
}

trait Log2OnePlus {
    fn log2_1p(self) -> f64;
}

impl Log2OnePlus for f64 {
    fn log2_1p(self) -> f64 {
        self.ln_1p() * std::f64::consts::LOG2_E
    }
}

/// Slack values satisfying the hop reformulations with equality at `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlackInit {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta1: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub psi1: f64,
    pub u1: f64,
    pub v1: f64,
    pub v2: f64,
}

fn root_disp(x: f64) -> f64 {
    (1.0 - (1.0 + x).powi(-2)).sqrt()
}

impl SlackInit {
    /// Equality values at waypoint `q`; entries of a hop without power are NaN.
    pub fn at(s: &Scenario, q: Vec3, p_a: f64, p_r: f64) -> Self {
        let nan = f64::NAN;
        let (lambda1, lambda2, beta1) = if p_a > 0.0 {
            let l2 = q.dist_sq(s.alice_pos) / (p_a * s.rho_r());
            (1.0 / l2, l2, root_disp(1.0 / l2))
        } else {
            (nan, nan, nan)
        };
        let (omega1, omega2, psi1, u1, v1, v2) = if p_r > 0.0 {
            let w2 = q.dist_sq(s.bob_pos) / (p_r * s.rho_b());
            let d = q.dist(s.eve_est_pos) - s.eve_uncertainty;
            let u1 = d * d / (p_r * s.rho_e());
            (1.0 / w2, w2, root_disp(1.0 / w2), u1, root_disp(1.0 / u1), 1.0 / u1)
        } else {
            (nan, nan, nan, nan, nan, nan)
        };
        Self {
            lambda1,
            lambda2,
            beta1,
            omega1,
            omega2,
            psi1,
            u1,
            v1,
            v2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryProgram {
    pub program: ConvexProgram,
    /// Per slot: variable handles for (x, y, z), or `None` for fixed endpoints.
    pub q: Vec<Option<[VarRef; 3]>>,
    pub tau: Vec<VarRef>,
    /// Waypoints at which the program was expanded (the warm start).
    pub expansion: Vec<Vec3>,
}

impl TrajectoryProgram {
    pub fn apply(&self, base: &DecisionVariables, x: &[f64]) -> DecisionVariables {
        let mut dv = base.clone();
        for n in 0..dv.len() {
            if let Some([vx, vy, vz]) = self.q[n] {
                dv.q[n] = Vec3::new(x[vx.index], x[vy.index], x[vz.index]);
            }
            dv.tau[n] = x[self.tau[n].index];
        }
        dv
    }
}

/// Affine coordinate expressions of a waypoint (variables or constants).
#[derive(Clone)]
struct Coords([LinExpr; 3]);

impl Coords {
    fn minus(&self, p: Vec3) -> Vec<LinExpr> {
        let c = p.to_array();
        (0..3).map(|i| self.0[i].clone().plus_const(-c[i])).collect()
    }
}

fn guard(w: f64) -> f64 {
    1e-9f64.min(0.5 * w)
}

fn log1p_var(v: VarRef) -> LogTerm {
    LogTerm {
        coef: 1.0,
        arg: LinExpr::var(v).plus_const(1.0),
    }
}

fn log_var(v: VarRef) -> LogTerm {
    LogTerm {
        coef: 1.0,
        arg: LinExpr::var(v),
    }
}

/// Trajectory subproblem expanded at the trajectory of `dv` (pulled slightly
/// toward a strictly feasible reference path).
pub fn build_trajectory_subproblem(s: &Scenario, dv: &DecisionVariables) -> Result<TrajectoryProgram> {
    let n_slots = dv.len();
    let qs = RateQuantiles::from_scenario(s)?;
    let reference = interior_reference(s);
    let mut prog = ConvexProgram::new();
    let mut q_handles = Vec::with_capacity(n_slots);
    let mut coords: Vec<Coords> = Vec::with_capacity(n_slots);
    let mut tau = Vec::with_capacity(n_slots);
    let mut expansion = Vec::with_capacity(n_slots);
    let delta = s.eve_uncertainty;

    for n in 0..n_slots {
        let fixed = n == 0 || n + 1 == n_slots;
        let qw = if fixed {
            dv.q[n]
        } else {
            dv.q[n] * (1.0 - INTERIOR_PULL) + reference[n] * INTERIOR_PULL
        };
        let d_eve = qw.dist(s.eve_est_pos);
        if !(d_eve > delta) {
            return Err(Error::DegenerateGeometry(format!(
                "waypoint {n} lies inside the Eve uncertainty ball"
            )));
        }
        expansion.push(qw);

        let c = if fixed {
            q_handles.push(None);
            Coords([
                LinExpr::constant(qw.x),
                LinExpr::constant(qw.y),
                LinExpr::constant(qw.z),
            ])
        } else {
            let vx = prog.add_var(format!("x[{n}]"), f64::NEG_INFINITY, f64::INFINITY, qw.x);
            let vy = prog.add_var(format!("y[{n}]"), f64::NEG_INFINITY, f64::INFINITY, qw.y);
            let vz = prog.add_var(format!("z[{n}]"), s.h_min, s.h_max, qw.z);
            q_handles.push(Some([vx, vy, vz]));
            Coords([LinExpr::var(vx), LinExpr::var(vy), LinExpr::var(vz)])
        };

        // Mobility constraints with the previous waypoint.
        if n > 0 && (!fixed || q_handles[n - 1].is_some()) {
            let prev = &coords[n - 1];
            let diff = |i: usize| c.0[i].clone().plus_expr(&prev.0[i], -1.0);
            prog.add(
                format!("c2[{n}]"),
                ConstraintAtom::NormAffine {
                    rows: vec![diff(0), diff(1)],
                    bound: LinExpr::constant(s.v_xy_max * s.slot_duration),
                },
            );
            prog.add(format!("c3_up[{n}]"), ConstraintAtom::le(diff(2), s.v_z_max * s.slot_duration));
            prog.add(format!("c3_down[{n}]"), ConstraintAtom::ge(diff(2), -s.v_z_max * s.slot_duration));
        }

        let vt = prog.add_var(format!("tau[{n}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let (p_a, p_r) = (dv.p_a[n], dv.p_r[n]);
        let init = SlackInit::at(s, qw, p_a, p_r);
        let mut cap = f64::INFINITY;

        // Uplink.
        if p_a > 0.0 {
            let k = UplinkConstants::new(s, &qs, p_a, dv.l_u[n])?;
            let l2w = init.lambda2 * (1.0 + SLACK_MARGIN);
            let l1w = init.lambda1 * (1.0 - 2.0 * SLACK_MARGIN);
            let (t0, t1) = (a0(init.lambda1, 1.0)?, a1(init.lambda1, 1.0)?);
            let b1w = (t0 + t1 * (l1w - init.lambda1) - l1w.ln_1p() + SLACK_MARGIN).exp();
            let l1 = prog.add_var(format!("lambda1[{n}]"), guard(l1w), f64::INFINITY, l1w);
            let l2 = prog.add_var(format!("lambda2[{n}]"), guard(l2w), f64::INFINITY, l2w);
            let b1 = prog.add_var(format!("beta1[{n}]"), guard(b1w), f64::INFINITY, b1w);
            let (ln_b0, ln_b1, ln_b2) = (LN_2 * k.b0, LN_2 * k.b1, LN_2 * k.b2);
            prog.add(
                format!("up_rate[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![log1p_var(l1)],
                    linear: LinExpr::term(b1, -ln_b0).plus(vt, -ln_b2).plus_const(-ln_b1),
                },
            );
            prog.add(
                format!("up_snr[{n}]"),
                ConstraintAtom::QuadOverAffine {
                    rows: c.minus(s.alice_pos),
                    left: LinExpr::term(l2, p_a * s.rho_r()),
                    right: LinExpr::constant(1.0),
                },
            );
            let (cx, cy, c0) = f_lb_coefficients(init.lambda1, init.lambda2);
            prog.add(
                format!("up_product[{n}]"),
                ConstraintAtom::ge(LinExpr::term(l1, cx).plus(l2, cy), 1.0 - c0),
            );
            prog.add(
                format!("up_disp[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![log_var(b1), log1p_var(l1)],
                    linear: LinExpr::term(l1, -t1).plus_const(t1 * init.lambda1 - t0),
                },
            );
            cap = cap.min((l1w.ln_1p() - ln_b0 * b1w - ln_b1) / ln_b2);
        } else {
            prog.add(format!("up_rate[{n}]"), ConstraintAtom::le(LinExpr::var(vt), 0.0));
            cap = cap.min(0.0);
        }

        // Downlink.
        if p_r > 0.0 {
            let k = DownlinkConstants::new(s, &qs, dv.l_d[n]);
            let w2w = init.omega2 * (1.0 + SLACK_MARGIN);
            let w1w = init.omega1 * (1.0 - 2.0 * SLACK_MARGIN);
            let (o0, o1) = (a0(init.omega1, 1.0)?, a1(init.omega1, 1.0)?);
            let psiw = (o0 + o1 * (w1w - init.omega1) - w1w.ln_1p() + SLACK_MARGIN).exp();
            let u1w = init.u1 * (1.0 - SLACK_MARGIN);
            let v2w = (1.0 + SLACK_MARGIN) / u1w;
            let (e0, e1) = (a0(init.v2, 1.0)?, a1(init.v2, 1.0)?);
            let v1w = (e0 + e1 * (v2w - init.v2) - v2w.ln_1p() + SLACK_MARGIN).exp();
            let chiw = (1.0 / u1w).ln_1p() + SLACK_MARGIN;

            let w1 = prog.add_var(format!("omega1[{n}]"), guard(w1w), f64::INFINITY, w1w);
            let w2 = prog.add_var(format!("omega2[{n}]"), guard(w2w), f64::INFINITY, w2w);
            let psi = prog.add_var(format!("psi1[{n}]"), guard(psiw), f64::INFINITY, psiw);
            let u1 = prog.add_var(format!("u1[{n}]"), guard(u1w), f64::INFINITY, u1w);
            let v1 = prog.add_var(format!("v1[{n}]"), guard(v1w), f64::INFINITY, v1w);
            let v2 = prog.add_var(format!("v2[{n}]"), guard(v2w), f64::INFINITY, v2w);
            let chi = prog.add_var(format!("chi[{n}]"), f64::NEG_INFINITY, f64::INFINITY, chiw);

            let (ln_c0, ln_c1, ln_c2) = (LN_2 * k.c0, LN_2 * k.c1, LN_2 * k.c2);
            prog.add(
                format!("down_rate[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![log1p_var(w1)],
                    linear: LinExpr::term(psi, -ln_c0)
                        .plus(v1, -ln_c1)
                        .plus(vt, -ln_c2)
                        .plus(chi, -1.0),
                },
            );
            prog.add(
                format!("down_eve_log[{n}]"),
                ConstraintAtom::LogRatio {
                    u: u1.index,
                    linear: LinExpr::var(chi),
                },
            );
            prog.add(
                format!("down_snr[{n}]"),
                ConstraintAtom::QuadOverAffine {
                    rows: c.minus(s.bob_pos),
                    left: LinExpr::term(w2, p_r * s.rho_b()),
                    right: LinExpr::constant(1.0),
                },
            );
            let (cx, cy, c0) = f_lb_coefficients(init.omega1, init.omega2);
            prog.add(
                format!("down_product[{n}]"),
                ConstraintAtom::ge(LinExpr::term(w1, cx).plus(w2, cy), 1.0 - c0),
            );
            prog.add(
                format!("down_disp[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![log_var(psi), log1p_var(w1)],
                    linear: LinExpr::term(w1, -o1).plus_const(o1 * init.omega1 - o0),
                },
            );
            // p_r ρ_e u₁ ≤ (‖q − q̃_e‖ − Δ)², with ‖q − q̃_e‖² linearized at qw.
            let e = s.eve_est_pos;
            let g = qw - e;
            let mut bound = LinExpr::term(u1, -p_r * s.rho_e())
                .plus_const(-qw.norm_sq() + e.norm_sq() + delta * delta);
            for (i, gi) in g.to_array().iter().enumerate() {
                bound = bound.plus_expr(&c.0[i], 2.0 * gi);
            }
            if delta > 0.0 {
                prog.add(
                    format!("down_eve_dist[{n}]"),
                    ConstraintAtom::NormAffine {
                        rows: c.minus(e).into_iter().map(|r| r.scaled(2.0 * delta)).collect(),
                        bound,
                    },
                );
            } else {
                prog.add(format!("down_eve_dist[{n}]"), ConstraintAtom::ge(bound, 0.0));
            }
            prog.add(
                format!("down_eve_inv[{n}]"),
                ConstraintAtom::QuadOverAffine {
                    rows: vec![LinExpr::constant(1.0)],
                    left: LinExpr::var(u1),
                    right: LinExpr::var(v2),
                },
            );
            prog.add(
                format!("down_eve_disp[{n}]"),
                ConstraintAtom::LogAffine {
                    logs: vec![log_var(v1), log1p_var(v2)],
                    linear: LinExpr::term(v2, -e1).plus_const(e1 * init.v2 - e0),
                },
            );
            cap = cap.min((w1w.ln_1p() - ln_c0 * psiw - ln_c1 * v1w - chiw) / ln_c2);
        } else {
            prog.add(format!("down_rate[{n}]"), ConstraintAtom::le(LinExpr::var(vt), 0.0));
            cap = cap.min(0.0);
        }

        // Keep the waypoint on the far side of the tangent plane of the
        // uncertainty ball (outside the ball).
        if !fixed {
            let dir = (qw - s.eve_est_pos) * (1.0 / d_eve);
            let mut lhs = LinExpr::default();
            for (i, di) in dir.to_array().iter().enumerate() {
                lhs = lhs.plus_expr(&c.0[i], *di);
            }
            prog.add(
                format!("eve_clear[{n}]"),
                ConstraintAtom::ge(lhs, dir.dot(s.eve_est_pos) + delta),
            );
        }

        if !cap.is_finite() {
            return Err(Error::Build(format!("non-finite trajectory surrogate in slot {n}")));
        }
        prog.warm_start[vt.index] = cap - 1e-7 * cap.abs().max(1.0);
        prog.objective = prog.objective.clone().plus(vt, 1.0);
        tau.push(vt);
        coords.push(c);
    }
    Ok(TrajectoryProgram {
        program: prog,
        q: q_handles,
        tau,
        expansion,
    })
}
