//! Blocklength block: a linear program in the relaxed (continuous)
//! blocklengths with powers and trajectory fixed.
//!
//! With SNRs fixed, `(1−ε)·l·R(l) = a₀·l − a₁·√l`; the convex `−a₁√l` is
//! bounded below by the tangent of `√l` at the expansion point.

use crate::error::{Error, Result};
use crate::radio::{dispersion_unchecked, slot_snrs};
use crate::sca::{tangent_of_concave, ConcaveFn, ConstraintAtom, ConvexProgram, LinExpr, VarRef};
use crate::scenario::Scenario;
use crate::secrecy::RateQuantiles;

use super::{DecisionVariables, Hop, INTERIOR_PULL};

/// `a₀` (bits per channel use, scaled by 1−ε) and `a₁` of one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlocklengthHopConstants {
    pub a0: f64,
    pub a1: f64,
}

impl BlocklengthHopConstants {
    pub fn from_snrs(gamma: f64, gamma_eve: f64, eps: f64, q_leg: f64, q_eve: f64) -> Self {
        let cap = (gamma.ln_1p() - gamma_eve.ln_1p()) * std::f64::consts::LOG2_E;
        Self {
            a0: (1.0 - eps) * cap,
            a1: (1.0 - eps)
                * (dispersion_unchecked(gamma).sqrt() * q_leg
                    + dispersion_unchecked(gamma_eve).sqrt() * q_eve),
        }
    }

    /// Secure bits `a₀·l − a₁·√l`.
    pub fn bits(&self, l: f64) -> f64 {
        self.a0 * l - self.a1 * l.sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct BlocklengthProgram {
    pub program: ConvexProgram,
    pub l_u: Vec<VarRef>,
    pub l_d: Vec<VarRef>,
    pub tau: Vec<VarRef>,
}

impl BlocklengthProgram {
    pub fn apply(&self, base: &DecisionVariables, x: &[f64]) -> DecisionVariables {
        let mut dv = base.clone();
        for n in 0..dv.len() {
            dv.l_u[n] = x[self.l_u[n].index];
            dv.l_d[n] = x[self.l_d[n].index];
            dv.tau[n] = x[self.tau[n].index];
        }
        dv
    }
}

pub fn hop_constants(
    s: &Scenario,
    qs: &RateQuantiles,
    dv: &DecisionVariables,
    n: usize,
) -> Result<[BlocklengthHopConstants; 2]> {
    let snr = slot_snrs(s, dv.q[n], dv.p_a[n], dv.p_r[n])?;
    Ok([
        BlocklengthHopConstants::from_snrs(snr.gamma_r, snr.gamma_ae_tilde, s.eps_r, qs.q_r, qs.q_e),
        BlocklengthHopConstants::from_snrs(snr.gamma_b, snr.gamma_re_tilde, s.eps_b, qs.q_b, qs.q_e),
    ])
}

/// Blocklength subproblem expanded at the blocklengths of `dv`.
pub fn build_blocklength_subproblem(s: &Scenario, dv: &DecisionVariables) -> Result<BlocklengthProgram> {
    let n_slots = dv.len();
    let qs = RateQuantiles::from_scenario(s)?;
    let l_max = s.l_max as f64;

    // Strictly feasible reference blocklength shared by both hops.
    let sum_pa: f64 = dv.p_a.iter().sum();
    let sum_pr: f64 = dv.p_r.iter().sum();
    let mut headroom = 0.5 * l_max - 1.0;
    if sum_pa > 0.0 {
        headroom = headroom.min(s.p_tot_alice / sum_pa - 1.0);
    }
    if sum_pr > 0.0 {
        headroom = headroom.min(s.p_tot_uav / sum_pr - 1.0);
    }
    if !(headroom > 0.0) {
        return Err(Error::Build("blocklength subproblem has an empty interior".into()));
    }
    let l_ref = 1.0 + 0.5 * headroom;
    let mix = |l: f64| (1.0 - INTERIOR_PULL) * l + INTERIOR_PULL * l_ref;

    let mut prog = ConvexProgram::new();
    let (mut lu, mut ld, mut tau) = (Vec::new(), Vec::new(), Vec::new());
    let mut budget_a = LinExpr::default();
    let mut budget_r = LinExpr::default();
    for n in 0..n_slots {
        let w_u = mix(dv.l_u[n]);
        let w_d = mix(dv.l_d[n]);
        let vu = prog.add_var(format!("l_u[{n}]"), 1.0, l_max, w_u);
        let vd = prog.add_var(format!("l_d[{n}]"), 1.0, l_max, w_d);
        let vt = prog.add_var(format!("tau[{n}]"), f64::NEG_INFINITY, f64::INFINITY, 0.0);
        if dv.p_a[n] > 0.0 {
            budget_a = budget_a.plus(vu, dv.p_a[n]);
        }
        if dv.p_r[n] > 0.0 {
            budget_r = budget_r.plus(vd, dv.p_r[n]);
        }
        prog.add(format!("c9[{n}]"), ConstraintAtom::le(LinExpr::var(vu).plus(vd, 1.0), l_max));

        let consts = hop_constants(s, &qs, dv, n)?;
        let mut cap = f64::INFINITY;
        for ((hop, v, w, l0), k) in [
            (Hop::Up, vu, w_u, dv.l_u[n]),
            (Hop::Down, vd, w_d, dv.l_d[n]),
        ]
        .into_iter()
        .zip(consts)
        {
            if !(k.a0.is_finite() && k.a1.is_finite()) {
                return Err(Error::Build(format!("non-finite blocklength constants in slot {n}")));
            }
            let name = hop.name();
            if k.a0 <= 0.0 {
                prog.add(format!("rate_{name}[{n}]"), ConstraintAtom::le(LinExpr::var(vt), 0.0));
                cap = cap.min(0.0);
                continue;
            }
            let t = tangent_of_concave(ConcaveFn::Sqrt, l0)?;
            // a₀·l − τ − a₁·(slope·l + intercept) ≥ 0
            prog.add(
                format!("rate_{name}[{n}]"),
                ConstraintAtom::ge(
                    LinExpr::term(v, k.a0 - k.a1 * t.slope).plus(vt, -1.0),
                    k.a1 * t.intercept,
                ),
            );
            cap = cap.min(k.a0 * w - k.a1 * t.at(w));
        }
        prog.warm_start[vt.index] = cap - 1e-7 * cap.abs().max(1.0);
        prog.objective = prog.objective.clone().plus(vt, 1.0);
        lu.push(vu);
        ld.push(vd);
        tau.push(vt);
    }
    if !budget_a.terms.is_empty() {
        prog.add("budget_alice", ConstraintAtom::le(budget_a, s.p_tot_alice));
    }
    if !budget_r.terms.is_empty() {
        prog.add("budget_uav", ConstraintAtom::le(budget_r, s.p_tot_uav));
    }
    Ok(BlocklengthProgram {
        program: prog,
        l_u: lu,
        l_d: ld,
        tau,
    })
}
