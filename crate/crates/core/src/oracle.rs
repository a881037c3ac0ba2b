//! Brute-force references for small instances.

use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::planner::DecisionVariables;
use crate::radio::slot_snrs;
use crate::scenario::Scenario;
use crate::secrecy::{hop_rate_unclipped, RateQuantiles};

/// Largest grid an oracle will enumerate.
pub const MAX_GRID_POINTS: u64 = 100_000_000;

/// Evenly spaced power values, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerAxis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl PowerAxis {
    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.points - 1) as f64
        }
    }
}

/// Search grid over `(p_a, p_r, l_u)`; the downlink gets `l_d = L^max − l_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub p_a: PowerAxis,
    pub p_r: PowerAxis,
    /// Inclusive range of uplink blocklengths.
    pub l_u_min: u32,
    pub l_u_max: u32,
}

impl GridSpec {
    /// `points` powers per axis over `[0, p_max]` and every split of `L^max`.
    pub fn full(s: &Scenario, points: usize) -> Self {
        Self {
            p_a: PowerAxis { lo: 0.0, hi: s.p_max_alice, points },
            p_r: PowerAxis { lo: 0.0, hi: s.p_max_uav, points },
            l_u_min: 1,
            l_u_max: s.l_max.saturating_sub(1),
        }
    }

    pub fn size(&self) -> u64 {
        let nl = if self.l_u_max >= self.l_u_min {
            (self.l_u_max - self.l_u_min + 1) as u64
        } else {
            0
        };
        self.p_a.points as u64 * self.p_r.points as u64 * nl
    }

    fn check(&self, s: &Scenario) -> Result<()> {
        let size = self.size();
        if size == 0 || size > MAX_GRID_POINTS {
            return Err(Error::Domain(format!(
                "grid has {size} points, allowed range is 1..={MAX_GRID_POINTS}"
            )));
        }
        if self.l_u_min < 1 || self.l_u_max + 1 > s.l_max {
            return Err(Error::Domain(format!(
                "uplink blocklengths {}..={} leave no downlink channel use within L^max = {}",
                self.l_u_min, self.l_u_max, s.l_max
            )));
        }
        for (name, a) in [("p_a", self.p_a), ("p_r", self.p_r)] {
            if !(a.lo >= 0.0 && a.hi >= a.lo && a.hi.is_finite()) {
                return Err(Error::Domain(format!("{name} axis [{}, {}] is invalid", a.lo, a.hi)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptimum {
    /// Best slot throughput, bits/s (the EAST of a one-slot mission).
    pub east: f64,
    pub p_a: f64,
    pub p_r: f64,
    pub l_u: u32,
    pub l_d: u32,
    /// Grid indices of the argmax `(p_a, p_r, l_u)`.
    pub index: (usize, usize, u32),
}

/// Exhaustive maximization of the single-slot throughput at a fixed relay
/// position. Ties go to the lexicographically smallest `(p_a, p_r, l_u)` index.
pub fn grid_optimum_single_slot(s: &Scenario, q_uav: Vec3, grid: &GridSpec) -> Result<GridOptimum> {
    grid.check(s)?;
    let qs = RateQuantiles::from_scenario(s)?;
    let l_max = s.l_max;
    let lus: Vec<u32> = (grid.l_u_min..=grid.l_u_max).collect();

    // Secure bits per hop; NEG_INFINITY marks a budget violation.
    let hop_table = |axis: PowerAxis, up: bool| -> Result<Vec<Vec<f64>>> {
        (0..axis.points)
            .map(|i| {
                let p = axis.value(i);
                let snr = if up {
                    slot_snrs(s, q_uav, p, 0.0)?
                } else {
                    slot_snrs(s, q_uav, 0.0, p)?
                };
                Ok(lus
                    .iter()
                    .map(|&lu| {
                        let (l, g, ge, ql, eps, budget) = if up {
                            (lu, snr.gamma_r, snr.gamma_ae_tilde, qs.q_r, s.eps_r, s.p_tot_alice)
                        } else {
                            (l_max - lu, snr.gamma_b, snr.gamma_re_tilde, qs.q_b, s.eps_b, s.p_tot_uav)
                        };
                        let l = l as f64;
                        if p * l > budget {
                            return f64::NEG_INFINITY;
                        }
                        hop_rate_unclipped(g, ge, l, ql, qs.q_e).max(0.0) * l * (1.0 - eps)
                    })
                    .collect())
            })
            .collect()
    };
    let up = hop_table(grid.p_a, true)?;
    let down = hop_table(grid.p_r, false)?;

    type Best = (f64, (usize, usize, usize));
    let better = |a: Best, b: Best| -> Best {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let (bits, (ia, ir, il)) = (0..grid.p_a.points)
        .into_par_iter()
        .map(|ia| {
            let mut best: Best = (f64::NEG_INFINITY, (usize::MAX, usize::MAX, usize::MAX));
            for (ir, row) in down.iter().enumerate() {
                for (il, (&u, &d)) in up[ia].iter().zip(row).enumerate() {
                    best = better(best, (u.min(d), (ia, ir, il)));
                }
            }
            best
        })
        .reduce(|| (f64::NEG_INFINITY, (usize::MAX, usize::MAX, usize::MAX)), better);
    if !bits.is_finite() {
        return Err(Error::Domain("no grid point satisfies the energy budgets".into()));
    }
    let l_u = lus[il];
    Ok(GridOptimum {
        east: (bits / s.slot_duration).max(0.0),
        p_a: grid.p_a.value(ia),
        p_r: grid.p_r.value(ir),
        l_u,
        l_d: l_max - l_u,
        index: (ia, ir, l_u),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundAudit {
    /// Smallest `true rate − lower bound` seen, bits per channel use.
    pub worst_margin: f64,
    pub worst_slot: usize,
    pub worst_eve: Vec3,
    pub n_samples: usize,
}

/// Smallest per-hop margin between the rate with Eve at `eve` and the
/// worst-case bound, over all slots of `dv`. Both rates are unclipped.
pub fn bound_margin_at(s: &Scenario, dv: &DecisionVariables, eve: Vec3) -> Result<(f64, usize)> {
    let qs = RateQuantiles::from_scenario(s)?;
    let rho_e = s.rho_e();
    let d_ae = s.alice_pos.dist(eve);
    let mut worst = (f64::INFINITY, 0);
    for n in 0..dv.len() {
        let snr = slot_snrs(s, dv.q[n], dv.p_a[n], dv.p_r[n])?;
        let d_re = dv.q[n].dist(eve);
        let g_ae = dv.p_a[n] * rho_e / d_ae.powf(s.alpha);
        let g_re = dv.p_r[n] * rho_e / (d_re * d_re);
        let up = hop_rate_unclipped(snr.gamma_r, g_ae, dv.l_u[n], qs.q_r, qs.q_e)
            - hop_rate_unclipped(snr.gamma_r, snr.gamma_ae_tilde, dv.l_u[n], qs.q_r, qs.q_e);
        let down = hop_rate_unclipped(snr.gamma_b, g_re, dv.l_d[n], qs.q_b, qs.q_e)
            - hop_rate_unclipped(snr.gamma_b, snr.gamma_re_tilde, dv.l_d[n], qs.q_b, qs.q_e);
        let m = up.min(down);
        if m < worst.0 {
            worst = (m, n);
        }
    }
    Ok(worst)
}

/// Sample Eve uniformly in the uncertainty ball and report the worst margin
/// of the true rates over the worst-case bounds.
pub fn sampled_bound_audit(
    s: &Scenario,
    dv: &DecisionVariables,
    n_eve_samples: usize,
    seed: u64,
) -> Result<BoundAudit> {
    if n_eve_samples == 0 || dv.is_empty() {
        return Err(Error::Domain("audit needs at least one sample and one slot".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64) * 2.0 - 1.0;
    let mut audit = BoundAudit {
        worst_margin: f64::INFINITY,
        worst_slot: 0,
        worst_eve: s.eve_est_pos,
        n_samples: n_eve_samples,
    };
    for _ in 0..n_eve_samples {
        let offset = loop {
            let v = Vec3::new(unit(), unit(), unit());
            if v.norm_sq() <= 1.0 {
                break v;
            }
        };
        let eve = s.eve_est_pos + offset * s.eve_uncertainty;
        let (m, n) = bound_margin_at(s, dv, eve)?;
        if m < audit.worst_margin {
            audit.worst_margin = m;
            audit.worst_slot = n;
            audit.worst_eve = eve;
        }
    }
    Ok(audit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::initial_feasible;
    use crate::scenario::default_scenario;

    fn one_slot(q: Vec3) -> Scenario {
        let mut s = default_scenario().with_timing(1.0, 1.0);
        s.uav_start = q;
        s.uav_end = q;
        s
    }

    fn small_grid(s: &Scenario, points: usize) -> GridSpec {
        GridSpec::full(s, points)
    }

    #[test]
    fn zero_budget_gives_zero() {
        let mut s = one_slot(Vec3::new(0.0, 0.0, 60.0));
        s.p_tot_alice = 0.0;
        s.p_tot_uav = 0.0;
        let r = grid_optimum_single_slot(&s, s.uav_start, &small_grid(&s, 11)).unwrap();
        assert_eq!(r.east, 0.0);
        assert_eq!((r.p_a, r.p_r), (0.0, 0.0));
    }

    #[test]
    fn symmetric_geometry_splits_evenly() {
        let mut s = one_slot(Vec3::new(0.0, 0.0, 60.0));
        s.alice_pos = Vec3::new(-60.0, 0.0, 0.0);
        s.bob_pos = Vec3::new(60.0, 0.0, 0.0);
        s.eve_est_pos = Vec3::new(0.0, 200.0, 0.0);
        s.alpha = 2.0;
        s.noise_b = s.noise_r;
        s.eps_b = s.eps_r;
        let r = grid_optimum_single_slot(&s, s.uav_start, &small_grid(&s, 21)).unwrap();
        assert_eq!((r.l_u, r.l_d), (s.l_max / 2, s.l_max / 2));
    }

    #[test]
    fn deterministic_and_refinement_monotone() {
        let s = one_slot(Vec3::new(0.0, 0.0, 60.0));
        let coarse = small_grid(&s, 11);
        let a = grid_optimum_single_slot(&s, s.uav_start, &coarse).unwrap();
        let b = grid_optimum_single_slot(&s, s.uav_start, &coarse).unwrap();
        assert_eq!(a, b);
        // 21 points per axis contain the 11-point grid.
        let fine = grid_optimum_single_slot(&s, s.uav_start, &small_grid(&s, 21)).unwrap();
        assert!(fine.east >= a.east);
    }

    #[test]
    fn grid_guard() {
        let s = one_slot(Vec3::new(0.0, 0.0, 60.0));
        let g = small_grid(&s, 600);
        assert!(g.size() > MAX_GRID_POINTS);
        assert!(grid_optimum_single_slot(&s, s.uav_start, &g).is_err());
        let mut g = small_grid(&s, 5);
        g.l_u_max = s.l_max;
        assert!(grid_optimum_single_slot(&s, s.uav_start, &g).is_err());
    }

    #[test]
    fn exact_estimate_has_zero_margin() {
        let mut s = default_scenario();
        s.eve_uncertainty = 0.0;
        let dv = initial_feasible(&s).unwrap();
        let a = sampled_bound_audit(&s, &dv, 200, 3).unwrap();
        assert!(a.worst_margin.abs() <= 1e-12, "{}", a.worst_margin);
    }

    #[test]
    fn surface_point_toward_relay_is_worst() {
        let s = default_scenario();
        let mut dv = initial_feasible(&s).unwrap();
        dv.q.truncate(1);
        for v in [&mut dv.p_a, &mut dv.p_r, &mut dv.l_u, &mut dv.l_d, &mut dv.tau] {
            v.truncate(1);
        }
        let toward = dv.q[0] - s.eve_est_pos;
        let eve = s.eve_est_pos + toward * (s.eve_uncertainty / toward.norm());
        let (m, _) = bound_margin_at(&s, &dv, eve).unwrap();
        assert!(m.abs() < 1e-9, "{m}");
        let a = sampled_bound_audit(&s, &dv, 2000, 11).unwrap();
        assert!(a.worst_margin >= m - 1e-12);
    }

    #[test]
    fn default_audit_is_nonnegative() {
        let s = default_scenario();
        let dv = initial_feasible(&s).unwrap();
        let a = sampled_bound_audit(&s, &dv, 1000, 5).unwrap();
        assert!(a.worst_margin >= 0.0, "{a:?}");
        assert_eq!(a, sampled_bound_audit(&s, &dv, 1000, 5).unwrap());
    }
}
