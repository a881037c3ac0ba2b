//! Channel gains, SNRs, channel dispersion and Gaussian tail utilities.

use std::f64::consts::{LOG2_E, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scenario::Scenario;

/// (log₂ e)², the supremum of the channel dispersion.
pub const LOG2E_SQ: f64 = LOG2_E * LOG2_E;

/// Normalized receiver gains ρ = β₀/σ².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkBudget {
    pub rho_r: f64,
    pub rho_b: f64,
    pub rho_e: f64,
}

impl LinkBudget {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            rho_r: s.rho_r(),
            rho_b: s.rho_b(),
            rho_e: s.rho_e(),
        }
    }
}

/// Per-slot SNRs of the four links.
///
/// `gamma_ae_bar` / `gamma_re_bar` use the estimated Eve location (mean over
/// fading for the Alice–Eve link); the `_tilde` values use the worst-case
/// distance `‖q − q̃_e‖ − Δ_e`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SlotSnr {
    pub gamma_r: f64,
    pub gamma_b: f64,
    pub gamma_ae_bar: f64,
    pub gamma_ae_tilde: f64,
    pub gamma_re_bar: f64,
    pub gamma_re_tilde: f64,
}

impl SlotSnr {
    pub fn scaled(&self, k_a: f64, k_r: f64) -> Self {
        Self {
            gamma_r: self.gamma_r * k_a,
            gamma_b: self.gamma_b * k_r,
            gamma_ae_bar: self.gamma_ae_bar * k_a,
            gamma_ae_tilde: self.gamma_ae_tilde * k_a,
            gamma_re_bar: self.gamma_re_bar * k_r,
            gamma_re_tilde: self.gamma_re_tilde * k_r,
        }
    }
}

/// Line-of-sight gain β₀/d².
pub fn los_gain(dist: f64, beta0: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {dist}")));
    }
    Ok(beta0 / (dist * dist))
}

/// Mean (over unit-mean Rayleigh power fading) terrestrial gain β₀/d^α.
pub fn terrestrial_mean_gain(dist: f64, beta0: f64, alpha: f64) -> Result<f64> {
    if !(dist > 0.0) {
        return Err(Error::Domain(format!("distance must be > 0, got {dist}")));
    }
    if !(alpha > 2.0 && alpha <= 4.0) {
        return Err(Error::Domain(format!("path-loss exponent must lie in (2, 4], got {alpha}")));
    }
    Ok(beta0 / dist.powf(alpha))
}

/// Channel dispersion V(γ) = (log₂e)²·(1 − (1+γ)⁻²), bits².
pub fn dispersion(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::Domain(format!("SNR must be ≥ 0, got {gamma}")));
    }
    Ok(dispersion_unchecked(gamma))
}

#[inline]
pub(crate) fn dispersion_unchecked(gamma: f64) -> f64 {
    // 1 − (1+γ)⁻² = γ/(1+γ) · (1 + 1/(1+γ)): accurate for tiny γ, finite for huge γ.
    let d = 1.0 + gamma;
    (LOG2E_SQ * (gamma / d) * (1.0 + 1.0 / d)).min(LOG2E_SQ)
}

/// Standard normal density.
#[inline]
fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Gaussian tail Q(x) = P(Z > x).
pub fn q_func(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Rational approximation of the standard normal quantile (relative error
/// about 1e-9), used as the Newton seed.
fn normal_quantile_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse Gaussian tail: the `x` with Q(x) = p.
///
/// Seeded by a rational approximation of the normal quantile, then polished by
/// Newton steps on Q inside a shrinking bracket.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("probability must lie in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Q is decreasing, so Q(x) = p  <=>  x = Φ⁻¹(1 − p).
    let mut x = -normal_quantile_seed(p);
    let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
    for _ in 0..100 {
        let f = q_func(x) - p;
        if f > 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let d = phi(x);
        let mut next = if d > 0.0 { x + f / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.abs().max(1.0) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// SNRs for a relay at `q_uav` with transmit powers `p_a` (Alice) and `p_r`
/// (relay).
pub fn slot_snrs(s: &Scenario, q_uav: Vec3, p_a: f64, p_r: f64) -> Result<SlotSnr> {
    if !(q_uav.z > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "relay must be above ground, got z = {}",
            q_uav.z
        )));
    }
    if !(p_a >= 0.0 && p_r >= 0.0) {
        return Err(Error::Domain(format!("powers must be ≥ 0, got {p_a}, {p_r}")));
    }
    let d_ra_sq = q_uav.dist_sq(s.alice_pos);
    let d_rb_sq = q_uav.dist_sq(s.bob_pos);
    let d_ae = s.alice_pos.dist(s.eve_est_pos);
    let d_re = q_uav.dist(s.eve_est_pos);
    let d_ae_wc = d_ae - s.eve_uncertainty;
    let d_re_wc = d_re - s.eve_uncertainty;
    if !(d_ae_wc > 0.0) {
        return Err(Error::DegenerateGeometry(
            "Alice lies inside the Eve uncertainty ball".into(),
        ));
    }
    if !(d_re_wc > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "relay waypoint ({}, {}, {}) lies inside the Eve uncertainty ball",
            q_uav.x, q_uav.y, q_uav.z
        )));
    }
    let (rho_r, rho_b, rho_e) = (s.rho_r(), s.rho_b(), s.rho_e());
    Ok(SlotSnr {
        gamma_r: p_a * rho_r / d_ra_sq,
        gamma_b: p_r * rho_b / d_rb_sq,
        gamma_ae_bar: p_a * rho_e / d_ae.powf(s.alpha),
        gamma_ae_tilde: p_a * rho_e / d_ae_wc.powf(s.alpha),
        gamma_re_bar: p_r * rho_e / (d_re * d_re),
        gamma_re_tilde: p_r * rho_e / (d_re_wc * d_re_wc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_scenario;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn gains() {
        assert_eq!(los_gain(1.0, 1e-7).unwrap(), 1e-7);
        assert!(rel(los_gain(1000.0, 1e-7).unwrap(), 1e-13) < 1e-12);
        assert!(rel(los_gain(2.0, 1e-7).unwrap(), 2.5e-8) < 1e-12);
        assert!(los_gain(0.0, 1e-7).is_err());
        assert_eq!(terrestrial_mean_gain(1.0, 1e-7, 3.0).unwrap(), 1e-7);
        assert!(rel(terrestrial_mean_gain(921.954, 1e-7, 3.0).unwrap(), 1.276e-16) < 1e-3);
        assert!(rel(terrestrial_mean_gain(10.0, 1e-7, 4.0).unwrap(), 1e-11) < 1e-12);
        assert!(terrestrial_mean_gain(10.0, 1e-7, 2.0).is_err());
        assert!(terrestrial_mean_gain(-1.0, 1e-7, 3.0).is_err());
    }

    #[test]
    fn dispersion_values() {
        assert_eq!(dispersion(0.0).unwrap(), 0.0);
        assert!((dispersion(1.0).unwrap() - 1.56103).abs() < 1e-5);
        assert!((dispersion(1e12).unwrap() - 2.08137).abs() < 1e-5);
        assert!(dispersion(1e300).unwrap() <= LOG2E_SQ);
        assert!(dispersion(-1e-3).is_err());
    }

    #[test]
    fn q_inv_reference_points() {
        assert_eq!(q_inv(0.5).unwrap(), 0.0);
        assert!((q_inv(1e-3).unwrap() - 3.09023).abs() < 1e-5);
        assert!((q_inv(1e-2).unwrap() - 2.32635).abs() < 1e-5);
        assert!((q_inv(0.9).unwrap() + q_inv(0.1).unwrap()).abs() < 1e-12);
        assert!(q_inv(0.0).is_err());
        assert!(q_inv(1.0).is_err());
    }

    #[test]
    fn snr_examples() {
        let s = Scenario {
            noise_r: 1e-17,
            noise_b: 1e-17,
            noise_e: 1e-17,
            ..default_scenario()
        };
        let z = slot_snrs(&s, Vec3::new(0.0, 0.0, 100.0), 0.0, 0.0).unwrap();
        assert_eq!(z, SlotSnr::default());
        let above_alice = Vec3::new(-700.0, 0.0, 100.0);
        let g = slot_snrs(&s, above_alice, 0.1, 0.0).unwrap();
        assert!(rel(g.gamma_r, 1e5) < 1e-12);
        assert!(rel(g.gamma_ae_tilde, 1.318) < 1e-3);
    }

    #[test]
    fn snr_inside_ball_is_error() {
        let s = Scenario {
            eve_uncertainty: 100.0,
            ..default_scenario()
        };
        let q = s.eve_est_pos + Vec3::new(0.0, 0.0, 60.0);
        assert!(matches!(
            slot_snrs(&s, q, 0.1, 0.1),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(slot_snrs(&s, Vec3::new(0.0, 0.0, 0.0), 0.1, 0.1).is_err());
    }
}
